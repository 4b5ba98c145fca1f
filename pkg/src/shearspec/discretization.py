"""P1 finite-element meshes and assembled operator pencils.

Meshes are structured: rectangles split into two triangles per cell with a
common diagonal direction (so refining by 2 nests the coarse mesh exactly),
barycentric lattices on triangles, and transfinite (Coons) patches on
curvilinear quadrilaterals.  Transverse strip boundaries are always tagged
Dirichlet; end boundaries take the caller's tag.

Assembly routines return symmetric sparse (A, M) pencils restricted to the
free nodes.  The slope coefficient is sampled at element centroids, which
keeps the assembled form exactly equal to the form of a perturbed
admissible profile — lower bounds that hold uniformly in the profile are
therefore inherited by the discrete eigenvalues, not merely approximated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import SchemaGeometry, ShearProfile, StripGeometry
from .modes import ground_mode, ground_mode_deriv

__all__ = [
    "SlabDomain",
    "TriangleDomain",
    "VergeDomain",
    "StructuredMesh",
    "AssembledOperator",
    "build_mesh",
    "assemble_h",
    "assemble_qI",
    "assemble_qI_parts",
    "assemble_tbeta_1d",
    "assemble_potential",
    "assemble_weighted_mass",
    "gradient_operators",
    "write_coo",
    "write_mesh",
]

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class SlabDomain:
    """Rectangle (lo, hi) x (0, d) in strip coordinates."""

    lo: float
    hi: float
    d: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("slab interval must be nondegenerate")
        if not self.d > 0:
            raise ValueError("slab width d must be positive")


@dataclass(frozen=True)
class TriangleDomain:
    """Plane triangle with per-side boundary tags.

    Sides are 0: v0->v1, 1: v1->v2, 2: v2->v0; sides listed in
    neumann_sides get natural boundary conditions, the rest Dirichlet.
    """

    vertices: tuple
    neumann_sides: tuple = ()


@dataclass(frozen=True)
class VergeDomain:
    """Curvilinear quadrilateral at the verge of the strong-shearing bend.

    component 'lower' is bounded by O-A (exterior cut), A-C (straight top
    boundary), the curve C-B along y = f(x)+d, and B-O (interior cut);
    'upper' is the analogous region at the other end of the bend.  The two
    cuts are Neumann, the two boundary arcs Dirichlet.
    """

    schema: SchemaGeometry
    profile: ShearProfile
    component: str = "lower"

    def __post_init__(self):
        if self.component not in ("lower", "upper"):
            raise ValueError("verge component must be 'lower' or 'upper'")


@dataclass(eq=False)
class StructuredMesh:
    kind: str  # rectangle | right-triangle | quadrilateral
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (M, 3) int
    boundary_edges: np.ndarray  # (B, 2) int
    boundary_tags: np.ndarray  # (B,) str: dirichlet | neumann
    boundary_sides: np.ndarray  # (B,) str side labels
    n_s: int
    n_t: int

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def dirichlet_nodes(self) -> np.ndarray:
        mask = self.boundary_tags == DIRICHLET
        if not mask.any():
            return np.empty(0, dtype=int)
        return np.unique(self.boundary_edges[mask].ravel())

    def free_nodes(self) -> np.ndarray:
        fixed = np.zeros(self.n_nodes, dtype=bool)
        fixed[self.dirichlet_nodes()] = True
        return np.flatnonzero(~fixed)

    def nodes_on_sides(self, labels) -> np.ndarray:
        mask = np.isin(self.boundary_sides, list(labels))
        if not mask.any():
            return np.empty(0, dtype=int)
        return np.unique(self.boundary_edges[mask].ravel())


@dataclass(eq=False)
class AssembledOperator:
    """Symmetric sparse pencil (A, M) on the free degrees of freedom."""

    A: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray  # free node indices into the mesh numbering
    label: str = ""
    mesh: StructuredMesh | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0]


# ----------------------------------------------------------------------
# mesh construction
# ----------------------------------------------------------------------


def _check_bc(end_bc: str) -> str:
    if end_bc not in (DIRICHLET, NEUMANN):
        raise ValueError(f"end_bc must be 'dirichlet' or 'neumann', got {end_bc!r}")
    return end_bc


def _cells_to_triangles(n_s: int, n_t: int):
    """Two CCW triangles per cell, all diagonals in the same direction."""
    nodes_per_col = n_t + 1

    def vid(i, j):
        return i * nodes_per_col + j

    tris = np.empty((2 * n_s * n_t, 3), dtype=int)
    k = 0
    for i in range(n_s):
        for j in range(n_t):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v11, v01 = vid(i + 1, j + 1), vid(i, j + 1)
            tris[k] = (v00, v10, v11)
            tris[k + 1] = (v00, v11, v01)
            k += 2
    return tris


def _rectangle_mesh(lo: float, hi: float, d: float, n_s: int, n_t: int, end_bc: str) -> StructuredMesh:
    if n_s < 1 or n_t < 1:
        raise ValueError(f"degenerate mesh resolution ({n_s}, {n_t})")
    s = np.linspace(lo, hi, n_s + 1)
    t = np.linspace(0.0, d, n_t + 1)
    S, T = np.meshgrid(s, t, indexing="ij")
    nodes = np.column_stack([S.ravel(), T.ravel()])
    tris = _cells_to_triangles(n_s, n_t)

    nodes_per_col = n_t + 1

    def vid(i, j):
        return i * nodes_per_col + j

    edges, tags, sides = [], [], []
    for i in range(n_s):  # transverse walls: always Dirichlet
        edges.append((vid(i, 0), vid(i + 1, 0)))
        tags.append(DIRICHLET)
        sides.append("t_lo")
        edges.append((vid(i, n_t), vid(i + 1, n_t)))
        tags.append(DIRICHLET)
        sides.append("t_hi")
    for j in range(n_t):  # strip ends: caller's tag
        edges.append((vid(0, j), vid(0, j + 1)))
        tags.append(end_bc)
        sides.append("s_lo")
        edges.append((vid(n_s, j), vid(n_s, j + 1)))
        tags.append(end_bc)
        sides.append("s_hi")

    return StructuredMesh(
        kind="rectangle",
        nodes=nodes,
        triangles=tris,
        boundary_edges=np.asarray(edges, dtype=int),
        boundary_tags=np.asarray(tags),
        boundary_sides=np.asarray(sides),
        n_s=n_s,
        n_t=n_t,
    )


def _triangle_mesh(domain: TriangleDomain, n: int) -> StructuredMesh:
    if n < 1:
        raise ValueError("degenerate triangle subdivision")
    p0, p1, p2 = (np.asarray(v, dtype=float) for v in domain.vertices)

    index = {}
    pts = []
    k = 0
    for i in range(n + 1):
        for j in range(n + 1 - i):
            index[(i, j)] = k
            pts.append(p0 + (i / n) * (p1 - p0) + (j / n) * (p2 - p0))
            k += 1
    nodes = np.asarray(pts)

    tris = []
    for i in range(n):
        for j in range(n - i):
            tris.append((index[(i, j)], index[(i + 1, j)], index[(i, j + 1)]))
            if i + j <= n - 2:
                tris.append((index[(i + 1, j)], index[(i + 1, j + 1)], index[(i, j + 1)]))
    tris = np.asarray(tris, dtype=int)

    edges, tags, sides = [], [], []
    neu = set(domain.neumann_sides)

    def tag(side):
        return NEUMANN if side in neu else DIRICHLET

    for i in range(n):  # side 0: j = 0, v0 -> v1
        edges.append((index[(i, 0)], index[(i + 1, 0)]))
        tags.append(tag(0))
        sides.append("side0")
    for j in range(n):  # side 1: i + j = n, v1 -> v2
        edges.append((index[(n - j, j)], index[(n - j - 1, j + 1)]))
        tags.append(tag(1))
        sides.append("side1")
    for j in range(n):  # side 2: i = 0, v2 -> v0
        edges.append((index[(0, j)], index[(0, j + 1)]))
        tags.append(tag(2))
        sides.append("side2")

    mesh = StructuredMesh(
        kind="right-triangle",
        nodes=nodes,
        triangles=tris,
        boundary_edges=np.asarray(edges, dtype=int),
        boundary_tags=np.asarray(tags),
        boundary_sides=np.asarray(sides),
        n_s=n,
        n_t=n,
    )
    _orient_ccw(mesh)
    return mesh


def _coons_mesh(e_bottom, e_top, e_left, e_right, n_u: int, n_v: int, tags: dict) -> StructuredMesh:
    """Transfinite interpolation of four parametrized edges.

    e_bottom(u), e_top(u): P00->P10 and P01->P11 for u in [0, 1];
    e_left(v), e_right(v): P00->P01 and P10->P11 for v in [0, 1].
    """
    if n_u < 1 or n_v < 1:
        raise ValueError(f"degenerate mesh resolution ({n_u}, {n_v})")
    u = np.linspace(0.0, 1.0, n_u + 1)
    v = np.linspace(0.0, 1.0, n_v + 1)
    P00, P10 = np.asarray(e_bottom(0.0)), np.asarray(e_bottom(1.0))
    P01, P11 = np.asarray(e_top(0.0)), np.asarray(e_top(1.0))

    EB = np.asarray([e_bottom(x) for x in u])  # (n_u+1, 2)
    ET = np.asarray([e_top(x) for x in u])
    EL = np.asarray([e_left(x) for x in v])  # (n_v+1, 2)
    ER = np.asarray([e_right(x) for x in v])

    U = u[:, None, None]
    V = v[None, :, None]
    grid = (
        (1.0 - V) * EB[:, None, :]
        + V * ET[:, None, :]
        + (1.0 - U) * EL[None, :, :]
        + U * ER[None, :, :]
        - (
            (1.0 - U) * (1.0 - V) * P00
            + U * (1.0 - V) * P10
            + (1.0 - U) * V * P01
            + U * V * P11
        )
    )
    nodes = grid.reshape(-1, 2)
    tris = _cells_to_triangles(n_u, n_v)

    nodes_per_col = n_v + 1

    def vid(i, j):
        return i * nodes_per_col + j

    edges, tag_list, sides = [], [], []
    for i in range(n_u):
        edges.append((vid(i, 0), vid(i + 1, 0)))
        tag_list.append(tags["bottom"])
        sides.append("bottom")
        edges.append((vid(i, n_v), vid(i + 1, n_v)))
        tag_list.append(tags["top"])
        sides.append("top")
    for j in range(n_v):
        edges.append((vid(0, j), vid(0, j + 1)))
        tag_list.append(tags["left"])
        sides.append("left")
        edges.append((vid(n_u, j), vid(n_u, j + 1)))
        tag_list.append(tags["right"])
        sides.append("right")

    mesh = StructuredMesh(
        kind="quadrilateral",
        nodes=nodes,
        triangles=tris,
        boundary_edges=np.asarray(edges, dtype=int),
        boundary_tags=np.asarray(tag_list),
        boundary_sides=np.asarray(sides),
        n_s=n_u,
        n_t=n_v,
    )
    _orient_ccw(mesh)
    return mesh


def _orient_ccw(mesh: StructuredMesh) -> None:
    p = mesh.nodes[mesh.triangles]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    flip = det < 0
    if flip.any():
        mesh.triangles[flip] = mesh.triangles[flip][:, [0, 2, 1]]
    p = mesh.nodes[mesh.triangles]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    if np.any(det <= 0):
        raise ValueError("mesh contains a degenerate (zero-area) element")


def build_mesh(domain, n_s: int, n_t: int, end_bc: str = DIRICHLET) -> StructuredMesh:
    """Mesh a computational domain.

    domain : StripGeometry (rectangle [-L, L] x (0, d)), SlabDomain,
             TriangleDomain, or VergeDomain.
    end_bc : boundary tag for the strip/slab ends; transverse boundaries
             are always Dirichlet.
    """
    _check_bc(end_bc)
    if isinstance(domain, StripGeometry):
        return _rectangle_mesh(-domain.L, domain.L, domain.d, n_s, n_t, end_bc)
    if isinstance(domain, SlabDomain):
        return _rectangle_mesh(domain.lo, domain.hi, domain.d, n_s, n_t, end_bc)
    if isinstance(domain, TriangleDomain):
        return _triangle_mesh(domain, n_s)
    if isinstance(domain, VergeDomain):
        return _verge_mesh(domain, n_s, n_t)
    raise TypeError(f"cannot mesh domain of type {type(domain).__name__}")


def _verge_mesh(domain: VergeDomain, n_u: int, n_v: int) -> StructuredMesh:
    g = domain.schema
    profile = domain.profile

    def fval(x):
        return float(profile.eval_f(np.array([float(x)]))[0])

    if domain.component == "lower":
        O, A, C, B = map(np.asarray, (g.O, g.A, g.C, g.B))

        def e_bottom(u):
            return O + u * (B - O)

        def e_top(u):
            return A + u * (C - A)

        def e_left(v):
            return O + v * (A - O)

        def e_right(v):
            x = g.x0 * (1.0 - v)
            return np.array([x, fval(x) + g.d])

    else:
        Op, Ap, Cp, Bp = map(
            np.asarray, (g.O_prime, g.A_prime, g.C_prime, g.B_prime)
        )

        def e_bottom(u):
            return Op + u * (Bp - Op)

        def e_top(u):
            return Ap + u * (Cp - Ap)

        def e_left(v):
            return Op + v * (Ap - Op)

        def e_right(v):
            x = g.x0_prime + v * (1.0 - g.x0_prime)
            return np.array([x, fval(x)])

    tags = {"bottom": NEUMANN, "left": NEUMANN, "top": DIRICHLET, "right": DIRICHLET}
    return _coons_mesh(e_bottom, e_top, e_left, e_right, n_u, n_v, tags)


# ----------------------------------------------------------------------
# assembly
# ----------------------------------------------------------------------

_MASS_REF = (np.ones((3, 3)) + np.eye(3)) / 12.0  # consistent P1 mass / area
# P1 shape values at the three edge midpoints (rule exact for quadratics)
_MIDPOINT_SHAPES = np.array(
    [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]
)


def _element_geometry(mesh: StructuredMesh):
    p = mesh.nodes[mesh.triangles]  # (M, 3, 2)
    x, y = p[:, :, 0], p[:, :, 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (y[:, 1] - y[:, 0]) * (
        x[:, 2] - x[:, 0]
    )
    if np.any(det <= 0):
        raise ValueError("mesh contains non-positively oriented elements")
    area = 0.5 * det
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    G = np.stack([b, c], axis=1) / det[:, None, None]  # (M, 2, 3)
    return p, area, G


def _scatter(mesh: StructuredMesh, element_matrices: np.ndarray) -> sp.csr_matrix:
    # duplicates are sorted by (row, col, value) and reduced sequentially, so
    # the assembled matrix is bitwise independent of the element ordering
    tris = mesh.triangles
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    data = element_matrices.ravel()
    order = np.lexsort((data, cols, rows))
    rows, cols, data = rows[order], cols[order], data[order]
    first = np.empty(rows.size, dtype=bool)
    first[0] = True
    first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    starts = np.flatnonzero(first)
    summed = np.add.reduceat(data, starts)
    mat = sp.coo_matrix(
        (summed, (rows[starts], cols[starts])),
        shape=(mesh.n_nodes, mesh.n_nodes),
    ).tocsr()
    return (mat + mat.T) * 0.5


def _restrict(mat: sp.csr_matrix, keep: np.ndarray) -> sp.csr_matrix:
    return mat[keep][:, keep].tocsr()


def assemble_h(mesh: StructuredMesh, profile: ShearProfile) -> AssembledOperator:
    """Strip form (ds u - f' dt u)^2 + (dt u)^2 against the P1 basis, with
    f' sampled at element centroids and Dirichlet-tagged nodes eliminated.

    With the zero-slope profile this is the plain Dirichlet/Neumann
    Laplacian, which is how the polygonal bracketing subdomains are
    assembled.
    """
    p, area, G = _element_geometry(mesh)
    centroids = p.mean(axis=1)
    w = np.asarray(profile.eval_fprime(centroids[:, 0]), dtype=float)
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.isfinite(w))[0])
        raise ValueError(
            f"non-finite slope sample in element {bad} at centroid {tuple(centroids[bad])}"
        )
    nel = mesh.triangles.shape[0]
    Q = np.empty((nel, 2, 2))
    Q[:, 0, 0] = 1.0
    Q[:, 0, 1] = -w
    Q[:, 1, 0] = -w
    Q[:, 1, 1] = 1.0 + w * w
    Ke = np.einsum("eai,eab,ebj,e->eij", G, Q, G, area)
    Me = area[:, None, None] * _MASS_REF

    A = _scatter(mesh, Ke)
    M = _scatter(mesh, Me)
    free = mesh.free_nodes()
    return AssembledOperator(
        A=_restrict(A, free),
        M=_restrict(M, free),
        dof_map=free,
        label="h-form",
        mesh=mesh,
    )


def assemble_qI(
    mesh: StructuredMesh,
    profile: ShearProfile,
    d: float | None = None,
    clamp_ends: bool = False,
) -> AssembledOperator:
    """Slab form in the ground-mode-ratio variable.

    Writing u = chi1 * phi turns the two gradient-like terms of the
    ground-state decomposition into a form with smooth coefficients

        (chi1 ds phi - eps chi1' phi - (eps+beta) chi1 dt phi)^2
        + chi1^2 (dt phi)^2,       mass weight chi1^2,

    discretized for phi in P1 with the 3-point edge-midpoint rule (exact
    for quadratic integrands).  The transverse Dirichlet condition on the
    original variable is encoded by the chi1 weights, so no boundary nodes
    are eliminated; with clamp_ends=True the slab-end nodes are clamped,
    which restricts to ratios of functions vanishing at the ends.
    """
    if math.isinf(profile.beta):
        raise ValueError("the slab form requires a finite limiting slope")
    if d is None:
        d = float(mesh.nodes[:, 1].max())
    A1, A2, M = _assemble_qI_pieces(mesh, profile, d)
    A = A1 + A2
    if clamp_ends:
        clamped = mesh.nodes_on_sides(["s_lo", "s_hi"])
        keep_mask = np.ones(mesh.n_nodes, dtype=bool)
        keep_mask[clamped] = False
        keep = np.flatnonzero(keep_mask)
    else:
        keep = np.arange(mesh.n_nodes)
    return AssembledOperator(
        A=_restrict(A, keep),
        M=_restrict(M, keep),
        dof_map=keep,
        label="qI-form",
        mesh=mesh,
    )


def _assemble_qI_pieces(mesh: StructuredMesh, profile: ShearProfile, d: float):
    """The two squares of the slab form and the weighted mass, separately,
    on all nodes (no elimination)."""
    beta = profile.beta
    p, area, G = _element_geometry(mesh)
    nel = mesh.triangles.shape[0]
    Gs, Gt = G[:, 0, :], G[:, 1, :]

    K1 = np.zeros((nel, 3, 3))
    K2 = np.zeros((nel, 3, 3))
    Me = np.zeros((nel, 3, 3))
    wq = area / 3.0
    for q in range(3):
        Nq = _MIDPOINT_SHAPES[q]
        xq = np.einsum("k,ek->e", Nq, p[:, :, 0])
        tq = np.einsum("k,ek->e", Nq, p[:, :, 1])
        chi = ground_mode(tq, d)
        chip = ground_mode_deriv(tq, d)
        e = np.asarray(profile.eps(xq), dtype=float)
        # linear functional L.phi = chi*ds(phi) - eps*chi1'*phi - (eps+beta)*chi*dt(phi)
        L = (
            chi[:, None] * Gs
            - (e * chip)[:, None] * Nq[None, :]
            - ((e + beta) * chi)[:, None] * Gt
        )
        K1 += wq[:, None, None] * (L[:, :, None] * L[:, None, :])
        K2 += (wq * chi**2)[:, None, None] * (Gt[:, :, None] * Gt[:, None, :])
        Me += (wq * chi**2)[:, None, None] * (Nq[:, None] * Nq[None, :])

    return _scatter(mesh, K1), _scatter(mesh, K2), _scatter(mesh, Me)


def assemble_qI_parts(mesh: StructuredMesh, profile: ShearProfile, d: float | None = None):
    """(first square, second square, weighted mass) of the slab form as
    separate sparse matrices on all nodes — the second square is the piece
    that equals the transverse energy minus its ground level."""
    if math.isinf(profile.beta):
        raise ValueError("the slab form requires a finite limiting slope")
    if d is None:
        d = float(mesh.nodes[:, 1].max())
    return _assemble_qI_pieces(mesh, profile, d)


def _tridiag(n: int, lo: float, di: float, up: float) -> sp.csr_matrix:
    return sp.diags(
        [np.full(n - 1, lo), np.full(n, di), np.full(n - 1, up)],
        offsets=[-1, 0, 1],
    ).tocsr()


def assemble_tbeta_1d(
    d: float, beta: float, xi: float, n_t: int, mode: str = "gauged"
) -> AssembledOperator:
    """Fiber operator of the straight sheared strip at wave number xi.

    mode='gauged': the unitarily equivalent real operator
        -(1+beta^2) d^2/dt^2 + xi^2/(1+beta^2)
    on (0, d) with Dirichlet ends (P1 stiffness/mass).

    mode='doubled': the original complex fiber
        (1+beta^2) K + xi^2 M + 2 i xi beta C
    realified as [[X, -Y], [Y, X]] with M2 = diag(M, M); every eigenvalue
    of the complex pencil appears twice.  Used to verify gauge invariance.
    """
    if n_t < 2:
        raise ValueError("fiber discretization needs n_t >= 2")
    if math.isinf(beta):
        raise ValueError("fiber operators require finite beta")
    h = d / n_t
    n = n_t - 1  # interior nodes
    K = _tridiag(n, -1.0 / h, 2.0 / h, -1.0 / h)
    M = _tridiag(n, h / 6.0, 4.0 * h / 6.0, h / 6.0)
    dof = np.arange(1, n_t)
    if mode == "gauged":
        A = (1.0 + beta**2) * K + (xi**2 / (1.0 + beta**2)) * M
        return AssembledOperator(A=A.tocsr(), M=M, dof_map=dof, label=f"fiber xi={xi:g}")
    if mode == "doubled":
        C = _tridiag(n, -0.5, 0.0, 0.5)  # int phi_i phi_j' dt, antisymmetric
        X = (1.0 + beta**2) * K + xi**2 * M
        Y = 2.0 * xi * beta * C
        A2 = sp.bmat([[X, -Y], [Y, X]]).tocsr()
        M2 = sp.block_diag([M, M]).tocsr()
        return AssembledOperator(
            A=A2, M=M2, dof_map=np.concatenate([dof, dof]), label=f"fiber-doubled xi={xi:g}"
        )
    raise ValueError(f"unknown fiber mode {mode!r}")


def assemble_potential(mesh: StructuredMesh, weight, eliminate: bool = True) -> sp.csr_matrix:
    """Weighted mass matrix with the weight sampled at element centroids:
    W_e = w(centroid) * M_e.  A unit weight reproduces the mass matrix
    entrywise; nonnegative weights give a PSD matrix.  Raises on a
    non-finite weight sample, naming the element."""
    p, area, _ = _element_geometry(mesh)
    centroids = p.mean(axis=1)
    w = np.asarray(weight(centroids[:, 0], centroids[:, 1]), dtype=float)
    if not np.all(np.isfinite(w)):
        bad = int(np.flatnonzero(~np.isfinite(w))[0])
        raise ValueError(
            f"non-finite potential sample in element {bad} at centroid {tuple(centroids[bad])}"
        )
    We = (w * area)[:, None, None] * _MASS_REF
    W = _scatter(mesh, We)
    if eliminate:
        return _restrict(W, mesh.free_nodes())
    return W


def assemble_weighted_mass(mesh: StructuredMesh, weight) -> sp.csr_matrix:
    """Weighted mass by the 3-point edge-midpoint rule on all nodes
    (companion to assemble_qI for potentials in the ratio variable)."""
    p, area, _ = _element_geometry(mesh)
    nel = mesh.triangles.shape[0]
    We = np.zeros((nel, 3, 3))
    wq = area / 3.0
    for q in range(3):
        Nq = _MIDPOINT_SHAPES[q]
        xq = np.einsum("k,ek->e", Nq, p[:, :, 0])
        tq = np.einsum("k,ek->e", Nq, p[:, :, 1])
        w = np.asarray(weight(xq, tq), dtype=float)
        if not np.all(np.isfinite(w)):
            bad = int(np.flatnonzero(~np.isfinite(w))[0])
            raise ValueError(f"non-finite weight sample in element {bad}")
        We += (wq * w)[:, None, None] * (Nq[:, None] * Nq[None, :])
    return _scatter(mesh, We)


def gradient_operators(mesh: StructuredMesh, eliminate: bool = True):
    """(Ks, Kt, M): the squared-gradient forms in each coordinate and the
    mass matrix, restricted to free nodes when eliminate is set."""
    p, area, G = _element_geometry(mesh)
    Gs, Gt = G[:, 0, :], G[:, 1, :]
    Ks_e = area[:, None, None] * (Gs[:, :, None] * Gs[:, None, :])
    Kt_e = area[:, None, None] * (Gt[:, :, None] * Gt[:, None, :])
    Me = area[:, None, None] * _MASS_REF
    mats = [_scatter(mesh, E) for E in (Ks_e, Kt_e, Me)]
    if eliminate:
        free = mesh.free_nodes()
        mats = [_restrict(m, free) for m in mats]
    return tuple(mats)


# ----------------------------------------------------------------------
# text export
# ----------------------------------------------------------------------


def write_coo(matrix: sp.spmatrix, path) -> None:
    """Plain-text COO dump: one 'row col value' line per stored entry,
    sorted row-major."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")


def write_mesh(mesh: StructuredMesh, path) -> None:
    """Plain-text mesh listing: node coordinates, triangle connectivity,
    and tagged boundary edges."""
    with open(path, "w") as fh:
        fh.write(f"# kind {mesh.kind} nodes {mesh.n_nodes} "
                 f"triangles {mesh.triangles.shape[0]} "
                 f"boundary {mesh.boundary_edges.shape[0]}\n")
        fh.write("# nodes: x y\n")
        for x, y in mesh.nodes:
            fh.write(f"{x:.17g} {y:.17g}\n")
        fh.write("# triangles: a b c\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
        fh.write("# boundary: a b side tag\n")
        for (a, b), side, tag in zip(
            mesh.boundary_edges, mesh.boundary_sides, mesh.boundary_tags
        ):
            fh.write(f"{a} {b} {side} {tag}\n")
