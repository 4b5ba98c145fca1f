import math

import numpy as np
import pytest

from shearspec.discretization import (
    NEUMANN,
    SlabDomain,
    TriangleDomain,
    VergeDomain,
    assemble_h,
    assemble_potential,
    assemble_qI,
    assemble_qI_parts,
    assemble_tbeta_1d,
    assemble_weighted_mass,
    build_mesh,
    gradient_operators,
    write_coo,
    write_mesh,
)
from shearspec.eigensolve import EigOptions, dense_oracle, smallest_eigs
from shearspec.geometry import (
    IndicatorDeficit,
    ShearProfile,
    StripGeometry,
    schema_points,
)
from shearspec.modes import ground_mode, mode_energy

PI = math.pi


# ----------------------------------------------------------------------
# meshes
# ----------------------------------------------------------------------


def test_rectangle_mesh_counts_and_bcs():
    mesh = build_mesh(SlabDomain(0.0, 1.0, 1.0), 2, 2)
    assert mesh.n_nodes == 9
    assert mesh.triangles.shape == (8, 3)
    # all-Dirichlet boundary leaves only the center free
    free = mesh.free_nodes()
    assert free.size == 1
    assert np.allclose(mesh.nodes[free[0]], [0.5, 0.5])

    neu = build_mesh(SlabDomain(0.0, 1.0, 1.0), 4, 3, end_bc=NEUMANN)
    # transverse walls stay Dirichlet; the slab ends are released
    assert neu.free_nodes().size == (4 + 1) * (3 - 1)


def test_mesh_is_ccw_with_exact_total_area():
    mesh = build_mesh(SlabDomain(-2.0, 3.0, 1.5), 7, 5)
    p = mesh.nodes[mesh.triangles]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    assert np.all(det > 0)
    assert 0.5 * det.sum() == pytest.approx(5.0 * 1.5, rel=1e-14)


def test_triangle_mesh_counts():
    mesh = build_mesh(TriangleDomain(((0, 0), (1, 0), (0, 1))), 4, 4)
    assert mesh.n_nodes == 15  # (n+1)(n+2)/2
    assert mesh.triangles.shape[0] == 16  # n^2


def test_strip_geometry_meshes_like_symmetric_slab():
    a = build_mesh(StripGeometry(d=1.0, L=2.0), 4, 3)
    b = build_mesh(SlabDomain(-2.0, 2.0, 1.0), 4, 3)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.triangles, b.triangles)


def test_verge_mesh_samples_curved_edge_exactly():
    alpha, beta, d = -5.0, 1.0, 1.0
    deficit = IndicatorDeficit(1.0, (0.0, 1.0))
    g = schema_points(alpha, beta, deficit, d)
    profile = ShearProfile.schema(alpha, beta, deficit, (1.0, 1.0))
    mesh = build_mesh(VergeDomain(g, profile, "lower"), 8, 8)
    right = mesh.nodes_on_sides(["right"])
    x = mesh.nodes[right, 0]
    y = mesh.nodes[right, 1]
    f = profile.eval_f(x)
    assert np.max(np.abs(y - (f + d))) < 1e-12
    # cuts Neumann, boundary arcs Dirichlet
    tags = {
        side: set(mesh.boundary_tags[mesh.boundary_sides == side])
        for side in ("bottom", "left", "top", "right")
    }
    assert tags["bottom"] == {"neumann"} and tags["left"] == {"neumann"}
    assert tags["top"] == {"dirichlet"} and tags["right"] == {"dirichlet"}


# ----------------------------------------------------------------------
# assembly invariants
# ----------------------------------------------------------------------


def _permuted(mesh, seed=3):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(mesh.triangles.shape[0])
    tris = mesh.triangles[perm]
    # also roll vertices inside every other triangle (stays CCW)
    tris[::2] = np.roll(tris[::2], 1, axis=1)
    import copy

    clone = copy.copy(mesh)
    clone.triangles = tris
    return clone


def test_assembly_is_bitwise_order_independent():
    prof = ShearProfile.bump(1.0, IndicatorDeficit(-0.5, (-1.0, 1.0)))
    mesh = build_mesh(SlabDomain(-3.0, 3.0, PI), 12, 8)
    ref = assemble_h(mesh, prof)
    alt = assemble_h(_permuted(mesh), prof)
    for lhs, rhs in ((ref.A, alt.A), (ref.M, alt.M)):
        lhs = lhs.copy()
        rhs = rhs.copy()
        lhs.sort_indices()
        rhs.sort_indices()
        assert np.array_equal(lhs.indptr, rhs.indptr)
        assert np.array_equal(lhs.indices, rhs.indices)
        assert np.array_equal(lhs.data, rhs.data)  # bitwise


def test_laplacian_two_mesh_rate():
    # Dirichlet square (0, pi)^2: lambda_1 = 2 exactly
    flat = ShearProfile.constant(0.0)
    errs = []
    for n in (8, 16):
        mesh = build_mesh(SlabDomain(0.0, PI, PI), n, n)
        op = assemble_h(mesh, flat)
        lam = dense_oracle(op, k=1).values[0]
        errs.append(lam - 2.0)
    assert errs[0] > errs[1] > 0
    rate = math.log2(errs[0] / errs[1])
    assert rate >= 1.8


def test_neumann_hypotenuse_triangle_matches_square_mode():
    # half of the Dirichlet square cut along the diagonal, natural
    # condition on the cut: the symmetric square mode survives, lam = 2
    tri = TriangleDomain(((0.0, 0.0), (PI, 0.0), (0.0, PI)), neumann_sides=(1,))
    flat = ShearProfile.constant(0.0)
    errs = []
    for n in (12, 24):
        op = assemble_h(build_mesh(tri, n, n), flat)
        errs.append(dense_oracle(op, k=1).values[0] - 2.0)
    assert abs(errs[1]) < 0.02
    assert errs[0] > errs[1] > 0


def test_potential_with_unit_weight_reproduces_mass():
    mesh = build_mesh(SlabDomain(-1.0, 1.0, 1.0), 6, 5)
    op = assemble_h(mesh, ShearProfile.constant(0.3))
    W = assemble_potential(mesh, lambda s, t: np.ones_like(s))
    diff = (W - op.M).tocoo()
    assert diff.nnz == 0 or np.max(np.abs(diff.data)) == 0.0


def test_weighted_mass_unit_weight_matches_plain_mass():
    mesh = build_mesh(SlabDomain(0.0, 2.0, 1.0), 5, 4)
    _, _, M = gradient_operators(mesh, eliminate=False)
    Wm = assemble_weighted_mass(mesh, lambda s, t: np.ones_like(s))
    assert np.max(np.abs((Wm - M).toarray())) < 1e-14


def test_h_form_constant_profile_reduces_to_laplacian():
    mesh = build_mesh(SlabDomain(0.0, PI, PI), 10, 10)
    op = assemble_h(mesh, ShearProfile.constant(0.0))
    Ks, Kt, _ = gradient_operators(mesh)
    assert np.max(np.abs((op.A - (Ks + Kt)).toarray())) < 1e-13


def test_assemble_h_names_bad_element():
    class NastyDeficit(IndicatorDeficit):
        def __call__(self, s):
            out = super().__call__(s)
            return np.where(np.abs(np.asarray(s)) < 0.1, np.nan, out)

    prof = ShearProfile.bump(1.0, NastyDeficit(1.0, (-1.0, 1.0)))
    mesh = build_mesh(SlabDomain(-1.0, 1.0, 1.0), 8, 4)
    with pytest.raises(ValueError, match="non-finite slope sample in element"):
        assemble_h(mesh, prof)


def test_assemble_potential_names_bad_element():
    mesh = build_mesh(SlabDomain(-1.0, 1.0, 1.0), 4, 4)

    def weight(s, t):
        return np.where(s > 0, 1.0, np.inf)

    with pytest.raises(ValueError, match="non-finite potential sample in element"):
        assemble_potential(mesh, weight)


# ----------------------------------------------------------------------
# ratio-variable slab form
# ----------------------------------------------------------------------


def test_slab_form_annihilates_constants_for_constant_profile():
    mesh = build_mesh(SlabDomain(-2.0, 2.0, PI), 10, 8, end_bc=NEUMANN)
    op = assemble_qI(mesh, ShearProfile.constant(1.3))
    ones = np.ones(op.dim)
    scale = abs(op.A).sum()
    assert np.max(np.abs(op.A @ ones)) < 1e-13 * scale


def test_slab_form_rejects_unbounded_slope():
    mesh = build_mesh(SlabDomain(-1.0, 1.0, 1.0), 4, 4)
    with pytest.raises(ValueError, match="finite limiting slope"):
        assemble_qI(mesh, ShearProfile.linear_unbounded())


def test_second_square_is_transverse_energy_above_ground_level():
    # For psi = chi1(t) phi(s,t):
    #   int (dt psi)^2 - E1 int psi^2 = int chi1^2 (dt phi)^2
    # The discrete mismatch between the two sides must shrink at
    # second order under refinement.
    d = PI
    prof = ShearProfile.constant(0.0)

    def phi(s, t):
        return np.exp(-(s**2)) * (1.0 + 0.3 * t)

    diffs = []
    for n in (12, 24):
        mesh = build_mesh(SlabDomain(-4.0, 4.0, d), 4 * n, n, end_bc=NEUMANN)
        s, t = mesh.nodes[:, 0], mesh.nodes[:, 1]
        psi = ground_mode(t, d) * phi(s, t)
        _, Kt, M = gradient_operators(mesh, eliminate=False)
        lhs = psi @ (Kt @ psi) - mode_energy(d) * (psi @ (M @ psi))
        _, K2, _ = assemble_qI_parts(mesh, prof, d)
        rhs = phi(s, t) @ (K2 @ phi(s, t))
        diffs.append(abs(lhs - rhs))
    assert diffs[1] < diffs[0] / 3.0


def test_clamped_slab_form_removes_end_columns():
    mesh = build_mesh(SlabDomain(0.0, 1.0, 1.0), 4, 3, end_bc=NEUMANN)
    free_op = assemble_qI(mesh, ShearProfile.constant(1.0))
    clamped = assemble_qI(mesh, ShearProfile.constant(1.0), clamp_ends=True)
    assert free_op.dim == mesh.n_nodes
    assert clamped.dim == mesh.n_nodes - 2 * (3 + 1)


# ----------------------------------------------------------------------
# fiber operators
# ----------------------------------------------------------------------


def test_fiber_gauged_and_doubled_agree():
    d, beta, xi = PI, 1.0, 0.7

    def gap(n_t):
        lam_g = dense_oracle(assemble_tbeta_1d(d, beta, xi, n_t)).values
        lam_d = dense_oracle(assemble_tbeta_1d(d, beta, xi, n_t, mode="doubled")).values
        # exact two-fold multiplicity comes from realifying the complex fiber
        assert np.allclose(lam_d[0:8:2], lam_d[1:8:2], rtol=1e-12)
        return abs(lam_d[0] - lam_g[0]) / lam_g[0]

    # the two discretizations of the same fiber converge to each other
    coarse, fine = gap(48), gap(96)
    assert coarse < 5e-4
    assert fine < coarse / 3.0


def test_fiber_at_zero_wavenumber_hits_threshold():
    d, beta = PI, 2.0
    op = assemble_tbeta_1d(d, beta, 0.0, 400)
    lam = smallest_eigs(op, EigOptions(k=1, shift=0.5)).values[0]
    exact = (1.0 + beta**2) * mode_energy(d)
    assert lam == pytest.approx(exact, rel=1e-4)
    assert lam >= exact  # Rayleigh bound from above for P1 consistent mass


def test_fiber_input_validation():
    with pytest.raises(ValueError, match="n_t >= 2"):
        assemble_tbeta_1d(1.0, 0.0, 0.0, 1)
    with pytest.raises(ValueError, match="finite beta"):
        assemble_tbeta_1d(1.0, math.inf, 0.0, 8)
    with pytest.raises(ValueError, match="unknown fiber mode"):
        assemble_tbeta_1d(1.0, 0.0, 0.0, 8, mode="complexified")


# ----------------------------------------------------------------------
# text export
# ----------------------------------------------------------------------


def test_write_coo_round_trip(tmp_path):
    mesh = build_mesh(SlabDomain(0.0, 1.0, 1.0), 3, 3)
    op = assemble_h(mesh, ShearProfile.constant(0.5))
    path = tmp_path / "a.coo"
    write_coo(op.A, path)
    rows, cols, vals = [], [], []
    for line in path.read_text().splitlines():
        r, c, v = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(float(v))
    dense = np.zeros((op.dim, op.dim))
    dense[rows, cols] = vals
    assert np.array_equal(dense, op.A.toarray())  # %.17g is lossless
    keys = list(zip(rows, cols))
    assert keys == sorted(keys)  # row-major


def test_write_mesh_listing(tmp_path):
    mesh = build_mesh(SlabDomain(0.0, 1.0, 1.0), 2, 2)
    path = tmp_path / "m.txt"
    write_mesh(mesh, path)
    lines = path.read_text().splitlines()
    header = lines[0].split()
    assert int(header[header.index("nodes") + 1]) == mesh.n_nodes
    assert int(header[header.index("triangles") + 1]) == mesh.triangles.shape[0]
    # boundary lines carry side and tag tokens
    tail = lines[-1].split()
    assert tail[2] in {"s_lo", "s_hi", "t_lo", "t_hi"}
    assert tail[3] in {"dirichlet", "neumann"}
