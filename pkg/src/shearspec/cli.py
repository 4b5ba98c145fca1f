"""Config-driven command line: parses a TOML scenario, dispatches to the
pipelines, and writes machine-readable reports plus plot-ready data.

Exit codes: 0 success, 2 when a demanded verdict came back false,
1 on any error (schema violations are reported with their field path).
JSON reports are deterministic for a fixed scenario and seed; wall-clock
timings go to stderr unless explicitly embedded, so that byte-identical
reruns stay byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover - py310 path
    import tomli as tomllib

from . import __version__
from .certificates import (
    alpha0_scan,
    bracket_thresholds,
    certify_condition_ii,
    find_alpha0,
    ground_state_identity,
    hardy_constants,
    random_smooth_field,
    rayleigh_condition_i,
    verify_hardy,
)
from .eigensolve import EigOptions
from .geometry import (
    CosineDeficit,
    GaussianDeficit,
    IndicatorDeficit,
    ObstructionDeficit,
    PlateauDeficit,
    ShearProfile,
    StripGeometry,
    ball_intersection_area,
    calibrated_two_level,
    two_level_deficit,
)
from .spectra import (
    EMPTY,
    convergence_study,
    dispersion_curve,
    truncated_spectrum,
)

COMMANDS = (
    "spectrum",
    "dispersion",
    "hardy",
    "certify",
    "bracket",
    "identity-check",
    "probe-volume",
)


class ConfigError(ValueError):
    """Scenario schema violation; the message carries the field path."""


# ----------------------------------------------------------------------
# scenario schema
# ----------------------------------------------------------------------


def _get(cfg: dict, path: str, default=None, required: bool = False):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(f'missing required field "{path}"')
            return default
        node = node[part]
    return node


def _expect_number(cfg: dict, path: str, required: bool = False, default=None):
    val = _get(cfg, path, default=default, required=required)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f'field "{path}" must be a number, got {val!r}')
    return float(val)


def _expect_int(cfg: dict, path: str, required: bool = False, default=None):
    val = _get(cfg, path, default=default, required=required)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f'field "{path}" must be an integer, got {val!r}')
    return int(val)


def _expect_pair(cfg: dict, path: str, required: bool = False, default=None):
    val = _get(cfg, path, default=default, required=required)
    if val is None:
        return None
    if not (isinstance(val, (list, tuple)) and len(val) == 2):
        raise ConfigError(f'field "{path}" must be a pair [lo, hi], got {val!r}')
    return float(val[0]), float(val[1])


def build_deficit(cfg: dict, path: str):
    shape = _get(cfg, f"{path}.shape", required=True)
    support = _expect_pair(cfg, f"{path}.support", default=(0.0, 1.0))
    amplitude = _expect_number(cfg, f"{path}.amplitude", default=1.0)
    if shape == "plateau":
        shoulder = _expect_number(cfg, f"{path}.shoulder", default=0.05)
        return PlateauDeficit(amplitude, support, shoulder=shoulder)
    if shape == "cosine":
        return CosineDeficit(amplitude, support)
    if shape == "gaussian":
        width = _expect_number(cfg, f"{path}.width")
        return GaussianDeficit(amplitude, support, width=width)
    if shape == "indicator":
        return IndicatorDeficit(amplitude, support)
    if shape == "obstruction":
        beta = _expect_number(cfg, f"{path}.beta", required=True)
        d = _expect_number(cfg, f"{path}.d", required=True)
        c = _expect_number(cfg, f"{path}.c", default=0.0)
        ramp = _expect_number(cfg, f"{path}.ramp_fraction", default=0.0)
        return ObstructionDeficit(beta, d, c, support, ramp_fraction=ramp)
    if shape == "two-level":
        spans = _get(cfg, f"{path}.spans", required=True)
        levels = _get(cfg, f"{path}.levels", required=True)
        shoulder = _expect_number(cfg, f"{path}.shoulder", default=0.1)
        return two_level_deficit(
            float(levels[0]), float(levels[1]),
            (tuple(spans[0]), tuple(spans[1])), shoulder=shoulder,
        )
    if shape == "calibrated-two-level":
        beta = _expect_number(cfg, f"{path}.beta", required=True)
        spans = _get(cfg, f"{path}.spans", required=True)
        level1 = _expect_number(cfg, f"{path}.level1", default=-1.0)
        shoulder = _expect_number(cfg, f"{path}.shoulder", default=0.1)
        return calibrated_two_level(
            beta, (tuple(spans[0]), tuple(spans[1])),
            level1=level1, shoulder=shoulder,
        )
    raise ConfigError(f'field "{path}.shape": unknown deficit shape {shape!r}')


def build_profile(cfg: dict) -> ShearProfile:
    kind = _get(cfg, "profile.kind", required=True)
    if kind == "constant":
        beta = _expect_number(cfg, "profile.beta", required=True)
        return ShearProfile.constant(beta)
    if kind == "bump":
        beta = _expect_number(cfg, "profile.beta", required=True)
        return ShearProfile.bump(beta, build_deficit(cfg, "profile.deficit"))
    if kind == "schema":
        alpha = _expect_number(cfg, "profile.alpha", required=True)
        beta = _expect_number(cfg, "profile.beta", required=True)
        bounds = _expect_pair(cfg, "profile.bounds", required=True)
        return ShearProfile.schema(
            alpha, beta, build_deficit(cfg, "profile.deficit"), bounds
        )
    if kind == "linear-unbounded":
        return ShearProfile.linear_unbounded()
    raise ConfigError(f'field "profile.kind": unknown profile kind {kind!r}')


def build_geometry(cfg: dict) -> StripGeometry:
    d = _expect_number(cfg, "geometry.d", required=True)
    L = _expect_number(cfg, "geometry.L", required=True)
    return StripGeometry(d=d, L=L)


def build_options(cfg: dict, seed: int | None) -> EigOptions:
    return EigOptions(
        k=_expect_int(cfg, "solver.k", default=1),
        tol=_expect_number(cfg, "solver.tol", default=1e-8),
        shift=_expect_number(cfg, "solver.shift", default=0.0),
        max_iter=_expect_int(cfg, "solver.max_iter", default=300),
        seed=seed if seed is not None else _expect_int(cfg, "solver.seed", default=7),
    )


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------


def _plain(obj):
    """Recursive conversion to JSON-safe plain python; infinities become
    the string 'inf'/'-inf' so reports stay standard JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def serialize_report(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(c) for c in row) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


# ----------------------------------------------------------------------
# plot data
# ----------------------------------------------------------------------


def _boundary_block(profile: ShearProfile, d: float, span, n: int = 401) -> str:
    xs = np.linspace(span[0], span[1], n)
    f = np.asarray(profile.eval_f(xs), dtype=float)
    lines = ["# boundary: x  f(x)  f(x)+d"]
    for x, y in zip(xs, f):
        lines.append(f"{x:.12g} {y:.12g} {y + d:.12g}")
    return "\n".join(lines)


def _segment_block(name: str, points) -> str:
    lines = [f"# {name}: x  y"]
    for x, y in points:
        lines.append(f"{x:.12g} {y:.12g}")
    return "\n".join(lines)


def emit_plotdata(report: dict, out) -> None:
    """Write gnuplot-ready whitespace-separated data for the report's
    payload: boundary curves of the strip, dispersion bands (one block
    per band), eigenvalue ladders, and — for bracketing payloads — the
    subdomain separator segments."""
    payload = report.get("results", {})
    scenario = report.get("scenario", {})
    blocks: list[str] = []

    kind = payload.get("kind") if isinstance(payload, dict) else None
    bracket_payload = None
    if kind == "bracketing":
        bracket_payload = payload
    elif kind == "alpha0-scan":
        bracket_payload = payload.get("representative")

    profile = geometry_d = None
    try:
        scn = scenario
        if (
            bracket_payload is not None
            and _get(scenario, "profile.kind") == "schema"
            and _get(scenario, "profile.alpha") is None
        ):
            scn = json.loads(json.dumps(scenario))
            scn["profile"]["alpha"] = bracket_payload["alpha"]
            scn["profile"].setdefault(
                "bounds", [bracket_payload["c1"], bracket_payload["c2"]]
            )
        profile = build_profile(scn)
        geometry_d = _expect_number(scn, "geometry.d")
    except Exception:
        profile = None

    if profile is not None and geometry_d is not None:
        L = _expect_number(scenario, "geometry.L", default=None)
        if L is not None:
            span = (-L, L)
        elif profile.deficit is not None:
            lo, hi = profile.deficit.support
            pad = 0.5 * (hi - lo) + 1.0
            span = (lo - pad, hi + pad)
        else:
            span = (-5.0, 5.0)
        blocks.append(_boundary_block(profile, geometry_d, span))

    if kind == "dispersion":
        xi = payload["xi_grid"]
        for band, (ana, num) in enumerate(
            zip(payload["analytic"], payload["numeric"]), start=1
        ):
            lines = [f"# band {band}: xi  analytic  numeric"]
            for x, a, v in zip(xi, ana, num):
                lines.append(f"{x:.12g} {a:.12g} {v:.12g}")
            blocks.append("\n".join(lines))
    elif kind == "spectrum":
        lines = ["# eigenvalues: index  value"]
        for i, v in enumerate(payload.get("eigenvalues", []), start=1):
            lines.append(f"{i} {v:.12g}")
        blocks.append("\n".join(lines))
    elif kind == "convergence":
        lines = ["# ladder: L  lambda1"]
        for (L, _ns, _nt), v in zip(payload["ladder"], payload["lambda1"]):
            lines.append(f"{L:.12g} {v:.12g}")
        blocks.append("\n".join(lines))
    elif bracket_payload is not None:
        schema = bracket_payload.get("schema") or {}
        pts = schema.get("points")
        if pts:
            blocks.append(
                _segment_block("sigma_ext left O-A", [pts["O"], pts["A"]])
            )
            blocks.append(
                _segment_block(
                    "sigma_ext right O'-A'", [pts["O_prime"], pts["A_prime"]]
                )
            )
            blocks.append(_segment_block("sigma_int left B-C", [pts["B"], pts["C"]]))
            blocks.append(
                _segment_block(
                    "sigma_int right B'-C'", [pts["B_prime"], pts["C_prime"]]
                )
            )
    elif kind == "volume-probe":
        lines = ["# areas: x  area  stderr"]
        for x, a, se in zip(
            payload["centers_x"], payload["areas"], payload["stderrs"]
        ):
            lines.append(f"{x:.12g} {a:.12g} {se:.12g}")
        blocks.append("\n".join(lines))

    with open(out, "w") as fh:
        fh.write("\n\n".join(blocks) + ("\n" if blocks else ""))


# ----------------------------------------------------------------------
# pipelines (each returns payload dict, csv spec, exit code)
# ----------------------------------------------------------------------


def _run_spectrum(cfg, seed, jobs):
    profile = build_profile(cfg)
    geometry = build_geometry(cfg)
    opts = build_options(cfg, seed)
    ladder = _get(cfg, "spectrum.ladder")
    if ladder:
        rungs = [(float(L), int(ns), int(nt)) for L, ns, nt in ladder]
        study = convergence_study(profile, geometry.d, rungs, opts=opts)
        payload = study.to_dict()
        csv = (
            "ladder.csv",
            ["L", "n_s", "n_t", "lambda1"],
            [(L, ns, nt, v) for (L, ns, nt), v in zip(rungs, study.values)],
        )
        return payload, csv, 0
    n_s = _expect_int(cfg, "spectrum.n_s", required=True)
    n_t = _expect_int(cfg, "spectrum.n_t", required=True)
    report = truncated_spectrum(profile, geometry, n_s=n_s, n_t=n_t, opts=opts)
    payload = report.to_dict()
    csv = (
        "eigenvalues.csv",
        ["index", "value"],
        [(i + 1, v) for i, v in enumerate(report.eigresult.values)],
    )
    return payload, csv, 0


def _run_dispersion(cfg, seed, jobs):
    beta = _expect_number(cfg, "profile.beta", required=True)
    d = _expect_number(cfg, "geometry.d", required=True)
    xi_min, xi_max = _expect_pair(cfg, "dispersion.xi_range", default=(-4.0, 4.0))
    points = _expect_int(cfg, "dispersion.xi_points", default=17)
    bands = _expect_int(cfg, "dispersion.bands", default=3)
    n_t = _expect_int(cfg, "dispersion.n_t", default=400)
    xi = np.linspace(xi_min, xi_max, points)
    curve = dispersion_curve(
        beta, d, xi, m_bands=bands, n_t=n_t,
        seed=seed if seed is not None else 7, jobs=jobs,
    )
    payload = curve.to_dict()
    csv = ("bands.csv", ["xi", "band_index", "analytic", "numeric"], list(curve.rows()))
    return payload, csv, 0


def _run_hardy(cfg, seed, jobs):
    profile = build_profile(cfg)
    geometry = build_geometry(cfg)
    interval = _expect_pair(cfg, "hardy.interval", required=True)
    res = _get(cfg, "hardy.lambda_resolution", default=[24, 24])
    cert = hardy_constants(profile, geometry.d, interval, resolution=tuple(res))
    trials = _expect_int(cfg, "hardy.trials", default=200)
    tol = _expect_number(cfg, "hardy.tol", default=1e-7)
    c_scale = _expect_number(cfg, "hardy.c_scale", default=1.0)
    delta = _expect_number(cfg, "hardy.delta")
    vres = _get(cfg, "hardy.resolution", default=[240, 40])
    ver = verify_hardy(
        cert, profile, geometry,
        trials=trials, tol=tol, resolution=tuple(vres),
        c_scale=c_scale, delta=delta,
        seed=seed if seed is not None else 11,
    )
    payload = ver.to_dict()
    csv = None
    return payload, csv, 0 if ver.passed else 2


def _run_certify(cfg, seed, jobs):
    profile = build_profile(cfg)
    d = _expect_number(cfg, "geometry.d", required=True)
    condition = _get(cfg, "certify.condition", default="i")
    if condition == "i":
        n = _expect_number(cfg, "certify.n", required=True)
        cert = rayleigh_condition_i(profile, d, n)
    elif condition == "ii":
        n = _expect_number(cfg, "certify.n")
        cert = certify_condition_ii(profile, d, n=n)
    else:
        raise ConfigError(
            f'field "certify.condition" must be "i" or "ii", got {condition!r}'
        )
    payload = cert.to_dict()
    return payload, None, 0 if cert.verdict else 2


def _run_bracket(cfg, seed, jobs):
    beta = _expect_number(cfg, "profile.beta", required=True)
    d = _expect_number(cfg, "geometry.d", required=True)
    deficit = build_deficit(cfg, "profile.deficit")
    grid = _get(cfg, "bracket.alpha_grid", required=True)
    res = _get(cfg, "bracket.resolution", default=[32, 32])
    records = alpha0_scan(
        beta, d, deficit, [float(a) for a in grid],
        resolution=tuple(res), jobs=jobs,
    )
    check = _get(cfg, "bracket.spectrum_check")
    alpha0 = find_alpha0(
        beta, d, deficit, [float(a) for a in grid], resolution=tuple(res),
        spectrum_check=tuple(check) if check else None, jobs=jobs,
    )
    winners = [r for r in records if r["qualifies"]]
    bracketed = [r for r in records if r["route"] == "bracketing"]
    representative = None
    if bracketed:
        pick = next((r for r in bracketed if r["qualifies"]), bracketed[0])
        representative = bracket_thresholds(
            pick["alpha"], beta, d, deficit, resolution=tuple(res)
        ).to_dict()
    payload = {
        "kind": "alpha0-scan",
        "beta": beta,
        "d": d,
        "deficit": deficit.describe(),
        "records": records,
        "alpha0": alpha0,
        "representative": representative,
    }
    csv = (
        "alpha_scan.csv",
        ["alpha", "route", "qualifies", "combined_min"],
        [
            (r["alpha"], r["route"], int(r["qualifies"]),
             r["combined_min"] if r["combined_min"] is not None else "")
            for r in records
        ],
    )
    return payload, csv, 0 if winners else 2


def _run_identity_check(cfg, seed, jobs):
    profile = build_profile(cfg)
    d = _expect_number(cfg, "geometry.d", required=True)
    count = _expect_int(cfg, "identity-check.fields", default=20)
    tol = _expect_number(cfg, "identity-check.tol", default=1e-8)
    span = _expect_number(cfg, "identity-check.span", default=4.0)
    rng = np.random.default_rng(seed if seed is not None else 5)
    residuals = []
    refined = []
    for _ in range(count):
        fld = random_smooth_field(rng, d, span=span)
        residuals.append(ground_state_identity(profile, d, fld))
        refined.append(
            ground_state_identity(profile, d, fld, s_order=28, t_order=40)
        )
    worst = max(residuals)
    worst_refined = max(refined)
    payload = {
        "kind": "identity-check",
        "profile": profile.describe(),
        "d": d,
        "fields": count,
        "max_residual": worst,
        "max_residual_refined": worst_refined,
        "tol": tol,
        "verdict": bool(worst < tol),
    }
    csv = (
        "residuals.csv",
        ["field", "residual", "residual_refined"],
        [(i + 1, r, rr) for i, (r, rr) in enumerate(zip(residuals, refined))],
    )
    return payload, csv, 0 if payload["verdict"] else 2


def _run_probe_volume(cfg, seed, jobs):
    profile = build_profile(cfg)
    d = _expect_number(cfg, "geometry.d", required=True)
    centers = _get(cfg, "probe-volume.centers_x", required=True)
    radius = _expect_number(cfg, "probe-volume.radius", default=1.0)
    n_samples = _expect_int(cfg, "probe-volume.n_samples", default=1_000_000)
    rng = np.random.default_rng(seed if seed is not None else 0)
    xs, areas, errs = [], [], []
    for x in centers:
        x = float(x)
        yc = float(profile.eval_f(np.array([x]))[0]) + 0.5 * d
        est = ball_intersection_area(
            profile, d, (x, yc), radius, n_samples=n_samples, rng=rng
        )
        xs.append(x)
        areas.append(float(est))
        errs.append(est.stderr)
    decreasing = all(a > b for a, b in zip(areas, areas[1:]))
    payload = {
        "kind": "volume-probe",
        "profile": profile.describe(),
        "d": d,
        "radius": radius,
        "n_samples": n_samples,
        "centers_x": xs,
        "areas": areas,
        "stderrs": errs,
        "decreasing": decreasing,
    }
    csv = ("areas.csv", ["x", "area", "stderr"], list(zip(xs, areas, errs)))
    return payload, csv, 0


_PIPELINES = {
    "spectrum": _run_spectrum,
    "dispersion": _run_dispersion,
    "hardy": _run_hardy,
    "certify": _run_certify,
    "bracket": _run_bracket,
    "identity-check": _run_identity_check,
    "probe-volume": _run_probe_volume,
}


# ----------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------


def run(
    command: str,
    config_path,
    jobs: int = 1,
    seed: int | None = None,
    out_dir=".",
    embed_timings: bool = False,
) -> int:
    """Execute one scenario; returns the process exit code."""
    out = Path(out_dir)
    timings: dict[str, float] = {}
    warnings: list[str] = []

    t0 = time.perf_counter()
    try:
        with open(config_path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        print(f"error: config file not found: {config_path}", file=sys.stderr)
        return 1
    except tomllib.TOMLDecodeError as exc:
        print(f"error: config parse failure: {exc}", file=sys.stderr)
        return 1
    timings["parse"] = time.perf_counter() - t0

    declared = cfg.get("command")
    if declared is not None and declared != command:
        print(
            f'error: field "command": scenario declares {declared!r} but the '
            f"{command!r} subcommand was invoked",
            file=sys.stderr,
        )
        return 1

    report: dict = {
        "toolkit": "shearspec",
        "version": __version__,
        "command": command,
        "scenario": cfg,
        "seed": seed,
        "warnings": warnings,
    }

    t0 = time.perf_counter()
    try:
        payload, csv_spec, code = _PIPELINES[command](cfg, seed, jobs)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        timings["compute"] = time.perf_counter() - t0
        report["error"] = str(exc)
        report["results"] = None
        if embed_timings:
            report["timings"] = timings
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(serialize_report(report))
        print(f"error: {exc}", file=sys.stderr)
        return 1
    timings["compute"] = time.perf_counter() - t0

    report["results"] = payload
    if payload.get("kind") == "spectrum" and payload.get("essential_threshold") == EMPTY:
        warnings.append(
            "essential spectrum empty: every computed eigenvalue is discrete"
        )
    if embed_timings:
        report["timings"] = timings

    t0 = time.perf_counter()
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(serialize_report(report))
    if csv_spec is not None:
        name, header, rows = csv_spec
        write_csv(out / name, header, rows)
    emit_plotdata(report, out / "plot.dat")
    timings["write"] = time.perf_counter() - t0

    for stage, dt in timings.items():
        print(f"[time] {stage}: {dt:.3f}s", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shearspec",
        description=(
            "Spectral toolkit for sheared planar strips: truncated spectra, "
            "dispersion bands, variational and Hardy certificates, domain "
            "bracketing, and geometric probes, driven by TOML scenarios."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML scenario file")
        p.add_argument("--jobs", type=int, default=1, help="parallel sub-tasks")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument(
            "--embed-timings",
            action="store_true",
            help="embed wall-clock timings in the JSON report "
            "(breaks byte-identical reruns)",
        )
    args = parser.parse_args(argv)
    return run(
        args.command,
        args.config,
        jobs=args.jobs,
        seed=args.seed,
        out_dir=args.out,
        embed_timings=args.embed_timings,
    )


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
