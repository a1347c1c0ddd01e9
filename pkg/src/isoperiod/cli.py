"""Command-line interface: period computation, deformation runs, verification
reports, comb regions, and canned example runs.

Every command writes its artifacts plus a run manifest into --out; rerunning
with identical inputs and tolerances reproduces the data artifacts
bit-identically (the manifest records wall-clock time and is exempt).

Exit codes: 0 success, 2 input error, 3 validation error, 4 engine
singularity, 5 period drift exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import apps, comb, flow, periods
from .curves import BranchConfig, validate_config
from .errors import (DriftExceeded, IsoperiodError, NoConvergence,
                     SingularJacobian, SingularLocus, SingularPeriodMatrix,
                     VanishingOmegaAtU)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VALIDATION = 3
EXIT_SINGULAR = 4
EXIT_DRIFT = 5


# ---------------------------------------------------------------------------
# JSON encoding of complex data
# ---------------------------------------------------------------------------

def c2j(z):
    z = complex(z)
    if z.imag == 0.0:
        return z.real
    return [z.real, z.imag]


def j2c(v):
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ValueError(f"expected number or [re, im] pair, got {v!r}")


def matrix_json(m):
    return [[c2j(v) for v in row] for row in np.atleast_2d(m)]


def vector_json(v):
    return [c2j(z) for z in np.atleast_1d(v)]


def config_json(cfg: BranchConfig):
    return {"genus": cfg.genus, "x": vector_json(cfg.x), "u": vector_json(cfg.u),
            "real": cfg.real}


def load_config(path) -> BranchConfig:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    x = [j2c(v) for v in data["x"]]
    u = [j2c(v) for v in data["u"]]
    g = data.get("genus", len(x))
    if g != len(x) or g != len(u):
        raise ValueError("genus field inconsistent with x/u lengths")
    return BranchConfig(x=tuple(x), u=tuple(u), real=bool(data.get("real", False)))


def write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def read_trajectory_csv(path, genus: int):
    """Samples (x, u, du, drift) back from a trajectory CSV written by deform."""
    from .flow import FlowSample

    def parse(s):
        return complex(s)

    samples = []
    with open(path, "r", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    g = genus
    if header[:1] != ["step"] or len(header) != 1 + 2 * g + g * g + g:
        raise ValueError(f"unexpected trajectory schema in {path}")
    for row in body:
        vals = [parse(v) for v in row[1:]]
        x = np.array(vals[:g])
        u = np.array(vals[g:2 * g])
        du = np.array(vals[2 * g:2 * g + g * g]).reshape(g, g)
        drift = np.array([v.real for v in vals[2 * g + g * g:]])
        samples.append(FlowSample(x=x, u=u, du=du, beta_drift=drift))

    class _Loaded:
        pass

    out = _Loaded()
    out.samples = samples
    return out


def write_manifest(outdir: Path, command, args_dict, outputs, t0):
    manifest = {
        "command": command,
        "engine_version": __version__,
        "inputs": args_dict,
        "outputs": sorted(str(p.name) for p in outputs),
        "wall_clock_seconds": round(time.time() - t0, 3),
    }
    write_json(outdir / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_periods(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    bad = validate_config(cfg)
    if bad:
        print("invalid configuration: " + "; ".join(bad), file=sys.stderr)
        return EXIT_VALIDATION
    pd = periods.normalized_basis(cfg, tol=args.tol_quad)
    om = periods.build_omega(cfg, pd, alpha=_parse_alpha(args, cfg.genus), tol=args.tol_quad)
    from .cycles import intersection_matrix
    payload = {
        "config": config_json(cfg),
        "A_raw": matrix_json(pd.A_raw),
        "C": matrix_json(pd.C),
        "pairing": [[int(v) for v in row]
                    for row in intersection_matrix(pd.basis, cfg.points)],
        "riemann_matrix": matrix_json(pd.B),
        "omega_at_infinity": vector_json(pd.omega_at[:, -1]),
        "omega_at_ramification": matrix_json(pd.omega_at[:, :-1]),
        "second_kind": {
            "alpha": vector_json(om.alpha),
            "poly_coefficients": vector_json(om.c),
            "beta": vector_json(om.beta),
            "beta_residual": om.beta_residual,
            "values_at_ramification": vector_json(om.values_at),
        },
        "diagnostics": _clean(pd.quad_report),
    }
    outdir = _outdir(args)
    out = outdir / "periods.json"
    write_json(out, payload)
    write_manifest(outdir, "periods", _args_record(args), [out], t0)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_deform(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    bad = validate_config(cfg)
    if bad:
        print("invalid configuration: " + "; ".join(bad), file=sys.stderr)
        return EXIT_VALIDATION
    path = json.loads(args.path)
    control = flow.FlowControl(quad_tol=args.tol_quad, macro_step=args.macro_step,
                               correct=args.correct, drift_tol=args.tol_flow)
    state = flow.DeformationState(cfg=cfg, alpha=_parse_alpha(args, cfg.genus),
                                  mode=args.mode)
    traj = flow.integrate_flow(state, path, control)
    outdir = _outdir(args)
    csv_path = outdir / "trajectory.csv"
    _write_trajectory_csv(csv_path, traj)
    sidecar = outdir / "trajectory.json"
    write_json(sidecar, {
        "config": config_json(cfg),
        "mode": traj.mode,
        "alpha": vector_json(traj.alpha),
        "beta_target": vector_json(traj.beta_target),
        "path": [vector_json(p) for p in traj.path],
        "max_drift": traj.max_drift(),
        "control": {"quad_tol": control.quad_tol, "macro_step": control.macro_step,
                    "correct": control.correct, "drift_tol": control.drift_tol},
    })
    write_manifest(outdir, "deform", _args_record(args), [csv_path, sidecar], t0)
    print(f"wrote {csv_path} (max period drift {traj.max_drift():.3e})")
    return EXIT_OK


def cmd_verify(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    bad = validate_config(cfg)
    if bad:
        print("invalid configuration: " + "; ".join(bad), file=sys.stderr)
        return EXIT_VALIDATION
    pd = periods.normalized_basis(cfg, tol=args.tol_quad)
    om = periods.build_omega(cfg, pd, alpha=_parse_alpha(args, cfg.genus), tol=args.tol_quad)
    report = flow.verify_identities(cfg, pd, om, tol=args.tol_quad)
    hill = None
    if args.hill_T is not None:
        hc = flow.hill_check(cfg, pd, j2c(json.loads(args.hill_T)))
        hill = {"is_hill": hc["is_hill"], "n": [int(v) for v in hc["n"]],
                "residuals": [float(v) for v in hc["residuals"]],
                "T": c2j(hc["T"])}
    wavevector = None
    if args.trajectory is not None:
        traj = read_trajectory_csv(args.trajectory, cfg.genus)
        rep = apps.kdv_wavevector_report(cfg, traj, quad_tol=args.tol_quad)
        wavevector = {
            "max_drift": rep["max_drift"],
            "U": [vector_json(row) for row in rep["U"]],
        }
        if "max_im_U_band" in rep:
            wavevector["max_im_U_band"] = rep["max_im_U_band"]
        drift = max(float(np.max(s.beta_drift)) for s in traj.samples)
        wavevector["max_recorded_beta_drift"] = drift
    payload = {"config": config_json(cfg), "identity_residuals": report,
               "hill": hill, "wavevector": wavevector}
    outdir = _outdir(args)
    out = outdir / "verify.json"
    write_json(out, payload)
    write_manifest(outdir, "verify", _args_record(args), [out], t0)
    worst = max(report.values())
    print(f"wrote {out} (worst identity residual {worst:.3e})")
    return EXIT_OK


def cmd_comb(args) -> int:
    t0 = time.time()
    cfg = load_config(args.config)
    bad = validate_config(cfg, ordered=True)
    if bad:
        print("invalid configuration: " + "; ".join(bad), file=sys.stderr)
        return EXIT_VALIDATION
    pd = periods.normalized_basis(cfg, tol=args.tol_quad)
    om = periods.build_omega(cfg, pd, tol=args.tol_quad)
    region = comb.comb_map(cfg, pd, om, tol=args.tol_quad)
    payload = {
        "config": config_json(cfg),
        "q": [float(v) for v in region.q],
        "h": [float(v) for v in region.h],
        "zeros": vector_json(region.zeros),
        "base_residual": region.base_residual,
        "beta_ratio": vector_json(region.beta_ratio),
    }
    if args.trajectory is not None:
        traj = read_trajectory_csv(args.trajectory, cfg.genus)
        rep = comb.comb_invariance_check(cfg, traj, tol=args.tol_invariance,
                                         quad_tol=args.tol_quad)
        payload["invariance"] = {
            "base_invariant": rep["base_invariant"],
            "slits_moved": rep["slits_moved"],
            "q_drift": [float(v) for v in rep["q_drift"]],
            "h_variation": [float(v) for v in rep["h_variation"]],
            "ratio_spread": rep["ratio_spread"],
        }
    outdir = _outdir(args)
    out = outdir / "comb.json"
    outputs = [out]
    write_json(out, payload)
    if args.trace:
        trace = comb.boundary_trace(cfg, pd, om)
        trace_path = outdir / "comb_trace.csv"
        with open(trace_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["lambda", "theta_re", "theta_im"])
            for lam, th in trace:
                w.writerow([repr(lam.real), repr(th.real), repr(th.imag)])
        outputs.append(trace_path)
    write_manifest(outdir, "comb", _args_record(args), outputs, t0)
    print(f"wrote {out}")
    return EXIT_OK


_EXAMPLES = {
    "genus1-reference": {"x": [2.0], "u": [1.0], "real": True},
    "lame-one-gap": None,       # built from (e2, e3) = (0, 1)
    "lame-two-gap": None,
    "neumann-n2": None,
    "comb-g1": {"x": [2.0], "u": [1.0], "real": True},
}


def cmd_examples(args) -> int:
    t0 = time.time()
    name = args.name
    if name not in _EXAMPLES:
        print(f"unknown example {name!r}; choose from {sorted(_EXAMPLES)}",
              file=sys.stderr)
        return EXIT_INPUT
    outdir = _outdir(args)
    outputs = []

    def emit(fname, payload):
        p = outdir / fname
        write_json(p, payload)
        outputs.append(p)

    if name == "genus1-reference":
        cfg = BranchConfig(x=(2.0,), u=(1.0,), real=True)
        state = flow.DeformationState(cfg=cfg, alpha=np.zeros(1), mode=flow.IMPLICIT)
        traj = flow.integrate_flow(state, [[2.0], [2.2]],
                                   flow.FlowControl(quad_tol=args.tol_quad,
                                                    macro_step=args.macro_step))
        csv_path = outdir / "trajectory.csv"
        _write_trajectory_csv(csv_path, traj)
        outputs.append(csv_path)
        emit("run.json", {"example": name, "config": config_json(cfg),
                          "max_drift": traj.max_drift()})
    elif name == "lame-one-gap":
        rep = apps.cnoidal_period_report(0.0, 1.0, 2.1, n_grid=args.grid,
                                         quad_tol=args.tol_quad,
                                         macro_step=args.macro_step)
        emit("run.json", {
            "example": name,
            "max_two_w1_drift": rep["max_two_w1_drift"],
            "max_wave_defect": rep["max_wave_defect"],
            "beta_drift": rep["beta_drift"],
            "samples": [{k: c2j(v) if isinstance(v, complex) else v
                         for k, v in r.items()} for r in rep["samples"]],
        })
        wave_path = outdir / "wave.csv"
        with open(wave_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["X", "v"])
            for xx, vv in zip(rep["wave_X"], rep["wave_v"]):
                w.writerow([repr(float(xx)), repr(complex(vv).real)])
        outputs.append(wave_path)
    elif name == "lame-two-gap":
        cfg, recovered = apps.lame_two_gap_config(0.0, 1.0)
        emit("run.json", {
            "example": name, "config": config_json(cfg),
            "recovered_roots": vector_json(recovered),
            "ordered": not validate_config(cfg, ordered=True),
            "violations": validate_config(cfg, ordered=True),
        })
    elif name == "neumann-n2":
        cfg = apps.neumann_config([-5.0, -3.0], [4.0, 2.0])
        pd = periods.normalized_basis(cfg, tol=args.tol_quad)
        om = periods.build_omega(cfg, pd, tol=args.tol_quad)
        emit("run.json", {
            "example": name, "config": config_json(cfg),
            "beta": vector_json(om.beta),
            "U": vector_json(periods.wavevector_U(cfg, pd)),
        })
    elif name == "comb-g1":
        cfg = BranchConfig(x=(2.0,), u=(1.0,), real=True)
        pd = periods.normalized_basis(cfg, tol=args.tol_quad)
        om = periods.build_omega(cfg, pd, tol=args.tol_quad)
        region = comb.comb_map(cfg, pd, om, tol=args.tol_quad)
        emit("run.json", {
            "example": name, "config": config_json(cfg),
            "q": [float(v) for v in region.q], "h": [float(v) for v in region.h],
            "beta_ratio": vector_json(region.beta_ratio),
        })
    write_manifest(outdir, f"examples:{name}", _args_record(args), outputs, t0)
    print(f"wrote {len(outputs)} artifact(s) to {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# helpers and entry point
# ---------------------------------------------------------------------------

def _parse_alpha(args, genus):
    if getattr(args, "alpha", None):
        vals = [j2c(v) for v in json.loads(args.alpha)]
        if len(vals) != genus:
            raise ValueError("alpha length must equal the genus")
        return np.array(vals, dtype=complex)
    return np.zeros(genus, dtype=complex)


def _write_trajectory_csv(path: Path, traj):
    g = len(traj.samples[0].x)
    header = (["step"] + [f"x_{j}" for j in range(1, g + 1)]
              + [f"u_{m}" for m in range(1, g + 1)]
              + [f"du_{m}_{j}" for m in range(1, g + 1) for j in range(1, g + 1)]
              + [f"beta_drift_{k}" for k in range(1, g + 1)])

    def fmt(z):
        z = complex(z)
        return repr(z.real) if z.imag == 0.0 else repr(z)

    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for i, s in enumerate(traj.samples):
            row = ([i] + [fmt(v) for v in s.x] + [fmt(v) for v in s.u]
                   + [fmt(v) for v in s.du.reshape(-1)]
                   + [repr(float(v)) for v in s.beta_drift])
            w.writerow(row)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def _outdir(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _args_record(args):
    rec = {k: v for k, v in vars(args).items() if k != "func"}
    return _clean(rec)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isoperiod",
                                 description="periods and isoperiodic deformations "
                                             "of hyperelliptic curves")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("config", help="JSON branch-point configuration")
        p.add_argument("--tol-quad", type=float, default=1e-10,
                       help="quadrature tolerance")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("periods", help="normalized differentials and period matrices")
    common(p)
    p.add_argument("--alpha", default=None, help="JSON list of prescribed a-periods")
    p.set_defaults(func=cmd_periods)

    p = sub.add_parser("deform", help="integrate an isoperiodic deformation")
    common(p)
    p.add_argument("--path", required=True,
                   help="JSON polyline in x-space, axis-aligned legs")
    p.add_argument("--mode", choices=[flow.IMPLICIT, flow.RATIONAL],
                   default=flow.IMPLICIT)
    p.add_argument("--alpha", default=None)
    p.add_argument("--tol-flow", type=float, default=None,
                   help="abort when period drift exceeds this")
    p.add_argument("--macro-step", type=float, default=0.01)
    p.add_argument("--correct", dest="correct", action="store_true", default=True)
    p.add_argument("--no-correct", dest="correct", action="store_false")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("verify", help="run the identity verification harness")
    common(p)
    p.add_argument("--alpha", default=None)
    p.add_argument("--hill-T", default=None,
                   help="JSON number or [re, im]: test the Hill condition at this T")
    p.add_argument("--trajectory", default=None,
                   help="trajectory CSV: also report wavevector drift along it")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("comb", help="comb region of an ordered real configuration")
    common(p)
    p.add_argument("--trace", action="store_true", help="also write a boundary trace CSV")
    p.add_argument("--trajectory", default=None,
                   help="trajectory CSV: also run the base-invariance report")
    p.add_argument("--tol-invariance", type=float, default=1e-6)
    p.set_defaults(func=cmd_comb)

    p = sub.add_parser("examples", help="canned reference runs")
    p.add_argument("name", choices=sorted(_EXAMPLES))
    p.add_argument("--tol-quad", type=float, default=1e-10)
    p.add_argument("--out", default="out")
    p.add_argument("--macro-step", type=float, default=0.02)
    p.add_argument("--grid", type=int, default=512)
    p.set_defaults(func=cmd_examples)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (json.JSONDecodeError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DriftExceeded as exc:
        print(f"drift exceeded: {exc}", file=sys.stderr)
        return EXIT_DRIFT
    except (SingularPeriodMatrix, SingularLocus, SingularJacobian,
            VanishingOmegaAtU, NoConvergence) as exc:
        print(f"engine singularity: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except IsoperiodError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
