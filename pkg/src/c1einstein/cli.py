"""Command-line front end: solve / scan / verify / report.

Configuration is flat `key = value` text with command-line overrides; outputs
are a trajectory CSV, a flat constants file and a JSON diagnostics document,
all at 17 significant digits.  Exit codes: 0 pass, 1 check failure,
2 non-convergence, 3 usage error.
"""

import argparse
import json
import os
import sys

import numpy as np

from .diagnostics import (characteristic_numbers, eigen_gap_report,
                          invariant_constants, kahler_detector,
                          max_principle_check)
from .germs import DIAGRAM_IDS, get_diagram
from .presets import initial_guess, scan_box
from .shooting import (AdmissibilityError, NonConvergence, ShootingProblem,
                       detect_equal_pairs, scan, solve)

__all__ = ["main", "run", "emit", "load_config", "read_solution_csv"]

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_NONCONVERGENCE = 2
EXIT_USAGE = 3

_FMT = "%.17g"

_CONFIG_KEYS = {
    "theta": float,
    "germ_order": int,
    "rtol": float,
    "atol": float,
    "max_iter": int,
    "solver_tol": float,
    "scan_width": float,
    "scan_points": int,
    "seed": int,
    "perturb": float,
}


class ConfigError(ValueError):
    pass


def load_config(path):
    """Flat key = value parser; comments with '#', unknown keys rejected."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.rstrip()!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                cfg[key] = _CONFIG_KEYS[key](val.strip())
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {val.strip()!r}") from None
    return cfg


def _fmt(x):
    return _FMT % float(x)


CSV_HEADER = ("t,f1,f2,f3,df1,df2,df3,L1,L2,L3,R1,R2,R3,"
              "A1,A2,A3,B1,B2,B3,a1,a2,a3,b1,b2,b3,constraint")


def emit(sr, out_dir):
    """Persist a converged solution: solution.csv, constants.txt,
    diagnostics.json."""
    os.makedirs(out_dir, exist_ok=True)
    d = sr.trajectory.diagnostics()
    rows = np.column_stack([
        d["t"], d["f"], d["df"], d["L"], d["R"], d["A"], d["B"],
        d["a"], d["b"], d["constraint"],
    ])
    csv_path = os.path.join(out_dir, "solution.csv")
    with open(csv_path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(_FMT % v for v in row) + "\n")

    const_path = os.path.join(out_dir, "constants.txt")
    with open(const_path, "w") as fh:
        fh.write(f"diagram = {sr.diagram.name}\n")
        fh.write(f"lambda = {_fmt(sr.lam)}\n")
        fh.write(f"T = {_fmt(sr.T)}\n")
        for name, val in sorted({**{f"left.{k}": v for k, v in sr.left_free.items()},
                                 **{f"right.{k}": v for k, v in sr.right_free.items()}}.items()):
            fh.write(f"{name} = {_fmt(val)}\n")
        try:
            for name, val in sorted(invariant_constants(sr).as_dict().items()):
                fh.write(f"{name} = {_fmt(val)}\n")
        except ValueError:
            pass

    diag = {
        "diagram": sr.diagram.name,
        "converged": sr.converged,
        "residual_norm": sr.residual_norm,
        "jacobian_rank": sr.jacobian_rank,
        "unknowns": {n: float(v) for n, v in zip(sr.problem.unknown_names, sr.u)},
        "drift": sr.drift,
        "equal_pairs": sorted(list(p) for p in detect_equal_pairs(sr)),
        "eigen_gaps": {k: (list(map(float, v)) if isinstance(v, tuple) else float(v))
                       for k, v in _gap_summary(sr).items()},
        "kahler": kahler_detector(sr),
    }
    if not (sr.diagram.case_id == "so3_hitchin" and sr.diagram.k >= 2):
        tr = characteristic_numbers(sr)
        diag["chi"] = tr.chi
        diag["tau"] = tr.tau
        diag["quadrature_doubling_change"] = tr.node_doubling_change
    json_path = os.path.join(out_dir, "diagnostics.json")
    with open(json_path, "w") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return [csv_path, const_path, json_path]


def _gap_summary(sr):
    g = eigen_gap_report(sr)
    return {"a_spread": g["a_spread"], "b_spread": g["b_spread"]}


def read_solution_csv(path):
    """Re-ingest a solution.csv; returns dict of named columns."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected CSV header")
        data = np.array([[float(x) for x in line.split(",")] for line in fh])
    names = CSV_HEADER.split(",")
    return {n: data[:, i] for i, n in enumerate(names)}


def _problem(args, cfg):
    diagram = get_diagram(args.diagram, args.k)
    kw = {}
    if "theta" in cfg:
        kw["theta"] = cfg["theta"]
    if "germ_order" in cfg:
        kw["germ_order"] = cfg["germ_order"]
    if "rtol" in cfg:
        kw["rtol"] = cfg["rtol"]
    if "atol" in cfg:
        kw["atol"] = cfg["atol"]
    if args.tol is not None:
        kw["rtol"] = args.tol
        kw["atol"] = args.tol * 1e-2
    return ShootingProblem(diagram, **kw)


def _guess(args, cfg):
    guess = initial_guess(args.diagram, args.k)
    if cfg.get("perturb", 0.0):
        rng = np.random.default_rng(cfg.get("seed", 0))
        guess = guess * (1.0 + cfg["perturb"] * rng.uniform(-1, 1, len(guess)))
    return guess


def _solve(args, cfg):
    pr = _problem(args, cfg)
    sr = solve(pr, _guess(args, cfg), max_iter=cfg.get("max_iter", 40),
               tol=cfg.get("solver_tol", 1e-9))
    files = emit(sr, args.out)
    print(f"converged diagram={sr.diagram.name} T={sr.T:.12g} "
          f"|residual|={sr.residual_norm:.3e}")
    for p in files:
        print(f"wrote {p}")
    return EXIT_PASS


def _scan(args, cfg):
    pr = _problem(args, cfg)
    grid = scan_box(args.diagram, args.k, width=cfg.get("scan_width"),
                    n=cfg.get("scan_points", 3))
    results = scan(pr, grid, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "scan.csv")
    names = pr.unknown_names
    with open(path, "w") as fh:
        fh.write(",".join(names) + ",residual\n")
        for u, r in results:
            fh.write(",".join(_FMT % v for v in u) + "," + (_FMT % r) + "\n")
    best = min(results, key=lambda ur: ur[1])
    print(f"scanned {len(results)} points; best |residual| = {best[1]:.3e}")
    print(f"wrote {path}")
    return EXIT_PASS


def _check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
    return ok


def _verify(args, cfg):
    pr = _problem(args, cfg)
    sr = solve(pr, _guess(args, cfg),
               max_iter=cfg.get("max_iter", 40), tol=cfg.get("solver_tol", 1e-9))
    ok = True
    ok &= _check("match_residual", sr.residual_norm < 1e-9,
                 f"{sr.residual_norm:.3e}")
    ok &= _check("jacobian_rank", sr.jacobian_rank == 5, str(sr.jacobian_rank))
    dr = sr.drift
    ok &= _check("constraint_drift", dr["max_constraint"] < 1e-7,
                 f"{dr['max_constraint']:.3e}")
    ok &= _check("trace_drift", max(dr["max_trace_a"], dr["max_trace_b"]) < 1e-7,
                 f"{max(dr['max_trace_a'], dr['max_trace_b']):.3e}")
    try:
        consts = invariant_constants(sr).as_dict()
        for name, val in sorted(consts.items()):
            print(f"  {name} = {val:.6f}")
    except ValueError:
        consts = {}
    kd = kahler_detector(sr)
    print(f"  kahler: {str(kd['is_kahler']).lower()}")
    mp = max_principle_check(sr)
    worst = max(abs(v["eq_residual"]) for v in mp.values())
    ok &= _check("ratio_equation_extrema", worst < 1e-7, f"{worst:.3e}")
    if not (sr.diagram.case_id == "so3_hitchin" and sr.diagram.k >= 2):
        tr = characteristic_numbers(sr)
        expect = sr.diagram.chi_tau
        ok &= _check("chi", abs(tr.chi - expect[0]) < 1e-3, f"{tr.chi:.6f}")
        ok &= _check("tau", abs(tr.tau - expect[1]) < 1e-3, f"{tr.tau:.6f}")
    if args.out:
        emit(sr, args.out)
    return EXIT_PASS if ok else EXIT_CHECK_FAILURE


def _report(args, cfg):
    pr = _problem(args, cfg)
    sr = solve(pr, initial_guess(args.diagram, args.k),
               max_iter=cfg.get("max_iter", 40), tol=cfg.get("solver_tol", 1e-9))
    print(f"diagram   {sr.diagram.name}")
    print(f"lambda    {sr.lam:g}")
    print(f"T         {sr.T:.12g}")
    try:
        for name, val in sorted(invariant_constants(sr).as_dict().items()):
            print(f"{name:<9s} {val:.12g}")
    except ValueError:
        pass
    g = _gap_summary(sr)
    print(f"a_spread  {g['a_spread']:.3e}")
    print(f"b_spread  {g['b_spread']:.3e}")
    if not (sr.diagram.case_id == "so3_hitchin" and sr.diagram.k >= 2):
        tr = characteristic_numbers(sr)
        print(f"chi       {tr.chi:.9f}")
        print(f"tau       {tr.tau:.9f}")
    return EXIT_PASS


def _parser():
    p = argparse.ArgumentParser(prog="c1einstein",
                                description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["solve", "scan", "verify", "report"])
    p.add_argument("--diagram", required=True,
                   help="one of: " + ", ".join(DIAGRAM_IDS))
    p.add_argument("--k", type=int, default=0, help="Hitchin cone parameter")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="scan worker threads")
    p.add_argument("--tol", type=float, default=None,
                   help="integrator relative tolerance override")
    return p


def run(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_PASS
    if args.diagram not in DIAGRAM_IDS:
        print(f"error: unknown diagram {args.diagram!r}", file=sys.stderr)
        return EXIT_USAGE
    if args.diagram == "so3_hitchin" and args.k < 1:
        print("error: so3_hitchin requires --k >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else {}
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return {"solve": _solve, "scan": _scan,
                "verify": _verify, "report": _report}[args.command](args, cfg)
    except NonConvergence as e:
        print(f"error: non-convergence: {e}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (AdmissibilityError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
