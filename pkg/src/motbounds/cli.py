"""Command-line front end: ``motbounds {ingest,bounds,curve,verify}``.

Exit codes: 0 success, 1 a check failed (or the data admit no martingale),
2 usage or parse error, 3 numerical failure in the solver.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import costs
from .config import DEFAULTS
from .couplings import (check_marginals, embed_coupling, evaluate,
                        read_coupling_csv, write_coupling_csv)
from .errors import InternalSolverError, MOTError, NumericalFailure
from .market import ChainRepairWarning, bl_density_report, read_chain, repair_chain
from .measure import read_measure_csv, write_measure_csv
from .mot import DualCertificate, mot3_lp
from .perturb import bound_curve, first_order_bounds, write_curve_csv
from .structure import coupling_support, cw_monotone_check, left_monotone_check
from .tree_model import tree_price

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _load_config(path):
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    return cfg, path.parent


def _validate(cfg, base):
    """Collect every config problem before failing."""
    problems = []
    marg = cfg.get("marginals")
    if isinstance(marg, dict):
        marg = [marg.get(k) for k in ("x", "y", "z")]
    if not (isinstance(marg, list) and len(marg) == 3 and all(isinstance(m, str) for m in marg)):
        problems.append("'marginals' must list three measure CSV paths (or map x, y, z to paths)")
        marg = None
    cost = cfg.get("cost")
    spec = None
    if isinstance(cost, str):
        if cost not in costs.BUILTINS:
            problems.append(f"unknown built-in cost {cost!r}; choose from {sorted(costs.BUILTINS)}")
        else:
            spec = costs.BUILTINS[cost]()
    elif isinstance(cost, dict):
        missing = [k for k in ("c1", "c2", "c3") if not isinstance(cost.get(k), str)]
        if missing:
            problems.append(f"cost expressions missing: {', '.join(missing)}")
        else:
            try:
                spec = costs.cost_from_expressions(cost["c1"], cost["c2"], cost["c3"])
            except costs.ExpressionError as exc:
                problems.append(f"cost expression: {exc}")
    else:
        problems.append("'cost' must be a built-in name or an object with c1, c2, c3")
    for key in ("eps", "tol"):
        if key in cfg and not isinstance(cfg[key], (int, float)):
            problems.append(f"'{key}' must be a number")
    if "eps" in cfg and isinstance(cfg["eps"], (int, float)) and cfg["eps"] < 0:
        problems.append("'eps' must be nonnegative")
    if "method" in cfg and cfg["method"] not in ("exact", "first-order", "both"):
        problems.append("'method' must be exact, first-order or both")
    if "tree_p" in cfg and not (isinstance(cfg["tree_p"], list)
                                and all(isinstance(p, (int, float)) for p in cfg["tree_p"])):
        problems.append("'tree_p' must be a list of numbers")
    if "eps_grid" in cfg and not (isinstance(cfg["eps_grid"], list)
                                  and all(isinstance(e, (int, float)) for e in cfg["eps_grid"])):
        problems.append("'eps_grid' must be a list of numbers")
    if problems:
        raise UsageError("invalid config:\n  - " + "\n  - ".join(problems))
    measures = []
    for p in marg:
        try:
            measures.append(read_measure_csv(base / p))
        except FileNotFoundError:
            raise UsageError(f"{base / p}: no such file") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return measures, spec


def _settings(args, cfg):
    """Merge command-line flags over config values."""
    tol_val = args.tol if args.tol is not None else cfg.get("tol")
    tol = DEFAULTS if tol_val is None else dataclasses.replace(DEFAULTS, general=float(tol_val))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    tree_p = args.tree_p if args.tree_p is not None else cfg.get("tree_p", [])
    return tol, seed, tree_p


def _dump(obj, fh):
    json.dump(obj, fh, indent=2)
    fh.write("\n")


# --- subcommands ----------------------------------------------------------

def cmd_ingest(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chains = []
    for path in args.chains:
        try:
            chains.append(read_chain(path))
        except FileNotFoundError:
            raise UsageError(f"{path}: no such file") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    report = {"chains": []}
    measures = []
    for path, chain in zip(args.chains, chains):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ChainRepairWarning)
            m, diag = bl_density_report(chain)
        entry = {"file": Path(path).name, "maturity": chain.maturity, **diag.to_dict(),
                 "warnings": [str(w.message) for w in caught]}
        report["chains"].append(entry)
        measures.append(m)
    if args.repair:
        target = args.target_mean if args.target_mean is not None else measures[0].mean()
        measures = repair_chain(measures, target, args.budget, args.tol)
        report["repair"] = {"target_mean": target, "budget": args.budget}
    for path, m, entry in zip(args.chains, measures, report["chains"]):
        dest = out / f"{Path(path).stem}.measure.csv"
        write_measure_csv(m, dest)
        entry["measure_file"] = dest.name
    with open(out / "ingest_report.json", "w", encoding="utf-8") as fh:
        _dump(report, fh)
    for entry in report["chains"]:
        status = "ok" if entry["valid"] else "repaired (clipped negative mass)"
        print(f"{entry['file']}: {status} -> {entry['measure_file']}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg, base = _load_config(args.config)
    measures, spec = _validate(cfg, base)
    tol, seed, tree_p = _settings(args, cfg)
    eps = args.eps if args.eps is not None else float(cfg.get("eps", 1.0))
    method = args.method or cfg.get("method", "both")
    probe_trials = int(cfg.get("probe_trials", 4))
    mx, my, mz = measures
    report = first_order_bounds(mx, my, mz, spec, eps, exact=method in ("exact", "both"),
                                tree_p=tree_p, probe_trials=probe_trials, seed=seed, tol=tol)
    if method == "exact":
        report.Q_l = report.Q_u = None
    if args.dump_lp:
        lp = mot3_lp(mx, my, mz, spec.with_epsilon(eps).tensor(mx.atoms, my.atoms, mz.atoms))
        with open(args.dump_lp, "w", encoding="utf-8") as fh:
            lp.dump(fh)
    payload = report.to_dict()
    payload["method"] = method
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "report.json", "w", encoding="utf-8") as fh:
            _dump(payload, fh)
        for name, c in sorted(report.couplings.items()):
            write_coupling_csv(c, out / f"{name}.csv")
    if args.json:
        _dump(payload, sys.stdout)
    else:
        print(_bounds_table(report, method))
        for w in report.warnings:
            print(f"warning: {w}")
    return EXIT_OK


def _bounds_table(report, method):
    if method != "exact":
        return report.table()
    ps = sorted(report.tree_prices)
    head = ["eps", "P_l"] + [f"p = {p:g}" for p in ps] + ["P_u"]
    row = [report.eps, report.P_l] + [report.tree_prices[p] for p in ps] + [report.P_u]
    cells = [f"{v:.10g}" for v in row]
    widths = [max(len(h), len(c)) for h, c in zip(head, cells)]
    line = " | ".join(h.rjust(w) for h, w in zip(head, widths))
    return f"{line}\n{'-' * len(line)}\n" + " | ".join(c.rjust(w) for c, w in zip(cells, widths))


def cmd_curve(args) -> int:
    cfg, base = _load_config(args.config)
    measures, spec = _validate(cfg, base)
    tol, seed, tree_p = _settings(args, cfg)
    grid = args.eps_grid if args.eps_grid is not None else cfg.get("eps_grid")
    if not grid:
        raise UsageError("an eps grid is required (--eps-grid or 'eps_grid' in the config)")
    grid = sorted(float(e) for e in grid)
    if grid[0] < 0:
        raise UsageError("eps grid must be nonnegative")
    mx, my, mz = measures
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lower = bound_curve(mx, my, mz, spec, grid, "minimize", seed=seed, tol=tol)
        upper = bound_curve(mx, my, mz, spec, grid, "maximize", seed=seed, tol=tol)
    models = {p: [tree_price(mx, my, mz, p, spec, e, tol) for e in grid] for p in tree_p}
    write_curve_csv(args.out, lower, upper, models)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"wrote {len(grid)} rows to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        coupling = read_coupling_csv(args.coupling)
        measures = [read_measure_csv(p) for p in (args.measures or [])]
    except FileNotFoundError as exc:
        raise UsageError(f"{exc.filename}: no such file") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ndim = coupling.mass.ndim
    if measures:
        if len(measures) != ndim:
            raise UsageError(f"coupling has {ndim} axes but {len(measures)} measures were given")
        try:
            coupling = embed_coupling(coupling, [m.atoms for m in measures])
        except ValueError as exc:
            raise UsageError(f"coupling does not live on the measure atoms: {exc}") from None
    cost = None
    if args.cost:
        # two-axis plans may name their second coordinate y or z
        names = [("x", "y", "z")] if ndim == 3 else [("x", "y"), ("x", "z")]
        for n, variables in enumerate(names):
            try:
                cost = costs.compile_expression(args.cost, variables)
                break
            except costs.ExpressionError as exc:
                if n == len(names) - 1:
                    raise UsageError(f"--cost: {exc}") from None
    tol = DEFAULTS if args.tol is None else dataclasses.replace(DEFAULTS, general=args.tol)
    checks = {}

    total = float(coupling.mass.sum())
    checks["total_mass"] = {"pass": abs(total - 1.0) <= tol.general, "total": total}
    if measures:
        bad = check_marginals(coupling, measures, tol.general)
        checks["marginals"] = {"pass": not bad, "failing_axes": bad}
    if ndim == 2:
        if args.ybar is not None:
            res = coupling.mass @ coupling.y_atoms - coupling.mass.sum(axis=1) * args.ybar
        else:
            res = coupling.martingale_residuals()
        worst = float(np.abs(res).max())
        checks["martingale"] = {"pass": worst <= tol.martingale, "max_residual": worst}
    else:
        first, second = coupling.martingale_residuals()
        worst = float(max(np.abs(first).max(), np.abs(second).max()))
        checks["martingale"] = {"pass": worst <= tol.martingale, "max_residual": worst}
    if ndim == 2 and args.left_monotone:
        ok, witness = left_monotone_check(coupling_support(coupling), tol.general)
        checks["left_monotone"] = {"pass": ok, "witness": None if witness is None
                                   else [list(p) for p in witness]}
    if ndim == 2 and cost is not None and args.cw:
        cells = coupling.support(tol.support_floor)
        ok, alpha = cw_monotone_check([(a, b) for a, b, _ in cells], [m for _, _, m in cells],
                                      cost, seed=args.seed or 0)
        checks["cw_monotone"] = {"pass": ok, "improving_competitor": None if alpha is None
                                 else [list(map(float, c)) for c in alpha.support(0.0)]}
    if args.certificate:
        if cost is None:
            raise UsageError("--certificate needs --cost")
        try:
            cert = DualCertificate.from_dict(json.loads(Path(args.certificate).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"{args.certificate}: {exc}") from None
        C = evaluate(cost, *np.meshgrid(*cert.grids, indexing="ij"))
        viol = cert.violation(C)
        scale = max(1.0, float(np.abs(C).max()))
        entry = {"pass": viol <= 1e-7 * scale, "max_violation": viol}
        if measures:
            primal = float((coupling.mass * evaluate(cost, *np.meshgrid(
                *coupling.grids, indexing="ij"))).sum())
            gap = abs(cert.price(measures) - primal)
            entry["duality_gap"] = gap
            entry["pass"] = entry["pass"] and gap <= 1e-7 * max(1.0, abs(primal))
        checks["certificate"] = entry

    report = {"coupling": str(args.coupling), "checks": checks,
              "pass": all(c["pass"] for c in checks.values())}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            _dump(report, fh)
    for name, c in checks.items():
        extra = {k: v for k, v in c.items() if k != "pass"}
        print(f"{'PASS' if c['pass'] else 'FAIL'} {name} {json.dumps(extra)}")
    return EXIT_OK if report["pass"] else EXIT_CHECK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motbounds",
                                description="Model-free price bounds via martingale transport.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="seed for uniqueness probes")
        sp.add_argument("--tol", type=float, default=None, help="general tolerance")

    sp = sub.add_parser("ingest", help="call chains -> discrete marginals")
    sp.add_argument("chains", nargs="+", help="strike,call_price CSV files")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--repair", action="store_true", help="repair into a convex-order chain")
    sp.add_argument("--target-mean", type=float, default=None)
    sp.add_argument("--budget", type=float, default=0.1, help="max total weight moved by repair")
    common(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("bounds", help="price bounds at one eps")
    sp.add_argument("--config", required=True)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--method", choices=["exact", "first-order", "both"], default=None)
    sp.add_argument("--tree-p", type=_floats, default=None, help="e.g. 1,2,3")
    sp.add_argument("--out", default=None, help="directory for report.json and couplings")
    sp.add_argument("--json", action="store_true", help="print the JSON report, not the table")
    sp.add_argument("--dump-lp", default=None, help="write the lower three-period LP as text")
    common(sp)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("curve", help="bound curves over an eps grid")
    sp.add_argument("--config", required=True)
    sp.add_argument("--eps-grid", type=_floats, default=None, help="e.g. 0,0.25,0.5,1")
    sp.add_argument("--tree-p", type=_floats, default=None)
    sp.add_argument("--out", required=True, help="curve CSV path")
    common(sp)
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("verify", help="check a coupling file")
    sp.add_argument("coupling")
    sp.add_argument("--measures", nargs="+", default=None)
    sp.add_argument("--cost", default=None,
                    help="cost expression in x,y or x,z (x,y,z for three-axis plans)")
    sp.add_argument("--ybar", type=float, default=None,
                    help="check a fixed barycenter instead of the martingale property")
    sp.add_argument("--left-monotone", action="store_true")
    sp.add_argument("--cw", action="store_true", help="(c,W)-monotonicity probe (needs --cost)")
    sp.add_argument("--certificate", default=None, help="dual certificate JSON")
    sp.add_argument("--out", default=None, help="write the report as JSON")
    common(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, InternalSolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MOTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
