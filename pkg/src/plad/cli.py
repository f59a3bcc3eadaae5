"""Command-line entry point: ``plad fit | penalty | diagnose | simulate``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings

from . import diagnostics, noise as noise_mod
from .core import read_design_csv, read_response_csv
from .experiment import ExperimentConfig, run_experiment, table_config
from .lad import fit_plad, refit_on_support
from .lasso import fit_lasso, lasso_base_penalty, lasso_penalty_known_sigma
from .penalty import PenaltyRule, PenaltySpec, default_penalty, penalty_simple, resolve_penalty
from .report import render_report

RULES = ("asymptotic", "simple", "refined", "mc", "default")


def _emit(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _penalty(X, rule: str, c: float, alpha: float, q: float = 4.0, reps: int = 1000, seed: int = 0):
    """Resolve a rule name or a literal number to ``(lam, details)``."""
    try:
        lam = float(rule)
    except ValueError:
        pass
    else:
        return resolve_penalty(PenaltySpec(PenaltyRule.FIXED, fixed_value=lam), X)
    if rule == "default":
        lam, info = resolve_penalty(PenaltySpec(PenaltyRule.FIXED, fixed_value=default_penalty(X.n, X.p)), X)
        info["rule"] = "default"
        return lam, info
    if rule == "simple" and c == 1.0:
        # the simple rule is also defined at c = 1, outside PenaltySpec's c > 1
        lam, info = resolve_penalty(PenaltySpec(PenaltyRule.FIXED, fixed_value=penalty_simple(X.n, X.p, 1.0)), X)
        info.update(rule="simple", c=1.0, coverage_level=1.0 - 2.0 / X.p)
        return lam, info
    if rule not in RULES:
        raise SystemExit(f"unknown penalty rule {rule!r}; expected a number or one of {', '.join(RULES)}")
    return resolve_penalty(PenaltySpec(PenaltyRule(rule), c=c, alpha=alpha, q=q, mc_reps=reps, seed=seed), X)


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    X = read_design_csv(args.x, normalize=not args.no_normalize)
    y = read_response_csv(args.y)
    t_read = time.perf_counter() - t0
    if args.method == "lasso":
        base = lasso_base_penalty(X.n, X.p)
        if args.sigma is not None:
            lam = lasso_penalty_known_sigma(X.n, args.sigma, base)
            info = {"rule": "sigma*lambda", "sigma": args.sigma, "lambda": lam}
        else:
            lam, info = _penalty(X, args.lam, args.c, args.alpha, args.q, args.reps, args.seed)
        t1 = time.perf_counter()
        fit = fit_lasso(X, y, lam, tol=args.tol if args.tol is not None else 1e-10)
        out = {
            "method": "lasso",
            "coefficients": fit.beta.tolist(),
            "support": sorted(int(j) for j in fit.support),
            "objective": fit.objective,
            "kkt_gap": fit.kkt_gap,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "penalty": info,
            "timings": {"read_seconds": t_read, "fit_seconds": time.perf_counter() - t1},
        }
        _emit(out, args.out)
        return 0

    lam, info = _penalty(X, args.lam, args.c, args.alpha, args.q, args.reps, args.seed)
    tol = args.tol if args.tol is not None else 1e-8
    t1 = time.perf_counter()
    fit = fit_plad(X, y, lam, tol=tol)
    out = {
        "method": "plad",
        "coefficients": fit.beta.tolist(),
        "support": sorted(int(j) for j in fit.support),
        "objective": fit.objective,
        "kkt_gap": fit.kkt_gap,
        "status": fit.solver_status.value,
        "iterations": fit.iterations,
        "penalty": info,
        "timings": {"read_seconds": t_read, "fit_seconds": time.perf_counter() - t1, **fit.timings},
    }
    if args.refit:
        t2 = time.perf_counter()
        ref = refit_on_support(X, y, fit.support, tol=tol)
        out["refit"] = {
            "coefficients": ref.beta.tolist(),
            "objective": ref.objective,
            "kkt_gap": ref.kkt_gap,
            "status": ref.solver_status.value,
        }
        out["timings"]["refit_seconds"] = time.perf_counter() - t2
    _emit(out, args.out)
    return 0


def cmd_penalty(args) -> int:
    X = read_design_csv(args.x)
    lam, info = _penalty(X, args.rule, args.c, args.alpha, args.q, args.reps, args.seed)
    info.update(n=X.n, p=X.p)
    _emit(info, args.out)
    return 0


def cmd_diagnose(args) -> int:
    X = read_design_csv(args.x)
    lam = args.lam if args.lam is not None else default_penalty(X.n, X.p)
    if args.a is not None:
        a, a_source = args.a, "user"
    else:
        model = noise_mod.NoiseModel.from_dict(json.loads(args.noise)) if args.noise else noise_mod.gaussian(1.0)
        a, a_source = noise_mod.certify_scale_parameter(model), f"certified for {model.label()}"
    out = diagnostics.diagnose(X, args.k, args.c, lam, a, C2=args.C2, samples=args.samples,
                               seed=args.seed, budget=args.budget)
    out["theorem_bound"]["a_source"] = a_source
    _emit(out, args.out)
    return 0


def _merge_config(base: ExperimentConfig | None, override: dict) -> ExperimentConfig:
    d = base.to_dict() if base is not None else {}
    cells = {c["cell_id"]: c for c in d.get("cells", [])}
    for c in override.pop("cells", []):
        cells[c["cell_id"]] = {**cells.get(c["cell_id"], {}), **c}
    d.update(override)
    d["cells"] = [cells[k] for k in sorted(cells)]
    return ExperimentConfig.from_dict(d)


def cmd_simulate(args) -> int:
    base = table_config(args.table, args.preset, args.seed, args.reps) if args.table else None
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = _merge_config(base, json.load(fh))
    elif base is None:
        raise SystemExit("simulate needs --table or --config")
    else:
        config = base
    report = run_experiment(config, workers=args.workers)
    text = render_report(report, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    if not report.completed:
        failed = sum(c.get("failed", 0) for c in report.cells)
        print(f"{failed} replication records carry errors", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plad", description="L1-penalized LAD regression tools")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit L1-PLAD (or the lasso baseline) to CSV data")
    f.add_argument("--x", required=True, help="design CSV, n rows by p columns")
    f.add_argument("--y", required=True, help="response CSV, one column")
    f.add_argument("--lambda", dest="lam", default="default", help="number or rule: " + ", ".join(RULES))
    f.add_argument("--c", type=float, default=1.1)
    f.add_argument("--alpha", type=float, default=0.05)
    f.add_argument("--q", type=float, default=4.0)
    f.add_argument("--reps", type=int, default=1000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--refit", action="store_true", help="rerun plain LAD on the selected support")
    f.add_argument("--tol", type=float, default=None)
    f.add_argument("--out")
    f.add_argument("--method", choices=("plad", "lasso"), default="plad")
    f.add_argument("--sigma", type=float, default=None, help="known noise sd for the lasso penalty")
    f.add_argument("--no-normalize", action="store_true", help="use X as given (columns must already be normalized)")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("penalty", help="evaluate a penalty rule on a design")
    p.add_argument("--x", required=True)
    p.add_argument("--rule", default="default", help=", ".join(RULES))
    p.add_argument("--c", type=float, default=1.1)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--q", type=float, default=4.0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_penalty)

    d = sub.add_parser("diagnose", help="design constants and the error-bound report")
    d.add_argument("--x", required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--c", type=float, default=1.1)
    d.add_argument("--samples", type=int, default=10_000)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.add_argument("--lambda", dest="lam", type=float, default=None)
    d.add_argument("--a", type=float, default=None, help="noise scale; default certified from --noise")
    d.add_argument("--noise", default=None, help='JSON noise model, e.g. {"family": "cauchy", "params": {"scale": 1}}')
    d.add_argument("--C2", type=float, default=1.01)
    d.add_argument("--budget", type=int, default=diagnostics.BRUTE_FORCE_BUDGET)
    d.set_defaults(func=cmd_diagnose)

    s = sub.add_parser("simulate", help="run a simulation table")
    s.add_argument("--table", type=int, choices=(1, 2, 3))
    s.add_argument("--preset", choices=("paper", "desk"), default="desk")
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--seed", type=int, default=20120101)
    s.add_argument("--out")
    s.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    s.add_argument("--config", help="JSON file overriding config fields or individual cells")
    s.add_argument("--workers", type=int, default=None, help="worker threads (capped by PLAD_THREADS)")
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("default")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
