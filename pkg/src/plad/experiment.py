"""Seeded simulation runner for the penalty-level, Gaussian-noise and
heteroscedastic-noise studies.

Every replication draws a fresh standard-normal design (columns then
normalized), fresh errors and ``y = X beta + z``, and fits each requested
method. Random streams are keyed by ``(seed, cell_id, rep_index)``, so any
single replication can be replayed and results do not depend on the number
of workers.
"""
from __future__ import annotations

import logging
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import diagnostics, noise as noise_mod
from .core import SUPPORT_EPS, normalize_columns
from .lad import fit_plad, refit_on_support
from .lasso import fit_lasso, lasso_penalty_known_sigma
from .noise import Family, NoiseModel
from .penalty import PenaltySpec, resolve_penalty

log = logging.getLogger(__name__)

from .report import FORMAT_VERSION
METHODS = ("PLAD", "PLAD+refit", "Lasso")
_FIXED_DESIGN_KEY = 2**31 - 1


@dataclass(frozen=True)
class Cell:
    """One column of a results table: a noise model and a penalty.

    The PLAD penalty is ``sqrt(lam_factor * n * log p)`` unless ``penalty``
    gives a rule to evaluate on each design. ``row``/``col`` place the cell
    in the rendered table.
    """

    cell_id: int
    noise: NoiseModel
    lam_factor: float = 2.0
    penalty: PenaltySpec | None = None
    row: str = ""
    col: str = ""

    def to_dict(self) -> dict:
        d = {
            "cell_id": self.cell_id,
            "noise": self.noise.to_dict(),
            "lam_factor": self.lam_factor,
            "row": self.row,
            "col": self.col,
        }
        if self.penalty is not None:
            d["penalty"] = {k: (v.value if hasattr(v, "value") else v) for k, v in asdict(self.penalty).items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Cell":
        pen = d.get("penalty")
        return cls(
            cell_id=int(d["cell_id"]),
            noise=NoiseModel.from_dict(d["noise"]),
            lam_factor=float(d.get("lam_factor", 2.0)),
            penalty=PenaltySpec(**pen) if pen else None,
            row=str(d.get("row", "")),
            col=str(d.get("col", "")),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 200
    p: int = 400
    k: int = 5
    signal: float = 3.0
    cells: tuple = ()
    reps: int = 50
    seed: int = 20120101
    methods: tuple = ("PLAD",)
    scale_preset: str = "desk"
    table_id: int | None = None
    fixed_design: bool = False
    bound_check_reps: int = 0
    bound_c: float = 1.1
    bound_C2: float = 1.01

    def __post_init__(self):
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if not 1 <= self.k <= self.p:
            raise ValueError("k must lie in [1, p]")

    @property
    def beta_true(self) -> np.ndarray:
        b = np.zeros(self.p)
        b[: self.k] = self.signal
        return b

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__ if f != "cells"}
        d["methods"] = list(self.methods)
        d["cells"] = [c.to_dict() for c in self.cells]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        cells = tuple(Cell.from_dict(c) for c in d.pop("cells", []))
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        d.pop("beta_true", None)
        return cls(cells=cells, **d)


PRESETS = {
    "paper": {"n": 200, "p": 400, "k": 5, "reps": 200},
    "desk": {"n": 200, "p": 400, "k": 5, "reps": 50},
}


def table_config(table_id: int, preset: str = "desk", seed: int = 20120101, reps: int | None = None) -> ExperimentConfig:
    """Cells and methods for one of the three simulation tables."""
    base = dict(PRESETS[preset])
    if reps is not None:
        base["reps"] = reps
    cells = []
    if table_id == 1:
        noises = [("N(0,1) noise", noise_mod.gaussian(1.0)), ("t(2) noise", noise_mod.t2(1.0)),
                  ("Cauchy noise", noise_mod.cauchy(1.0))]
        factors = [("lambda1", 1.5), ("lambda2", 2.0), ("lambda3", 3.0), ("lambda4", 4.0)]
        for row, nm in noises:
            for col, f in factors:
                cells.append(Cell(len(cells), nm, lam_factor=f, row=row, col=col))
        methods = ("PLAD", "PLAD+refit")
    elif table_id == 2:
        for sigma in (0.0, 0.25, 0.5, 1.0, 3.0):
            cells.append(Cell(len(cells), noise_mod.gaussian(sigma), lam_factor=2.0, row="", col=f"sigma={sigma:g}"))
        methods = ("PLAD", "Lasso")
        base.setdefault("bound_check_reps", 3)
    elif table_id == 3:
        for label, fam in (("Case (a)", Family.HETERO_GAUSSIAN), ("Case (b)", Family.HETERO_T2),
                           ("Case (c)", Family.HETERO_MIXTURE)):
            cells.append(Cell(len(cells), NoiseModel(fam), lam_factor=2.0, row="", col=label))
        methods = ("PLAD", "PLAD+refit")
    else:
        raise ValueError(f"unknown table {table_id}")
    return ExperimentConfig(cells=tuple(cells), seed=seed, methods=methods, scale_preset=preset,
                            table_id=table_id, **base)


def _streams(config: ExperimentConfig, cell: Cell, rep: int):
    design_key = (_FIXED_DESIGN_KEY,) if config.fixed_design else (cell.cell_id, rep, 0)
    design = np.random.SeedSequence(config.seed, spawn_key=design_key)
    noise = np.random.SeedSequence(config.seed, spawn_key=(cell.cell_id, rep, 1))
    return np.random.Generator(np.random.PCG64(design)), noise


def selection_errors(beta_hat, beta_true, eps: float = SUPPORT_EPS) -> tuple[int, int]:
    """``(type_I, type_II)``: true variables missed, null variables selected."""
    sel = np.abs(np.asarray(beta_hat)) > eps
    true = np.asarray(beta_true) != 0
    return int(np.sum(true & ~sel)), int(np.sum(~true & sel))


def _metrics(beta_hat, beta_true) -> dict:
    h = np.asarray(beta_hat) - beta_true
    t1, t2 = selection_errors(beta_hat, beta_true)
    sq = float(h @ h)
    return {"sq_err": sq, "l2_err": math.sqrt(sq), "type_I": t1, "type_II": t2,
            "support_size": int(np.sum(np.abs(beta_hat) > SUPPORT_EPS))}


_A_CACHE: dict = {}


def _certified_a(model: NoiseModel) -> float:
    key = (model.family, model.scale, model.upper)
    if key not in _A_CACHE:
        _A_CACHE[key] = noise_mod.certify_scale_parameter(model)
    return _A_CACHE[key]


def _bound_check(config, X, lam, model, l2_err) -> dict:
    a = _certified_a(model)
    if not (0 < a < math.inf):
        return {"skipped": "noise scale a not finite and positive"}
    c_bar = (config.bound_c - 1.0) / (config.bound_c + 1.0)
    sb = diagnostics.sparse_eigen_bounds(X, config.k, budget=2000, seed=0)
    re = diagnostics.restricted_eigenvalues(X, config.k, c_bar, samples=1000, seed=0)
    rep = diagnostics.evaluate_theorem_bound(config.n, config.p, config.k, config.bound_c, a,
                                             config.bound_C2, sb, re, lam)
    return {"a": a, "error_bound": rep.error_bound, "condition_I_holds": rep.condition_I_holds,
            "eta_l": re.eta_l, "lambda_u": sb.lambda_u, "holds": bool(l2_err <= rep.error_bound)}


def run_replication(config: ExperimentConfig, cell: Cell, rep_index: int) -> dict:
    """Simulate one data set and fit every configured method on it.

    Failures are recorded in the returned dict under ``"error"`` rather than
    raised, so a sweep always completes.
    """
    t0 = time.perf_counter()
    out = {"cell_id": cell.cell_id, "rep": rep_index, "methods": {}}
    try:
        rng, noise_seed = _streams(config, cell, rep_index)
        X = normalize_columns(rng.standard_normal((config.n, config.p)))
        beta = config.beta_true
        z = noise_mod.sample(cell.noise, config.n, noise_seed)
        y = X.values @ beta + z
        if cell.penalty is not None:
            lam, _ = resolve_penalty(cell.penalty, X)
        else:
            lam = math.sqrt(cell.lam_factor * config.n * math.log(config.p))
        out["lambda"] = lam
        plad = None
        if "PLAD" in config.methods or "PLAD+refit" in config.methods:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                plad = fit_plad(X, y, lam)
            m = _metrics(plad.beta, beta)
            m.update(status=plad.solver_status.value, kkt_gap=plad.kkt_gap,
                     seconds=plad.timings.get("solve_seconds", 0.0))
            if rep_index < config.bound_check_reps:
                m["bound"] = _bound_check(config, X, lam, cell.noise, m["l2_err"])
            out["methods"]["PLAD"] = m
        if "PLAD+refit" in config.methods:
            sup = plad.support
            if len(sup) >= config.n:
                out["methods"]["PLAD+refit"] = {"error": f"support size {len(sup)} >= n"}
            else:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    ref = refit_on_support(X, y, sup)
                m = _metrics(ref.beta, beta)
                m.update(status=ref.solver_status.value, kkt_gap=ref.kkt_gap)
                out["methods"]["PLAD+refit"] = m
        if "Lasso" in config.methods:
            if cell.noise.family is not Family.GAUSSIAN:
                out["methods"]["Lasso"] = {"error": "lasso baseline needs Gaussian noise with known sigma"}
            else:
                lam_l = lasso_penalty_known_sigma(config.n, cell.noise.scale,
                                                  math.sqrt(2.0 * config.n * math.log(config.p)))
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    las = fit_lasso(X, y, lam_l)
                m = _metrics(las.beta, beta)
                m.update(lambda_lasso=lam_l, converged=las.converged, kkt_gap=las.kkt_gap, sweeps=las.iterations)
                out["methods"]["Lasso"] = m
    except Exception as exc:  # recorded, never aborts the sweep
        log.exception("replication (%d, %d) failed", cell.cell_id, rep_index)
        out["error"] = f"{type(exc).__name__}: {exc}"
    out["seconds"] = time.perf_counter() - t0
    return out


def _worker_count(workers: int | None) -> int:
    cap = os.environ.get("PLAD_THREADS")
    w = workers if workers is not None else (os.cpu_count() or 1)
    if cap:
        w = min(w, max(1, int(cap)))
    return max(1, w)


def _aggregate(cell: Cell, reps: list[dict], methods) -> dict:
    summary = {"cell_id": cell.cell_id, "seed_key": [cell.cell_id], "row": cell.row, "col": cell.col, "noise": cell.noise.to_dict(),
               "lam_factor": cell.lam_factor, "reps": len(reps),
               "failed": sum(1 for r in reps if "error" in r), "methods": {}}
    lams = [r["lambda"] for r in reps if "lambda" in r]
    summary["lambda_mean"] = float(np.mean(lams)) if lams else None
    for name in methods:
        ok = [r["methods"][name] for r in reps if name in r.get("methods", {}) and "error" not in r["methods"][name]]
        summary["failed"] += sum(1 for r in reps if "error" in r.get("methods", {}).get(name, {}))
        if not ok:
            summary["methods"][name] = {"count": 0}
            continue
        sq = np.array([m["sq_err"] for m in ok])
        l2 = np.array([m["l2_err"] for m in ok])
        agg = {
            "count": len(ok),
            "mean_sq_err": float(sq.mean()),
            "median_sq_err": float(np.median(sq)),
            "mean_l2_err": float(l2.mean()),
            "mean_type_I": float(np.mean([m["type_I"] for m in ok])),
            "mean_type_II": float(np.mean([m["type_II"] for m in ok])),
        }
        bounds = [m["bound"] for m in ok if "bound" in m and "holds" in m["bound"]]
        if bounds:
            agg["bound_checked"] = len(bounds)
            agg["bound_violations"] = sum(1 for b in bounds if not b["holds"])
        summary["methods"][name] = agg
    secs = [r["seconds"] for r in reps]
    summary["seconds_total"] = float(np.sum(secs)) if secs else 0.0
    return summary


def run_experiment(config: ExperimentConfig, workers: int | None = None):
    """Run all ``(cell, rep)`` pairs and aggregate; returns an ``ExperimentReport``."""
    from .report import ExperimentReport

    jobs = [(cell, r) for cell in config.cells for r in range(config.reps)]
    nw = _worker_count(workers)
    t0 = time.perf_counter()
    if nw == 1:
        results = [run_replication(config, c, r) for c, r in jobs]
    else:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            results = list(ex.map(lambda job: run_replication(config, *job), jobs))
    by_cell: dict[int, list] = {c.cell_id: [] for c in config.cells}
    for res in results:
        by_cell[res["cell_id"]].append(res)
    cells = [_aggregate(c, by_cell[c.cell_id], config.methods) for c in config.cells]
    return ExperimentReport(
        format_version=FORMAT_VERSION,
        table_id=config.table_id,
        config=config.to_dict(),
        cells=cells,
        replications=results,
        wall_seconds=time.perf_counter() - t0,
    )


def run_table(table_id: int, scale_preset: str = "desk", seed: int = 20120101, reps: int | None = None,
              workers: int | None = None, **overrides):
    config = table_config(table_id, scale_preset, seed, reps)
    if overrides:
        config = replace(config, **overrides)
    return run_experiment(config, workers=workers)
