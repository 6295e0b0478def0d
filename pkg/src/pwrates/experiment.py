"""The comparison pipeline: datasets, fits, errors, persistence, plot data.

Output directory layout::

    results.csv          method,n,replication,seed,l2_error   (sorted by method order, n, replication)
    summary.csv          method,slope,intercept,theoretical_exponent
    cv/<cell>.csv        config,fold,mse   (one file per cross-validated cell)

Rows already present in ``results.csv`` are skipped on rerun, and every
file is rewritten in canonical order, so an identical config reproduces
identical bytes.
"""
from __future__ import annotations

import csv
import logging
import math
import os
import tempfile
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import bayes as bayes_mod
from .baselines.kernel import KernelConfig, cross_validate, kernel_fit
from .baselines.series import series_cv, series_fit
from .config import ExperimentConfig
from .piecewise import PiecewiseSmoothFunction, equispaced_dataset, resolve_target, sample_dataset
from .rates import RateReport, empirical_l2_error, paper_series_J, series_exponent, theoretical_rate
from .relu_net import TrainerConfig, fit_least_squares

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("method", "n", "replication", "seed", "l2_error")
SUMMARY_COLUMNS = ("method", "slope", "intercept", "theoretical_exponent")


class ExperimentError(RuntimeError):
    pass


def derive_seed(master: int, stream: str, n: int, replication: int) -> int:
    """64-bit seed for one (stream, n, replication) cell."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(stream.encode()), int(n), int(replication)])
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def check_seed_collisions(cfg: ExperimentConfig) -> None:
    """Raise if two cells of ``cfg`` would receive the same derived seed."""
    seen: dict[int, tuple] = {}
    for m in cfg.methods:
        for stream in (m, m + "/fit"):
            for n in cfg.n_schedule:
                for k in range(cfg.replications):
                    s = derive_seed(cfg.master_seed, stream, n, k)
                    if s in seen:
                        raise ExperimentError(f"seed collision between {seen[s]} and {(stream, n, k)}")
                    seen[s] = (stream, n, k)


@dataclass(frozen=True)
class Cell:
    method: str
    n: int
    replication: int

    @property
    def key(self) -> str:
        return f"{self.method}_n{self.n}_r{self.replication}"


def target_smoothness(f: PiecewiseSmoothFunction) -> tuple[float, float]:
    beta = min(c.beta for c, _ in f.terms)
    alpha = min(p.alpha for _, r in f.terms for p in r.pieces)
    return beta, alpha


def theoretical_exponent(method: str, f: PiecewiseSmoothFunction) -> float:
    if method in ("dnn", "bayes") and f.dim >= 2:
        beta, alpha = target_smoothness(f)
        return theoretical_rate(beta, alpha, f.dim)
    if method == "series":
        return series_exponent(f.dim) if f.dim >= 2 else -2 / 3
    return float("nan")


def run_cell(cfg: ExperimentConfig, cell: Cell) -> tuple[dict, list[tuple[str, int, float]] | None]:
    """Fit one method on one dataset and measure its L2 error."""
    target = resolve_target(cfg.target)
    data_seed = derive_seed(cfg.master_seed, cell.method, cell.n, cell.replication)
    fit_seed = derive_seed(cfg.master_seed, cell.method + "/fit", cell.n, cell.replication)
    mc_seed = derive_seed(cfg.master_seed, "mc", cell.n, cell.replication)
    if cfg.design == "equispaced":
        data = equispaced_dataset(target, cell.n, cfg.sigma, data_seed)
    else:
        data = sample_dataset(target, cell.n, cfg.sigma, data_seed)
    cv_rows = None
    m = cell.method
    if m == "dnn":
        s = cfg.dnn
        tc = TrainerConfig(restarts=s.restarts, epochs=s.epochs, lr=s.lr, beta1=s.beta1, beta2=s.beta2,
                           adam_eps=s.adam_eps, init_scale=s.init_scale, seed=fit_seed,
                           batch_size=s.batch_size, log_every=0)
        predictor = fit_least_squares(s.shape, data, tc).net
    elif m == "gaussian-kernel":
        s = cfg.gaussian_kernel
        grid = [KernelConfig("gaussian", bandwidth=h, ridge=r) for h in s.bandwidths for r in s.ridges]
        cv = cross_validate(grid, data, s.folds)
        predictor, cv_rows = kernel_fit(cv.best, data), cv.scores
    elif m == "poly-kernel":
        s = cfg.poly_kernel
        grid = [KernelConfig("polynomial", degree=p, ridge=r) for p in s.degrees for r in s.ridges]
        cv = cross_validate(grid, data, s.folds)
        predictor, cv_rows = kernel_fit(cv.best, data), cv.scores
    elif m == "series":
        s = cfg.series
        if s.schedule == "paper":
            predictor = series_fit(paper_series_J(cell.n, target.dim, s.c_J), data)
        else:
            cv = series_cv(s.jmax, data, s.folds)
            predictor, cv_rows = cv.best, cv.scores
    elif m == "bayes":
        s = cfg.bayes
        bc = bayes_mod.BayesConfig(B=s.B, steps=s.steps, burn_in=s.burn_in, proposal_scale=s.proposal_scale,
                                   sigma=max(cfg.sigma, 1e-3), seed=fit_seed, thin=s.thin)
        predictor = bayes_mod.bayes_fit(s.shape, bc, data)
    else:
        raise ExperimentError(f"unknown method {m!r}")
    err = empirical_l2_error(predictor, target, cfg.mc_n, mc_seed)
    row = {"method": m, "n": cell.n, "replication": cell.replication, "seed": data_seed, "l2_error": err}
    return row, cv_rows


def _run_cell_star(args):
    return run_cell(*args)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(columns, rows) -> str:
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def read_results(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {"method": r["method"], "n": int(r["n"]), "replication": int(r["replication"]),
         "seed": int(r["seed"]), "l2_error": float(r["l2_error"])}
        for r in rows
    ]


def _sort_rows(rows: list[dict], methods: tuple[str, ...]) -> list[dict]:
    order = {m: i for i, m in enumerate(methods)}
    return sorted(rows, key=lambda r: (order.get(r["method"], len(order)), r["method"], r["n"], r["replication"]))


def reports_from_rows(rows: list[dict], target: PiecewiseSmoothFunction | None,
                      methods: tuple[str, ...]) -> list[RateReport]:
    reports = []
    for m in methods:
        errors: dict[int, list[float]] = {}
        for r in rows:
            if r["method"] == m:
                errors.setdefault(r["n"], []).append(r["l2_error"])
        if errors:
            expo = theoretical_exponent(m, target) if target is not None else float("nan")
            reports.append(RateReport.from_errors(m, errors, expo))
    return reports


def write_summary(reports: list[RateReport], path: Path) -> None:
    rows = [{"method": r.method, "slope": r.slope, "intercept": r.intercept,
             "theoretical_exponent": r.theoretical_exponent} for r in reports]
    _atomic_write(path, _csv_text(SUMMARY_COLUMNS, rows))


def run_experiment(cfg: ExperimentConfig, out_dir: Path | None = None) -> list[RateReport]:
    """Run every missing (method, n, replication) cell and persist results.

    Each cell draws its dataset from a seed derived from
    ``(master_seed, method, n, replication)``; the Monte-Carlo evaluation
    points depend only on ``(n, replication)`` and are shared by all methods.
    """
    out = Path(out_dir) if out_dir is not None else cfg.resolved_output_dir()
    target = resolve_target(cfg.target)
    check_seed_collisions(cfg)
    out.mkdir(parents=True, exist_ok=True)
    results_path = out / "results.csv"
    rows = [r for r in read_results(results_path) if r["method"] in cfg.methods]
    done = {(r["method"], r["n"], r["replication"]) for r in rows}
    todo = [Cell(m, n, k) for m in cfg.methods for n in cfg.n_schedule for k in range(cfg.replications)
            if (m, n, k) not in done]
    log.info("%d cells to run, %d already done", len(todo), len(done))

    def persist(row, cv_rows, cell):
        rows.append(row)
        if cv_rows is not None:
            _atomic_write(out / "cv" / f"{cell.key}.csv",
                          _csv_text(("config", "fold", "mse"),
                                    [{"config": c, "fold": f, "mse": e} for c, f, e in cv_rows]))
        _atomic_write(results_path, _csv_text(RESULT_COLUMNS, _sort_rows(rows, cfg.methods)))

    if cfg.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for cell, (row, cv_rows) in zip(todo, pool.map(_run_cell_star, [(cfg, c) for c in todo])):
                persist(row, cv_rows, cell)
    else:
        for cell in todo:
            row, cv_rows = run_cell(cfg, cell)
            persist(row, cv_rows, cell)
            log.info("%s l2=%.5g", cell.key, row["l2_error"])

    _atomic_write(results_path, _csv_text(RESULT_COLUMNS, _sort_rows(rows, cfg.methods)))
    reports = reports_from_rows(rows, target, cfg.methods)
    write_summary(reports, out / "summary.csv")
    return reports


def emit_plotdata(results_dir: str | Path, out_path: str | Path) -> Path:
    """Write ``n, <method>_mean_log, <method>_std_log, ...`` plus ``<stem>_slopes.csv``.

    Log-losses use the natural log; std is the sample standard deviation
    over replications.
    """
    results_dir = Path(results_dir)
    rows = read_results(results_dir / "results.csv")
    if not rows:
        raise ExperimentError(f"no results found in {results_dir}")
    methods = tuple(dict.fromkeys(r["method"] for r in rows))
    ns = sorted({r["n"] for r in rows})
    columns = ["n"]
    for m in methods:
        columns += [f"{m}_mean_log", f"{m}_std_log"]
    table = []
    for n in ns:
        line = {"n": n}
        for m in methods:
            logs = np.log([r["l2_error"] for r in rows if r["method"] == m and r["n"] == n])
            line[f"{m}_mean_log"] = float(logs.mean()) if logs.size else float("nan")
            line[f"{m}_std_log"] = float(logs.std(ddof=1)) if logs.size > 1 else 0.0
        table.append(line)
    out_path = Path(out_path)
    try:
        _atomic_write(out_path, _csv_text(columns, table))
        summary = results_dir / "summary.csv"
        if summary.exists():
            slopes = summary.read_text()
        else:
            slopes = _csv_text(SUMMARY_COLUMNS, [
                {"method": r.method, "slope": r.slope, "intercept": r.intercept,
                 "theoretical_exponent": r.theoretical_exponent}
                for r in reports_from_rows(rows, None, methods)])
        _atomic_write(out_path.with_name(out_path.stem + "_slopes.csv"), slopes)
    except OSError as exc:
        raise ExperimentError(f"cannot write plot data to {out_path}: {exc}") from exc
    return out_path
