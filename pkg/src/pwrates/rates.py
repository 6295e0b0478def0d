"""Rate exponents, the series lower bound, Monte-Carlo L2 error, slope fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .piecewise import PiecewiseSmoothFunction, eval_piecewise, make_rng, uniform_points


class RateError(ValueError):
    pass


def theoretical_rate(beta: float, alpha: float, D: int) -> float:
    """Exponent of ``max{n^(-2b/(2b+D)), n^(-a/(a+D-1))}``: the slower decay."""
    if beta <= 0 or alpha <= 0 or D < 2:
        raise RateError("need beta, alpha > 0 and D >= 2")
    smooth = -1.0 if math.isinf(beta) else -2 * beta / (2 * beta + D)
    boundary = -1.0 if math.isinf(alpha) else -alpha / (alpha + D - 1)
    return max(smooth, boundary)


def series_exponent(D: int) -> float:
    """Decay exponent ``-2/(2+D)`` of the trigonometric-series lower bound."""
    return -2.0 / (2 + D)


def fourier_lower_bound(n: float, D: int, sigma: float) -> float:
    """Lower bound on the series estimator's risk for the step-function target.

    ``n^(-2/3) (sigma^2 + 1/(4 pi^2))`` for D = 1 and
    ``n^(-2/(2+D)) (sigma^2 + D/(2 pi^2))`` otherwise.
    """
    if n < 1 or D < 1:
        raise RateError("need n >= 1 and D >= 1")
    if D == 1:
        return n ** (-2 / 3) * (sigma**2 + 1 / (4 * math.pi**2))
    return n ** series_exponent(D) * (sigma**2 + D / (2 * math.pi**2))


def paper_series_J(n: int, D: int = 1, c_J: float = 1.0) -> int:
    """Truncation schedule ``J = floor(c_J n^(1/(2+D)))`` (at least 1)."""
    return max(1, int(math.floor(c_J * n ** (1 / (2 + D)) + 1e-9)))


def empirical_l2_error(predictor: Callable, target: PiecewiseSmoothFunction | Callable, mc_n: int,
                       seed: int, dim: int | None = None) -> float:
    """Mean of ``(predictor(X) - target(X))^2`` over ``mc_n`` fresh uniform points."""
    if mc_n < 1:
        raise RateError("mc_n must be >= 1")
    D = target.dim if isinstance(target, PiecewiseSmoothFunction) else dim
    if D is None:
        raise RateError("dimension needed for a plain callable target")
    xs = uniform_points(mc_n, D, make_rng(seed))
    truth = eval_piecewise(target, xs) if isinstance(target, PiecewiseSmoothFunction) else target(xs)
    pred = np.asarray(predictor(xs), dtype=float).reshape(-1)
    return float(np.mean((pred - truth) ** 2))


def fit_rate(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """OLS of ``log(error)`` on ``log(n)``; returns ``(slope, intercept)``."""
    ns = np.array([p[0] for p in points], dtype=float)
    errs = np.array([p[1] for p in points], dtype=float)
    if np.any(errs <= 0):
        raise RateError("errors must be positive to take logarithms")
    if np.unique(ns).size < 2:
        raise RateError("need at least two distinct sample sizes")
    x, y = np.log(ns), np.log(errs)
    xm, ym = x.mean(), y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2))
    return slope, float(ym - slope * xm)


@dataclass
class RateReport:
    method: str
    series: list[tuple[int, float, float]] = field(default_factory=list)  # (n, mean, std)
    slope: float = float("nan")
    intercept: float = float("nan")
    theoretical_exponent: float = float("nan")

    @classmethod
    def from_errors(cls, method: str, errors: dict[int, Sequence[float]],
                    theoretical_exponent: float = float("nan")) -> "RateReport":
        series = []
        for n in sorted(errors):
            e = np.asarray(errors[n], dtype=float)
            if np.any(e < 0):
                raise RateError("errors must be nonnegative")
            series.append((int(n), float(e.mean()), float(e.std(ddof=1)) if e.size > 1 else 0.0))
        rep = cls(method, series, theoretical_exponent=theoretical_exponent)
        if len(series) >= 2 and all(m > 0 for _, m, _ in series):
            rep.slope, rep.intercept = fit_rate([(n, m) for n, m, _ in series])
        return rep
