from .bayes import BayesConfig, BayesPredictor, bayes_fit
from .kernel import CVResult, KernelConfig, cross_validate, default_grid, kernel_fit
from .series import SeriesModel, series_cv, series_fit

import numpy as np


def linearity_gap(fit, data, probe, scale: float = 2.0) -> float:
    """Max ``|fit(scale * Y)(x) - scale * fit(Y)(x)|`` over ``probe``.

    Zero (up to rounding) for estimators that are linear in the responses.
    """
    base = fit(data)(probe)
    scaled = fit(data.with_responses(scale * data.ys))(probe)
    return float(np.max(np.abs(scaled - scale * base)))


__all__ = [
    "BayesConfig", "BayesPredictor", "bayes_fit",
    "CVResult", "KernelConfig", "cross_validate", "default_grid", "kernel_fit",
    "SeriesModel", "series_cv", "series_fit", "linearity_gap",
]
