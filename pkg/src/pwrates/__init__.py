"""Regression-rate lab for piecewise-smooth targets.

Submodules: :mod:`piecewise` (targets and data), :mod:`relu_net` (networks and
least-squares training), :mod:`constructive` (explicit approximating
networks), :mod:`baselines` (kernel ridge, trigonometric series, Bayes),
:mod:`rates` (exponents and error measurement) and :mod:`experiment`
(the comparison pipeline behind the ``pwrates`` command).
"""
from .piecewise import (
    BasisPiece, Dataset, PiecewiseSmoothFunction, Region, SmoothComponent, TargetError,
    eval_piecewise, preset_experiment_target, sample_dataset,
)
from .relu_net import ReluNetwork, TrainerConfig, fit_least_squares, forward, network_stats
from .rates import fit_rate, fourier_lower_bound, theoretical_rate

__version__ = "0.1.0"
