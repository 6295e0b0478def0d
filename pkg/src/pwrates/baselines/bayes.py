"""Posterior-mean ReLU predictor by random-walk Metropolis.

Prior: each active parameter uniform on ``[-B, B]``, inactive ones fixed at
zero. Likelihood: ``exp(-sum_i (Y_i - f(X_i))^2 / sigma^2)``. Proposals
leaving the box have prior density zero and are rejected outright.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..piecewise import Dataset
from ..relu_net import ReluNetwork, forward, unflatten_params, zero_network

log = logging.getLogger(__name__)

TARGET_ACCEPT = 0.234


@dataclass(frozen=True)
class BayesConfig:
    B: float = 1.0
    steps: int = 100_000
    burn_in: int = 20_000
    proposal_scale: float = 0.05
    sigma: float = 0.1
    seed: int = 0
    S: int | None = None  # None: every parameter active
    mask: tuple[bool, ...] | None = None
    thin: int = 10
    tune: bool = True

    def __post_init__(self):
        if self.B <= 0:
            raise ValueError("prior half-width B must be positive")
        if self.steps <= self.burn_in:
            raise ValueError("chain length must exceed burn-in")
        if self.sigma <= 0 or self.proposal_scale <= 0:
            raise ValueError("sigma and proposal scale must be positive")


@dataclass
class ChainResult:
    samples: np.ndarray  # kept post-burn-in states, (K, P)
    accept_rate: float  # post-burn-in
    proposal_scale: float  # after tuning
    trace: list[tuple[int, float, bool]] = field(default_factory=list)
    warning: str | None = None


def metropolis(log_lik: Callable[[np.ndarray], float], theta0: np.ndarray, active: np.ndarray,
               B: float, steps: int, burn_in: int, scale: float, rng: np.random.Generator,
               thin: int = 1, tune: bool = True) -> ChainResult:
    """Random-walk Metropolis on the box ``[-B, B]`` over ``active`` coordinates.

    During burn-in the proposal scale adapts on a log scale toward a 0.234
    acceptance rate; it is frozen afterwards.
    """
    theta = np.array(theta0, dtype=float)
    if np.any(np.abs(theta[active]) > B):
        raise ValueError("initial state is outside the prior box")
    ll = log_lik(theta)
    idx = np.flatnonzero(active)
    kept = []
    trace = []
    accepted_after = 0
    window_acc = 0
    log_scale = np.log(scale)
    for step in range(1, steps + 1):
        prop = theta.copy()
        prop[idx] += np.exp(log_scale) * rng.standard_normal(idx.size)
        u = rng.random()
        ok = False
        if np.all(np.abs(prop[idx]) <= B):
            ll_prop = log_lik(prop)
            if np.isfinite(ll_prop) and np.log(u) < ll_prop - ll:
                theta, ll, ok = prop, ll_prop, True
        trace.append((step, ll, ok))
        if step <= burn_in:
            window_acc += ok
            if tune and step % 100 == 0:
                rate = window_acc / 100
                log_scale += (rate - TARGET_ACCEPT) * min(1.0, 10.0 / np.sqrt(step / 100))
                window_acc = 0
        else:
            accepted_after += ok
            if (step - burn_in) % thin == 0:
                kept.append(theta.copy())
    rate = accepted_after / (steps - burn_in)
    warning = None
    if accepted_after == 0:
        warning = "no proposal accepted after burn-in; chain did not mix"
        log.warning(warning)
    return ChainResult(np.array(kept), rate, float(np.exp(log_scale)), trace, warning)


@dataclass(frozen=True, eq=False)
class BayesPredictor:
    """Average of the network over kept posterior draws."""

    template: ReluNetwork
    samples: np.ndarray
    chain: ChainResult

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        pts = np.atleast_2d(arr)
        total = np.zeros(pts.shape[0])
        for theta in self.samples:
            total += forward(unflatten_params(self.template, theta), pts)
        out = total / len(self.samples)
        return float(out[0]) if single else out

    @property
    def accept_rate(self) -> float:
        return self.chain.accept_rate

    @property
    def warning(self) -> str | None:
        return self.chain.warning


def _fast_forward(shapes, theta, X):
    h = X
    pos = 0
    last = len(shapes) - 1
    for i, (o, inn) in enumerate(shapes):
        A = theta[pos:pos + o * inn].reshape(o, inn)
        pos += o * inn
        b = theta[pos:pos + o]
        pos += o
        h = h @ A.T + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h[:, 0]


def active_mask(n_params: int, cfg: BayesConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.mask is not None:
        mask = np.asarray(cfg.mask, dtype=bool)
        if mask.size != n_params:
            raise ValueError("mask length does not match parameter count")
        return mask
    if cfg.S is None or cfg.S >= n_params:
        if cfg.S is not None and cfg.S > n_params:
            raise ValueError(f"S={cfg.S} exceeds the {n_params} parameters of the shape")
        return np.ones(n_params, dtype=bool)
    mask = np.zeros(n_params, dtype=bool)
    mask[rng.choice(n_params, size=cfg.S, replace=False)] = True
    return mask


def bayes_fit(shape: Sequence[int], cfg: BayesConfig, data: Dataset) -> BayesPredictor:
    shape = list(shape)
    template = zero_network(shape)
    shapes = [A.shape for A, _ in template.layers]
    P = sum(o * i + o for o, i in shapes)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(cfg.seed), 0xB1E5])))
    mask = active_mask(P, cfg, rng)
    X, Y = data.xs, data.ys
    inv_s2 = 1.0 / cfg.sigma**2

    def log_lik(theta):
        r = Y - _fast_forward(shapes, theta, X)
        return -inv_s2 * float(r @ r)

    theta0 = np.zeros(P)
    theta0[mask] = rng.uniform(-cfg.B, cfg.B, size=int(mask.sum()))
    chain = metropolis(log_lik, theta0, mask, cfg.B, cfg.steps, cfg.burn_in, cfg.proposal_scale,
                       rng, thin=cfg.thin, tune=cfg.tune)
    return BayesPredictor(template, chain.samples, chain)


def prior_mean_prediction(shape: Sequence[int], B: float, x, draws: int, seed: int,
                          mask: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo prior mean of ``f(x)`` and its standard error."""
    template = zero_network(shape)
    shapes = [A.shape for A, _ in template.layers]
    P = sum(o * i + o for o, i in shapes)
    mask = np.ones(P, dtype=bool) if mask is None else mask
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = np.atleast_2d(x)
    vals = np.empty((draws, pts.shape[0]))
    for k in range(draws):
        theta = np.zeros(P)
        theta[mask] = rng.uniform(-B, B, size=int(mask.sum()))
        vals[k] = _fast_forward(shapes, theta, pts)
    return vals.mean(0), vals.std(0, ddof=1) / np.sqrt(draws)


def write_trace(chain: ChainResult, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("step,log_likelihood,accepted\n")
        for step, ll, ok in chain.trace:
            fh.write(f"{step},{ll!r},{int(ok)}\n")
