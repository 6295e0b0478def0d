"""Plain-numpy ReLU networks: evaluation, parameter accounting, least squares.

A network is a list of affine maps ``(A_l, b_l)``; ReLU is applied after
every map except the last one (unless ``relu_on_output``). Training runs
all restarts of Adam side by side as one batched tensor program, which is
what keeps hundreds of thousands of epochs affordable on a single core.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .piecewise import Dataset

log = logging.getLogger(__name__)


class NetworkError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


class NetStats(NamedTuple):
    L: int
    S: int
    Binf: float


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    relu_on_output: bool = False

    def __post_init__(self):
        frozen = []
        for A, b in self.layers:
            A = np.array(A, dtype=float, ndmin=2)
            b = np.array(b, dtype=float).reshape(-1)
            if A.shape[0] != b.shape[0]:
                raise NetworkError(f"weight rows {A.shape[0]} != bias length {b.shape[0]}")
            A.setflags(write=False)
            b.setflags(write=False)
            frozen.append((A, b))
        if not frozen:
            raise NetworkError("a network needs at least one layer")
        for (A0, _), (A1, _) in zip(frozen, frozen[1:]):
            if A1.shape[1] != A0.shape[0]:
                raise NetworkError(f"layer widths do not chain: {A0.shape} -> {A1.shape}")
        object.__setattr__(self, "layers", tuple(frozen))

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def widths(self) -> list[int]:
        return [self.in_dim] + [A.shape[0] for A, _ in self.layers]

    def __call__(self, x):
        return forward(self, x)

    def __eq__(self, other):
        if not isinstance(other, ReluNetwork) or self.relu_on_output != other.relu_on_output:
            return False
        if len(self.layers) != len(other.layers):
            return False
        return all(
            A.shape == C.shape and np.array_equal(A, C) and np.array_equal(b, c)
            for (A, b), (C, c) in zip(self.layers, other.layers)
        )

    __hash__ = None


def forward(net: ReluNetwork, x):
    """Evaluate the network.

    A single point returns a float (or a vector for multi-output nets); an
    ``(N, D)`` batch returns an ``(N,)`` array (``(N, out)`` if multi-output).
    """
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    h = arr.reshape(1, -1) if single else arr
    if h.shape[1] != net.in_dim:
        raise NetworkError(f"input dimension {h.shape[1]} != network input {net.in_dim}")
    last = len(net.layers) - 1
    for i, (A, b) in enumerate(net.layers):
        h = h @ A.T + b
        if i < last or net.relu_on_output:
            h = np.maximum(h, 0.0)
    if net.out_dim == 1:
        h = h[:, 0]
    return (h[0].item() if net.out_dim == 1 else h[0]) if single else h


def network_stats(net: ReluNetwork) -> NetStats:
    S = 0
    Binf = 0.0
    for A, b in net.layers:
        S += int(np.count_nonzero(A) + np.count_nonzero(b))
        for arr in (A, b):
            if arr.size:
                Binf = max(Binf, float(np.max(np.abs(arr))))
    return NetStats(len(net.layers), S, Binf)


def sup_norm_bound(net: ReluNetwork, input_bound: float = 1.0) -> float:
    """Worst-case ``|f(x)|`` over ``||x||_inf <= input_bound``.

    Uses the layerwise recursion ``b_{l+1} = D_l * B * b_l + B`` with the
    global width ``max_l D_l`` and parameter bound ``||Theta||_inf``.
    """
    width = max(net.widths)
    B = network_stats(net).Binf
    bound = input_bound
    for _ in net.layers:
        bound = width * B * bound + B
    return bound


def dense_network(shape: Sequence[int], rng: np.random.Generator, init_scale: float = 0.5,
                  out_bias: float = 0.0) -> ReluNetwork:
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(shape[:-1], shape[1:])):
        A = init_scale * rng.standard_normal((fan_out, fan_in))
        b = np.zeros(fan_out)
        if i == len(shape) - 2:
            b[:] = out_bias
        layers.append((A, b))
    return ReluNetwork(tuple(layers))


def zero_network(shape: Sequence[int]) -> ReluNetwork:
    return ReluNetwork(tuple((np.zeros((o, i)), np.zeros(o)) for i, o in zip(shape[:-1], shape[1:])))


# ---------------------------------------------------------------------------
# gradients


def _batched_loss_grad(Ws, bs, X, y, relu_out=False):
    """MSE and its gradient for R stacked networks.

    ``Ws[l]`` has shape ``(R, out, in)``, ``bs[l]`` ``(R, out)``; ``X`` is
    ``(N, D)`` or ``(R, N, D)``.
    """
    h = X if X.ndim == 3 else X[None, :, :]
    acts = [h]
    pre = []
    last = len(Ws) - 1
    for i, (W, b) in enumerate(zip(Ws, bs)):
        z = h @ W.transpose(0, 2, 1) + b[:, None, :]
        pre.append(z)
        h = np.maximum(z, 0.0) if (i < last or relu_out) else z
        acts.append(h)
    out = h[..., 0]
    resid = out - (y if y.ndim == 2 else y[None, :])
    N = resid.shape[-1]
    loss = np.mean(resid**2, axis=-1)
    dz = (2.0 / N) * resid[..., None]
    if relu_out:
        dz = dz * (pre[-1] > 0)
    gWs, gbs = [None] * len(Ws), [None] * len(Ws)
    for i in range(last, -1, -1):
        a_in = acts[i]
        if a_in.shape[0] != dz.shape[0]:
            a_in = np.broadcast_to(a_in, (dz.shape[0],) + a_in.shape[1:])
        gWs[i] = dz.transpose(0, 2, 1) @ a_in
        gbs[i] = dz.sum(axis=1)
        if i:
            dz = (dz @ Ws[i]) * (pre[i - 1] > 0)
    return loss, gWs, gbs


def mse_and_grad(net: ReluNetwork, X, y):
    """Mean squared error of ``net`` on ``(X, y)`` and its parameter gradient.

    Returns ``(loss, [(dA_1, db_1), ...])``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    Ws = [A[None] for A, _ in net.layers]
    bs = [b[None] for _, b in net.layers]
    loss, gW, gb = _batched_loss_grad(Ws, bs, X, y, net.relu_on_output)
    return float(loss[0]), [(w[0], c[0]) for w, c in zip(gW, gb)]


def flatten_params(net: ReluNetwork) -> np.ndarray:
    return np.concatenate([np.concatenate([A.ravel(), b]) for A, b in net.layers])


def unflatten_params(template: ReluNetwork, theta: np.ndarray) -> ReluNetwork:
    layers, pos = [], 0
    for A, b in template.layers:
        a = theta[pos:pos + A.size].reshape(A.shape)
        pos += A.size
        c = theta[pos:pos + b.size]
        pos += b.size
        layers.append((a, c))
    return ReluNetwork(tuple(layers), template.relu_on_output)


# ---------------------------------------------------------------------------
# least squares by Adam with restarts


@dataclass(frozen=True)
class TrainerConfig:
    restarts: int = 10
    epochs: int = 5000
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    init_scale: float = 0.5
    seed: int = 0
    batch_size: int | None = None
    clip: float | None = None
    log_every: int = 100

    def __post_init__(self):
        if self.restarts < 1 or self.epochs < 1:
            raise ValueError("restarts and epochs must be >= 1")
        for name in ("lr", "beta1", "beta2", "adam_eps"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass
class FitResult:
    net: ReluNetwork
    best_restart: int
    restart_losses: np.ndarray  # nan for discarded restarts
    log: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def train_mse(self) -> float:
        return float(self.restart_losses[self.best_restart])


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(restart)])))


def fit_least_squares(shape: Sequence[int], data: Dataset, cfg: TrainerConfig) -> FitResult:
    """Least-squares ReLU fit: best of ``cfg.restarts`` Adam runs by training MSE."""
    shape = list(shape)
    if shape[0] != data.dim or shape[-1] != 1:
        raise NetworkError(f"shape {shape} does not match data dimension {data.dim}")
    X, y = data.xs, data.ys
    R = cfg.restarts
    y_mean = float(np.mean(y))
    inits = [dense_network(shape, restart_rng(cfg.seed, r), cfg.init_scale, y_mean) for r in range(R)]
    Ws = [np.stack([net.layers[l][0] for net in inits]) for l in range(len(shape) - 1)]
    bs = [np.stack([net.layers[l][1] for net in inits]) for l in range(len(shape) - 1)]
    mW = [np.zeros_like(w) for w in Ws]
    vW = [np.zeros_like(w) for w in Ws]
    mb = [np.zeros_like(b) for b in bs]
    vb = [np.zeros_like(b) for b in bs]
    alive = np.ones(R, dtype=bool)
    shufflers = [restart_rng(cfg.seed, r) for r in range(R)] if cfg.batch_size else None
    b1, b2, lr, eps = cfg.beta1, cfg.beta2, cfg.lr, cfg.adam_eps
    rows: list[tuple[int, int, float]] = []
    n = data.n

    step_no = 0
    for epoch in range(1, cfg.epochs + 1):
        if cfg.batch_size and cfg.batch_size < n:
            perms = [rng.permutation(n) for rng in shufflers]
            steps = []
            for start in range(0, n, cfg.batch_size):
                idx = np.stack([p[start:start + cfg.batch_size] for p in perms])
                steps.append((X[idx], y[idx]))
        else:
            steps = [(X, y)]
        for Xb, yb in steps:
            with np.errstate(over="ignore", invalid="ignore"):
                loss, gW, gb = _batched_loss_grad(Ws, bs, Xb, yb)
            bad = ~np.isfinite(loss) & alive
            if bad.any():
                for r in np.flatnonzero(bad):
                    log.warning("restart %d diverged at epoch %d; discarded", r, epoch)
                alive &= ~bad
                if not alive.any():
                    raise TrainingError("all restarts produced non-finite losses")
            step_no += 1
            c1 = 1 - b1**step_no
            c2 = 1 - b2**step_no
            for l in range(len(Ws)):
                for p, g, m, v in ((Ws[l], gW[l], mW[l], vW[l]), (bs[l], gb[l], mb[l], vb[l])):
                    if not alive.all():
                        g = np.where(_bcast(alive, g), g, 0.0)
                    m *= b1
                    m += (1 - b1) * g
                    v *= b2
                    v += (1 - b2) * g * g
                    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
                    if cfg.clip is not None:
                        np.clip(p, -cfg.clip, cfg.clip, out=p)
        if cfg.log_every and (epoch % cfg.log_every == 0 or epoch == cfg.epochs):
            with np.errstate(over="ignore", invalid="ignore"):
                cur, _, _ = _batched_loss_grad(Ws, bs, X, y)
            rows.extend((r, epoch, float(cur[r])) for r in range(R) if alive[r])

    with np.errstate(over="ignore", invalid="ignore"):
        final, _, _ = _batched_loss_grad(Ws, bs, X, y)
    final = np.where(alive & np.isfinite(final), final, np.nan)
    if np.all(np.isnan(final)):
        raise TrainingError("all restarts produced non-finite losses")
    best = int(np.nanargmin(final))  # first index on ties
    net = ReluNetwork(tuple((Ws[l][best].copy(), bs[l][best].copy()) for l in range(len(Ws))))
    return FitResult(net, best, final, rows)


def _bcast(mask: np.ndarray, like: np.ndarray) -> np.ndarray:
    return mask.reshape((-1,) + (1,) * (like.ndim - 1))


def train_least_squares(shape: Sequence[int], data: Dataset, cfg: TrainerConfig) -> ReluNetwork:
    return fit_least_squares(shape, data, cfg).net


# ---------------------------------------------------------------------------
# persistence


def net_to_dict(net: ReluNetwork) -> dict:
    return {
        "layers": [
            {"rows": A.shape[0], "cols": A.shape[1], "weights": A.ravel().tolist(), "bias": b.tolist()}
            for A, b in net.layers
        ],
        "relu_on_output": net.relu_on_output,
    }


def net_from_dict(doc: dict) -> ReluNetwork:
    layers = []
    for layer in doc["layers"]:
        A = np.asarray(layer["weights"], dtype=float).reshape(layer["rows"], layer["cols"])
        layers.append((A, np.asarray(layer["bias"], dtype=float)))
    return ReluNetwork(tuple(layers), bool(doc.get("relu_on_output", False)))


def save_network(net: ReluNetwork, path: str | Path) -> None:
    Path(path).write_text(json.dumps(net_to_dict(net)) + "\n")


def load_network(path: str | Path) -> ReluNetwork:
    return net_from_dict(json.loads(Path(path).read_text()))


def write_training_log(rows, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("restart,epoch,mse\n")
        for r, e, m in rows:
            fh.write(f"{r},{e},{m!r}\n")
