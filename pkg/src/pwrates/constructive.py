"""Explicit ReLU constructions: summation, products, step, horizon, assembly.

Networks here are wired by hand from affine pieces. Two combinators do most
of the work: :func:`compose` (feed one net into another, merging the
boundary affine maps, so depths add minus one) and :func:`parallel`
(stack nets of equal depth side by side). Signed values are carried
through hidden layers as ``relu(t) - relu(-t)``.

The multiplication unit is ``xy = (|x+y|/2)^2 - (|x-y|/2)^2`` with each
square replaced by the sawtooth interpolant ``t - sum_s g_s(t) / 4^s``,
whose error on [0, 1] is at most ``2^(-2m-2)`` after ``m`` compositions.
Inputs are clamped to [-1, 1] first, so products can be chained safely.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.linalg import block_diag

from .relu_net import ReluNetwork, network_stats


class ConstructionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# combinators


def affine_net(A, b=None) -> ReluNetwork:
    A = np.array(A, dtype=float, ndmin=2)
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    return ReluNetwork(((A, b),))


def identity_net(width: int, depth: int = 1) -> ReluNetwork:
    """Exact identity on R^width with ``depth`` affine maps."""
    eye = np.eye(width)
    if depth == 1:
        return affine_net(eye)
    layers = [(np.vstack([eye, -eye]), np.zeros(2 * width))]
    layers += [(np.eye(2 * width), np.zeros(2 * width)) for _ in range(depth - 2)]
    layers.append((np.hstack([eye, -eye]), np.zeros(width)))
    return ReluNetwork(tuple(layers))


def compose(outer: ReluNetwork, inner: ReluNetwork) -> ReluNetwork:
    """``outer(inner(x))``; the inner output map is folded into the outer input map."""
    if inner.relu_on_output:
        raise ConstructionError("cannot fold a ReLU-terminated network")
    if outer.in_dim != inner.out_dim:
        raise ConstructionError(f"cannot compose: {inner.out_dim} outputs into {outer.in_dim} inputs")
    A_in, b_in = inner.layers[-1]
    A_out, b_out = outer.layers[0]
    merged = (A_out @ A_in, A_out @ b_in + b_out)
    return ReluNetwork(inner.layers[:-1] + (merged,) + outer.layers[1:], outer.relu_on_output)


def chain(*nets: ReluNetwork) -> ReluNetwork:
    """``chain(a, b, c)(x) == c(b(a(x)))``."""
    out = nets[0]
    for net in nets[1:]:
        out = compose(net, out)
    return out


def pad_depth(net: ReluNetwork, depth: int) -> ReluNetwork:
    L = len(net.layers)
    if L > depth:
        raise ConstructionError(f"network of depth {L} cannot be padded to {depth}")
    if L == depth:
        return net
    return compose(identity_net(net.out_dim, depth - L + 1), net)


def parallel(nets: Sequence[ReluNetwork], shared_input: bool = True) -> ReluNetwork:
    """Run nets side by side and concatenate their outputs.

    With ``shared_input`` every net reads the same input vector; otherwise
    the input is the concatenation of the individual inputs.
    """
    depth = max(len(n.layers) for n in nets)
    nets = [pad_depth(n, depth) for n in nets]
    if shared_input and len({n.in_dim for n in nets}) != 1:
        raise ConstructionError("shared-input parallel needs equal input dimensions")
    layers = []
    for l in range(depth):
        mats = [n.layers[l][0] for n in nets]
        A = np.vstack(mats) if (l == 0 and shared_input) else block_diag(*mats)
        b = np.concatenate([n.layers[l][1] for n in nets])
        layers.append((A, b))
    return ReluNetwork(tuple(layers))


def select_net(dim: int, coords: Sequence[int], scales: Sequence[float] | None = None) -> ReluNetwork:
    """Affine map picking 0-based ``coords`` out of R^dim (optionally scaled)."""
    A = np.zeros((len(coords), dim))
    for row, c in enumerate(coords):
        A[row, c] = 1.0 if scales is None else scales[row]
    return affine_net(A)


# ---------------------------------------------------------------------------
# reports


@dataclass
class BuildReport:
    kind: str
    eps: float
    L: int
    S: int
    Binf: float
    measured_error_grid: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def report_for(kind: str, net: ReluNetwork, eps: float, error: float | None = None) -> BuildReport:
    st = network_stats(net)
    return BuildReport(kind, eps, st.L, st.S, st.Binf, error)


# ---------------------------------------------------------------------------
# summation and multiplication


def build_sum_net(Dp: int) -> ReluNetwork:
    """One affine map with all-ones weights: exact for every real input."""
    if Dp < 1:
        raise ConstructionError("Dp must be >= 1")
    return affine_net(np.ones((1, Dp)))


def squaring_depth(eps: float) -> int:
    """Sawtooth compositions ``m`` with ``2^(-2m-2) <= eps / 4``."""
    _check_eps(eps)
    return max(1, math.ceil((math.log2(1 / eps) - 2) / 2) + 1)


def _check_eps(eps: float) -> None:
    if not 0 < eps < 0.5:
        raise ConstructionError(f"eps must lie in (0, 1/2), got {eps}")


def _clamp_layer(width: int) -> tuple[np.ndarray, np.ndarray]:
    # units relu(x+1), relu(x-1) per coordinate; clamp(x) = u1 - u2 - 1
    A = np.zeros((2 * width, width))
    b = np.zeros(2 * width)
    for i in range(width):
        A[2 * i, i] = A[2 * i + 1, i] = 1.0
        b[2 * i], b[2 * i + 1] = 1.0, -1.0
    return A, b


def clamp_net(width: int = 1) -> ReluNetwork:
    """Coordinatewise clamp to [-1, 1] (two affine maps)."""
    A, b = _clamp_layer(width)
    out = np.zeros((width, 2 * width))
    for i in range(width):
        out[i, 2 * i], out[i, 2 * i + 1] = 1.0, -1.0
    return ReluNetwork(((A, b), (out, -np.ones(width))))


def build_mult_net(eps: float) -> ReluNetwork:
    """Two-input product net, sup error <= eps on [-1, 1]^2.

    Depth is ``m + 3`` where ``m = squaring_depth(eps)``.
    """
    m = squaring_depth(eps)
    layers = [_clamp_layer(2)]
    # s = cx + cy, d = cx - cy with cx = h0 - h1 - 1, cy = h2 - h3 - 1
    s_row = np.array([1.0, -1.0, 1.0, -1.0])
    d_row = np.array([1.0, -1.0, -1.0, 1.0])
    layers.append((np.vstack([s_row, -s_row, d_row, -d_row]), np.array([-2.0, 2.0, 0.0, 0.0])))
    # first squaring layer: a = (u0+u1)/2, b = (u2+u3)/2; units per chain (p, q, acc)
    A = np.zeros((6, 4))
    bias = np.zeros(6)
    for c, (i, j) in enumerate(((0, 1), (2, 3))):
        for unit in range(3):
            A[3 * c + unit, [i, j]] = 0.5
        bias[3 * c + 1] = -0.5
    layers.append((A, bias))
    for k in range(2, m + 1):
        # z = g_{k-1} = 2p - 4q; acc_k = acc_{k-1} - z / 4^(k-1)
        A = np.zeros((6, 6))
        bias = np.zeros(6)
        w = 4.0 ** -(k - 1)
        for c in range(2):
            p, q, acc = 3 * c, 3 * c + 1, 3 * c + 2
            A[p, [p, q]] = (2.0, -4.0)
            A[q, [p, q]] = (2.0, -4.0)
            bias[q] = -0.5
            A[acc, [p, q, acc]] = (-2.0 * w, 4.0 * w, 1.0)
        layers.append((A, bias))
    w = 4.0 ** -m
    out = np.zeros((1, 6))
    out[0, [0, 1, 2]] = (-2.0 * w, 4.0 * w, 1.0)
    out[0, [3, 4, 5]] = (2.0 * w, -4.0 * w, -1.0)
    layers.append((out, np.zeros(1)))
    return ReluNetwork(tuple(layers))


def mult_net_closed_form(eps: float) -> tuple[int, int, float]:
    """``(L, S, Binf)`` of :func:`build_mult_net` by counting its wiring."""
    m = squaring_depth(eps)
    return m + 3, 46 + 16 * (m - 1), 4.0 if m >= 2 else 2.0


def build_tree_product_net(Dp: int, eps: float) -> ReluNetwork:
    """``prod_d x_d`` on [-1, 1]^Dp with error <= (Dp - 1) eps.

    Pairs are multiplied level by level; an odd wire rides along on an
    identity block of matching depth.
    """
    if Dp < 2:
        raise ConstructionError("Dp must be >= 2")
    mult = build_mult_net(eps)
    depth = len(mult.layers)
    net = None
    width = Dp
    while width > 1:
        blocks = [mult] * (width // 2)
        if width % 2:
            blocks.append(identity_net(1, depth))
        level = parallel(blocks, shared_input=False)
        net = level if net is None else compose(level, net)
        width = (width + 1) // 2
    return net


def tree_depth_closed_form(Dp: int, eps: float) -> int:
    levels = math.ceil(math.log2(Dp))
    return levels * (squaring_depth(eps) + 2) + 1


def build_inner_product_net(Dp: int, eps: float, scale: float = 1.0) -> ReluNetwork:
    """``sum_d x_d * x_{Dp+d}`` on [-1, 1]^(2 Dp), error <= Dp * eps.

    With ``scale`` the first half of the inputs may range over
    [-scale, scale]; they are divided by ``scale`` before the product units
    and the sum is multiplied back (error then ``scale * Dp * eps``).
    """
    if Dp < 1:
        raise ConstructionError("Dp must be >= 1")
    order = []
    scales = []
    for d in range(Dp):
        order += [d, Dp + d]
        scales += [1.0 / scale, 1.0]
    route = select_net(2 * Dp, order, scales)
    products = parallel([build_mult_net(eps)] * Dp, shared_input=False)
    total = affine_net(scale * np.ones((1, Dp)))
    return chain(route, products, total)


# ---------------------------------------------------------------------------
# step, horizon, assembly


def build_heaviside_net(eps: float) -> ReluNetwork:
    """Ramp ``relu(t / eps^2) - relu(t / eps^2 - 1)``: 2 layers, 5 nonzeros."""
    _check_eps(eps)
    k = eps**-2
    return ReluNetwork(((np.array([[k], [k]]), np.array([0.0, -1.0])), (np.array([[1.0, -1.0]]), np.zeros(1))))


def heaviside_l2_error(eps: float) -> float:
    """Closed-form L2([-1, 1]) distance between the ramp and ``1{t >= 0}``."""
    return eps / math.sqrt(3)


def heaviside_measured_l2(net: ReluNetwork, eps: float) -> float:
    """L2([-1, 1]) distance to the step by adaptive quadrature."""
    def sq(t):
        return (net(np.array([t])) - (1.0 if t >= 0 else 0.0)) ** 2

    val, _ = integrate.quad(sq, -1.0, 1.0, points=[0.0, eps**2], epsabs=1e-14, epsrel=1e-12, limit=200)
    return math.sqrt(val)


def build_horizon_net(hnet: ReluNetwork, axis: int, sign: int, eps: float, dim: int | None = None) -> ReluNetwork:
    """Approximate ``1{sign * (x_axis - h(x_{-axis})) >= 0}`` on [0, 1]^D.

    ``axis`` is 1-based; ``hnet`` maps the remaining D-1 coordinates to h.
    """
    _check_eps(eps)
    if sign not in (1, -1):
        raise ConstructionError("sign must be +1 or -1")
    D = hnet.in_dim + 1 if dim is None else dim
    if hnet.in_dim != D - 1 or hnet.out_dim != 1:
        raise ConstructionError(f"boundary net must map R^{D - 1} to R, got R^{hnet.in_dim} -> R^{hnet.out_dim}")
    if not 1 <= axis <= D:
        raise ConstructionError(f"axis {axis} outside 1..{D}")
    rest = [c for c in range(D) if c != axis - 1]
    h = compose(hnet, select_net(D, rest))
    xd = select_net(D, [axis - 1])
    both = parallel([h, xd])  # outputs (h, x_d)
    gap = affine_net([[-sign, sign]])
    # shift by eps^2 so the ramp is already 1 on the boundary (>= convention)
    shift = affine_net([[1.0]], [eps**2])
    return chain(both, gap, clamp_net(1), shift, build_heaviside_net(eps))


def build_region_net(horizon_nets: Sequence[ReluNetwork], eps: float) -> ReluNetwork:
    """Intersection of pieces: tree product of the J horizon outputs."""
    if len(horizon_nets) == 1:
        return horizon_nets[0]
    return compose(build_tree_product_net(len(horizon_nets), eps), parallel(list(horizon_nets)))


def assemble_piecewise_net(smooth_nets: Sequence[ReluNetwork], region_nets: Sequence[ReluNetwork],
                           eps: float, scale: float = 1.0) -> ReluNetwork:
    """``sum_m f_m(x) * r_m(x)`` through the inner-product block.

    ``scale`` must bound ``|f_m|`` on the cube (region outputs lie in [0, 1]).
    """
    if len(smooth_nets) != len(region_nets) or not smooth_nets:
        raise ConstructionError("need equal, nonzero numbers of smooth and region nets")
    M = len(smooth_nets)
    dims = {n.in_dim for n in list(smooth_nets) + list(region_nets)}
    if len(dims) != 1:
        raise ConstructionError(f"subnets disagree on input dimension: {sorted(dims)}")
    feats = parallel(list(smooth_nets) + list(region_nets))
    return compose(build_inner_product_net(M, eps, scale), feats)


# ---------------------------------------------------------------------------
# exact or near-exact smooth subnets


def build_ridge_pwl_net(dim: int, direction, offset: float, func: Callable[[np.ndarray], np.ndarray],
                        lo: float, hi: float, knots: int, linear=None, const: float = 0.0) -> ReluNetwork:
    """``const + <linear, x> + g(<direction, x> + offset)`` with g interpolated.

    ``g`` is replaced by its piecewise-linear interpolant on ``knots``
    equally spaced nodes over [lo, hi]; one hidden unit per node, plus a
    signed pair for the linear part.
    """
    w = np.asarray(direction, dtype=float).reshape(1, dim)
    t = np.linspace(lo, hi, knots)
    g = np.asarray(func(t), dtype=float)
    slopes = np.diff(g) / np.diff(t)
    jumps = np.diff(np.concatenate([[0.0], slopes]))
    hidden_A = np.repeat(w, knots - 1, axis=0)
    hidden_b = offset - t[:-1]
    out_w = list(jumps)
    A_rows, b_rows = [hidden_A], [hidden_b]
    lin = np.zeros(dim) if linear is None else np.asarray(linear, dtype=float)
    if np.any(lin):
        A_rows.append(np.vstack([lin, -lin]))
        b_rows.append(np.zeros(2))
        out_w += [1.0, -1.0]
    A1 = np.vstack(A_rows)
    b1 = np.concatenate(b_rows)
    A2 = np.array([out_w])
    return ReluNetwork(((A1, b1), (A2, np.array([const + g[0]]))))


def build_affine_boundary_net(coefs, intercept: float) -> ReluNetwork:
    """Exact ``h(z) = intercept + <coefs, z>``."""
    return affine_net([list(coefs)], [intercept])


def preset_assembly(eps: float, knots: int = 200) -> ReluNetwork:
    """Assembled net for the two-piece 2-D experiment target.

    Boundary ``h(x1) = 0.75 - 0.6 x1`` is exact; the two smooth parts are
    ridge interpolants with ``knots`` nodes.
    """
    h = build_affine_boundary_net([-0.6], 0.75)
    r1 = build_horizon_net(h, axis=2, sign=1, eps=eps)
    r2 = build_horizon_net(h, axis=2, sign=-1, eps=eps)
    f1 = build_ridge_pwl_net(2, [1.0, 0.0], 0.0, np.square, 0.0, 1.0, knots, linear=[0.0, 0.1], const=0.2)
    f2 = build_ridge_pwl_net(2, [4.0, 10.0], -9.0, lambda u: 0.01 * np.abs(u) ** 1.5, -9.0, 5.0, knots, const=0.7)
    return assemble_piecewise_net([f1, f2], [r1, r2], eps, scale=2.0)


# ---------------------------------------------------------------------------
# architecture budget


@dataclass(frozen=True)
class ApproxBudget:
    eps1: float
    eps2: float
    eps3: float
    theta2: float
    theta3: float
    S_bound: float
    L_bound: float
    B_bound: float


def architecture_budget(beta: float, alpha: float, D: int, n: int,
                        c: float = 1.0, c_prime: float = 1.0, s: float = 1.0) -> ApproxBudget:
    """Stage tolerances, rate parameters and size ceilings for sample size n.

    ``B_bound = c * n^s``; the exponent ``s`` is existential in the theory,
    so it is a caller input like the constants.
    """
    if beta <= 0 or alpha <= 0 or D < 2 or n < 1:
        raise ConstructionError("need beta, alpha > 0, D >= 2, n >= 1")
    eps1 = n ** (-beta / (2 * beta + D))
    eps2 = n ** (-alpha / (2 * alpha + 2 * D - 2))
    return ApproxBudget(
        eps1=eps1,
        eps2=eps2,
        eps3=max(eps1, eps2),
        theta2=(2 * D - 2) / alpha,
        theta3=min((2 * D - 2) / alpha, D / beta),
        S_bound=c_prime * max(n ** (D / (2 * beta + D)), n ** ((D - 1) / (alpha + D - 1))),
        L_bound=c * (1 + max(beta / D, alpha / (2 * (D - 1)))),
        B_bound=c * n**s,
    )


# ---------------------------------------------------------------------------
# grid error helpers


def grid_points(dim: int, per_axis: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis)] * dim
    return np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, dim)


def grid_sup_error(net: ReluNetwork, func, dim: int, per_axis: int, lo=-1.0, hi=1.0) -> float:
    pts = grid_points(dim, per_axis, lo, hi)
    return float(np.max(np.abs(net(pts) - func(pts))))


BUILDERS = ("sum", "mult", "product", "inner", "heaviside", "horizon", "assembly")


def build_by_kind(kind: str, eps: float, dim: int = 3) -> tuple[ReluNetwork, BuildReport]:
    """Build one construction with its measured grid error (CLI entry point)."""
    if kind == "sum":
        net = build_sum_net(dim)
        pts = grid_points(dim, 11, -1, 1)
        err = float(np.max(np.abs(net(pts) - pts.sum(1))))
    elif kind == "mult":
        net = build_mult_net(eps)
        err = grid_sup_error(net, lambda p: p[:, 0] * p[:, 1], 2, 201)
    elif kind == "product":
        net = build_tree_product_net(dim, eps)
        err = grid_sup_error(net, lambda p: np.prod(p, 1), dim, 21 if dim > 2 else 201)
    elif kind == "inner":
        net = build_inner_product_net(dim, eps)
        pts = np.random.default_rng(0).uniform(-1, 1, (20000, 2 * dim))
        err = float(np.max(np.abs(net(pts) - np.sum(pts[:, :dim] * pts[:, dim:], 1))))
    elif kind == "heaviside":
        net = build_heaviside_net(eps)
        err = heaviside_measured_l2(net, eps)
    elif kind == "horizon":
        from .piecewise import preset_experiment_target, region_member

        net = build_horizon_net(build_affine_boundary_net([-0.6], 0.75), axis=2, sign=1, eps=eps)
        pts = grid_points(2, 201)
        region = preset_experiment_target().terms[0][1]
        err = float(np.sqrt(np.mean((net(pts) - region_member(region, pts)) ** 2)))
    elif kind == "assembly":
        from .piecewise import eval_piecewise, preset_experiment_target

        net = preset_assembly(eps)
        pts = grid_points(2, 201)
        err = float(np.sqrt(np.mean((net(pts) - eval_piecewise(preset_experiment_target(), pts)) ** 2)))
    else:
        raise ConstructionError(f"unknown construction kind {kind!r}; choose from {', '.join(BUILDERS)}")
    return net, report_for(kind, net, eps, err)
