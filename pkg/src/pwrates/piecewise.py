"""Piecewise smooth target functions and the data-generating process.

A target is ``f(x) = sum_m f_m(x) * 1{x in R_m}`` on the unit cube, where
each region ``R_m`` is an intersection of horizon-function half-spaces
``sign * (x_d - h(x_{-d})) >= 0``.

Smooth components and boundaries are small expression trees so targets can
round-trip through JSON in prefix notation, e.g. ``"+ 0.2 ^ x1 2"``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class TargetError(ValueError):
    """Malformed target, expression or sampling request."""


# ---------------------------------------------------------------------------
# expression trees


@dataclass(frozen=True)
class Const:
    value: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape[0], float(self.value))

    def prefix(self) -> str:
        return repr(float(self.value))

    def max_coord(self) -> int:
        return 0


@dataclass(frozen=True)
class Coord:
    index: int  # 1-based

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return x[:, self.index - 1].astype(float)

    def prefix(self) -> str:
        return f"x{self.index}"

    def max_coord(self) -> int:
        return self.index


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "^": np.power,
}


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        a, b = self.left(x), self.right(x)
        with np.errstate(invalid="ignore"):
            return _BINARY[self.op](a, b)

    def prefix(self) -> str:
        return f"{self.op} {self.left.prefix()} {self.right.prefix()}"

    def max_coord(self) -> int:
        return max(self.left.max_coord(), self.right.max_coord())


@dataclass(frozen=True)
class Abs:
    arg: "Expr"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.abs(self.arg(x))

    def prefix(self) -> str:
        return f"abs {self.arg.prefix()}"

    def max_coord(self) -> int:
        return self.arg.max_coord()


Expr = Const | Coord | BinOp | Abs


def parse_expr(text: str) -> Expr:
    """Parse a prefix-notation expression.

    Tokens are numbers, coordinates ``x1 .. xD`` (1-based), the binary
    operators ``+ - * ^`` and the unary ``abs``.
    """
    tokens = text.split()
    if not tokens:
        raise TargetError("empty expression")
    pos = 0

    def take() -> Expr:
        nonlocal pos
        if pos >= len(tokens):
            raise TargetError(f"truncated expression: {text!r}")
        tok = tokens[pos]
        pos += 1
        if tok in _BINARY:
            left = take()
            return BinOp(tok, left, take())
        if tok == "abs":
            return Abs(take())
        if tok[0] == "x" and tok[1:].isdigit():
            idx = int(tok[1:])
            if idx < 1:
                raise TargetError(f"coordinates are 1-based, got {tok}")
            return Coord(idx)
        try:
            return Const(float(tok))
        except ValueError:
            raise TargetError(f"unknown token {tok!r} in {text!r}") from None

    expr = take()
    if pos != len(tokens):
        raise TargetError(f"trailing tokens in expression: {text!r}")
    return expr


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise TargetError(f"expected points of dimension {dim}, got {arr.shape[1]}")
    return arr, single


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class SmoothComponent:
    expr: Expr
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise TargetError(f"beta must be positive, got {self.beta}")

    @classmethod
    def parse(cls, text: str, beta: float = 1.0) -> "SmoothComponent":
        return cls(parse_expr(text), beta)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.expr(np.atleast_2d(x))


@dataclass(frozen=True)
class BasisPiece:
    """Half-space ``sign * (x_axis - boundary(x without axis)) >= 0``.

    ``strict`` switches to ``> 0`` so a piece can be the exact complement
    of another one.
    """

    boundary: SmoothComponent
    axis: int  # 1-based
    sign: int = 1
    alpha: float = 1.0
    strict: bool = False

    def __post_init__(self):
        if self.axis < 1:
            raise TargetError(f"axis is 1-based, got {self.axis}")
        if self.sign not in (1, -1):
            raise TargetError(f"sign must be +1 or -1, got {self.sign}")
        if not self.alpha > 0:
            raise TargetError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class Region:
    pieces: tuple[BasisPiece, ...]

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not self.pieces:
            raise TargetError("a region needs at least one basis piece")


@dataclass(frozen=True)
class PiecewiseSmoothFunction:
    terms: tuple[tuple[SmoothComponent, Region], ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((c, r) for c, r in self.terms))
        if not self.terms:
            raise TargetError("a piecewise function needs M >= 1 terms")
        if self.dim < 1:
            raise TargetError(f"dim must be positive, got {self.dim}")
        for comp, region in self.terms:
            if comp.expr.max_coord() > self.dim:
                raise TargetError("smooth component uses a coordinate beyond dim")
            for piece in region.pieces:
                if piece.axis > self.dim:
                    raise TargetError(f"piece axis {piece.axis} exceeds dim {self.dim}")
                if piece.boundary.expr.max_coord() > self.dim - 1:
                    raise TargetError("boundary uses more than dim-1 coordinates")

    @property
    def M(self) -> int:
        return len(self.terms)

    def __call__(self, x) -> np.ndarray | float:
        return eval_piecewise(self, x)


@dataclass(frozen=True)
class Dataset:
    xs: np.ndarray
    ys: np.ndarray
    sigma: float
    seed: int = 0

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        ys = np.array(self.ys, dtype=float).reshape(-1)
        if xs.shape[0] != ys.shape[0] or ys.shape[0] < 1:
            raise TargetError("xs and ys must have equal, nonzero length")
        if np.any(xs < 0) or np.any(xs > 1):
            raise TargetError("design points must lie in the unit cube")
        if self.sigma < 0:
            raise TargetError("sigma must be nonnegative")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.ys.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def with_responses(self, ys) -> "Dataset":
        return Dataset(self.xs, ys, self.sigma, self.seed)


# ---------------------------------------------------------------------------
# operations


def horizon_indicator(piece: BasisPiece, x, dim: int | None = None):
    """Return 1 where ``sign * (x_d - h(x_{-d})) >= 0`` and 0 elsewhere.

    ``x`` is a single point or an ``(N, D)`` array. Points exactly on the
    boundary count as inside.
    """
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    D = arr.shape[1] if dim is None else dim
    if arr.shape[1] != D or piece.axis > D:
        raise TargetError(f"point dimension {arr.shape[1]} does not fit piece axis {piece.axis}")
    if piece.boundary.expr.max_coord() > D - 1:
        raise TargetError("boundary expression needs more coordinates than the point has")
    rest = np.delete(arr, piece.axis - 1, axis=1)
    gap = arr[:, piece.axis - 1] - piece.boundary(rest)
    side = piece.sign * gap
    out = (side > 0 if piece.strict else side >= 0).astype(np.int64)
    return int(out[0]) if np.ndim(x) == 1 else out


def region_member(region: Region, x, dim: int | None = None):
    """Intersection of the region's piece indicators."""
    if not region.pieces:
        raise TargetError("empty piece list")
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.ones(arr.shape[0], dtype=np.int64)
    for piece in region.pieces:
        out *= horizon_indicator(piece, arr, dim)
    return int(out[0]) if np.ndim(x) == 1 else out


def eval_piecewise(f: PiecewiseSmoothFunction, x):
    arr, single = _as_points(x, f.dim)
    total = np.zeros(arr.shape[0])
    for comp, region in f.terms:
        mask = region_member(region, arr, f.dim).astype(bool)
        if mask.any():
            total[mask] += comp(arr[mask])
    return float(total[0]) if single else total


def preset_experiment_target() -> PiecewiseSmoothFunction:
    """The two-piece target used in the simulation study (D = 2).

    ``R1 = {x2 >= 0.75 - 0.6 x1}`` carries ``0.2 + x1^2 + 0.1 x2`` and its
    complement carries ``0.7 + 0.01 |4 x1 + 10 x2 - 9|^1.5``.
    """
    boundary = SmoothComponent.parse("- 0.75 * 0.6 x1")
    r1 = Region((BasisPiece(boundary, axis=2, sign=1),))
    r2 = Region((BasisPiece(boundary, axis=2, sign=-1, strict=True),))
    f1 = SmoothComponent.parse("+ 0.2 + ^ x1 2 * 0.1 x2", beta=math.inf)
    f2 = SmoothComponent.parse("+ 0.7 * 0.01 ^ abs - + * 4 x1 * 10 x2 9 1.5", beta=1.5)
    return PiecewiseSmoothFunction(((f1, r1), (f2, r2)), dim=2)


def step_target_1d() -> PiecewiseSmoothFunction:
    """``1{x >= 0.5}`` on [0, 1], the series lower-bound example."""
    piece = BasisPiece(SmoothComponent(Const(0.5)), axis=1, sign=1)
    return PiecewiseSmoothFunction(((SmoothComponent(Const(1.0), beta=math.inf), Region((piece,))),), dim=1)


def uniform_points(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((n, dim))


def gaussian_noise(n: int, rng: np.random.Generator) -> np.ndarray:
    """Standard normals by Box-Muller on the generator's uniform stream."""
    m = (n + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:n]


def make_rng(seed: int) -> np.random.Generator:
    """The package-wide generator: PCG64 seeded with a 64-bit integer."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def sample_dataset(f: PiecewiseSmoothFunction, n: int, sigma: float, seed: int) -> Dataset:
    if n < 1:
        raise TargetError(f"n must be >= 1, got {n}")
    if sigma < 0:
        raise TargetError(f"sigma must be nonnegative, got {sigma}")
    rng = make_rng(seed)
    xs = uniform_points(n, f.dim, rng)
    ys = eval_piecewise(f, xs) + sigma * gaussian_noise(n, rng)
    return Dataset(xs, ys, sigma, seed)


def equispaced_dataset(f: PiecewiseSmoothFunction, n: int, sigma: float, seed: int) -> Dataset:
    """1-D fixed design ``X_i = i / n`` with Gaussian noise."""
    if f.dim != 1:
        raise TargetError("equispaced design is one-dimensional")
    xs = (np.arange(1, n + 1) / n).reshape(-1, 1)
    ys = eval_piecewise(f, xs) + sigma * gaussian_noise(n, make_rng(seed))
    return Dataset(xs, ys, sigma, seed)


# ---------------------------------------------------------------------------
# JSON


def target_to_dict(f: PiecewiseSmoothFunction) -> dict:
    terms = []
    for comp, region in f.terms:
        terms.append(
            {
                "expr": comp.expr.prefix(),
                "beta": _num_out(comp.beta),
                "region": [
                    {
                        "axis": p.axis,
                        "sign": p.sign,
                        "alpha": _num_out(p.alpha),
                        "boundary": p.boundary.expr.prefix(),
                        **({"strict": True} if p.strict else {}),
                    }
                    for p in region.pieces
                ],
            }
        )
    return {"dim": f.dim, "terms": terms}


def target_from_dict(doc: dict) -> PiecewiseSmoothFunction:
    try:
        terms = []
        for t in doc["terms"]:
            pieces = [
                BasisPiece(
                    SmoothComponent.parse(p["boundary"], beta=_num_in(p.get("alpha", 1.0))),
                    axis=int(p["axis"]),
                    sign=int(p.get("sign", 1)),
                    alpha=_num_in(p.get("alpha", 1.0)),
                    strict=bool(p.get("strict", False)),
                )
                for p in t["region"]
            ]
            comp = SmoothComponent.parse(t["expr"], beta=_num_in(t.get("beta", 1.0)))
            terms.append((comp, Region(tuple(pieces))))
        return PiecewiseSmoothFunction(tuple(terms), dim=int(doc["dim"]))
    except (KeyError, TypeError) as exc:
        raise TargetError(f"malformed target document: {exc}") from exc


def load_target(path: str | Path) -> PiecewiseSmoothFunction:
    return target_from_dict(json.loads(Path(path).read_text()))


def dump_target(f: PiecewiseSmoothFunction, path: str | Path) -> None:
    Path(path).write_text(json.dumps(target_to_dict(f), indent=2) + "\n")


def _num_out(v: float):
    return "inf" if math.isinf(v) else v


def _num_in(v) -> float:
    return math.inf if v == "inf" else float(v)


PRESETS = {
    "paper-2d": preset_experiment_target,
    "step-1d": step_target_1d,
}


def resolve_target(spec: str) -> PiecewiseSmoothFunction:
    """A preset name or a path to a target JSON document."""
    if spec in PRESETS:
        return PRESETS[spec]()
    path = Path(spec)
    if not path.exists():
        raise TargetError(f"unknown preset or missing target file: {spec}")
    return load_target(path)
