"""Exact points of the scaled integer lattice (1/lambda0) Z^d.

Coordinates are stored as Python integer numerators over one shared positive
denominator, so norms, distances and membership tests are exact rationals.
The only irrational factor that ever appears, 1/sqrt(k), is carried as a tag on
:class:`ScaledVector` and squares away in every norm.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BoundViolation,
    DimensionMismatch,
    DuplicatePoint,
    EpsilonOutOfRange,
    InfeasibleInstance,
    SchemaError,
)

_INT64_SAFE = 2**62


def round_half_away(x) -> int:
    """Round a real or rational scalar to the nearest integer, ties away from zero."""
    if isinstance(x, int):
        return x
    if isinstance(x, Rational):
        x = Fraction(x)
        n = (2 * abs(x.numerator) + x.denominator) // (2 * x.denominator)
        return n if x >= 0 else -n
    x = float(x)
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def is_perfect_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def int_array(rows) -> np.ndarray:
    """Integer array that is int64 when that is overflow-safe, object otherwise."""
    arr = np.array(rows, dtype=object)
    if arr.size == 0:
        return arr.astype(np.int64)
    if max(abs(int(v)) for v in arr.flat) < 2**31:
        return arr.astype(np.int64)
    return arr


def exact_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Integer matrix product that never overflows."""
    inner = a.shape[-1]
    if a.dtype == np.int64 and b.dtype == np.int64 and a.size and b.size:
        bound = int(np.abs(a).max()) * int(np.abs(b).max()) * inner
        if bound < _INT64_SAFE:
            return a @ b
    return a.astype(object) @ b.astype(object)


@dataclass(frozen=True)
class LatticeParams:
    """Hypotheses of one embedding problem: lattice denominator, dimension, norm bound, budget."""

    lambda0: int
    ambient_dim: int
    bound: int
    epsilon: Fraction

    def __post_init__(self):
        for name in ("lambda0", "ambient_dim", "bound"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        eps = Fraction(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        if not 0 < eps < Fraction(1, self.lambda0 + 1):
            raise EpsilonOutOfRange(
                f"epsilon={eps} must lie strictly inside (0, 1/{self.lambda0 + 1})"
            )


@dataclass(frozen=True)
class LatticePoint:
    numerators: tuple
    denominator: int

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(int(v) for v in self.numerators))
        if not isinstance(self.denominator, int) or self.denominator < 1:
            raise ValueError("denominator must be a positive integer")

    @property
    def dim(self) -> int:
        return len(self.numerators)

    @property
    def value(self) -> np.ndarray:
        return np.array(self.numerators, dtype=float) / self.denominator

    def fractions(self) -> list[Fraction]:
        return [Fraction(v, self.denominator) for v in self.numerators]

    def sq_norm(self) -> Fraction:
        return Fraction(sum(v * v for v in self.numerators), self.denominator**2)


@dataclass(frozen=True)
class ScaledVector:
    """``numerators / (denominator * sqrt(k))`` when ``sqrt_k`` is set, else ``numerators / denominator``."""

    numerators: tuple
    denominator: int
    sqrt_k: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "numerators", tuple(int(v) for v in self.numerators))
        if not isinstance(self.denominator, int) or self.denominator < 1:
            raise ValueError("denominator must be a positive integer")
        if self.sqrt_k is not None and self.sqrt_k < 1:
            raise ValueError("sqrt_k must be a positive integer")

    @property
    def irrational_scale(self) -> str:
        return "one" if self.sqrt_k is None else "inv_sqrt"

    @property
    def dim(self) -> int:
        return len(self.numerators)

    @property
    def scale_divisor_sq(self) -> int:
        """Square of the full divisor ``denominator * sqrt(k)``; always an integer."""
        return self.denominator**2 * (1 if self.sqrt_k is None else self.sqrt_k)

    def sq_norm(self) -> Fraction:
        return Fraction(sum(v * v for v in self.numerators), self.scale_divisor_sq)

    def to_float(self) -> np.ndarray:
        return np.array(self.numerators, dtype=float) / math.sqrt(self.scale_divisor_sq)

    def _check_compatible(self, other: "ScaledVector"):
        if (self.denominator, self.sqrt_k, self.dim) != (other.denominator, other.sqrt_k, other.dim):
            raise DimensionMismatch("scaled vectors live on different lattices")

    def __add__(self, other: "ScaledVector") -> "ScaledVector":
        self._check_compatible(other)
        nums = tuple(a + b for a, b in zip(self.numerators, other.numerators))
        return ScaledVector(nums, self.denominator, self.sqrt_k)

    def __sub__(self, other: "ScaledVector") -> "ScaledVector":
        self._check_compatible(other)
        nums = tuple(a - b for a, b in zip(self.numerators, other.numerators))
        return ScaledVector(nums, self.denominator, self.sqrt_k)

    def __mul__(self, factor: int) -> "ScaledVector":
        if not isinstance(factor, int):
            return NotImplemented
        return ScaledVector(tuple(factor * v for v in self.numerators), self.denominator, self.sqrt_k)

    __rmul__ = __mul__

    def on_scaled_lattice(self, lambda0: int) -> bool:
        """Exact membership in (1/(lambda0 sqrt k)) Z^k (or (1/lambda0) Z^k without the tag)."""
        return all((lambda0 * v) % self.denominator == 0 for v in self.numerators)


@dataclass(frozen=True)
class LatticePointSet:
    """Distinct points of (1/lambda0) Z^d inside the closed ball of radius ``bound``."""

    points: tuple
    lambda0: int
    bound: int

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if self.lambda0 < 1 or self.bound < 1:
            raise ValueError("lambda0 and bound must be positive integers")
        if len(pts) < 2:
            raise ValueError("a point set needs at least two points")
        dims = {p.dim for p in pts}
        if len(dims) != 1:
            raise DimensionMismatch(f"points have mixed dimensions {sorted(dims)}")
        if any(p.denominator != self.lambda0 for p in pts):
            raise ValueError("every point must use the shared denominator lambda0")
        limit = (self.bound * self.lambda0) ** 2
        seen = {}
        for i, p in enumerate(pts):
            if sum(v * v for v in p.numerators) > limit:
                raise BoundViolation(f"point {i} has norm above {self.bound}")
            if p.numerators in seen:
                raise DuplicatePoint(f"points {seen[p.numerators]} and {i} coincide")
            seen[p.numerators] = i

    @classmethod
    def from_numerators(cls, rows: Iterable[Sequence[int]], lambda0: int, bound: int) -> "LatticePointSet":
        return cls(tuple(LatticePoint(r, lambda0) for r in rows), lambda0, bound)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def dim(self) -> int:
        return self.points[0].dim

    def numerator_matrix(self) -> np.ndarray:
        return int_array([p.numerators for p in self.points])

    def scaled(self, factor: int) -> "LatticePointSet":
        """The set ``factor * S``, still over denominator lambda0."""
        rows = [[factor * v for v in p.numerators] for p in self.points]
        return LatticePointSet.from_numerators(rows, self.lambda0, self.bound * factor)

    def to_dict(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "dim": self.dim,
            "bound": self.bound,
            "points": [list(p.numerators) for p in self.points],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LatticePointSet":
        try:
            lambda0, dim, bound, rows = data["lambda0"], data["dim"], data["bound"], data["points"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"point set is missing field {exc}") from exc
        for value in (lambda0, dim, bound):
            if not isinstance(value, int) or isinstance(value, bool):
                raise SchemaError("lambda0, dim and bound must be integers")
        for row in rows:
            if not isinstance(row, list) or any(
                not isinstance(v, int) or isinstance(v, bool) for v in row
            ):
                raise SchemaError("point coordinates must be exact integers")
            if len(row) != dim:
                raise SchemaError(f"point {row} does not have dimension {dim}")
        return cls.from_numerators(rows, lambda0, bound)


def is_lattice_member(v, lambda0: int, tol: float = 0.0) -> bool:
    """True iff every coordinate of ``lambda0 * v`` is within ``tol`` of an integer.

    ``v`` may be a :class:`ScaledVector`, a :class:`LatticePoint`, a sequence of
    rationals (all exact when ``tol == 0``) or a float array.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if isinstance(v, LatticePoint):
        v = ScaledVector(v.numerators, v.denominator)
    if isinstance(v, ScaledVector) and tol == 0:
        if v.sqrt_k is None:
            return all((lambda0 * a) % v.denominator == 0 for a in v.numerators)
        if not is_perfect_square(v.sqrt_k):
            # a nonzero rational over sqrt(k) is irrational
            return all(a == 0 for a in v.numerators)
        div = v.denominator * math.isqrt(v.sqrt_k)
        return all((lambda0 * a) % div == 0 for a in v.numerators)
    if isinstance(v, ScaledVector):
        v = v.to_float()
    items = list(v) if not isinstance(v, np.ndarray) else list(v.ravel())
    if items and all(isinstance(a, Rational) for a in items):
        for a in items:
            w = Fraction(a) * lambda0
            if abs(w - round_half_away(w)) > tol:
                return False
        return True
    w = np.asarray(items, dtype=float) * lambda0
    if not np.all(np.isfinite(w)):
        raise ValueError("vector must be finite")
    return bool(np.all(np.abs(w - np.round(w)) <= tol))


def nearest_lattice_point(v, lambda0: int) -> np.ndarray:
    """Integer vector ``z`` minimising ``||v - z / lambda0||``; ties round away from zero.

    Works row-wise on 2-D float input.
    """
    if isinstance(v, ScaledVector):
        v = v.to_float()
    if isinstance(v, (list, tuple)) and v and all(isinstance(a, Rational) for a in v):
        return np.array([round_half_away(Fraction(a) * lambda0) for a in v], dtype=np.int64)
    w = np.asarray(v, dtype=float) * lambda0
    if not np.all(np.isfinite(w)):
        raise ValueError("vector must be finite")
    return (np.sign(w) * np.floor(np.abs(w) + 0.5)).astype(np.int64)


def exact_pairwise_sq_distances(points) -> np.ndarray:
    """Matrix of exact squared distances ``||x_i - x_j||^2`` as Fractions."""
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    n = len(pts)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        out[i, i] = Fraction(0)
        for j in range(i + 1, n):
            a, b = pts[i], pts[j]
            if a.denominator != b.denominator or getattr(a, "sqrt_k", None) != getattr(b, "sqrt_k", None):
                raise DimensionMismatch("points live on different lattices")
            num = sum((x - y) ** 2 for x, y in zip(a.numerators, b.numerators))
            if num == 0:
                raise DuplicatePoint(f"points {i} and {j} coincide")
            div = a.scale_divisor_sq if isinstance(a, ScaledVector) else a.denominator**2
            out[i, j] = out[j, i] = Fraction(num, div)
    return out


def _ball_counts(dim: int, radius_sq: int) -> list[list[int]]:
    """``counts[j][s]``: integer vectors in Z^j with squared norm at most ``s``."""
    counts = [[1] * (radius_sq + 1)]
    r = math.isqrt(radius_sq)
    for _ in range(dim):
        prev = counts[-1]
        row = []
        for s in range(radius_sq + 1):
            c = math.isqrt(s)
            row.append(prev[s] + 2 * sum(prev[s - a * a] for a in range(1, min(c, r) + 1)))
        counts.append(row)
    return counts


def lattice_ball_size(dim: int, lambda0: int, bound: int) -> int:
    """Number of points of (1/lambda0) Z^dim in the closed ball of radius ``bound``."""
    radius_sq = (bound * lambda0) ** 2
    return _ball_counts(dim, radius_sq)[dim][radius_sq]


def sample_point_set(n: int, dim: int, lambda0: int, bound: int, seed: int) -> LatticePointSet:
    """``n`` distinct points drawn uniformly from (1/lambda0) Z^dim inside the ball of radius ``bound``.

    Each draw is exactly uniform: coordinates are chosen one at a time with
    probability proportional to the number of completions that stay inside the
    ball.  Repeated points are redrawn.
    """
    if min(n, dim, lambda0, bound) < 1 or n < 2:
        raise ValueError("need n >= 2 and positive dim, lambda0, bound")
    radius_sq = (bound * lambda0) ** 2
    counts = _ball_counts(dim, radius_sq)
    total = counts[dim][radius_sq]
    if n > total:
        raise InfeasibleInstance(f"only {total} lattice points fit in the ball, asked for {n}")
    rng = random.Random(seed)
    rows, seen = [], set()
    while len(rows) < n:
        left, row = radius_sq, []
        for j in range(dim, 0, -1):
            pick = rng.randrange(counts[j][left])
            c = math.isqrt(left)
            for a in [0] + [v for m in range(1, c + 1) for v in (m, -m)]:
                w = counts[j - 1][left - a * a]
                if pick < w:
                    break
                pick -= w
            row.append(a)
            left -= a * a
        key = tuple(row)
        if key not in seen:
            seen.add(key)
            rows.append(row)
    return LatticePointSet.from_numerators(rows, lambda0, bound)
