"""Minimal enclosing balls, lattice-snapped centring and block rotations in SO(k)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, SchemaError
from .lattice_core import ScaledVector

TWO_PI = 2.0 * math.pi
EXACT_MAX_POINTS = 50
EXACT_MAX_DIM = 10


@dataclass(frozen=True, eq=False)
class EnclosingBall:
    center: np.ndarray
    radius: float
    support_indices: tuple
    tolerance: float

    def contains(self, p, slack: float = 0.0) -> bool:
        return float(np.linalg.norm(np.asarray(p, dtype=float) - self.center)) <= self.radius + slack


def _circumball(support: np.ndarray):
    """Smallest ball with every support point on its boundary (centre in their affine hull)."""
    if len(support) == 0:
        return None, -1.0
    p0 = support[0]
    if len(support) == 1:
        return p0.copy(), 0.0
    U = support[1:] - p0
    gram = U @ U.T
    rhs = 0.5 * np.einsum("ij,ij->i", U, U)
    coef = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    center = p0 + coef @ U
    return center, float(np.sum((center - p0) ** 2))


def _inside(center, r2, p) -> bool:
    if center is None:
        return False
    return float(np.sum((p - center) ** 2)) <= r2 * (1.0 + 1e-12) + 1e-24


def _move_to_front(pts: np.ndarray, order: list, end: int, support: list, dim: int):
    center, r2 = _circumball(pts[support]) if support else (None, -1.0)
    if len(support) == dim + 1:
        return center, r2
    i = 0
    while i < end:
        idx = order[i]
        if not _inside(center, r2, pts[idx]):
            center, r2 = _move_to_front(pts, order, i, support + [idx], dim)
            order.insert(0, order.pop(i))
        i += 1
    return center, r2


def _welzl(pts: np.ndarray):
    order = list(range(len(pts)))
    center, _ = _move_to_front(pts, order, len(pts), [], pts.shape[1])
    return center


def _core_set(pts: np.ndarray, tol: float, max_iter: int = 200_000):
    """Away-step Frank-Wolfe on the dual; stops once radius <= (1 + tol) * dual lower bound."""
    n = len(pts)
    shift = pts[0]
    P = pts - shift
    sq = np.einsum("ij,ij->i", P, P)
    a = int(np.argmax(sq))
    b = int(np.argmax(np.sum((P - P[a]) ** 2, axis=1)))
    alpha = np.zeros(n)
    alpha[a] += 0.5
    alpha[b] += 0.5
    for _ in range(max_iter):
        c = alpha @ P
        dist = np.sum((P - c) ** 2, axis=1)
        gamma = float(alpha @ sq - c @ c)
        j = int(np.argmax(dist))
        if gamma <= 0.0:
            if dist[j] == 0.0:
                break
            gamma = 0.0
        if gamma > 0.0 and dist[j] <= (1.0 + tol) ** 2 * gamma:
            break
        eps_plus = dist[j] / gamma - 1.0 if gamma > 0 else math.inf
        active = np.flatnonzero(alpha > 0)
        m = int(active[np.argmin(dist[active])])
        eps_minus = 1.0 - dist[m] / gamma if gamma > 0 else 0.0
        if eps_plus >= eps_minus or not math.isfinite(eps_plus):
            step = eps_plus / (2.0 * (1.0 + eps_plus)) if math.isfinite(eps_plus) else 0.5
            alpha *= 1.0 - step
            alpha[j] += step
        else:
            step = min(eps_minus / (2.0 * (1.0 - eps_minus)), alpha[m] / (1.0 - alpha[m]))
            alpha *= 1.0 + step
            alpha[m] -= step
            alpha[m] = max(alpha[m], 0.0)
    return alpha @ P + shift


def minimal_enclosing_ball(points: Sequence, tol: float = 1e-6) -> EnclosingBall:
    """Smallest enclosing ball of ``points`` (radius within a factor ``1 + tol`` of optimal).

    Exact move-to-front recursion for at most 50 points in at most 10
    dimensions, dual Frank-Wolfe with away steps beyond.  The reported radius
    is the achieved maximum distance, so containment holds by construction.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one point")
    n, dim = pts.shape
    if n == 1:
        center = pts[0].copy()
    elif n == 2:
        center = 0.5 * (pts[0] + pts[1])
    elif n <= EXACT_MAX_POINTS and dim <= EXACT_MAX_DIM:
        center = _welzl(pts)
    else:
        center = _core_set(pts, tol)
    dists = np.linalg.norm(pts - center, axis=1)
    radius = float(dists.max())
    support = tuple(int(i) for i in np.flatnonzero(dists >= radius * (1.0 - 2.0 * tol) - 1e-12))
    return EnclosingBall(center, radius, support, tol)


@dataclass(frozen=True)
class SnappedCenter:
    """Nearest lattice point to a circumcentre and the norm bound after translating by it."""

    center: ScaledVector
    bound: float


def snap_center_to_lattice(ball: EnclosingBall, denominator: int, k: int) -> SnappedCenter:
    """Round the centre to (1/(denominator sqrt k)) Z^k.

    Translating by the snapped centre is an isometry that keeps every point of
    that lattice on it, at the cost of ``1 / (2 denominator)`` extra radius.
    """
    if len(ball.center) != k:
        raise DimensionMismatch(f"ball lives in dimension {len(ball.center)}, expected {k}")
    w = np.asarray(ball.center, dtype=float) * denominator * math.sqrt(k)
    nums = np.sign(w) * np.floor(np.abs(w) + 0.5)
    c = ScaledVector(tuple(int(v) for v in nums), denominator, k)
    return SnappedCenter(c, ball.radius + 1.0 / (2 * denominator))


@dataclass(frozen=True)
class BlockRotation:
    """Rotation by ``angles[j]`` in the plane of coordinates ``(2j, 2j+1)``."""

    angles: tuple
    k: int

    def __post_init__(self):
        if self.k < 2 or self.k % 2:
            raise ValueError("block rotations need an even dimension")
        angles = tuple(float(a) % TWO_PI for a in self.angles)
        if len(angles) != self.k // 2:
            raise DimensionMismatch(f"expected {self.k // 2} angles, got {len(angles)}")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def identity(cls, k: int) -> "BlockRotation":
        return cls((0.0,) * (k // 2), k)

    @property
    def is_identity(self) -> bool:
        return all(a == 0.0 for a in self.angles)

    def matrix(self) -> np.ndarray:
        """Dense k x k form; for inspection and tests only."""
        m = np.zeros((self.k, self.k))
        for j, t in enumerate(self.angles):
            c, s = math.cos(t), math.sin(t)
            m[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = [[c, -s], [s, c]]
        return m

    def to_dict(self) -> dict:
        return {"k": self.k, "angles": list(self.angles)}

    @classmethod
    def from_dict(cls, data: dict) -> "BlockRotation":
        try:
            return cls(tuple(float(a) for a in data["angles"]), int(data["k"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad block rotation: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def apply_block_rotation(rho: BlockRotation, v) -> np.ndarray:
    """Rotate each coordinate pair of ``v`` (shape ``(k,)`` or ``(n, k)``)."""
    arr = np.asarray(v, dtype=float)
    if arr.shape[-1] != rho.k:
        raise DimensionMismatch(f"vector has length {arr.shape[-1]}, rotation acts on {rho.k}")
    angles = np.array(rho.angles)
    c, s = np.cos(angles), np.sin(angles)
    x, y = arr[..., 0::2], arr[..., 1::2]
    out = np.empty_like(arr)
    out[..., 0::2] = c * x - s * y
    out[..., 1::2] = s * x + c * y
    return out
