"""Search for block rotations that bring a scaled point cloud close to (1/lambda0) Z^k.

Points are measured in lattice units (multiplied by lambda0) so the target
lattice is Z^k.  Each 2x2 block is searched over a dyadic angle grid on
[0, pi/2) (Z^2 is invariant under quarter turns), seeded with the arguments of
Gaussian integers whose norm is close to the squared block lattice step.  The
grid step is ``target / (2 r_max)`` so, by the Lipschitz bound
``|R_a v - R_b v| <= |v| |a - b|``, some grid angle is within half the target
of any exact witness angle.  Returned witnesses are re-verified at 128 bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DimensionMismatch, RotationNotFound
from .geometry import BlockRotation, apply_block_rotation
from .lattice_core import ScaledVector, nearest_lattice_point

DEFAULT_GRID_BUDGET = 1 << 16
VERIFY_MARGIN = 1e-9
VERIFY_PREC = 128
QUARTER = 0.5 * math.pi
_CHUNK = 1 << 21

STRATEGIES = ("identity", "per_block_grid", "gaussian_integer_hint")


@dataclass(frozen=True)
class RotationWitness:
    rotation: BlockRotation
    lam: int
    target: float
    achieved: float
    strategy: str
    grid_resolution: float

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "target": self.target,
            "achieved": self.achieved,
            "strategy": self.strategy,
            "grid_resolution": self.grid_resolution,
            "angles": list(self.rotation.angles),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RotationWitness":
        angles = tuple(float(a) for a in data["angles"])
        return cls(
            rotation=BlockRotation(angles, 2 * len(angles)),
            lam=int(data["lambda"]),
            target=float(data["target"]),
            achieved=float(data["achieved"]),
            strategy=data["strategy"],
            grid_resolution=float(data.get("grid_resolution", 0.0)),
        )


def lattice_distance_profile(points, lambda0: int):
    """``(max_dist, per_point)`` distances from each point to (1/lambda0) Z^k."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    z = nearest_lattice_point(pts, lambda0)
    per_point = np.linalg.norm(pts - z / lambda0, axis=1)
    return float(per_point.max()), per_point


def _block_distances(block: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """``(len(angles), n)`` distances from rotated 2-D points to Z^2."""
    c = np.cos(angles)[:, None]
    s = np.sin(angles)[:, None]
    x = c * block[:, 0] - s * block[:, 1]
    y = s * block[:, 0] + c * block[:, 1]
    dx = x - np.rint(x)
    dy = y - np.rint(y)
    return np.sqrt(dx * dx + dy * dy)


def _scan(block: np.ndarray, angles: np.ndarray, other_sq: np.ndarray) -> np.ndarray:
    """Objective ``max_i sqrt(other_sq_i + d_i(theta)^2)`` for every candidate angle."""
    out = np.empty(len(angles))
    step = max(1, _CHUNK // max(len(block), 1))
    for lo in range(0, len(angles), step):
        d = _block_distances(block, angles[lo : lo + step])
        out[lo : lo + step] = np.sqrt(other_sq[None, :] + d * d).max(axis=1)
    return out


def _grid_size(r_max: float, block_target: float, budget: int) -> int:
    """Dyadic angle count: fine enough for the Lipschitz guarantee, capped by the budget."""
    cap = 1 << max(int(budget).bit_length() - 1, 0)
    if r_max <= 0.0:
        return 1
    sigma = block_target / (2.0 * r_max)
    needed = max(1, math.ceil(QUARTER / sigma))
    return min(1 << (needed - 1).bit_length(), cap)


def gaussian_hint_angles(scale: float, window: int = 2) -> np.ndarray:
    """Arguments in [0, pi/2) of Gaussian integers a+bi with a^2+b^2 near ``scale^2``.

    Rotating ``scale * Z^2`` by such an angle lands it on ``(scale/|g|) g Z[i]``,
    which is exactly Z[i]-valued when ``scale^2 = a^2 + b^2``.
    """
    s2 = scale * scale
    lo = max(1, math.floor(s2) - window)
    hi = math.ceil(s2) + window
    angles = set()
    for m in range(lo, hi + 1):
        for a in range(1, math.isqrt(m) + 1):
            b2 = m - a * a
            b = math.isqrt(b2)
            if b * b == b2:
                angles.add(math.atan2(b, a))
    return np.array(sorted(a for a in angles if a < QUARTER), dtype=float)


_SIEVE_LIMIT = 1 << 22


def norm_obstruction(points, lambda0: int) -> float | None:
    """Lower bound on the best achievable profile over *all* block rotations.

    A block rotation preserves each point's 2-D block norm ``r``, so that block
    lands at distance at least ``|r - sqrt(m)|`` from Z^2, with ``m`` the
    nearest sum of two squares.  Returns ``None`` when the norms are too large
    to sieve.
    """
    W = np.atleast_2d(np.asarray(points, dtype=float)) * lambda0
    n, k = W.shape
    r = np.sqrt(W[:, 0::2] ** 2 + W[:, 1::2] ** 2)
    top = int(math.ceil(float(r.max()) ** 2)) + 2
    if top > _SIEVE_LIMIT:
        return None
    a = np.arange(math.isqrt(top) + 1)
    sums = (a[:, None] ** 2 + a[None, :] ** 2).ravel()
    roots = np.sqrt(np.unique(sums[sums <= top]).astype(float))
    pos = np.clip(np.searchsorted(roots, r), 1, len(roots) - 1)
    gap = np.minimum(np.abs(roots[pos] - r), np.abs(r - roots[pos - 1]))
    return float(np.sqrt((gap**2).sum(axis=1)).max()) / lambda0


def search_rotation(
    points,
    lambda0: int,
    delta: float,
    budget: int = DEFAULT_GRID_BUDGET,
    lam: int = 1,
    scale_hint: float | None = None,
    refine_sweeps: int = 3,
) -> RotationWitness:
    """Find a block rotation bringing every point within ``delta`` of (1/lambda0) Z^k.

    ``points`` are the already-scaled vectors (lambda * y_i).  ``scale_hint`` is
    the block lattice step in lattice units (``lam / sqrt(k)`` in the pipeline)
    and enables the Gaussian-integer seeds.  Raises :class:`RotationNotFound`
    carrying the best witness when nothing meets the target.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n, k = pts.shape
    if k % 2:
        raise DimensionMismatch("block rotations need an even dimension")
    W = pts * lambda0
    goal = delta * lambda0 - VERIFY_MARGIN * lambda0
    blocks = k // 2

    base = np.linalg.norm(W - np.rint(W), axis=1).max()
    if base == 0.0:
        witness = RotationWitness(BlockRotation.identity(k), lam, delta, float(base) / lambda0, "identity", 0.0)
        if verify_witness(witness, pts, lambda0):
            return witness

    floor = norm_obstruction(pts, lambda0)
    if floor is not None and floor * lambda0 > goal:
        raise RotationNotFound(
            f"block norms rule out any rotation at lambda={lam}: profile >= {floor:.6g} > {delta:.6g}",
            best=RotationWitness(BlockRotation.identity(k), lam, delta, float(base) / lambda0, "identity", 0.0),
        )

    block_target = max(goal, 0.0) / math.sqrt(blocks) if goal > 0 else delta * lambda0
    hints = gaussian_hint_angles(scale_hint) if scale_hint else np.empty(0)
    zeros = np.zeros(n)
    cands, from_hint, resolution = [], [], 0.0
    for j in range(blocks):
        B = W[:, 2 * j : 2 * j + 2]
        r_max = float(np.linalg.norm(B, axis=1).max())
        if hints.size and _scan(B, hints, zeros).min() <= 1e-10:
            angles = np.concatenate([[0.0], hints])
        else:
            m = _grid_size(r_max, block_target, budget)
            resolution = max(resolution, QUARTER / m)
            angles = np.concatenate([np.arange(m) * (QUARTER / m), hints])
        order = np.argsort(angles, kind="stable")
        angles = angles[order]
        hint_mask = (np.arange(len(order)) >= len(order) - hints.size)[order] if hints.size else np.zeros(len(order), bool)
        cands.append(angles)
        from_hint.append(hint_mask)

    dist_sq = np.zeros((n, blocks))
    choice = np.zeros(blocks, dtype=int)
    for j in range(blocks):
        B = W[:, 2 * j : 2 * j + 2]
        obj = _scan(B, cands[j], zeros)
        choice[j] = int(np.argmin(obj))
        dist_sq[:, j] = _block_distances(B, cands[j][choice[j] : choice[j] + 1])[0] ** 2

    def joint():
        return float(np.sqrt(dist_sq.sum(axis=1)).max())

    best = joint()
    for _ in range(refine_sweeps if blocks > 1 else 0):
        if best <= goal:
            break
        improved = False
        for j in range(blocks):
            B = W[:, 2 * j : 2 * j + 2]
            other = dist_sq.sum(axis=1) - dist_sq[:, j]
            obj = _scan(B, cands[j], np.maximum(other, 0.0))
            i = int(np.argmin(obj))
            if obj[i] < best - 1e-15:
                choice[j] = i
                dist_sq[:, j] = _block_distances(B, cands[j][i : i + 1])[0] ** 2
                best = joint()
                improved = True
        if not improved:
            break

    angles = tuple(float(cands[j][choice[j]]) for j in range(blocks))
    used_hint = any(bool(from_hint[j][choice[j]]) for j in range(blocks))
    rotation = BlockRotation(angles, k)
    achieved, _ = lattice_distance_profile(apply_block_rotation(rotation, pts), lambda0)
    if rotation.is_identity:
        strategy = "identity"
    else:
        strategy = "gaussian_integer_hint" if used_hint else "per_block_grid"
    witness = RotationWitness(rotation, lam, delta, achieved, strategy, resolution)
    if achieved * lambda0 <= goal and verify_witness(witness, pts, lambda0):
        return witness
    raise RotationNotFound(
        f"best block rotation reaches {achieved:.6g} > target {delta:.6g} at lambda={lam}", best=witness
    )


def witness_profile(w: RotationWitness, points, lambda0: int) -> mpmath.mpf:
    """Recompute ``max_i d(rho(v_i), (1/lambda0) Z^k)`` at 128-bit precision.

    ``points`` are either already-scaled float vectors, or unscaled exact
    :class:`ScaledVector` images that get multiplied by ``w.lam``.
    """
    with mpmath.workprec(VERIFY_PREC):
        rows = []
        for p in points:
            if isinstance(p, ScaledVector):
                div = mpmath.sqrt(p.scale_divisor_sq)
                rows.append([w.lam * mpmath.mpf(v) / div for v in p.numerators])
            else:
                rows.append([mpmath.mpf(float(v)) for v in p])
        k = w.rotation.k
        if any(len(r) != k for r in rows):
            raise DimensionMismatch("points and rotation disagree on dimension")
        trig = [(mpmath.cos(mpmath.mpf(a)), mpmath.sin(mpmath.mpf(a))) for a in w.rotation.angles]
        worst = mpmath.mpf(0)
        for r in rows:
            total = mpmath.mpf(0)
            for j, (c, s) in enumerate(trig):
                x, y = r[2 * j], r[2 * j + 1]
                u = (c * x - s * y) * lambda0
                v = (s * x + c * y) * lambda0
                total += (u - mpmath.nint(u)) ** 2 + (v - mpmath.nint(v)) ** 2
            worst = max(worst, mpmath.sqrt(total) / lambda0)
        return worst


def verify_witness(w: RotationWitness, points, lambda0: int, margin: float = VERIFY_MARGIN) -> bool:
    """Independent re-check: the recomputed profile is at most ``target - margin``."""
    if w.achieved > w.target:
        return False
    with mpmath.workprec(VERIFY_PREC):
        return bool(witness_profile(w, points, lambda0) <= mpmath.mpf(w.target) - mpmath.mpf(margin))
