"""Integer sign projections x -> (1/sqrt k) R x and their exact distortion certificates.

Sign bits come from a Philox4x64 counter-based generator keyed by the 64-bit
seed: raw 64-bit words are serialised little-endian and consumed LSB first,
row-major over R, with bit 1 meaning -1.  Only raw words are used, so a seed
gives the same matrix on every platform and numpy version.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .errors import DimensionMismatch, ProjectionNotFound, SchemaError
from .lattice_core import LatticePoint, LatticePointSet, ScaledVector, exact_matmul, int_array

SEED_MASK = 2**64 - 1
FAMILIES = ("rademacher", "hadamard", "auto")


def choose_k(n: int, epsilon, c_override: Optional[float] = None) -> int:
    """Smallest even target dimension meeting the JL bound for ``n`` points."""
    if n < 2:
        raise ValueError("n must be at least 2")
    eps = Fraction(epsilon)
    if not 0 < eps < Fraction(1, 2):
        raise ValueError("epsilon must lie in (0, 1/2)")
    with mpmath.workdps(50):
        e = mpmath.mpf(eps.numerator) / eps.denominator
        if c_override is None:
            target = 4 * mpmath.log(n) / (e**2 / 2 - e**3 / 3)
        else:
            if c_override <= 0:
                raise ValueError("c_override must be positive")
            target = mpmath.mpf(c_override) * mpmath.log(n) / e**2
        k = int(mpmath.ceil(target))
    k += k % 2
    return max(k, 2)


def _philox_bits(seed: int, count: int) -> np.ndarray:
    gen = np.random.Philox(key=int(seed) & SEED_MASK)
    words = np.asarray(gen.random_raw((count + 63) // 64), dtype=np.uint64)
    raw = words.astype("<u8").view(np.uint8)
    return np.unpackbits(raw, bitorder="little")[:count]


def _philox_words(seed: int, count: int) -> list[int]:
    gen = np.random.Philox(key=int(seed) & SEED_MASK)
    return [int(w) for w in gen.random_raw(count)]


def _sylvester(order: int) -> np.ndarray:
    h = np.ones((1, 1), dtype=np.int64)
    while h.shape[0] < order:
        h = np.block([[h, h], [h, -h]])
    return h


@dataclass(frozen=True, eq=False)
class ProjectionMatrix:
    """k x d matrix of signs; the linear map it represents is ``x -> R x / sqrt(k)``."""

    entries: np.ndarray
    k: int
    d: int
    seed: int
    attempts_used: int = 1
    family: str = "rademacher"

    def __post_init__(self):
        entries = np.array(self.entries, dtype=np.int64)
        if entries.shape != (self.k, self.d):
            raise DimensionMismatch(f"entries have shape {entries.shape}, expected {(self.k, self.d)}")
        if not np.all(np.abs(entries) == 1):
            raise ValueError("projection entries must be +1 or -1")
        if self.k < 2 or self.k % 2:
            raise ValueError("k must be a positive even integer")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __eq__(self, other):
        if not isinstance(other, ProjectionMatrix):
            return NotImplemented
        return (self.k, self.d, self.seed, self.family) == (other.k, other.d, other.seed, other.family) and bool(
            np.array_equal(self.entries, other.entries)
        )

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "seed": self.seed,
            "family": self.family,
            "attempts_used": self.attempts_used,
            "entries": self.entries.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectionMatrix":
        try:
            return cls(
                entries=np.array(data["entries"], dtype=np.int64),
                k=int(data["k"]),
                d=int(data["d"]),
                seed=int(data["seed"]),
                attempts_used=int(data.get("attempts_used", 1)),
                family=data.get("family", "rademacher"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad projection matrix: {exc}") from exc


def sample_projection(d: int, k: int, seed: int) -> ProjectionMatrix:
    """i.i.d. uniform signs from the seeded Philox stream."""
    if d < 1 or k < 2 or k % 2:
        raise ValueError("need d >= 1 and even k >= 2")
    bits = _philox_bits(seed, k * d).astype(np.int64)
    return ProjectionMatrix(1 - 2 * bits.reshape(k, d), k, d, int(seed) & SEED_MASK)


def hadamard_order(d: int) -> int:
    return 1 << max(d - 1, 0).bit_length()


def sample_hadamard_projection(d: int, k: int, seed: int) -> ProjectionMatrix:
    """Sign matrix with mutually orthogonal columns (R^T R = k I), so ``x -> Rx/sqrt k`` is an isometry.

    Stacks ``k / P`` copies of ``d`` randomly chosen columns of the Sylvester
    Hadamard matrix of order ``P >= d`` with independent random row and column
    signs.  Requires ``P`` to divide ``k``.
    """
    order = hadamard_order(d)
    if d > k or k % order:
        raise ValueError(f"no orthogonal-column sign matrix for d={d}, k={k}: k must be a multiple of {order}")
    words = _philox_words(seed, order + 2)
    cols = list(range(order))
    for i in range(order - 1, 0, -1):
        j = words[i] % (i + 1)
        cols[i], cols[j] = cols[j], cols[i]
    block = _sylvester(order)[:, cols[:d]]
    stacked = np.vstack([block] * (k // order))
    bits = _philox_bits((int(seed) + 0x9E3779B97F4A7C15) & SEED_MASK, k + d).astype(np.int64)
    row_signs, col_signs = 1 - 2 * bits[:k], 1 - 2 * bits[k:]
    entries = row_signs[:, None] * stacked * col_signs[None, :]
    return ProjectionMatrix(entries, k, d, int(seed) & SEED_MASK, family="hadamard")


def apply_projection(R: ProjectionMatrix, x: LatticePoint) -> ScaledVector:
    """Exact image ``R x / sqrt(k)`` as numerators over ``x.denominator * sqrt(k)``."""
    if x.dim != R.d:
        raise DimensionMismatch(f"point has dimension {x.dim}, projection expects {R.d}")
    nums = exact_matmul(R.entries, int_array([[v] for v in x.numerators]))
    return ScaledVector(tuple(int(v) for v in nums.ravel()), x.denominator, R.k)


def project_set(R: ProjectionMatrix, S: LatticePointSet) -> list[ScaledVector]:
    if S.dim != R.d:
        raise DimensionMismatch(f"point set has dimension {S.dim}, projection expects {R.d}")
    images = exact_matmul(S.numerator_matrix(), R.entries.T)
    return [ScaledVector(tuple(int(v) for v in row), S.lambda0, R.k) for row in images]


@dataclass(frozen=True)
class JlCertificate:
    """Exact pairwise ratio extremes of a projection on one point set."""

    epsilon: Fraction
    worst_low_ratio: float
    worst_high_ratio: float
    worst_pair: tuple
    passed: bool
    min_ratio_sq: Fraction = field(default=Fraction(1))
    max_ratio_sq: Fraction = field(default=Fraction(1))
    low_pair: tuple = (0, 1)
    high_pair: tuple = (0, 1)
    pair_ratio_sq: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "epsilon": str(self.epsilon),
            "worst_low_ratio": self.worst_low_ratio,
            "worst_high_ratio": self.worst_high_ratio,
            "min_ratio_sq": str(self.min_ratio_sq),
            "max_ratio_sq": str(self.max_ratio_sq),
            "worst_pair": list(self.worst_pair),
            "passed": self.passed,
        }


def pair_ratio_squares(R: ProjectionMatrix, S: LatticePointSet) -> dict:
    """``{(i, j): ||Phi x_i - Phi x_j||^2 / ||x_i - x_j||^2}`` as exact Fractions."""
    X = S.numerator_matrix()
    n = len(S)
    iu, ju = np.triu_indices(n, 1)
    diffs = X[iu] - X[ju]
    img = exact_matmul(diffs, R.entries.T)
    num = (img.astype(object) ** 2).sum(axis=1)
    den = (diffs.astype(object) ** 2).sum(axis=1)
    return {
        (int(i), int(j)): Fraction(int(a), R.k * int(b)) for i, j, a, b in zip(iu, ju, num, den)
    }


def certify_jl(R: ProjectionMatrix, S: LatticePointSet, epsilon) -> JlCertificate:
    """Check ``(1-eps) <= ratio <= (1+eps)`` for every pair, comparing exact squares."""
    if len(S) < 2:
        raise ValueError("need at least two points")
    eps = Fraction(epsilon)
    ratios = pair_ratio_squares(R, S)
    low_pair = min(ratios, key=ratios.__getitem__)
    high_pair = max(ratios, key=ratios.__getitem__)
    lo, hi = ratios[low_pair], ratios[high_pair]
    passed = (1 - eps) ** 2 <= lo and hi <= (1 + eps) ** 2 and eps < 1
    low_ratio, high_ratio = math.sqrt(lo), math.sqrt(hi)
    worst = low_pair if 1 - low_ratio >= high_ratio - 1 else high_pair
    return JlCertificate(
        epsilon=eps,
        worst_low_ratio=low_ratio,
        worst_high_ratio=high_ratio,
        worst_pair=worst,
        passed=passed,
        min_ratio_sq=lo,
        max_ratio_sq=hi,
        low_pair=low_pair,
        high_pair=high_pair,
        pair_ratio_sq=ratios,
    )


def find_good_projection(
    S: LatticePointSet,
    k: int,
    epsilon,
    max_attempts: int = 64,
    seed: int = 0,
    family: str = "rademacher",
) -> tuple[ProjectionMatrix, JlCertificate]:
    """Resample with seeds ``seed, seed+1, ...`` until the certificate passes.

    ``family="hadamard"`` uses orthogonal-column signs (exact isometry, needs
    ``d <= k``); ``"auto"`` tries Rademacher first and falls back to it.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    if family not in FAMILIES:
        raise ValueError(f"unknown projection family {family!r}")
    if family in ("rademacher", "auto"):
        for attempt in range(max_attempts):
            R = sample_projection(S.dim, k, (seed + attempt) & SEED_MASK)
            cert = certify_jl(R, S, epsilon)
            if cert.passed:
                return replace(R, attempts_used=attempt + 1), cert
        if family == "rademacher":
            raise ProjectionNotFound(
                f"no sign matrix with distortion {epsilon} in {max_attempts} attempts (k={k}, n={len(S)})"
            )
    try:
        R = sample_hadamard_projection(S.dim, k, seed)
    except ValueError as exc:
        raise ProjectionNotFound(str(exc)) from exc
    cert = certify_jl(R, S, epsilon)
    if not cert.passed:
        raise ProjectionNotFound("orthogonal-column projection failed certification")
    attempts = 1 if family == "hadamard" else max_attempts + 1
    return replace(R, attempts_used=attempts), cert
