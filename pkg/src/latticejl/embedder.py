"""End-to-end embedding of a lattice point set into (1/lambda0) Z^k with certified distortion.

Stages: sign projection, lattice-snapped centring, per-lambda block rotation,
rounding, exact certification.  The map sends ``lambda * x_i`` to
``z_i / lambda0``; the certificate compares every pair against
``1 +- (eps + eps / (lambda lambda0))`` on exact squared ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from .diophantine import InvSqrt, ScalingWitness, find_scaling
from .errors import (
    CertificationFailed,
    DuplicateOutput,
    EpsilonOutOfRange,
    InjectivityViolation,
    LambdaSearchExhausted,
    RotationNotFound,
    SchemaError,
)
from .geometry import BlockRotation, SnappedCenter, apply_block_rotation, minimal_enclosing_ball, snap_center_to_lattice
from .jl_projection import (
    JlCertificate,
    ProjectionMatrix,
    certify_jl,
    choose_k,
    find_good_projection,
    project_set,
)
from .lattice_core import (
    LatticeParams,
    LatticePointSet,
    ScaledVector,
    is_perfect_square,
    nearest_lattice_point,
)
from .rotation_search import DEFAULT_GRID_BUDGET, RotationWitness, search_rotation, verify_witness


@dataclass(frozen=True)
class EmbedConfig:
    epsilon: Fraction
    k: Optional[int] = None
    c_override: Optional[float] = None
    seed: int = 0
    max_attempts: int = 64
    grid_budget: int = DEFAULT_GRID_BUDGET
    max_lambda: int = 256
    projection: str = "rademacher"
    meb_tol: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        if self.k is not None and (self.k < 2 or self.k % 2):
            raise ValueError(
                f"k={self.k} is not a positive even integer; block rotations need even dimension"
            )


@dataclass(frozen=True)
class DistortionReport:
    lower_bound: Fraction
    upper_bound: Fraction
    min_ratio: float
    max_ratio: float
    min_ratio_sq: Fraction
    max_ratio_sq: Fraction
    worst_pairs: tuple
    passed: bool
    margin: float
    max_rounding: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "lower_bound": str(self.lower_bound),
            "upper_bound": str(self.upper_bound),
            "min_ratio": _decimal_sqrt(self.min_ratio_sq),
            "max_ratio": _decimal_sqrt(self.max_ratio_sq),
            "worst_pairs": [list(p) for p in self.worst_pairs],
            "passed": self.passed,
            "margin": repr(self.margin),
        }
        if self.max_rounding is not None:
            out["max_rounding"] = repr(self.max_rounding)
        return out


def _decimal_sqrt(x: Fraction) -> str:
    with mpmath.workdps(30):
        return mpmath.nstr(mpmath.sqrt(mpmath.mpf(x.numerator) / x.denominator), 25)


@dataclass(frozen=True)
class EmbeddingResult:
    input: LatticePointSet
    lam: int
    epsilon: Fraction
    projection: ProjectionMatrix
    jl_certificate: JlCertificate
    center: ScaledVector
    rotation_witness: RotationWitness
    outputs: tuple
    k: int
    provenance: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "input": self.input.to_dict(),
            "epsilon": str(self.epsilon),
            "lambda": self.lam,
            "k": self.k,
            "projection": self.projection.to_dict(),
            "jl_certificate": self.jl_certificate.to_dict(),
            "center": {
                "numerators": list(self.center.numerators),
                "denominator": self.center.denominator,
                "sqrt_k": self.center.sqrt_k,
            },
            "rotation_witness": self.rotation_witness.to_dict(),
            "provenance": self.provenance,
            "outputs": [list(z) for z in self.outputs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EmbeddingResult":
        try:
            S = LatticePointSet.from_dict(data["input"])
            eps = Fraction(data["epsilon"])
            R = ProjectionMatrix.from_dict(data["projection"])
            c = data["center"]
            outputs = tuple(tuple(int(v) for v in z) for z in data["outputs"])
            if any(not isinstance(v, int) for z in data["outputs"] for v in z):
                raise SchemaError("outputs must be integers")
            return cls(
                input=S,
                lam=int(data["lambda"]),
                epsilon=eps,
                projection=R,
                jl_certificate=certify_jl(R, S, eps),
                center=ScaledVector(tuple(c["numerators"]), int(c["denominator"]), c.get("sqrt_k")),
                rotation_witness=RotationWitness.from_dict(data["rotation_witness"]),
                outputs=outputs,
                k=int(data["k"]),
                provenance=dict(data.get("provenance", {})),
            )
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"bad embedding result: {exc}") from exc


def eq1_bounds(epsilon, lam: int, lambda0: int) -> tuple[Fraction, Fraction]:
    """``(1 - eps - eps/(lam lambda0), 1 + eps + eps/(lam lambda0))``."""
    eps = Fraction(epsilon)
    extra = eps / (lam * lambda0)
    return 1 - eps - extra, 1 + eps + extra


def injectivity_floor(lambda0: int, epsilon) -> Fraction:
    """``1/lambda0 - eps (1 + 1/lambda0)``: lower bound on ``||z_i - z_j|| / (lam lambda0)``."""
    eps = Fraction(epsilon)
    if not 0 < eps < Fraction(1, lambda0 + 1):
        raise EpsilonOutOfRange(f"epsilon={eps} must lie strictly inside (0, 1/{lambda0 + 1})")
    return Fraction(1, lambda0) - eps * (1 + Fraction(1, lambda0))


def distortion_report(
    S: LatticePointSet, outputs, lam: int, epsilon, allow_duplicates: bool = False
) -> DistortionReport:
    """Exact pairwise ratios ``||z_i - z_j|| / lambda0`` over ``||lam x_i - lam x_j||``."""
    lower, upper = eq1_bounds(epsilon, lam, S.lambda0)
    Z = [tuple(int(v) for v in z) for z in outputs]
    if len(Z) != len(S):
        raise SchemaError(f"{len(Z)} outputs for {len(S)} inputs")
    X = [p.numerators for p in S.points]
    ratios = {}
    for i in range(len(X)):
        for j in range(i + 1, len(X)):
            dz = sum((a - b) ** 2 for a, b in zip(Z[i], Z[j]))
            if dz == 0 and not allow_duplicates:
                raise DuplicateOutput(f"outputs {i} and {j} coincide", pair=(i, j))
            dx = sum((a - b) ** 2 for a, b in zip(X[i], X[j]))
            # (|dz| / lambda0)^2 / (lam^2 |dx|^2 / lambda0^2)
            ratios[(i, j)] = Fraction(dz, lam * lam * dx)
    lo2, hi2 = lower * lower, upper * upper
    low_pair = min(ratios, key=ratios.__getitem__)
    high_pair = max(ratios, key=ratios.__getitem__)
    mn, mx = ratios[low_pair], ratios[high_pair]
    passed = lo2 <= mn and mx <= hi2
    if passed:
        worst = (low_pair, high_pair)
    else:
        bad = [(p, r) for p, r in ratios.items() if r < lo2 or r > hi2]
        bad.sort(key=lambda pr: -max(float(lo2 - pr[1]) / float(lo2), float(pr[1] - hi2) / float(hi2)))
        worst = tuple(p for p, _ in bad)
    min_ratio, max_ratio = math.sqrt(mn), math.sqrt(mx)
    margin = min(min_ratio - float(lower), float(upper) - max_ratio)
    return DistortionReport(lower, upper, min_ratio, max_ratio, mn, mx, worst, passed, margin)


def certify(result: EmbeddingResult) -> DistortionReport:
    """Recompute the distortion from the stored inputs and outputs only."""
    return distortion_report(result.input, result.outputs, result.lam, result.epsilon)


@dataclass(frozen=True)
class Prepared:
    """Lambda-independent stages: projection, certificate and snapped centring."""

    points: LatticePointSet
    params: LatticeParams
    k: int
    projection: ProjectionMatrix
    jl_certificate: JlCertificate
    snapped: SnappedCenter
    centered: tuple
    centered_norm: float


def prepare(S: LatticePointSet, config: EmbedConfig, projection: ProjectionMatrix | None = None) -> Prepared:
    params = LatticeParams(S.lambda0, S.dim, S.bound, config.epsilon)
    if projection is None:
        k = config.k if config.k is not None else choose_k(len(S), config.epsilon, config.c_override)
        projection, cert = find_good_projection(
            S, k, config.epsilon, config.max_attempts, config.seed, config.projection
        )
    else:
        k = projection.k
        cert = certify_jl(projection, S, config.epsilon)
    images = project_set(projection, S)
    ball = minimal_enclosing_ball(np.array([y.to_float() for y in images]), config.meb_tol)
    snapped = snap_center_to_lattice(ball, S.lambda0, k)
    centered = tuple(y - snapped.center for y in images)
    top = max(y.sq_norm() for y in centered)
    return Prepared(S, params, k, projection, cert, snapped, centered, math.sqrt(top))


def rotation_target(prep: Prepared, lam: int) -> float:
    """Per-point rounding budget for this lambda.

    ``min(eps/lambda0, eps/2)`` further capped so that rounding cannot push any
    pair outside the final bounds given its certified projection ratio.
    """
    S = prep.points
    eps = prep.params.epsilon
    lower, upper = eq1_bounds(eps, lam, S.lambda0)
    X = [p.numerators for p in S.points]
    cap = min(float(eps) / S.lambda0, float(eps) / 2)
    for (i, j), r2 in prep.jl_certificate.pair_ratio_sq.items():
        r = math.sqrt(r2)
        slack = min(float(upper) - r, r - float(lower))
        dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(X[i], X[j]))) / S.lambda0
        cap = min(cap, lam * dist * slack / 2)
    return cap * (1 - 1e-9)


def _fast_path(k: int, lam: int) -> bool:
    return is_perfect_square(k) and lam % math.isqrt(k) == 0


def realize(centered, lam: int, lambda0: int, rotation: BlockRotation) -> list[tuple]:
    """Round ``rho(lam * y_i)`` to (1/lambda0) Z^k; exact integer arithmetic on the fast path."""
    k = rotation.k
    if rotation.is_identity and _fast_path(k, lam):
        factor = lam // math.isqrt(k)
        # lam * q / (lambda0 sqrt k) = (factor q) / lambda0 exactly
        return [tuple(factor * v for v in y.numerators) for y in centered]
    pts = lam * np.array([y.to_float() for y in centered])
    rotated = apply_block_rotation(rotation, pts)
    return [tuple(int(v) for v in row) for row in nearest_lattice_point(rotated, lambda0)]


def _rotate(prep: Prepared, lam: int, budget: int) -> RotationWitness:
    k, lambda0 = prep.k, prep.points.lambda0
    if _fast_path(k, lam):
        return RotationWitness(BlockRotation.identity(k), lam, 0.0, 0.0, "identity", 0.0)
    delta = rotation_target(prep, lam)
    pts = lam * np.array([y.to_float() for y in prep.centered])
    witness = search_rotation(pts, lambda0, delta, budget, lam=lam, scale_hint=lam / math.sqrt(k))
    if not verify_witness(witness, list(prep.centered), lambda0):
        raise RotationNotFound("witness failed exact-input re-verification", best=witness)
    return witness


def embed_prepared(prep: Prepared, lam: int, budget: int = DEFAULT_GRID_BUDGET) -> EmbeddingResult:
    """Rotate, round and certify at one ``lam`` reusing the lambda-independent stages."""
    S = prep.points
    witness = _rotate(prep, lam, budget)
    outputs = realize(prep.centered, lam, S.lambda0, witness.rotation)
    if len(set(outputs)) != len(outputs):
        raise InjectivityViolation(f"two inputs share an output at lambda={lam}")
    result = EmbeddingResult(
        input=S,
        lam=lam,
        epsilon=prep.params.epsilon,
        projection=prep.projection,
        jl_certificate=prep.jl_certificate,
        center=prep.snapped.center,
        rotation_witness=witness,
        outputs=tuple(outputs),
        k=prep.k,
        provenance={"centered_norm": prep.centered_norm, "norm_bound": prep.snapped.bound},
    )
    report = certify(result)
    if not report.passed:
        raise CertificationFailed(f"distortion outside bounds at lambda={lam}", report=report)
    return result


def embed(S: LatticePointSet, lam: int, config: EmbedConfig, projection: ProjectionMatrix | None = None) -> EmbeddingResult:
    """Embed ``lam * S`` into (1/lambda0) Z^k and certify it, or raise."""
    if lam < 1:
        raise ValueError("lambda must be a positive integer")
    prep = prepare(S, config, projection)
    return embed_prepared(prep, lam, config.grid_budget)


def scaling_seed(prep: Prepared, lambda0: int) -> ScalingWitness | None:
    """Diophantine witness n1 for t = 1/sqrt(k): lam = n1 puts the centred cloud near the lattice unrotated."""
    k = prep.k
    if is_perfect_square(k):
        return find_scaling(InvSqrt(k), Fraction(1, 2))
    eps = prep.params.epsilon
    delta = min(Fraction(eps) / lambda0, Fraction(eps) / 2)
    spread = max(prep.centered_norm, 1.0 / (lambda0 * math.sqrt(k)))
    # |n1 t - p| < delta / (sqrt(k) N) keeps every centred point within delta
    bound = delta / Fraction(math.sqrt(k) * spread * (1 + 1e-12))
    if not 0 < bound < 1:
        return None
    return find_scaling(InvSqrt(k), bound)


def search_lambda(S: LatticePointSet, config: EmbedConfig, projection: ProjectionMatrix | None = None):
    """Smallest ``lam <= config.max_lambda`` whose embedding certifies, with that embedding."""
    prep = prepare(S, config, projection)
    seed = scaling_seed(prep, S.lambda0)
    seeded = set()
    if seed is not None:
        seeded = set(range(seed.n1, config.max_lambda + 1, seed.n1))
    last_error = None
    for lam in range(1, config.max_lambda + 1):
        try:
            result = embed_prepared(prep, lam, config.grid_budget)
        except (RotationNotFound, CertificationFailed, InjectivityViolation) as exc:
            last_error = exc
            continue
        if seed is not None:
            result.provenance["scaling_witness"] = seed.to_dict()
        result.provenance["lambda_from_scaling_seed"] = lam in seeded
        return lam, result
    raise LambdaSearchExhausted(
        f"no lambda <= {config.max_lambda} certified (last: {last_error})"
    )


def naive_baseline(S: LatticePointSet, R: ProjectionMatrix, lam: int, epsilon) -> DistortionReport:
    """Round ``lam * Phi(x_i)`` straight to (1/lambda0) Z^k with no centring or rotation."""
    images = project_set(R, S)
    pts = lam * np.array([y.to_float() for y in images])
    z = nearest_lattice_point(pts, S.lambda0)
    rounding = float(np.linalg.norm(pts - z / S.lambda0, axis=1).max())
    report = distortion_report(S, [tuple(int(v) for v in row) for row in z], lam, epsilon, allow_duplicates=True)
    return DistortionReport(**{**report.__dict__, "max_rounding": rounding})
