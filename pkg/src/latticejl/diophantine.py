"""Continued fractions of quadratic surds and scaling factors n with |n t - p| small.

All decisions are exact: partial quotients come from integer arithmetic on
``(P + sqrt D) / Q`` and the acceptance test ``|n t - p| < bound`` is settled
by comparing squares.  A 128-bit interval evaluation re-verifies every witness
independently and rejects it if the interval straddles the bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath
from mpmath import iv

from .errors import MembershipViolation, SchemaError
from .lattice_core import ScaledVector, is_perfect_square, round_half_away

VERIFY_PREC = 128


@dataclass(frozen=True)
class RationalValue:
    num: int
    den: int

    def __post_init__(self):
        if self.den == 0:
            raise ZeroDivisionError("zero denominator")
        f = Fraction(self.num, self.den)
        object.__setattr__(self, "num", f.numerator)
        object.__setattr__(self, "den", f.denominator)


@dataclass(frozen=True)
class InvSqrt:
    """The number 1/sqrt(k)."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")


@dataclass(frozen=True)
class Sqrt:
    """The number sqrt(k)."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")


Value = Union[RationalValue, InvSqrt, Sqrt]


def _normalize(t: Value):
    """``('rational', Fraction)`` or ``('surd', P, D, Q)`` meaning ``(P + sqrt D) / Q`` with ``Q | D - P^2``."""
    if isinstance(t, RationalValue):
        return ("rational", Fraction(t.num, t.den))
    if isinstance(t, (InvSqrt, Sqrt)) and is_perfect_square(t.k):
        s = math.isqrt(t.k)
        return ("rational", Fraction(1, s) if isinstance(t, InvSqrt) else Fraction(s))
    if isinstance(t, InvSqrt):
        return ("surd", 0, t.k, t.k)
    if isinstance(t, Sqrt):
        return ("surd", 0, t.k, 1)
    raise TypeError(f"unsupported value descriptor {t!r}")


def value_to_dict(t: Value) -> dict:
    if isinstance(t, InvSqrt):
        return {"kind": "inv_sqrt", "k": t.k}
    if isinstance(t, Sqrt):
        return {"kind": "sqrt", "k": t.k}
    return {"kind": "rational", "num": t.num, "den": t.den}


def value_from_dict(data: dict) -> Value:
    kind = data.get("kind")
    if kind == "inv_sqrt":
        return InvSqrt(int(data["k"]))
    if kind == "sqrt":
        return Sqrt(int(data["k"]))
    if kind == "rational":
        return RationalValue(int(data["num"]), int(data["den"]))
    raise SchemaError(f"unknown value kind {kind!r}")


def _iv_value(t: Value):
    norm = _normalize(t)
    if norm[0] == "rational":
        f = norm[1]
        return iv.mpf(f.numerator) / f.denominator
    _, P, D, Q = norm
    return (P + iv.sqrt(D)) / Q


def _mp_value(t: Value):
    norm = _normalize(t)
    if norm[0] == "rational":
        return mpmath.mpf(norm[1].numerator) / norm[1].denominator
    _, P, D, Q = norm
    return (P + mpmath.sqrt(D)) / Q


def _floor_surd(P: int, D: int, Q: int) -> int:
    """floor((P + sqrt D) / Q) for non-square D."""
    s = math.isqrt(D)
    if Q > 0:
        return (P + s) // Q
    return -((P + s) // -Q) - 1


def _sign_surd(A: int, B: int, D: int) -> int:
    """Sign of A + B sqrt(D) for D >= 0."""
    if B == 0 or D == 0:
        return (A > 0) - (A < 0)
    if A >= 0 and B >= 0:
        return 1 if (A or B) else 0
    if A <= 0 and B <= 0:
        return -1
    lhs, rhs = A * A, B * B * D
    if A > 0:
        return (lhs > rhs) - (lhs < rhs)
    return (rhs > lhs) - (rhs < lhs)


@dataclass(frozen=True)
class ContinuedFraction:
    value: Value
    partial_quotients: tuple
    convergents: tuple
    terminated: bool = False
    period_start: int | None = None
    period_length: int | None = None


def continued_fraction(t: Value, depth: int) -> ContinuedFraction:
    """First ``depth`` partial quotients of ``t`` (fewer if ``t`` is rational)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    norm = _normalize(t)
    quotients: list[int] = []
    period_start = period_length = None
    terminated = False
    if norm[0] == "rational":
        x = norm[1]
        while len(quotients) < depth:
            a = math.floor(x)
            quotients.append(a)
            frac = x - a
            if frac == 0:
                terminated = True
                break
            x = 1 / frac
    else:
        _, P, D, Q = norm
        seen: dict = {}
        while len(quotients) < depth:
            state = (P, Q)
            if period_start is None and state in seen:
                period_start = seen[state]
                period_length = len(quotients) - period_start
            seen.setdefault(state, len(quotients))
            a = _floor_surd(P, D, Q)
            quotients.append(a)
            P = a * Q - P
            Q = (D - P * P) // Q
        if period_start is None:
            # keep stepping the state machine (without storing quotients) to find the period
            for _ in range(4 * D + 8):
                state = (P, Q)
                if state in seen:
                    period_start = seen[state]
                    period_length = len(seen) - period_start
                    break
                seen[state] = len(seen)
                a = _floor_surd(P, D, Q)
                P = a * Q - P
                Q = (D - P * P) // Q
    return ContinuedFraction(
        value=t,
        partial_quotients=tuple(quotients),
        convergents=tuple(convergents_from_quotients(quotients)),
        terminated=terminated,
        period_start=period_start,
        period_length=period_length,
    )


def convergents_from_quotients(quotients) -> list[tuple[int, int]]:
    out = []
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def check_convergent_bounds(cf: ContinuedFraction) -> bool:
    """Interval-arithmetic check of ``|q_m t - p_m| < 1/q_{m+1}`` and ``|t - p_m/q_m| < 1/q_m^2``."""
    old = iv.prec
    iv.prec = VERIFY_PREC
    try:
        t = _iv_value(cf.value)
        conv = cf.convergents
        for m, (p, q) in enumerate(conv):
            err = abs(q * t - p)
            if m + 1 < len(conv):
                if not (err < iv.mpf(1) / conv[m + 1][1]) is True:
                    return False
            exact_hit = cf.terminated and m == len(conv) - 1
            if not exact_hit and m > 0 and (abs(t - iv.mpf(p) / q) < iv.mpf(1) / (q * q)) is not True:
                return False
        return True
    finally:
        iv.prec = old


@dataclass(frozen=True)
class ScalingWitness:
    """Integers ``(n1, p)`` with ``|n1 t - p| < bound``."""

    n1: int
    p: int
    t: Value
    bound: Fraction
    achieved: mpmath.mpf

    def to_dict(self) -> dict:
        return {
            "t": value_to_dict(self.t),
            "n1": self.n1,
            "p": self.p,
            "bound": str(self.bound),
            "achieved": mpmath.nstr(self.achieved, 40, min_fixed=-50, max_fixed=50),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalingWitness":
        try:
            with mpmath.workprec(VERIFY_PREC):
                achieved = mpmath.mpf(data["achieved"])
            return cls(
                n1=int(data["n1"]),
                p=int(data["p"]),
                t=value_from_dict(data["t"]),
                bound=Fraction(data["bound"]),
                achieved=achieved,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad scaling witness: {exc}") from exc


def verify_scaling_witness(w: ScalingWitness) -> bool:
    """True iff ``|n1 t - p| < bound`` holds with certainty in 128-bit interval arithmetic."""
    old = iv.prec
    iv.prec = VERIFY_PREC
    try:
        err = abs(w.n1 * _iv_value(w.t) - w.p)
        bound = iv.mpf(w.bound.numerator) / w.bound.denominator
        return (err < bound) is True
    finally:
        iv.prec = old


def _nearest_multiple(n: int, norm) -> int:
    """Integer nearest to ``n t`` (ties away from zero)."""
    if norm[0] == "rational":
        return round_half_away(n * norm[1])
    _, P, D, Q = norm
    # n t = (nP + sqrt(n^2 D)) / Q; round(x) = floor(x + 1/2) = floor((2nP + Q + sqrt(4 n^2 D)) / 2Q)
    return _floor_surd(2 * n * P + Q, 4 * n * n * D, 2 * Q)


def _within(n: int, p: int, norm, bound: Fraction) -> bool:
    """Exact test of ``|n t - p| < bound`` for a surd ``t``."""
    _, P, D, Q = norm
    b_num, b_den = bound.numerator, bound.denominator
    sq = 1 if Q > 0 else -1
    # n t - p - bound = (b_den (nP - pQ) - b_num Q + b_den n sqrt D) / (Q b_den)
    base = b_den * (n * P - p * Q)
    upper = _sign_surd(base - b_num * Q, b_den * n, D) * sq
    lower = _sign_surd(base + b_num * Q, b_den * n, D) * sq
    return upper < 0 and lower > 0


def _surd_quotients(norm):
    _, P, D, Q = norm
    while True:
        a = _floor_surd(P, D, Q)
        yield a
        P = a * Q - P
        Q = (D - P * P) // Q


def _candidate_denominators(norm):
    """Convergent denominators q_m, each preceded by the intermediate q_{m-2} + j q_{m-1}; ascending."""
    q_prev2, q_prev1 = 1, 0
    for m, a in enumerate(_surd_quotients(norm)):
        if m == 0:
            yield 1
        else:
            for j in range(1, a + 1):
                yield q_prev2 + j * q_prev1
        q_prev2, q_prev1 = q_prev1, a * q_prev1 + q_prev2


def find_scaling(t: Value, epsilon, N=1, max_candidates: int = 100_000) -> ScalingWitness:
    """Smallest ``n1 >= 1`` with ``|n1 t - p| < epsilon / N`` for the nearest integer ``p``.

    For rational ``t = a/b`` the exact landing ``(n1, p) = (b, a)`` is returned.
    """
    bound = Fraction(epsilon) / Fraction(N)
    if not 0 < bound < 1:
        raise ValueError(f"bound epsilon/N = {bound} must lie in (0, 1)")
    norm = _normalize(t)
    if norm[0] == "rational":
        f = norm[1]
        return ScalingWitness(f.denominator, f.numerator, t, bound, mpmath.mpf(0))
    seen = set()
    for count, n in enumerate(_candidate_denominators(norm)):
        if count > max_candidates:
            break
        if n in seen:
            continue
        seen.add(n)
        p = _nearest_multiple(n, norm)
        if not _within(n, p, norm, bound):
            continue
        with mpmath.workprec(VERIFY_PREC):
            achieved = abs(n * _mp_value(t) - p)
        witness = ScalingWitness(n, p, t, bound, achieved)
        if verify_scaling_witness(witness):
            return witness
    raise RuntimeError(f"no scaling witness among {max_candidates} candidates")


def scaling_lattice_distance(points, n1: int, t: Value | None = None) -> float:
    """Largest distance from ``n1 * point`` to Z^k over ``points``.

    With ``t`` given, every point must lie exactly on ``t Z^k``.
    """
    with mpmath.workprec(VERIFY_PREC):
        worst = mpmath.mpf(0)
        for i, pt in enumerate(points):
            if not isinstance(pt, ScaledVector):
                pt = ScaledVector(tuple(pt), 1)
            if t is not None and not _on_t_lattice(pt, t):
                raise MembershipViolation(f"point {i} is not on the lattice t Z^k")
            div = mpmath.sqrt(pt.scale_divisor_sq)
            total = mpmath.mpf(0)
            for v in pt.numerators:
                x = n1 * v / div
                total += (x - mpmath.nint(x)) ** 2
            worst = max(worst, mpmath.sqrt(total))
        return float(worst)


def _on_t_lattice(pt: ScaledVector, t: Value) -> bool:
    norm = _normalize(t)
    root = None
    if pt.sqrt_k is not None:
        root = math.isqrt(pt.sqrt_k) if is_perfect_square(pt.sqrt_k) else None
    if norm[0] == "surd":
        # t = (P + sqrt D)/Q; only t = 1/sqrt(k) (or sqrt k) is a meaningful lattice step here
        _, P, D, Q = norm
        if P != 0 or pt.sqrt_k != D:
            return False
        # value / t = nums / (den sqrt k) * Q / sqrt k = nums * Q / (den * k)
        return all((v * Q) % (pt.denominator * D) == 0 for v in pt.numerators)
    f = norm[1]
    if pt.sqrt_k is not None and root is None:
        return all(v == 0 for v in pt.numerators)
    den = pt.denominator * (root or 1)
    return all((v * f.denominator) % (den * f.numerator) == 0 for v in pt.numerators)
