import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticejl.errors import (
    BoundViolation,
    DimensionMismatch,
    DuplicatePoint,
    EpsilonOutOfRange,
    InfeasibleInstance,
    SchemaError,
)
from latticejl.lattice_core import (
    LatticeParams,
    LatticePoint,
    LatticePointSet,
    ScaledVector,
    exact_pairwise_sq_distances,
    is_lattice_member,
    lattice_ball_size,
    nearest_lattice_point,
    round_half_away,
    sample_point_set,
)


def brute_nearest(v, lambda0, radius=3):
    best = None
    for z in itertools.product(range(-radius, radius + 1), repeat=len(v)):
        d = sum((a - b / lambda0) ** 2 for a, b in zip(v, z))
        if best is None or d < best[0] - 1e-15:
            best = (d, z)
    return best[1]


class TestParams:
    def test_valid(self):
        p = LatticeParams(2, 8, 4, Fraction(1, 4))
        assert p.epsilon == Fraction(1, 4)

    @pytest.mark.parametrize("eps", [Fraction(1, 3), Fraction(1, 2), Fraction(0), Fraction(-1, 10)])
    def test_epsilon_out_of_range(self, eps):
        with pytest.raises(EpsilonOutOfRange):
            LatticeParams(2, 8, 4, eps)

    def test_rejects_nonpositive_ints(self):
        with pytest.raises(ValueError):
            LatticeParams(0, 8, 4, Fraction(1, 4))
        with pytest.raises(ValueError):
            LatticeParams(2, 8, -1, Fraction(1, 4))


class TestMembership:
    def test_examples(self):
        assert is_lattice_member([Fraction(1, 2), Fraction(1)], 2)
        assert not is_lattice_member([Fraction(3, 10), Fraction(1)], 2)
        assert is_lattice_member([Fraction(3, 10), Fraction(1)], 2, tol=0.45)
        assert not is_lattice_member([Fraction(3, 10), Fraction(1)], 2, tol=0.35)

    def test_float_input(self):
        assert is_lattice_member(np.array([0.5, 1.0]), 2)
        assert not is_lattice_member(np.array([0.3, 1.0]), 2)

    def test_scaled_vector(self):
        # (2, 4) / (2 sqrt 4) = (0.5, 1)
        assert is_lattice_member(ScaledVector((2, 4), 2, 4), 2)
        assert not is_lattice_member(ScaledVector((1, 0), 1, 2), 5)
        assert is_lattice_member(ScaledVector((0, 0), 1, 2), 5)

    def test_negative_tol(self):
        with pytest.raises(ValueError):
            is_lattice_member([Fraction(1)], 1, tol=-1)


class TestNearest:
    def test_against_brute_force(self):
        z = nearest_lattice_point(np.array([0.3, -0.8]), 2)
        assert tuple(z) == (1, -2) == brute_nearest((0.3, -0.8), 2)

    def test_lattice_member_is_fixed(self):
        v = np.array([0.5, 1.0])
        z = nearest_lattice_point(v, 2)
        assert tuple(z) == (1, 2)
        assert np.linalg.norm(v - z / 2) == 0.0

    def test_tie_away_from_zero(self):
        assert tuple(nearest_lattice_point(np.array([0.5]), 1)) == (1,)
        assert tuple(nearest_lattice_point(np.array([-0.5]), 1)) == (-1,)
        assert tuple(nearest_lattice_point([Fraction(-3, 2)], 1)) == (-2,)

    def test_round_half_away(self):
        assert round_half_away(Fraction(5, 2)) == 3
        assert round_half_away(Fraction(-5, 2)) == -3
        assert round_half_away(2.5) == 3
        assert round_half_away(-0.49) == 0

    def test_rowwise(self):
        z = nearest_lattice_point(np.array([[0.3, -0.8], [1.26, 0.0]]), 2)
        assert z.tolist() == [[1, -2], [3, 0]]

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-1.4, 1.4, allow_nan=False), min_size=2, max_size=2),
        st.integers(1, 2),
    )
    def test_matches_brute_force(self, v, lambda0):
        z = nearest_lattice_point(np.array(v), lambda0)
        brute = brute_nearest(v, lambda0)
        d_fast = sum((a - b / lambda0) ** 2 for a, b in zip(v, z))
        d_brute = sum((a - b / lambda0) ** 2 for a, b in zip(v, brute))
        assert d_fast <= d_brute + 1e-12

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=12), st.integers(1, 7))
    def test_rounding_bound(self, v, lambda0):
        arr = np.array(v)
        z = nearest_lattice_point(arr, lambda0)
        assert np.linalg.norm(arr - z / lambda0) <= math.sqrt(len(v)) / (2 * lambda0) + 1e-12


class TestScaledVector:
    def test_arithmetic(self):
        a = ScaledVector((1, 2), 3, 2)
        b = ScaledVector((4, -1), 3, 2)
        assert (a + b).numerators == (5, 1)
        assert (a - b).numerators == (-3, 3)
        assert (3 * a).numerators == (3, 6)
        assert a.sq_norm() == Fraction(5, 18)
        assert a.irrational_scale == "inv_sqrt"
        assert ScaledVector((1,), 1).irrational_scale == "one"

    def test_incompatible(self):
        with pytest.raises(DimensionMismatch):
            ScaledVector((1, 2), 3, 2) + ScaledVector((1, 2), 3, 4)

    def test_to_float(self):
        v = ScaledVector((3, -1), 1, 2)
        assert np.allclose(v.to_float(), np.array([3, -1]) / math.sqrt(2))


class TestPointSet:
    def test_duplicates_rejected(self):
        with pytest.raises(DuplicatePoint):
            LatticePointSet.from_numerators([[1, 2], [1, 2]], 1, 4)

    def test_bound_enforced_exactly(self):
        LatticePointSet.from_numerators([[3, 4], [0, 0]], 1, 5)
        with pytest.raises(BoundViolation):
            LatticePointSet.from_numerators([[3, 5], [0, 0]], 1, 5)

    def test_mixed_dims(self):
        with pytest.raises(DimensionMismatch):
            LatticePointSet((LatticePoint((1,), 1), LatticePoint((1, 2), 1)), 1, 4)

    def test_round_trip(self):
        S = LatticePointSet.from_numerators([[1, -2, 3], [0, 0, 1]], 2, 3)
        assert LatticePointSet.from_dict(S.to_dict()) == S

    def test_schema_rejects_floats(self):
        with pytest.raises(SchemaError):
            LatticePointSet.from_dict({"lambda0": 2, "dim": 2, "bound": 3, "points": [[1.0, 2], [0, 0]]})
        with pytest.raises(SchemaError):
            LatticePointSet.from_dict({"lambda0": 2, "dim": 2, "points": [[1, 2], [0, 0]]})
        with pytest.raises(SchemaError):
            LatticePointSet.from_dict({"lambda0": 2, "dim": 3, "bound": 3, "points": [[1, 2], [0, 0]]})

    def test_scaled(self):
        S = LatticePointSet.from_numerators([[1, 0], [0, 1]], 2, 1)
        T = S.scaled(3)
        assert T.points[0].numerators == (3, 0) and T.bound == 3


class TestDistances:
    def test_examples(self):
        D = exact_pairwise_sq_distances([LatticePoint((0, 0), 1), LatticePoint((3, 4), 1)])
        assert D[0, 1] == 25
        D = exact_pairwise_sq_distances([LatticePoint((1,), 2), LatticePoint((3,), 2)])
        assert D[0, 1] == 1

    def test_symmetric_zero_diagonal(self):
        S = sample_point_set(6, 3, 2, 2, seed=4)
        D = exact_pairwise_sq_distances(S.points)
        assert all(D[i, i] == 0 for i in range(6))
        assert all(D[i, j] == D[j, i] for i in range(6) for j in range(6))

    def test_duplicates(self):
        with pytest.raises(DuplicatePoint):
            exact_pairwise_sq_distances([LatticePoint((1,), 1), LatticePoint((1,), 1)])

    def test_mismatched_lattices(self):
        with pytest.raises(DimensionMismatch):
            exact_pairwise_sq_distances([LatticePoint((1,), 1), LatticePoint((1,), 2)])


class TestSampling:
    def test_tiny_enumeration(self):
        S = sample_point_set(2, 1, 1, 1, seed=0)
        vals = [p.numerators[0] for p in S.points]
        assert set(vals) <= {-1, 0, 1} and len(set(vals)) == 2

    def test_ball_sizes(self):
        # brute-force counts of Z^d points in small balls
        for dim, lambda0, bound in [(1, 1, 1), (2, 1, 2), (3, 2, 1), (4, 1, 2)]:
            r2 = (lambda0 * bound) ** 2
            r = lambda0 * bound
            count = sum(
                1 for z in itertools.product(range(-r, r + 1), repeat=dim) if sum(v * v for v in z) <= r2
            )
            assert lattice_ball_size(dim, lambda0, bound) == count

    def test_infeasible(self):
        with pytest.raises(InfeasibleInstance):
            sample_point_set(6, 1, 1, 2, seed=0)

    def test_deterministic(self):
        assert sample_point_set(8, 32, 5, 4, 11) == sample_point_set(8, 32, 5, 4, 11)
        assert sample_point_set(8, 32, 5, 4, 11) != sample_point_set(8, 32, 5, 4, 12)

    def test_uniform_on_small_ball(self):
        # 13 points of Z^2 with norm <= 2; chi-square style check on first draws
        counts = {}
        for seed in range(2600):
            p = sample_point_set(2, 2, 1, 2, seed).points[0].numerators
            counts[p] = counts.get(p, 0) + 1
        assert len(counts) == 13
        assert max(counts.values()) < 270 and min(counts.values()) > 130

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 10), st.integers(1, 6), st.integers(1, 3), st.integers(1, 4), st.integers(0, 10**6))
    def test_norms_within_bound(self, n, dim, lambda0, bound, seed):
        if lattice_ball_size(dim, lambda0, bound) < n:
            return
        S = sample_point_set(n, dim, lambda0, bound, seed)
        assert len({p.numerators for p in S.points}) == n
        assert all(p.sq_norm() <= bound**2 for p in S.points)
