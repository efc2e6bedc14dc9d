import json
import math
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from latticejl.embedder import (
    EmbedConfig,
    EmbeddingResult,
    certify,
    distortion_report,
    embed,
    eq1_bounds,
    injectivity_floor,
    naive_baseline,
    prepare,
    realize,
    scaling_seed,
    search_lambda,
)
from latticejl.errors import (
    CertificationFailed,
    DuplicateOutput,
    EpsilonOutOfRange,
    LambdaSearchExhausted,
    RotationNotFound,
    SchemaError,
)
from latticejl.geometry import BlockRotation
from latticejl.jl_projection import sample_hadamard_projection
from latticejl.lattice_core import LatticePointSet, is_lattice_member, sample_point_set

DATA = Path(__file__).parent / "data"


def adversarial_instance():
    return LatticePointSet.from_dict(json.loads((DATA / "adversarial_k16.json").read_text()))


def test_injectivity_floor():
    assert injectivity_floor(2, Fraction(1, 4)) == Fraction(1, 8)
    assert 0 < injectivity_floor(1, Fraction(499, 1000)) < Fraction(1, 100)
    with pytest.raises(EpsilonOutOfRange):
        injectivity_floor(5, Fraction(1, 6))


def test_bounds():
    assert eq1_bounds(Fraction(1, 4), 2, 2) == (Fraction(11, 16), Fraction(21, 16))


def test_config_rejects_odd_k():
    with pytest.raises(ValueError):
        EmbedConfig(Fraction(1, 4), k=7)


def test_fast_path_k4():
    S = sample_point_set(6, 4, 2, 3, 1)
    config = EmbedConfig(Fraction(1, 4), k=4, projection="hadamard")
    result = embed(S, 2, config)
    assert result.rotation_witness.strategy == "identity"
    prep = prepare(S, config)
    # lam / sqrt(k) = 1: outputs are the centred numerators themselves
    assert list(result.outputs) == [y.numerators for y in prep.centered]
    report = certify(result)
    assert report.passed
    assert report.min_ratio_sq == result.jl_certificate.min_ratio_sq
    assert report.max_ratio_sq == result.jl_certificate.max_ratio_sq
    assert report.max_ratio <= 1 + 0.25


def test_end_to_end_n8_k32():
    S = sample_point_set(8, 8, 2, 4, 5)
    lam, result = search_lambda(S, EmbedConfig(Fraction(1, 5), k=32, projection="auto"))
    report = certify(result)
    lower, upper = Fraction(4, 5) - Fraction(1, 10 * lam), Fraction(6, 5) + Fraction(1, 10 * lam)
    assert (report.lower_bound, report.upper_bound) == (lower, upper)
    assert report.passed
    assert lower**2 <= report.min_ratio_sq and report.max_ratio_sq <= upper**2


def test_unit_distance_pair_stays_injective():
    S = LatticePointSet.from_numerators([[0, 0, 0, 0], [1, 0, 0, 0], [0, 3, -2, 1]], 3, 2)
    lam, result = search_lambda(S, EmbedConfig(Fraction(1, 5), k=8, projection="hadamard"))
    assert result.outputs[0] != result.outputs[1]
    gap = math.dist(result.outputs[0], result.outputs[1]) / (lam * 3)
    assert gap >= float(injectivity_floor(3, Fraction(1, 5)))


def test_certify_planted_violation():
    S = sample_point_set(6, 4, 2, 3, 1)
    result = embed(S, 2, EmbedConfig(Fraction(1, 4), k=4, projection="hadamard"))
    bad = list(result.outputs)
    bad[3] = tuple(v + 2 * 1000 for v in bad[3])
    report = certify(replace(result, outputs=tuple(bad)))
    assert not report.passed
    assert all(3 in pair for pair in report.worst_pairs)


def test_certify_duplicate_output():
    S = sample_point_set(6, 4, 2, 3, 1)
    result = embed(S, 2, EmbedConfig(Fraction(1, 4), k=4, projection="hadamard"))
    bad = list(result.outputs)
    bad[1] = bad[4]
    with pytest.raises(DuplicateOutput) as info:
        certify(replace(result, outputs=tuple(bad)))
    assert info.value.pair == (1, 4)


def test_result_round_trip():
    S = sample_point_set(8, 8, 2, 4, 5)
    _, result = search_lambda(S, EmbedConfig(Fraction(1, 5), k=32, projection="auto"))
    data = json.loads(json.dumps(result.to_dict()))
    back = EmbeddingResult.from_dict(data)
    assert back.outputs == result.outputs and back.lam == result.lam
    assert certify(back) == certify(result)
    data["outputs"][0] = [0.5] * result.k
    with pytest.raises(SchemaError):
        EmbeddingResult.from_dict(data)
    with pytest.raises(SchemaError):
        EmbeddingResult.from_dict({"input": data["input"]})


def test_report_serialisation():
    S = sample_point_set(6, 4, 2, 3, 1)
    report = certify(embed(S, 2, EmbedConfig(Fraction(1, 4), k=4, projection="hadamard")))
    d = report.to_dict()
    assert d["lower_bound"] == "11/16" and d["upper_bound"] == "21/16"
    assert float(d["min_ratio"]) == pytest.approx(report.min_ratio, rel=1e-15)


def test_naive_rounding_bound_and_fast_path_agreement():
    S = sample_point_set(8, 8, 2, 4, 3)
    config = EmbedConfig(Fraction(1, 4), k=16, projection="auto")
    result = embed(S, 4, config)
    naive = naive_baseline(S, result.projection, 4, config.epsilon)
    assert naive.max_rounding == 0.0
    report = certify(result)
    assert (naive.min_ratio_sq, naive.max_ratio_sq) == (report.min_ratio_sq, report.max_ratio_sq)
    for lam in (3, 5, 7):
        naive = naive_baseline(S, result.projection, lam, config.epsilon)
        assert naive.max_rounding <= math.sqrt(16) / (2 * 2) + 1e-12


def test_adversarial_instance():
    S = adversarial_instance()
    eps = Fraction(1, 8)
    result = embed(S, 9, EmbedConfig(eps, k=16, projection="hadamard", seed=1))
    assert certify(result).passed
    naive = naive_baseline(S, result.projection, 9, eps)
    assert not naive.passed
    assert naive.max_rounding <= math.sqrt(16) / (2 * 4) + 1e-12


def test_perfect_square_lambda():
    S = sample_point_set(8, 8, 2, 4, 0)
    lam, result = search_lambda(S, EmbedConfig(Fraction(1, 4), k=16, projection="auto"))
    assert lam == 4 and result.rotation_witness.strategy == "identity"


def test_k2_scaling_seed_identity_certifies():
    S = LatticePointSet.from_numerators([[0, 0], [1, 0], [0, 1], [1, 1]], 1, 2)
    config = EmbedConfig(Fraction(1, 10), k=2, projection="hadamard")
    prep = prepare(S, config)
    seed = scaling_seed(prep, 1)
    assert (seed.n1, seed.p) == (17, 12)
    outputs = realize(prep.centered, 17, 1, BlockRotation.identity(2))
    assert distortion_report(S, outputs, 17, config.epsilon).passed
    lam, _ = search_lambda(S, config)
    assert lam <= 17


def test_max_lambda_monotone():
    S = sample_point_set(8, 8, 1, 4, 2)
    base = EmbedConfig(Fraction(1, 4), k=12, projection="auto", seed=3)
    lam_big, _ = search_lambda(S, replace(base, max_lambda=200))
    lam_small, _ = search_lambda(S, replace(base, max_lambda=lam_big))
    assert lam_small == lam_big
    with pytest.raises(LambdaSearchExhausted):
        search_lambda(S, replace(base, max_lambda=lam_big - 1))


def test_rotation_not_found_is_reported():
    S = sample_point_set(8, 8, 1, 4, 2)
    with pytest.raises(RotationNotFound):
        embed(S, 1, EmbedConfig(Fraction(1, 4), k=12, projection="auto", seed=3))


def test_scale_covariance_replay():
    S = sample_point_set(6, 4, 2, 2, 9)
    c, mu = 3, 5
    R = sample_hadamard_projection(4, 8, 0)
    config = EmbedConfig(Fraction(1, 4))
    prep = prepare(S, config, projection=R)
    prep_c = prepare(S.scaled(c), config, projection=R)
    centered_c = tuple(c * y for y in prep.centered)
    rho = BlockRotation((0.3, 1.1, 2.0, 0.7), 8)
    z_small = realize(prep.centered, c * mu, 2, rho)
    z_big = realize(centered_c, mu, 2, rho)
    assert z_small == z_big
    a = distortion_report(S, z_small, c * mu, config.epsilon, allow_duplicates=True)
    b = distortion_report(S.scaled(c), z_big, mu, config.epsilon, allow_duplicates=True)
    assert (a.min_ratio_sq, a.max_ratio_sq) == (b.min_ratio_sq, b.max_ratio_sq)
    assert prep_c.jl_certificate.min_ratio_sq == prep.jl_certificate.min_ratio_sq


def test_certification_failure_carries_report(monkeypatch):
    import latticejl.embedder as emb

    S = sample_point_set(6, 4, 2, 3, 1)

    def broken(centered, lam, lambda0, rotation):
        return [tuple(v * (i + 1) for v in y.numerators) for i, y in enumerate(centered)]

    monkeypatch.setattr(emb, "realize", broken)
    with pytest.raises(CertificationFailed) as info:
        embed(S, 2, EmbedConfig(Fraction(1, 4), k=4, projection="hadamard"))
    assert info.value.report is not None and not info.value.report.passed


@settings(max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.integers(0, 10**6),
    st.sampled_from([(1, Fraction(1, 4)), (2, Fraction(1, 4)), (3, Fraction(1, 5))]),
    st.sampled_from([8, 16, 32]),
    st.integers(3, 8),
)
def test_soundness(seed, params, k, n):
    lambda0, eps = params
    S = sample_point_set(n, 4, lambda0, 3, seed)
    try:
        lam, result = search_lambda(S, EmbedConfig(eps, k=k, projection="auto", seed=seed, max_lambda=64))
    except LambdaSearchExhausted:
        return
    report = certify(result)
    assert report.passed
    assert len(set(result.outputs)) == n
    assert all(is_lattice_member([Fraction(v, lambda0) for v in z], lambda0) for z in result.outputs)
    gap = min(
        math.dist(result.outputs[i], result.outputs[j]) for i in range(n) for j in range(i + 1, n)
    ) / (lam * lambda0)
    assert gap >= float(injectivity_floor(lambda0, eps)) - 1e-9
    if math.isqrt(k) ** 2 == k and lam % math.isqrt(k) == 0:
        factor = lam // math.isqrt(k)
        prep = prepare(S, EmbedConfig(eps, k=k, projection="auto", seed=seed))
        assert list(result.outputs) == [tuple(factor * v for v in y.numerators) for y in prep.centered]
