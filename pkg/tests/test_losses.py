import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from structsvm.errors import DomainError, EmptyTruth, InvalidParams
from structsvm.losses import (
    BiCriteriaLoss,
    check_bicriteria_axioms,
    micro_f1,
    microf1_factors,
    probloss_convex_ext,
    psi_grad,
    psi_value,
)

ALL = [
    BiCriteriaLoss.margin(),
    BiCriteriaLoss.slack(),
    BiCriteriaLoss.genscale(1.5, 0.7),
    BiCriteriaLoss.genscale(1.0, 0.0),
    BiCriteriaLoss.betascale(0.5),
    BiCriteriaLoss.logloss(),
    BiCriteriaLoss.probloss(),
    BiCriteriaLoss.probloss_ext(),
    BiCriteriaLoss.microf1(),
]


def normal_cdf(x, var):
    # independent of scipy: math.erf
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0 * var)))


def test_psi_examples():
    prob = BiCriteriaLoss.probloss()
    assert psi_value(prob, 0.0, 1.0) == pytest.approx(1.0)
    assert psi_value(prob, 0.0, 4.0) == pytest.approx(4.0)
    assert psi_value(BiCriteriaLoss.slack(), -1.0, 7.0) == 0.0
    assert psi_value(prob, 1.0, 1.0) == pytest.approx(2 * normal_cdf(1.0, 2 / math.pi), abs=1e-12)
    assert psi_value(prob, 1.0, 1.0) == pytest.approx(1.7899, abs=1e-4)
    assert psi_value(prob, 3.0, 0.0) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 20))
def test_probloss_matches_erf_oracle(h, g):
    assert BiCriteriaLoss.probloss().value(h, g) == pytest.approx(2 * g * normal_cdf(h, 2 * g / math.pi), rel=1e-10, abs=1e-14)


def test_grad_examples():
    assert psi_grad(BiCriteriaLoss.slack(), 0.3, 2.0) == pytest.approx((2.0, 1.3))
    assert psi_grad(BiCriteriaLoss.margin(), -4.0, 9.0) == (1.0, 1.0)
    assert psi_grad(BiCriteriaLoss.probloss(), 0.0, 4.0)[0] == pytest.approx(2.0, abs=1e-12)
    for g in (1.0, 2.0, 4.0, 9.0):
        assert abs(BiCriteriaLoss.probloss().grad(0.0, g)[0] - math.sqrt(g)) <= 1e-6


@pytest.mark.parametrize("loss", ALL, ids=lambda l: f"{l.family}-{l.alpha}-{l.beta}")
@settings(max_examples=80, deadline=None)
@given(h=st.floats(-3, 3), u=st.floats(0.2, 5))
def test_gradient_finite_differences(loss, h, u):
    g = -2.0 * u if loss.negative_g else u
    e = 1e-6
    dh, dg = loss.grad(h, g)
    fh = (loss.value(h + e, g) - loss.value(h - e, g)) / (2 * e)
    fg = (loss.value(h, g + e) - loss.value(h, g - e)) / (2 * e)
    if loss.family == "probloss_ext" and abs(h) < 2 * e:
        return
    assert dh == pytest.approx(fh, rel=1e-4, abs=1e-6)
    assert dg == pytest.approx(fg, rel=1e-4, abs=1e-6)


def test_genscale_bounds():
    with pytest.raises(InvalidParams):
        BiCriteriaLoss.genscale(0.5, 1.8)
    with pytest.raises(InvalidParams):
        BiCriteriaLoss.betascale(1.5)
    with pytest.raises(InvalidParams):
        BiCriteriaLoss("nope")
    # (alpha=0.5, beta=1.2): beta > alpha is outside the admissible region
    with pytest.raises(InvalidParams):
        BiCriteriaLoss.genscale(0.5, 1.2)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 6))
def test_genscale_special_cases(h, g):
    assert BiCriteriaLoss.genscale(1.0, 0.0).value(h, g) == pytest.approx(h + g)
    assert BiCriteriaLoss.genscale(1.0, 1.0).value(h, g) == pytest.approx((h + 1) * g)
    assert BiCriteriaLoss.betascale(1.0).value(h, g) == pytest.approx((h + 1) * g)


def test_logloss_is_base_two():
    assert BiCriteriaLoss.logloss().value(0.0, 3.0) == pytest.approx(3.0)


def test_domains():
    with pytest.raises(DomainError):
        BiCriteriaLoss.slack().value(0.0, -1.0)
    with pytest.raises(DomainError):
        BiCriteriaLoss.microf1().value(1.0, 0.0)
    BiCriteriaLoss.margin().value(0.0, -1.0)


def test_betascale_grad_finite_at_origin():
    dh, dg = BiCriteriaLoss.betascale(0.5).grad(0.0, 0.0)
    assert math.isfinite(dh) and math.isfinite(dg)


def test_convex_extension():
    assert probloss_convex_ext(0.0, 3.0) == pytest.approx(3.0)
    assert probloss_convex_ext(2.0, 4.0) == pytest.approx(8.0)
    assert abs(probloss_convex_ext(-10.0, 1.0)) <= 1e-12
    with pytest.raises(DomainError):
        probloss_convex_ext(0.0, 0.0)
    hs = np.linspace(-4, 4, 401)
    v = np.array([probloss_convex_ext(h, 2.0) for h in hs])
    assert np.all(np.diff(v, 2) >= -1e-10)


def test_microf1_factors_examples():
    f = microf1_factors({1}, {1, 2}, 0.0)
    assert (f.h, f.g) == (1.0, -3.0)
    loss = BiCriteriaLoss.microf1()
    assert loss.value(f.h, f.g) == pytest.approx(1 - micro_f1({1}, {1, 2}))
    f = microf1_factors({1, 2}, {1, 2}, 0.0)
    assert loss.value(f.h, f.g) == 0.0
    f = microf1_factors({3}, {1, 2}, 0.5)
    assert (f.h, f.g) == (3.5, -3.0)
    assert loss.value(f.h, f.g) == pytest.approx(3.5 / 3)
    with pytest.raises(EmptyTruth):
        microf1_factors({1}, set(), 0.0)


def test_microf1_tight_exhaustive_small():
    loss = BiCriteriaLoss.microf1()
    labels = range(5)
    subsets = [set(c) for r in range(6) for c in itertools.combinations(labels, r)]
    for t in subsets[1:]:
        for y in subsets:
            f = microf1_factors(y, t, 0.0)
            assert loss.value(f.h, f.g) == pytest.approx(1 - micro_f1(y, t), abs=1e-12)


@pytest.mark.parametrize("loss", ALL, ids=lambda l: f"{l.family}-{l.alpha}-{l.beta}")
def test_axioms(loss):
    r = check_bicriteria_axioms(loss, samples=1000, seed=3)
    assert r.ok, r


def test_axioms_sample_floor():
    with pytest.raises(ValueError):
        check_bicriteria_axioms(BiCriteriaLoss.slack(), samples=10)


def test_tangent_lambda():
    assert BiCriteriaLoss.margin().tangent_lambda(0.0, 1.0) == 1.0
    assert BiCriteriaLoss.slack().tangent_lambda(0.0, 2.0) == pytest.approx(0.5)
    assert BiCriteriaLoss.slack().tangent_lambda(0.01, 2.0) == pytest.approx(1.01 / 2.0)
    assert BiCriteriaLoss.probloss().tangent_lambda(0.0, 1.0) == pytest.approx(1.0)


def test_from_name():
    assert BiCriteriaLoss.from_name("genscale", alpha=1.5, beta=0.5) == BiCriteriaLoss.genscale(1.5, 0.5)
    assert BiCriteriaLoss.from_name("micro-f1").family == "microf1"
    assert BiCriteriaLoss.from_name("probloss_convex").family == "probloss_ext"
