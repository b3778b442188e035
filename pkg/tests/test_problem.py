import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfunction_lab.errors import ConfigError, DomainViolationError
from pfunction_lab.problem import (
    ProblemSpec,
    big_G,
    big_G_prime,
    builtin_problem,
    check_theorem1_hypothesis,
    check_theorem2_hypothesis,
    const_coefficient,
    cumulative_F,
    exp_coefficient,
    parse_coefficient,
    power_coefficient,
    problem_from_record,
    trig_coefficient,
    v_of_u,
)


@pytest.fixture(scope="module")
def euclid():
    return builtin_problem("euclidean")


@pytest.fixture(scope="module")
def lorentz():
    return builtin_problem("lorentzian")


@pytest.fixture(scope="module")
def exp_spec():
    return ProblemSpec("exp", const_coefficient(1.0), exp_coefficient(1.0, 1.0))


# ┌─ G and G′ ─┐
def test_big_G_euclidean_closed_form(euclid):
    assert big_G(euclid, 0.0) == pytest.approx(1.0)
    assert big_G(euclid, 3.0) == pytest.approx(0.125)
    s = np.array([0.0, 0.5, 2.0])
    np.testing.assert_allclose(big_G(euclid, s), (1.0 + s) ** -1.5, rtol=1e-14)


def test_big_G_prime_signs(euclid, lorentz):
    s = np.linspace(0.0, 0.9, 10)
    assert np.all(big_G_prime(euclid, s) < 0.0)
    assert np.all(big_G_prime(lorentz, s) > 0.0)


def test_big_G_rejects_limit_and_negative(lorentz):
    with pytest.raises(DomainViolationError):
        big_G(lorentz, 1.0)
    with pytest.raises(DomainViolationError):
        big_G(lorentz, -0.1)


def test_g_over_G_families(euclid, lorentz):
    s = np.array([0.0, 0.25, 0.5])
    np.testing.assert_allclose(euclid.g_over_G(s), 1.0 + s, rtol=1e-13)
    np.testing.assert_allclose(lorentz.g_over_G(s), 1.0 - s, rtol=1e-13)


# ┌─ F and v ─┐
def test_cumulative_F_constant_and_exp(euclid, exp_spec):
    assert cumulative_F(euclid, -2.0) == 2.0
    assert cumulative_F(euclid, 0.0) == 0.0
    assert cumulative_F(exp_spec, -1.5) == pytest.approx(1.0 - math.exp(-1.5), rel=1e-12)


def test_v_of_u_closed_forms(euclid, exp_spec):
    assert v_of_u(euclid, -0.25) == pytest.approx(1.0, rel=1e-14)
    W = math.sqrt(1.0 - math.exp(-1.0))
    assert v_of_u(exp_spec, -1.0) == pytest.approx(2.0 * math.atanh(W), rel=1e-8)


def test_u_must_be_nonpositive(euclid):
    with pytest.raises(DomainViolationError):
        cumulative_F(euclid, 0.1)
    with pytest.raises(DomainViolationError):
        v_of_u(euclid, float("nan"))


@given(st.floats(min_value=-5.0, max_value=-1e-3), st.floats(min_value=1e-3, max_value=1.0))
def test_v_of_u_decreasing(u, du):
    spec = ProblemSpec("exp", const_coefficient(1.0), exp_coefficient(1.0, 1.0))
    assert v_of_u(spec, u - du) > v_of_u(spec, u)
    assert cumulative_F(spec, u - du) > cumulative_F(spec, u) > 0.0


# ┌─ Construction and descriptors ─┐
def test_spec_rejects_nonpositive_coefficients():
    with pytest.raises(DomainViolationError):
        ProblemSpec("bad", power_coefficient(1.0, -0.5, c=-1.0), const_coefficient(1.0))
    with pytest.raises(DomainViolationError):
        ProblemSpec("bad", const_coefficient(1.0), const_coefficient(-1.0))
    with pytest.raises(DomainViolationError):
        ProblemSpec("bad", const_coefficient(1.0), const_coefficient(1.0), n=1)


def test_parse_coefficient_descriptors():
    g = parse_coefficient("power:a=1,p=-0.5")
    assert g.value(3.0) == pytest.approx(0.5)
    assert parse_coefficient(g.descriptor()) == g
    poly = parse_coefficient("poly:coeffs=1;0;2")
    assert poly.value(2.0) == pytest.approx(9.0)
    assert poly.d1(2.0) == pytest.approx(8.0)
    assert poly.d2(2.0) == pytest.approx(4.0)
    with pytest.raises(ConfigError):
        parse_coefficient("wave:a=1")
    with pytest.raises(ConfigError):
        parse_coefficient("exp:a=1,z=2")


def test_problem_records():
    assert builtin_problem("lorentzian").to_record() == {"name": "lorentzian", "n": 2}
    custom = problem_from_record({"name": "mine", "g": "const:c=1", "f": "exp:a=1,b=1", "n": 3})
    assert custom.n == 3 and custom.f_constant is None
    assert problem_from_record(custom.to_record()) == custom
    with pytest.raises(ConfigError):
        builtin_problem("minkowski")
    with pytest.raises(ConfigError):
        problem_from_record({"name": "x", "g": "const:c=1"})


# ┌─ Hypothesis ledger ─┐
def test_theorem1_hypothesis_verdicts(euclid, exp_spec):
    assert check_theorem1_hypothesis(euclid).verdict == "marginal"
    assert check_theorem1_hypothesis(exp_spec).verdict == "pass"
    wavy = ProblemSpec("wavy", const_coefficient(1.0), trig_coefficient(2.0, 1.0, 1.0))
    report = check_theorem1_hypothesis(wavy, u_samples=np.linspace(-3.0, 0.0, 301))
    assert report.verdict == "fail"
    assert report.quantities["min_f_prime"] < 0.0


@pytest.mark.parametrize("beta", [1.0, 1.25, 1.5, 1.75, 2.0])
def test_theorem2_hypothesis_euclidean_passes(euclid, beta):
    report = check_theorem2_hypothesis(euclid, beta)
    assert report.verdict == "pass"
    assert not report.clamped


def test_theorem2_hypothesis_lorentzian_fails(lorentz):
    report = check_theorem2_hypothesis(lorentz, 1.5)
    assert report.verdict == "fail"
    assert report.clamped
    assert report.quantities["max_expression"] > 0.0


def test_theorem2_hypothesis_beta_range(euclid):
    with pytest.raises(DomainViolationError):
        check_theorem2_hypothesis(euclid, 2.5)
