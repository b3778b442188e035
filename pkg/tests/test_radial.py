import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from pfunction_lab import radial
from pfunction_lab.errors import DomainViolationError, ShootingError, SpacelikeViolationError
from pfunction_lab.problem import ProblemSpec, builtin_problem, const_coefficient, exp_coefficient
from pfunction_lab.radial import (
    ExistenceFailure,
    RadialSolution,
    center_curvature,
    existence_boundary,
    integrate,
    lemma22_check,
    ode_rhs,
    radial_p_function_check,
    shoot,
)
from pfunction_lab.verify import lower_bound_euclid, lower_bound_lorentz


@pytest.fixture(scope="module")
def euclid():
    return builtin_problem("euclidean")


@pytest.fixture(scope="module")
def lorentz():
    return builtin_problem("lorentzian")


@pytest.fixture(scope="module")
def poisson():
    return builtin_problem("poisson")


@pytest.fixture(scope="module")
def euclid_profile(euclid):
    return shoot(euclid, 2, 1.0)


# ┌─ Right-hand side ─┐
def test_ode_rhs_center_limit(euclid, lorentz, poisson):
    assert ode_rhs(euclid, 2, 0.0, -0.3, 0.0) == pytest.approx(0.5)
    assert ode_rhs(euclid, 3, 0.0, -0.3, 0.0) == pytest.approx(1.0 / 3.0)
    assert ode_rhs(lorentz, 2, 0.0, -0.3, 0.0) == pytest.approx(0.5)
    exp_spec = ProblemSpec("exp", const_coefficient(1.0), exp_coefficient(1.0, 1.0))
    assert ode_rhs(exp_spec, 2, 0.0, -1.0, 0.0) == pytest.approx(0.5 * math.exp(-1.0))


def test_ode_rhs_flat_slope_returns_f(euclid):
    assert ode_rhs(euclid, 2, 0.4, -0.3, 0.0) == pytest.approx(1.0)


def test_ode_rhs_spacelike_violation(lorentz):
    with pytest.raises(SpacelikeViolationError) as excinfo:
        ode_rhs(lorentz, 2, 0.7, -0.1, 1.0)
    assert excinfo.value.r == pytest.approx(0.7)


# ┌─ Integration ─┐
def test_integrate_poisson_closed_form(poisson):
    sol = integrate(poisson, 2, -0.3, 1.0)
    np.testing.assert_allclose(sol.phi, -0.3 + sol.r_grid ** 2 / 4.0, atol=1e-10)
    np.testing.assert_allclose(sol.phi_prime, sol.r_grid / 2.0, atol=1e-10)
    assert sol.r_grid[-1] == 1.0


def test_integrate_rejects_coarse_step(euclid):
    with pytest.raises(DomainViolationError):
        integrate(euclid, 2, -0.3, 1.0, h_r=0.01)
    with pytest.raises(DomainViolationError):
        integrate(euclid, 2, 0.1, 1.0)


def test_integrate_step_refinement(euclid):
    ends = [integrate(euclid, 2, -0.3, 1.0, h_r=1.0 / steps).end_value for steps in (200, 400, 800)]
    ratio = abs(ends[0] - ends[1]) / abs(ends[1] - ends[2])
    assert ratio >= 6.0


# ┌─ Shooting ─┐
def test_shoot_poisson(poisson):
    sol = shoot(poisson, 2, 1.0)
    assert isinstance(sol, RadialSolution)
    assert sol.phi0 == pytest.approx(-0.25, abs=1e-8)
    assert abs(sol.end_value) <= 1e-10


def test_shoot_euclidean_unit_ball(euclid_profile):
    sol = euclid_profile
    assert isinstance(sol, RadialSolution)
    assert -0.5 <= sol.phi0 <= -0.1795
    assert -sol.u_min >= lower_bound_euclid(0.5) * (1.0 - 1e-3)
    assert np.all(sol.phi_prime[1:] > 0.0)


def test_shoot_lorentzian_small_ball(lorentz):
    # The Lorentzian β = 1 hypothesis fails and so does the lower bound on this ball.
    sol = shoot(lorentz, 2, 0.3)
    assert isinstance(sol, RadialSolution)
    assert sol.max_slope < 1.0
    assert sol.phi0 == pytest.approx(-0.0225638, abs=2e-7)
    q = float(sol.phi_prime[-1])
    assert q == pytest.approx(0.150853, abs=2e-6)
    assert q * (1.0 - q * q) < 0.15
    assert -sol.u_min < lower_bound_lorentz(0.15)
    assert sol.phi_second[-1] == pytest.approx(0.50860, abs=1e-4)
    assert sol.phi_second[-1] > 0.5
    assert -sol.u_min <= 0.045 * (1.0 + 1e-3)


def test_shoot_lorentzian_large_ball_fails(lorentz):
    result = shoot(lorentz, 2, 5.0)
    assert isinstance(result, ExistenceFailure)
    assert result.kind == "existence_failure"
    record = result.to_dict()
    assert record["R"] == 5.0
    assert any(entry["outcome"] == "spacelike_violation" for entry in record["attempts"])


def test_shoot_monotonicity_guard(poisson, monkeypatch):
    monkeypatch.setattr(radial, "integrate", lambda spec, n, phi0, R, h_r=None: SimpleNamespace(end_value=-phi0))
    with pytest.raises(ShootingError):
        shoot(poisson, 2, 1.0)


# ┌─ Profile checks ─┐
def test_lemma22_on_euclidean_profile(euclid, euclid_profile):
    report = lemma22_check(euclid_profile, euclid)
    assert report.passed
    assert report.quantities["phi_second_center"] == pytest.approx(0.5, abs=1e-8)
    assert report.quantities["center_error"] <= 1e-8


def test_center_curvature_matches_closed_form(euclid_profile, poisson):
    assert center_curvature(euclid_profile) == pytest.approx(0.5, abs=1e-8)
    assert center_curvature(shoot(poisson, 2, 1.0)) == pytest.approx(0.5, abs=1e-8)


def test_lemma22_detects_a_bad_center(euclid, euclid_profile):
    phi = euclid_profile.phi.copy()
    phi[1] += 1e-9
    report = lemma22_check(replace(euclid_profile, phi=phi), euclid)
    assert not report.passed
    assert report.quantities["center_error"] > report.quantities["center_tol"]


def test_lemma22_poisson_is_flat(poisson):
    report = lemma22_check(shoot(poisson, 2, 1.0), poisson)
    assert report.passed
    assert report.quantities["min_phi_second"] == pytest.approx(0.5, abs=1e-8)


@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0])
def test_radial_p_function_minimum_on_boundary(euclid, euclid_profile, beta):
    report = radial_p_function_check(euclid_profile, euclid, beta)
    assert report.passed
    assert report.quantities["non_constant"]
    assert report.to_dict()["status"] == "pass"


@pytest.mark.slow
def test_lorentzian_existence_boundary(lorentz):
    result = existence_boundary(lorentz, 2, 0.3, 5.0, rtol=1e-2)
    assert 0.3 <= result["R_exists"] < result["R_fails"] < 5.0
    assert isinstance(shoot(lorentz, 2, result["R_exists"], tol=1e-8, h_r=result["R_exists"] / 400), RadialSolution)
