import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import optimize

from pfunction_lab.checks import CheckReport
from pfunction_lab.errors import DomainViolationError, ValidityRegionError
from pfunction_lab.fields import derive, v_field
from pfunction_lab.geometry import disk, ellipse, make_grid
from pfunction_lab.problem import builtin_problem, problem_from_record
from pfunction_lab.radial import shoot
from pfunction_lab.solver2d import field_from_values
from pfunction_lab.verify import (
    LORENTZ_ALPHA_LIMIT,
    VerificationReport,
    beta_regime,
    boundary_identity_check,
    bounds_table,
    eq41_check,
    identity_residual_checks,
    euclid_root,
    lorentz_root,
    lower_bound_euclid,
    lower_bound_lorentz,
    problem_family,
    run_verification,
    theorem1_check,
    theorem2_check,
    theorem3_check,
    upper_bound_check,
    verify_radial,
)


# ┌─ Cubic bounds ─┐
def test_euclid_bound_values():
    assert lower_bound_euclid(2.0) == pytest.approx(1.0, abs=1e-14)
    assert lower_bound_euclid(0.5) == pytest.approx(0.17965, abs=1e-4)


def test_lorentz_bound_values():
    assert lower_bound_lorentz(1.0 / (3.0 * math.sqrt(3.0))) == pytest.approx(0.04020, abs=5e-6)
    assert lower_bound_lorentz(LORENTZ_ALPHA_LIMIT) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_lorentz_bound_validity_region():
    with pytest.raises(ValidityRegionError) as excinfo:
        lower_bound_lorentz(0.5)
    assert excinfo.value.alpha == 0.5
    assert excinfo.value.alpha_limit == pytest.approx(LORENTZ_ALPHA_LIMIT)
    with pytest.raises(DomainViolationError):
        lower_bound_euclid(0.0)
    with pytest.raises(DomainViolationError):
        lower_bound_lorentz(-1.0)


@given(st.floats(min_value=1e-6, max_value=10.0))
def test_euclid_root_solves_cubic(a):
    q = euclid_root(a)
    assert q > 0.0
    assert abs(q ** 3 + q - a) <= 1e-10


@given(st.floats(min_value=1e-6, max_value=LORENTZ_ALPHA_LIMIT))
def test_lorentz_root_solves_cubic(a):
    q = lorentz_root(a)
    assert 0.0 < q <= 1.0 / math.sqrt(3.0) + 1e-12
    assert abs(q ** 3 - q + a) <= 1e-10


def test_roots_match_bisection():
    for a in np.linspace(1e-6, 10.0, 1000):
        oracle = optimize.bisect(lambda q: q ** 3 + q - a, 0.0, max(1.0, a), xtol=1e-14)
        assert abs(euclid_root(a) - oracle) <= 1e-10
    for a in np.linspace(1e-6, 0.999 * LORENTZ_ALPHA_LIMIT, 1000):
        oracle = optimize.bisect(lambda q: q ** 3 - q + a, 0.0, 1.0 / math.sqrt(3.0), xtol=1e-14)
        assert abs(lorentz_root(a) - oracle) <= 1e-10


def test_bounds_are_monotone():
    alphas = np.linspace(1e-3, 5.0, 200)
    assert np.all(np.diff([lower_bound_euclid(a) for a in alphas]) > 0.0)
    alphas = np.linspace(1e-3, LORENTZ_ALPHA_LIMIT, 200)
    assert np.all(np.diff([lower_bound_lorentz(a) for a in alphas]) > 0.0)


def test_bounds_table_rows():
    rows = bounds_table([0.2, 0.5])
    assert rows[0]["lorentz"] == pytest.approx(lower_bound_lorentz(0.2))
    assert rows[1]["lorentz"] is None
    assert "exceeds" in rows[1]["lorentz_error"]
    assert rows[1]["euclid"] == pytest.approx(0.17965, abs=1e-4)


# ┌─ Classification helpers ─┐
def test_problem_family():
    assert problem_family(builtin_problem("euclidean")) == "euclidean"
    assert problem_family(builtin_problem("lorentzian", 3)) == "lorentzian"
    assert problem_family(builtin_problem("poisson")) is None
    custom = problem_from_record({"name": "mine", "g": "power:a=1,p=-0.5", "f": "const:c=2"})
    assert problem_family(custom) is None


def test_beta_regime():
    assert [beta_regime(b) for b in (1.0, 1.5, 2.0)] == ["continuity", "theorem", "endpoint"]


# ┌─ Theorem checks on solved fields ─┐
def test_theorem1_on_euclidean_disk(euclid_disk_field):
    report = theorem1_check(builtin_problem("euclidean"), euclid_disk_field)
    assert report.passed
    assert report.quantities["max_core_eigenvalue"] < report.quantities["threshold"]
    assert report.quantities["hypothesis_verdict"] == "marginal"
    assert report.quantities["rank_profile"]["rank_deficient"] == 0


def test_theorem1_degenerate_field():
    spec = builtin_problem("euclidean")
    grid = make_grid(disk(1.0), 1.0 / 16.0)
    report = theorem1_check(spec, field_from_values(spec, grid, np.zeros(grid.n_unknowns)))
    assert report.passed is None
    assert report.status == "degenerate field"


@pytest.mark.parametrize("beta", [1.5, 2.0])
def test_theorem2_on_euclidean_disk(euclid_disk_field, beta):
    report = theorem2_check(builtin_problem("euclidean"), derive(euclid_disk_field), beta)
    assert report.passed
    assert report.quantities["non_constant"]
    assert report.quantities["hypothesis_verdict"] == "pass"
    assert report.name == f"theorem2[beta={beta:g}]"


def test_theorem3_and_upper_bound_on_euclidean_disk(euclid_disk_field):
    spec = builtin_problem("euclidean")
    report = theorem3_check(spec, disk(1.0), euclid_disk_field)
    assert report.passed
    assert report.quantities["alpha"] == pytest.approx(0.5, rel=1e-10)
    assert report.quantities["lower_bound"] == pytest.approx(0.17965, abs=1e-4)
    assert report.quantities["hypothesis_verdict"] == "pass"
    upper = upper_bound_check(disk(1.0), euclid_disk_field, spec)
    assert upper.quantities["ceiling"] == pytest.approx(0.5)
    assert -upper.quantities["u_min"] <= 0.5
    assert "phi2_argmax_to_umin_distance" in upper.quantities


def test_eq41_on_euclidean_disk(euclid_disk_field):
    derived = derive(euclid_disk_field)
    report = eq41_check(builtin_problem("euclidean"), derived)
    assert report.name == "eq41_field"
    assert report.passed
    assert report.quantities["min_gap"] >= -1e-4
    assert report.quantities["q_m"] == pytest.approx(derived.q_m)
    assert report.quantities["hypothesis_verdict"] == "pass"


def test_theorem3_not_applicable_for_poisson(poisson_disk_field):
    report = theorem3_check(builtin_problem("poisson"), disk(1.0), poisson_disk_field)
    assert report.passed is None
    assert report.status == "not applicable"


def test_lorentzian_disk_solve(lorentz_small_disk_field):
    spec = builtin_problem("lorentzian")
    fld = lorentz_small_disk_field
    assert fld.converged
    assert fld.u_min == pytest.approx(-0.0225638, abs=1e-4)
    derived = derive(fld)
    assert np.max(derived.s_field) < 1.0
    t3 = theorem3_check(spec, disk(0.3), fld)
    assert t3.quantities["alpha"] == pytest.approx(0.15, rel=1e-8)
    assert t3.passed is False
    assert t3.quantities["hypothesis_verdict"] == "fail"
    bi = boundary_identity_check(spec, derived)
    assert bi.quantities["u_nn_ceiling"]["counted"] is False
    report = VerificationReport({}, sections=[t3, eq41_check(spec, derived), bi])
    record = report.to_dict()
    assert record["sections"]["theorem3"]["counted"] is False
    assert record["sections"]["eq41_field"]["counted"] is False
    assert report.passed


def test_planar_checks_need_n_2():
    with pytest.raises(DomainViolationError):
        run_verification(builtin_problem("euclidean", 3), disk(1.0), 1.0 / 16.0)


def test_theorem3_lorentzian_outside_validity_region():
    spec = builtin_problem("lorentzian")
    grid = make_grid(disk(1.0), 1.0 / 16.0)
    with pytest.raises(ValidityRegionError):
        theorem3_check(spec, disk(1.0), field_from_values(spec, grid, np.zeros(grid.n_unknowns)))


def test_boundary_identity_converges_on_euclidean_disk(euclid_disk_field, euclid_disk_coarse_field):
    spec = builtin_problem("euclidean")
    report = boundary_identity_check(spec, derive(euclid_disk_field), derive(euclid_disk_coarse_field))
    q = report.quantities
    assert q["max_residual"] < q["coarse_max_residual"]
    assert q["order"] >= 0.8
    assert q["u_nn_ceiling"]["counted"] and q["u_nn_ceiling"]["pass"]
    assert report.passed


def test_identity_orders_on_euclidean_disk(euclid_disk_field, euclid_disk_coarse_field):
    spec = builtin_problem("euclidean")
    derived = derive(euclid_disk_field)
    sections = {
        s.name: s
        for s in identity_residual_checks(spec, euclid_disk_field, derived, v_field(spec, euclid_disk_field), euclid_disk_coarse_field)
    }
    assert sections["v_equation"].passed
    assert sections["v_equation"].quantities["order"] >= 1.5
    assert sections["ps_inequality"].passed
    upper = upper_bound_check(disk(1.0), euclid_disk_field, spec, derived)
    assert upper.quantities["eq51_pass"]


def test_boundary_identity_on_paraboloid():
    spec = builtin_problem("poisson")
    grid = make_grid(disk(1.0), 1.0 / 32.0)
    derived = derive(field_from_values(spec, grid, (grid.x ** 2 + grid.y ** 2 - 1.0) / 4.0))
    report = boundary_identity_check(spec, derived)
    assert report.passed is None
    assert report.quantities["max_residual"] <= 1e-6
    assert report.quantities["u_nn_ceiling"]["pass"]
    assert report.quantities["u_nn_ceiling"]["ceiling"] == pytest.approx(0.5)


@pytest.mark.slow
@pytest.mark.parametrize("beta", [1.0, 1.5, 2.0])
def test_theorems_on_ellipse(euclid_ellipse_field, beta):
    spec = builtin_problem("euclidean")
    derived = derive(euclid_ellipse_field)
    assert theorem1_check(spec, euclid_ellipse_field, derived).passed
    report = theorem2_check(spec, derived, beta)
    assert report.passed and report.quantities["non_constant"]
    t3 = theorem3_check(spec, ellipse(2.0, 1.0), euclid_ellipse_field)
    assert t3.passed
    assert t3.quantities["lower_bound"] == pytest.approx(lower_bound_euclid(0.25), rel=1e-8)



@pytest.mark.slow
def test_rank_census_on_ellipse(euclid_ellipse_field):
    report = theorem1_check(builtin_problem("euclidean"), euclid_ellipse_field)
    census = report.quantities["rank_profile"]
    assert census["constant"]
    assert census["rank_deficient"] == 0
    assert census["full_rank"] == report.quantities["core_nodes"]
    assert census["det_min"] > 0.0


@pytest.mark.slow
def test_run_verification_on_euclidean_disk():
    report = run_verification(builtin_problem("euclidean"), disk(1.0), 1.0 / 32.0, betas=(1.5, 2.0))
    assert report.failure is None
    assert report.passed
    assert report.section("boundary_identity").quantities["order"] >= 0.8
    assert report.section("v_equation").quantities["order"] >= 1.5


# ┌─ Reports ─┐
def test_report_aggregation_skips_evidence_sections():
    report = VerificationReport(
        {"problem": {"name": "lorentzian"}},
        sections=[
            CheckReport("lemma22", True, {"min_phi_second": 0.4}),
            CheckReport("theorem2[beta=1.5]", False, {"hypothesis_verdict": "fail"}),
            CheckReport("theorem3", None, {"alpha": 0.5}, verdict="outside validity region"),
        ],
    )
    assert report.passed
    record = report.to_dict()
    assert record["sections"]["theorem2[beta=1.5]"]["counted"] is False
    assert record["sections"]["lemma22"]["counted"] is True
    assert record["sections"]["theorem3"]["status"] == "outside validity region"

    report.sections.append(CheckReport("upper_bound", False, {"ceiling": 0.5}))
    assert not report.passed
    report.sections.pop()
    report.failure = {"kind": "non_convergence"}
    assert not report.passed


def test_report_json_is_deterministic():
    report = VerificationReport({"b": 1, "a": float("nan")}, sections=[CheckReport("x", True, {"z": np.float64(1.5), "y": np.inf})])
    text = report.to_json()
    assert text == report.to_json()
    record = json.loads(text)
    assert list(record) == sorted(record)
    assert record["meta"]["a"] is None
    assert record["sections"]["x"]["y"] is None
    assert record["sections"]["x"]["z"] == 1.5


def test_verify_radial_euclidean_ball():
    report = verify_radial(builtin_problem("euclidean"), 1.0)
    assert report.passed
    assert report.section("theorem3").passed
    assert report.section("lemma22").passed


def test_verify_radial_lorentzian_small_ball():
    spec = builtin_problem("lorentzian")
    report = verify_radial(spec, 0.3, solution=shoot(spec, 2, 0.3))
    record = report.to_dict()
    t3 = record["sections"]["theorem3"]
    assert t3["pass"] is False
    assert t3["counted"] is False
    assert t3["hypothesis_verdict"] == "fail"
    assert t3["gap"] < 0.0
    assert record["sections"]["upper_bound"]["pass"] is True
    for beta in ("1", "1.5", "2"):
        assert record["sections"][f"radial_p_function[beta={beta}]"]["counted"] is False
    assert report.passed


def test_verify_radial_lorentzian_existence_failure():
    result = verify_radial(builtin_problem("lorentzian"), 5.0)
    assert result.kind == "existence_failure"
