import numpy as np
import pytest

from pfunction_lab.errors import DomainViolationError, SpacelikeViolationError
from pfunction_lab.geometry import disk, make_grid
from pfunction_lab.problem import builtin_problem
from pfunction_lab.radial import shoot
from pfunction_lab.solver2d import (
    NewtonConfig,
    field_from_values,
    grid_residual,
    jacobian,
    newton_solve,
    residual,
)


@pytest.fixture(scope="module")
def coarse_disk():
    return make_grid(disk(1.0), 1.0 / 16.0)


def _exact_stencil_nodes(grid):
    """Nodes whose stencil touches no merged node (there values are interpolated)."""
    n = grid.n_unknowns
    arms_ok = np.all((grid.arm_index < n) | (grid.arm_index == grid.zero_index), axis=1)
    diag_ok = np.all((grid.diag_index < n) | (grid.quad_weight == 0.0), axis=1)
    return arms_ok & diag_ok


# ┌─ Residual ─┐
def test_zero_field_at_zero_load(coarse_disk):
    spec = builtin_problem("euclidean")
    res, s_max = grid_residual(spec, coarse_disk, np.zeros(coarse_disk.n_unknowns), 0.0)
    assert np.max(np.abs(res)) == 0.0
    assert s_max == 0.0


def test_quadratic_solves_poisson_stencils(coarse_disk):
    spec = builtin_problem("poisson")
    u = (coarse_disk.x ** 2 + coarse_disk.y ** 2 - 1.0) / 4.0
    res = residual(spec, field_from_values(spec, coarse_disk, u), 1.0)
    exact = _exact_stencil_nodes(coarse_disk)
    assert exact.sum() > 0.9 * coarse_disk.n_unknowns
    assert np.max(np.abs(res[exact])) <= 1e-9


def test_poisson_residual_is_discrete_laplacian(coarse_disk):
    spec = builtin_problem("poisson")
    rng = np.random.default_rng(7)
    u = -0.1 * rng.random(coarse_disk.n_unknowns)
    d = coarse_disk.derivatives(coarse_disk.extended(u))
    res, _ = grid_residual(spec, coarse_disk, u, 0.7)
    np.testing.assert_allclose(res, d["uxx"] + d["uyy"] - 0.7, atol=1e-10)


def test_residual_reports_spacelike_location(coarse_disk):
    spec = builtin_problem("lorentzian")
    u = -2.0 * np.ones(coarse_disk.n_unknowns)
    with pytest.raises(SpacelikeViolationError) as excinfo:
        grid_residual(spec, coarse_disk, u, 1.0)
    assert excinfo.value.location is not None


def test_jacobian_matches_linear_operator(coarse_disk):
    spec = builtin_problem("poisson")
    u = np.zeros(coarse_disk.n_unknowns)
    base, _ = grid_residual(spec, coarse_disk, u, 1.0)
    J = jacobian(spec, coarse_disk, u, 1.0, base, 1e-7)
    rng = np.random.default_rng(3)
    w = rng.standard_normal(coarse_disk.n_unknowns)
    lap = grid_residual(spec, coarse_disk, w, 0.0)[0]
    np.testing.assert_allclose(J @ w, lap, rtol=1e-5, atol=1e-4 * np.max(np.abs(lap)))


# ┌─ Newton ─┐
def test_poisson_disk_minimum(poisson_disk_field):
    fld = poisson_disk_field
    assert fld.converged
    assert fld.residual_norm <= 1e-10
    assert fld.u_min == pytest.approx(-0.25, abs=5e-4)


def test_zero_schedule_returns_zero(coarse_disk):
    fld = newton_solve(builtin_problem("euclidean"), coarse_disk, schedule=[0.0])
    assert fld.converged
    assert not fld.history
    assert np.all(fld.values == 0.0)


def test_planar_solver_needs_n_2(coarse_disk):
    spec = builtin_problem("euclidean", 3)
    with pytest.raises(DomainViolationError, match="n = 2"):
        newton_solve(spec, coarse_disk)
    with pytest.raises(DomainViolationError, match="n = 2"):
        field_from_values(spec, coarse_disk, np.zeros(coarse_disk.n_unknowns))


def test_schedule_validation(coarse_disk):
    with pytest.raises(DomainViolationError):
        newton_solve(builtin_problem("euclidean"), coarse_disk, schedule=[0.5, 0.25])
    with pytest.raises(DomainViolationError):
        newton_solve(builtin_problem("euclidean"), coarse_disk, schedule=[1.5])


def test_euclidean_disk_solution_shape(euclid_disk_field):
    fld = euclid_disk_field
    assert fld.converged and fld.lam == 1.0
    assert np.all(fld.values < 0.0)
    lattice = fld.grid.lattice_field(fld.values)
    assert np.nanmax(np.abs(lattice - lattice[:, ::-1])) <= 1e-9
    assert np.nanmax(np.abs(lattice - lattice[::-1, :])) <= 1e-9
    assert np.hypot(*fld.argmin_xy) <= fld.grid.h + 1e-12


def test_euclidean_disk_matches_radial_profile(euclid_disk_field):
    profile = shoot(builtin_problem("euclidean"), 2, 1.0)
    assert abs(euclid_disk_field.u_min - profile.u_min) <= 5e-3


def test_newton_history_contracts(euclid_disk_field):
    final = [e for e in euclid_disk_field.history if e["lambda"] == 1.0]
    assert final
    if len(final) >= 2:
        assert final[-2]["residual_norm"] / final[-1]["residual_norm"] >= 10.0
    assert set(final[-1]) == {"lambda", "iter", "residual_norm", "step_damping"}


def test_non_convergence_is_reported(coarse_disk):
    fld = newton_solve(builtin_problem("euclidean"), coarse_disk, config=NewtonConfig(max_iter=1))
    assert not fld.converged
    assert fld.failure.kind == "non_convergence"
    assert fld.failure.lam == 0.25
    record = fld.failure.to_dict()
    assert record["iteration"] == 1 and len(record["history"]) == 1


def test_field_dump_rows(poisson_disk_field):
    rows = poisson_disk_field.dump_rows()
    assert len(rows) == poisson_disk_field.grid.n_unknowns
    assert set(rows[0]) == {"i", "j", "x", "y", "u"}
    assert poisson_disk_field.summary()["converged"] is True


@pytest.mark.slow
def test_euclidean_disk_second_order():
    spec = builtin_problem("euclidean")
    reference = shoot(spec, 2, 1.0).u_min
    errors = [abs(newton_solve(spec, make_grid(disk(1.0), h)).u_min - reference) for h in (1.0 / 32.0, 1.0 / 64.0)]
    assert 3.2 <= errors[0] / errors[1] <= 4.8


@pytest.mark.slow
def test_ellipse_minimum_at_centroid(euclid_ellipse_field):
    fld = euclid_ellipse_field
    assert fld.converged
    x, y = fld.argmin_xy
    assert abs(x) <= fld.grid.h + 1e-12 and abs(y) <= fld.grid.h + 1e-12
