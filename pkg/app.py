#!/usr/bin/env python3
# ═══════════════════════════════════════════════════════════════════════════════
# 🧮 APP LAUNCHER - Command-line front end of the P-Function Lab
# ═══════════════════════════════════════════════════════════════════════════════
# Purpose: CLI entrypoint to configure a problem, run solvers and checks, and
#          write reports, field dumps and plot-ready CSV data
# Commands: radial, solve2d, verify, bounds, sweep
# Exit codes: 0 pass, 1 check failure, 2 solver failure, 3 config error
# ═══════════════════════════════════════════════════════════════════════════════

import functools
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer

from config import get_output_config, parse_float_list
from pfunction_lab.errors import ConfigError, ConvexityError, DomainViolationError, GridError, LabError
from pfunction_lab.fields import derive, derived_rows
from pfunction_lab.geometry import make_grid
from pfunction_lab.radial import ExistenceFailure, RadialSolution, shoot
from pfunction_lab.solver2d import newton_solve
from pfunction_lab.verify import bounds_table, run_verification, validity_map, verify_radial
from reporting import (
    configure_logging,
    echo_lines,
    format_bounds_row,
    format_failure,
    format_report,
    write_csv,
    write_json,
    write_jsonl,
)
from run_config import RunConfig, RunConfigLoader

EXIT_PASS = 0
EXIT_CHECK_FAILURE = 1
EXIT_SOLVER_FAILURE = 2
EXIT_CONFIG_ERROR = 3

app = typer.Typer(help="🧮 P-Function Lab: solvers and bound checks for div(g(|∇u|²)∇u) = f(u)G(|∇u|²)", add_completion=False)

# ┌─ Shared Options ─┐
ProblemOpt = typer.Option(None, "--problem", help="📐 Built-in problem: euclidean, lorentzian, poisson")
GOpt = typer.Option(None, "--g", help="🔧 Custom g descriptor, e.g. power:a=1,p=-0.5")
FOpt = typer.Option(None, "--f", help="🔧 Custom f descriptor, e.g. exp:a=1,b=1")
SLimitOpt = typer.Option(None, "--s-limit", help="🚧 Gradient constraint |∇u|² < s_limit for custom problems")
DomainOpt = typer.Option(None, "--domain", help="🟢 Domain descriptor, e.g. ellipse:a=2,b=1")
HOpt = typer.Option(None, "--h", help="#️⃣ Grid spacing")
BetaOpt = typer.Option(None, "--beta", help="🎛️ Comma-separated β values in [1, 2]")
OutOpt = typer.Option(None, "--out-dir", help="💾 Output directory")
ConfigOpt = typer.Option(None, "--config", help="📝 Run file (key = value lines)")
VerboseOpt = typer.Option(False, "--verbose", "-v", help="🪵 Debug logging")


def _floats(text: Optional[str]) -> Optional[tuple]:
    return None if text is None else parse_float_list(text)


def _load(mode: str, config_path: Optional[Path], overrides: Dict[str, Any]) -> RunConfig:
    """defaults < environment < run file < flags"""
    loader = RunConfigLoader()
    config = loader.defaults()
    if config_path is not None:
        config = loader.load(config_path, config)
    return loader.merge(config, {"mode": mode, **overrides}).validate()


def _finish(config: RunConfig, out_dir: Path):
    RunConfigLoader().dump(config, out_dir / "run_config.txt")


def _failure_dir(kwargs: Dict[str, Any]) -> Path:
    """Output directory of a run that stopped early: flag, then run file, then environment."""
    if kwargs.get("out_dir"):
        return Path(kwargs["out_dir"])
    loader = RunConfigLoader()
    try:
        if kwargs.get("config"):
            return Path(loader.load(kwargs["config"]).out_dir)
    except ConfigError:
        pass
    return Path(loader.defaults().out_dir)


def guarded(command):
    """Map lab errors to exit codes with the usual ❌ [ERROR] line."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (ConfigError, GridError, ConvexityError, DomainViolationError) as e:
            typer.echo(f"❌ [ERROR] {e}")
            raise typer.Exit(EXIT_CONFIG_ERROR)
        except LabError as e:
            typer.echo(f"❌ [ERROR] {type(e).__name__}: {e}")
            path = write_json(_failure_dir(kwargs) / "failure.json", e.to_dict())
            typer.echo(f"💾 Wrote {path}")
            raise typer.Exit(EXIT_SOLVER_FAILURE)

    return wrapper


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🎯 RADIAL - Shooting on a ball, Lemma-type convexity and bound checks       │
# └─────────────────────────────────────────────────────────────────────────────┘
@app.command()
@guarded
def radial(
    problem: Optional[str] = ProblemOpt,
    g: Optional[str] = GOpt,
    f: Optional[str] = FOpt,
    s_limit: Optional[float] = SLimitOpt,
    R: Optional[float] = typer.Option(None, "--R", help="⭕ Ball radius"),
    n: Optional[int] = typer.Option(None, "--n", help="📏 Dimension n >= 2"),
    h_r: Optional[float] = typer.Option(None, "--h-r", help="📏 Radial step (<= R/200)"),
    beta: Optional[str] = BetaOpt,
    tol_shoot: Optional[float] = typer.Option(None, "--tol-shoot", help="🎯 |φ(R)| tolerance"),
    out_dir: Optional[Path] = OutOpt,
    config: Optional[Path] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """
    🎯 Radial profile by shooting, with convexity and sandwich checks
    """
    configure_logging(verbose or get_output_config()["verbose"])
    cfg = _load(
        "radial",
        config,
        {"problem": problem, "g": g, "f": f, "s_limit": s_limit, "R": R, "n": n, "h_r": h_r,
         "betas": _floats(beta), "shoot_tol": tol_shoot, "out_dir": str(out_dir) if out_dir else None},
    )
    spec = cfg.problem_spec()
    out = Path(cfg.out_dir)
    typer.echo(f"📋 Shooting {spec.name} (n={spec.n}) on the ball R={cfg.R:g}")
    profile = shoot(spec, spec.n, cfg.R, tol=cfg.shoot_tol, h_r=cfg.radial_step())
    _finish(cfg, out)
    if isinstance(profile, ExistenceFailure):
        write_json(out / "failure.json", profile.to_dict())
        echo_lines(format_failure(profile.to_dict()))
        raise typer.Exit(EXIT_SOLVER_FAILURE)
    result = verify_radial(spec, cfg.R, cfg.betas, solution=profile)
    write_csv(out / "profile.csv", profile.dump_rows())
    payload = result.to_dict()
    write_json(out / "radial_report.json", payload)
    echo_lines(format_report(payload))
    typer.echo(f"💾 Wrote {out / 'profile.csv'} and {out / 'radial_report.json'}")
    raise typer.Exit(EXIT_PASS if result.passed else EXIT_CHECK_FAILURE)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔧 SOLVE2D - Newton solve with field, grid and derived dumps                │
# └─────────────────────────────────────────────────────────────────────────────┘
@app.command()
@guarded
def solve2d(
    problem: Optional[str] = ProblemOpt,
    g: Optional[str] = GOpt,
    f: Optional[str] = FOpt,
    s_limit: Optional[float] = SLimitOpt,
    domain: Optional[str] = DomainOpt,
    h: Optional[float] = HOpt,
    beta: Optional[str] = BetaOpt,
    schedule: Optional[str] = typer.Option(None, "--schedule", help="📈 Comma-separated load factors"),
    tol_newton: Optional[float] = typer.Option(None, "--tol-newton", help="🎯 Max-norm residual target"),
    out_dir: Optional[Path] = OutOpt,
    config: Optional[Path] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """
    🔧 Solve on a clipped grid and dump field, grid, derived fields and solver log
    """
    configure_logging(verbose or get_output_config()["verbose"])
    cfg = _load(
        "solve2d",
        config,
        {"problem": problem, "g": g, "f": f, "s_limit": s_limit, "domain": domain, "h": h,
         "betas": _floats(beta), "schedule": _floats(schedule), "newton_tol": tol_newton,
         "out_dir": str(out_dir) if out_dir else None},
    )
    spec, dom = cfg.problem_spec(), cfg.domain_spec()
    out = Path(cfg.out_dir)
    grid = make_grid(dom, cfg.h, min_nodes_across=cfg.min_nodes_across, min_leg=cfg.min_leg, boundary_count=cfg.boundary_samples)
    typer.echo(f"📋 {spec.name} on {dom.describe()}: {grid.n_unknowns} unknowns ({grid.n_merged} merged nodes)")
    fld = newton_solve(spec, grid, cfg.schedule, cfg.newton_config())
    _finish(cfg, out)
    write_csv(out / "grid.csv", grid.dump_rows())
    write_jsonl(out / "solver_log.jsonl", fld.history)
    if not fld.converged:
        write_json(out / "failure.json", fld.failure.to_dict())
        echo_lines(format_failure(fld.failure.to_dict()))
        raise typer.Exit(EXIT_SOLVER_FAILURE)
    write_csv(out / "field.csv", fld.dump_rows())
    write_csv(out / "derived.csv", derived_rows(spec, derive(fld), cfg.betas[0]))
    write_json(out / "summary.json", fld.summary())
    typer.echo(f"✅ Converged: u_min = {fld.u_min:.10g}, residual {fld.residual_norm:.2e}")
    typer.echo(f"💾 Wrote field, grid, derived and solver log to {out}")
    raise typer.Exit(EXIT_PASS)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🏁 VERIFY - Full verification report                                        │
# └─────────────────────────────────────────────────────────────────────────────┘
@app.command()
@guarded
def verify(
    problem: Optional[str] = ProblemOpt,
    g: Optional[str] = GOpt,
    f: Optional[str] = FOpt,
    s_limit: Optional[float] = SLimitOpt,
    domain: Optional[str] = DomainOpt,
    h: Optional[float] = HOpt,
    beta: Optional[str] = BetaOpt,
    refine: bool = typer.Option(True, "--refine/--no-refine", help="🔁 Also solve at 2h for order estimates"),
    tol_newton: Optional[float] = typer.Option(None, "--tol-newton", help="🎯 Max-norm residual target"),
    out_dir: Optional[Path] = OutOpt,
    config: Optional[Path] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """
    🏁 Solve, derive fields and run every theorem and identity check
    """
    configure_logging(verbose or get_output_config()["verbose"])
    cfg = _load(
        "verify",
        config,
        {"problem": problem, "g": g, "f": f, "s_limit": s_limit, "domain": domain, "h": h,
         "betas": _floats(beta), "newton_tol": tol_newton, "out_dir": str(out_dir) if out_dir else None},
    )
    spec, dom = cfg.problem_spec(), cfg.domain_spec()
    out = Path(cfg.out_dir)
    typer.echo(f"📋 Verifying {spec.name} on {dom.describe()} at h={cfg.h:g}")
    report = run_verification(
        spec, dom, cfg.h, cfg.betas, cfg.schedule, cfg.newton_config(),
        refine=refine, min_nodes_across=cfg.min_nodes_across, boundary_count=cfg.boundary_samples, min_leg=cfg.min_leg,
    )
    _finish(cfg, out)
    payload = report.to_dict()
    write_json(out / "report.json", payload)
    echo_lines(format_report(payload))
    typer.echo(f"💾 Wrote {out / 'report.json'}")
    if report.failure is not None:
        write_json(out / "failure.json", report.failure)
        raise typer.Exit(EXIT_SOLVER_FAILURE)
    raise typer.Exit(EXIT_PASS if report.passed else EXIT_CHECK_FAILURE)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 📊 BOUNDS - Closed-form bound table and the Lorentzian validity map         │
# └─────────────────────────────────────────────────────────────────────────────┘
@app.command()
@guarded
def bounds(
    alpha: Optional[str] = typer.Option(None, "--alpha", help="📊 Comma-separated α values"),
    existence_map: bool = typer.Option(False, "--existence-map", help="🗺️ Also bisect the Lorentzian existence radius"),
    n: Optional[int] = typer.Option(None, "--n", help="📏 Dimension for the existence map"),
    out_dir: Optional[Path] = OutOpt,
    config: Optional[Path] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """
    📊 Tabulate the Euclidean and Lorentzian gradient bounds over α
    """
    configure_logging(verbose or get_output_config()["verbose"])
    cfg = _load(
        "bounds",
        config,
        {"alphas": _floats(alpha), "existence_map": existence_map or None, "n": n,
         "out_dir": str(out_dir) if out_dir else None},
    )
    if any(not a > 0.0 for a in cfg.alphas):
        raise ConfigError(f"alpha values must be positive, got {cfg.alphas}")
    out = Path(cfg.out_dir)
    rows = bounds_table(cfg.alphas)
    typer.echo("📊 Gradient bounds q_m²:")
    echo_lines(format_bounds_row(row) for row in rows)
    payload: Dict[str, Any] = {"bounds": rows}
    if cfg.existence_map:
        vmap = validity_map(cfg.n)
        payload["validity_map"] = vmap
        exists = vmap["existence"]
        typer.echo(f"🗺️ Lorentzian bound valid for ball radius R <= {vmap['R_alpha']:.6g}")
        typer.echo(f"🗺️ Radial spacelike solution found up to R = {exists['R_exists']}, fails from R = {exists['R_fails']}")
    _finish(cfg, out)
    write_csv(out / "bounds.csv", rows, columns=("alpha", "euclid", "lorentz", "lorentz_error"))
    write_json(out / "bounds.json", payload)
    raise typer.Exit(EXIT_PASS)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# │ 🔁 SWEEP - Grid-spacing ladder for order studies                            │
# └─────────────────────────────────────────────────────────────────────────────┘
def _sweep_rows(cfg: RunConfig, out: Path) -> List[Dict[str, Any]]:
    """One verification per rung (no inner refinement), then factors between rungs."""
    spec, dom = cfg.problem_spec(), cfg.domain_spec()
    reference = None
    if dom.kind == "disk":
        result = shoot(spec, spec.n, dom.param("R"), tol=cfg.shoot_tol)
        reference = result.u_min if isinstance(result, RadialSolution) else None
    rows = []
    for h in sorted(cfg.ladder, reverse=True):
        report = run_verification(
            spec, dom, h, cfg.betas, cfg.schedule, cfg.newton_config(),
            refine=False, min_nodes_across=cfg.min_nodes_across, boundary_count=cfg.boundary_samples, min_leg=cfg.min_leg,
        )
        payload = report.to_dict()
        write_json(out / f"report_h={h:g}.json", payload)
        solver = payload["meta"]["solver"]
        row: Dict[str, Any] = {
            "h": h,
            "unknowns": solver["unknowns"],
            "converged": solver["converged"],
            "u_min": solver["u_min"],
            "pass": payload["pass"],
        }
        if report.failure is not None:
            row["failure"] = report.failure
        else:
            row["boundary_identity_max"] = report.section("boundary_identity").quantities["max_residual"]
            row["v_equation_max"] = report.section("v_equation").quantities["max_abs_residual"]
            if reference is not None:
                row["u_min_error"] = abs(solver["u_min"] - reference)
        rows.append(row)
        typer.echo(f"  h={h:<10.6g} unknowns={row['unknowns']:<7d} u_min={row['u_min']:.10g} pass={row['pass']}")
    for coarse, fine in zip(rows, rows[1:]):
        for key in ("u_min_error", "boundary_identity_max"):
            if coarse.get(key) and fine.get(key):
                fine[f"{key}_factor"] = coarse[key] / fine[key]
                fine[f"{key}_order"] = math.log2(coarse[key] / fine[key])
    return rows


@app.command()
@guarded
def sweep(
    problem: Optional[str] = ProblemOpt,
    g: Optional[str] = GOpt,
    f: Optional[str] = FOpt,
    s_limit: Optional[float] = SLimitOpt,
    domain: Optional[str] = DomainOpt,
    ladder: Optional[str] = typer.Option(None, "--ladder", help="🪜 Comma-separated grid spacings"),
    out_dir: Optional[Path] = OutOpt,
    config: Optional[Path] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """
    🔁 Repeat the verification over a grid-spacing ladder and report convergence factors
    """
    configure_logging(verbose or get_output_config()["verbose"])
    cfg = _load(
        "sweep",
        config,
        {"problem": problem, "g": g, "f": f, "s_limit": s_limit, "domain": domain,
         "ladder": _floats(ladder), "out_dir": str(out_dir) if out_dir else None},
    )
    out = Path(cfg.out_dir)
    typer.echo(f"🔁 Sweeping {cfg.problem} on {cfg.domain} over h in {list(cfg.ladder)}")
    rows = _sweep_rows(cfg, out)
    _finish(cfg, out)
    columns = sorted({key for row in rows for key in row} - {"failure"}, key=lambda k: (k != "h", k))
    write_csv(out / "sweep.csv", rows, columns=columns)
    write_json(out / "sweep.json", {"problem": cfg.problem, "domain": cfg.domain, "rungs": rows})
    failed = [{"h": row["h"], **row["failure"]} for row in rows if "failure" in row]
    if failed:
        write_json(out / "failure.json", {"kind": failed[0]["kind"], "rungs": failed})
        raise typer.Exit(EXIT_SOLVER_FAILURE)
    raise typer.Exit(EXIT_PASS if all(row["pass"] for row in rows) else EXIT_CHECK_FAILURE)


# ┌─────────────────────────────────────────────────────────────────────────────┐
# 🚀 MAIN ENTRY POINT: Run CLI
# └─────────────────────────────────────────────────────────────────────────────┘
if __name__ == "__main__":
    app()
