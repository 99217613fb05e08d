//! Run orchestration: builds the lattice for the configured domain, drives
//! the requested mode, and emits the artifacts under the output directory.
//!
//! Exit codes returned by [`execute`] (and mapped from errors by the CLI):
//! 0 success, 2 invalid configuration, 3 solver non-convergence (a report
//! with the trailing gap history is still written), 4 one or more failed
//! verdicts. Timing summaries go to stderr only; Verdicts and metrics land
//! in the report so every outcome is machine-readable from the artifacts.

use crate::config::{Mode, RunConfig};
use crate::domain::{BoundarySpec, Shape};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Stencil};
use crate::inner::{residual_inf, InnerConfig};
use crate::levelset::h_exact;
use crate::outer::{solve, PipelineReport};
use crate::properties::{full_suite, PropertyVerdict};
use crate::pucci::FrameSet;
use crate::radial::{closed_form_constant_rhs, shoot_radial, verify_radial_substitution, RadialProfile};
use crate::report::{
    write_convergence_csvs, write_oracle_csv, write_solution_csv, write_study_csv,
    write_verdicts_csv, EnvironmentFingerprint, RunReport, StageSummary, StudyRow, Verdict,
};

/// Fixed tolerance for the closed-form oracle's self-check; the closed form
/// is exact, so only finite-difference verification error remains.
const CLOSED_FORM_SELF_TOL: f64 = 1e-6;

pub fn execute(cfg: &RunConfig, config_echo: &str) -> Result<i32> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    match cfg.mode {
        Mode::Solve => run_solve(cfg, config_echo),
        Mode::OracleCompare => run_oracle_compare(cfg, config_echo),
        Mode::ConvergenceStudy => run_study(cfg, config_echo),
        Mode::PropertyCheck => run_property_check(cfg, config_echo),
    }
}

fn base_report(cfg: &RunConfig, echo: &str) -> RunReport {
    RunReport {
        mode: cfg.mode.as_str(),
        seed: cfg.seed,
        environment: EnvironmentFingerprint::current(),
        config_echo: echo.to_string(),
        outcome: "completed".into(),
        error: None,
        failure_history: None,
        stages: vec![],
        eps_ladder: vec![],
        rung_gaps: vec![],
        sup_norms: vec![],
        c_geom: 0.0,
        fixed_point_tol: 0.0,
        verdicts: vec![],
        artifacts: vec![],
        exit_code: 0,
    }
}

fn fill_pipeline(report: &mut RunReport, rep: &PipelineReport) {
    report.stages = rep.stages.iter().map(StageSummary::from).collect();
    report.eps_ladder = rep.eps_ladder.clone();
    report.rung_gaps = rep.rung_gaps.clone();
    report.sup_norms = rep.sup_norms.clone();
    report.c_geom = rep.c_geom;
    report.fixed_point_tol = rep.fixed_point_tol;
}

fn finalize(
    cfg: &RunConfig,
    mut report: RunReport,
    verdicts: Vec<PropertyVerdict>,
) -> Result<i32> {
    let all_pass = verdicts.iter().all(|v| v.pass);
    report.verdicts = verdicts.iter().map(Verdict::from).collect();
    report.exit_code = if all_pass { 0 } else { 4 };
    report.artifacts.push("report.json".into());
    report.write(&cfg.out_dir.join("report.json"))?;
    for v in &verdicts {
        println!("[{}] {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    Ok(report.exit_code)
}

/// Write a report for a run that died in the solver, preserving the gap or
/// residual history for diagnosis.
fn write_failure_report(cfg: &RunConfig, echo: &str, message: &str, history: &[f64]) -> Result<()> {
    let mut report = base_report(cfg, echo);
    report.outcome = "non-convergence".into();
    report.error = Some(message.to_string());
    report.failure_history = Some(history.to_vec());
    report.exit_code = 3;
    report.artifacts.push("report.json".into());
    report.write(&cfg.out_dir.join("report.json"))
}

struct SolveArtifacts {
    grid: Grid,
    sten: Stencil,
    u: Field,
    rep: PipelineReport,
    artifacts: Vec<String>,
}

/// Run the pipeline at one resolution and emit its solution and convergence
/// tables. `tag` distinguishes the per-resolution artifacts of a study.
fn pipeline_with_artifacts(cfg: &RunConfig, resolution: u32, tag: Option<u32>) -> Result<SolveArtifacts> {
    let grid = Grid::build(cfg.domain, resolution)?;
    let sten = Stencil::build(&grid, &cfg.problem.g)?;
    let (u, rep) = solve(&cfg.problem, &cfg.plan, &cfg.knobs, &sten, &grid)?;

    let (sol_name, conv_dir) = match tag {
        Some(r) => (format!("solution_res_{r:03}.csv"), format!("convergence/res_{r:03}")),
        None => ("solution.csv".to_string(), "convergence".to_string()),
    };
    write_solution_csv(&cfg.out_dir.join(&sol_name), &grid, &sten, &u, &cfg.problem.f)?;
    let mut artifacts = vec![sol_name];
    artifacts.extend(write_convergence_csvs(&cfg.out_dir, &conv_dir, &rep.stages)?);

    let total_ms: f64 = rep.stages.iter().map(|s| s.wall_ms).sum();
    eprintln!(
        "resolution {resolution}: {} stages, {} inner iterations, {:.1} s",
        rep.stages.len(),
        rep.total_inner_iterations,
        total_ms / 1e3
    );
    Ok(SolveArtifacts { grid, sten, u, rep, artifacts })
}

/// Residual of the final iterate against the exact (unmollified) coupling
/// at the final viscosity; the honest "did we solve what we claimed" number.
fn self_residual(cfg: &RunConfig, grid: &Grid, sten: &Stencil, u: &Field) -> Result<f64> {
    let h = h_exact(u, &cfg.problem.f, grid)?;
    let icfg = InnerConfig {
        gamma: cfg.problem.gamma,
        ell: cfg.problem.ell,
        eps: cfg.plan.eps_min,
        frames: FrameSet::default_2d(),
        cfl_safety: cfg.knobs.cfl_safety,
        tol_residual_factor: cfg.knobs.tol_residual_factor,
        max_iters: cfg.knobs.max_iters,
    };
    Ok(residual_inf(u, &h, &icfg, sten, grid))
}

fn solve_mode_verdicts(cfg: &RunConfig, out: &SolveArtifacts) -> Result<Vec<PropertyVerdict>> {
    let worst_gap = out
        .rep
        .stages
        .iter()
        .map(|s| s.final_gap)
        .fold(0.0f64, f64::max);
    let resid = self_residual(cfg, &out.grid, &out.sten, &out.u)?;
    Ok(vec![
        PropertyVerdict {
            name: "fixed-point-converged".into(),
            pass: worst_gap <= out.rep.fixed_point_tol,
            detail: format!(
                "worst stage gap {worst_gap:.3e} against tolerance {:.3e}",
                out.rep.fixed_point_tol
            ),
        },
        PropertyVerdict {
            name: "self-residual".into(),
            pass: resid <= cfg.oracle.self_residual_tol,
            detail: format!(
                "residual {resid:.3e} against tolerance {:.3e}",
                cfg.oracle.self_residual_tol
            ),
        },
    ])
}

fn run_solve(cfg: &RunConfig, echo: &str) -> Result<i32> {
    match pipeline_with_artifacts(cfg, cfg.resolution, None) {
        Ok(out) => {
            let verdicts = solve_mode_verdicts(cfg, &out)?;
            let mut report = base_report(cfg, echo);
            fill_pipeline(&mut report, &out.rep);
            report.artifacts = out.artifacts;
            finalize(cfg, report, verdicts)
        }
        Err(Error::NonConvergence { message, history }) => {
            write_failure_report(cfg, echo, &message, &history)?;
            eprintln!("non-convergence: {message}");
            Ok(3)
        }
        Err(e) => Err(e),
    }
}

/// Radial oracle for the configured problem, with its substitution residual.
/// Requires a disk domain with constant boundary data.
fn build_oracle(cfg: &RunConfig) -> Result<(RadialProfile, f64, f64)> {
    let Shape::Disk { radius } = cfg.domain.shape else {
        return Err(Error::config("oracle comparison requires a disk domain"));
    };
    let BoundarySpec::Constant(g0) = cfg.problem.g else {
        return Err(Error::config("oracle comparison requires constant boundary data"));
    };
    let p = &cfg.problem;
    if p.f.is_constant() {
        let c = p.f.eval(0.0);
        let profile =
            closed_form_constant_rhs(p.gamma, p.ell, 2, c, radius, g0, cfg.oracle.samples)?;
        let resid = verify_radial_substitution(&profile, |_| c, f64::INFINITY)?;
        Ok((profile, resid, CLOSED_FORM_SELF_TOL))
    } else {
        let profile = shoot_radial(&p.f, p.gamma, p.ell, 2, radius, g0, cfg.oracle.samples)?;
        let rn = radius * radius;
        let crhs = move |r: f64| p.f.eval(std::f64::consts::PI * (rn - r * r));
        let resid = verify_radial_substitution(&profile, crhs, f64::INFINITY)?;
        Ok((profile, resid, cfg.oracle.self_residual_tol))
    }
}

fn oracle_rel_error(grid: &Grid, u: &Field, profile: &RadialProfile) -> f64 {
    let scale = profile.u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut worst = 0.0f64;
    for &idx in grid.inside() {
        let p = grid.point(idx);
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        worst = worst.max((u.get(idx) - profile.eval(r)).abs());
    }
    worst / scale
}

fn run_oracle_compare(cfg: &RunConfig, echo: &str) -> Result<i32> {
    let (profile, oracle_resid, oracle_tol) = build_oracle(cfg)?;
    match pipeline_with_artifacts(cfg, cfg.resolution, None) {
        Ok(out) => {
            let mut verdicts = solve_mode_verdicts(cfg, &out)?;
            let rel = oracle_rel_error(&out.grid, &out.u, &profile);
            verdicts.push(PropertyVerdict {
                name: "oracle-self-check".into(),
                pass: oracle_resid <= oracle_tol,
                detail: format!(
                    "substitution residual {oracle_resid:.3e} against tolerance {oracle_tol:.1e}"
                ),
            });
            verdicts.push(PropertyVerdict {
                name: "solution-vs-oracle".into(),
                pass: rel <= cfg.oracle.tol_rel_linf,
                detail: format!(
                    "relative sup error {rel:.3e} against tolerance {:.1e}",
                    cfg.oracle.tol_rel_linf
                ),
            });

            write_oracle_csv(&cfg.out_dir.join("oracle_compare.csv"), &out.grid, &out.u, &profile)?;
            profile.write_csv(&cfg.out_dir.join("oracle_profile.csv"))?;
            let mut report = base_report(cfg, echo);
            fill_pipeline(&mut report, &out.rep);
            report.artifacts = out.artifacts;
            report.artifacts.push("oracle_compare.csv".into());
            report.artifacts.push("oracle_profile.csv".into());
            finalize(cfg, report, verdicts)
        }
        Err(Error::NonConvergence { message, history }) => {
            write_failure_report(cfg, echo, &message, &history)?;
            eprintln!("non-convergence: {message}");
            Ok(3)
        }
        Err(e) => Err(e),
    }
}

fn run_study(cfg: &RunConfig, echo: &str) -> Result<i32> {
    let (profile, oracle_resid, oracle_tol) = build_oracle(cfg)?;
    let mut rows: Vec<StudyRow> = Vec::new();
    let mut report = base_report(cfg, echo);
    let mut artifacts: Vec<String> = Vec::new();

    for &res in &cfg.resolutions {
        match pipeline_with_artifacts(cfg, res, Some(res)) {
            Ok(out) => {
                write_oracle_csv(
                    &cfg.out_dir.join(format!("oracle_res_{res:03}.csv")),
                    &out.grid,
                    &out.u,
                    &profile,
                )?;
                artifacts.extend(out.artifacts);
                artifacts.push(format!("oracle_res_{res:03}.csv"));
                rows.push(StudyRow {
                    resolution: res,
                    h: out.grid.h,
                    rel_linf_error: oracle_rel_error(&out.grid, &out.u, &profile),
                });
                fill_pipeline(&mut report, &out.rep);
            }
            Err(Error::NonConvergence { message, history }) => {
                write_failure_report(cfg, echo, &message, &history)?;
                eprintln!("non-convergence at resolution {res}: {message}");
                return Ok(3);
            }
            Err(e) => return Err(e),
        }
    }

    write_study_csv(&cfg.out_dir.join("study.csv"), &rows)?;
    artifacts.push("study.csv".into());
    report.artifacts = artifacts;

    let floor = cfg.study.ratio_error_floor;
    let mut verdicts = vec![PropertyVerdict {
        name: "oracle-self-check".into(),
        pass: oracle_resid <= oracle_tol,
        detail: format!("substitution residual {oracle_resid:.3e} against tolerance {oracle_tol:.1e}"),
    }];
    if cfg.study.expect_monotone {
        let mut ok = true;
        for w in rows.windows(2) {
            let at_floor = w[0].rel_linf_error <= floor && w[1].rel_linf_error <= floor;
            ok &= at_floor || w[1].rel_linf_error <= w[0].rel_linf_error * (1.0 + 1e-9);
        }
        verdicts.push(PropertyVerdict {
            name: "study-monotone".into(),
            pass: ok,
            detail: format!(
                "errors {:?} (floor {floor:.1e})",
                rows.iter().map(|r| r.rel_linf_error).collect::<Vec<_>>()
            ),
        });
    }
    if let Some(bound) = cfg.study.max_final_rel_error {
        let last = rows.last().map(|r| r.rel_linf_error).unwrap_or(f64::INFINITY);
        verdicts.push(PropertyVerdict {
            name: "study-final-error".into(),
            pass: last <= bound,
            detail: format!("final relative error {last:.3e} against bound {bound:.1e}"),
        });
    }
    if let Some(min_ratio) = cfg.study.min_error_ratio {
        let mut ok = true;
        let mut detail = String::new();
        for w in rows.windows(2) {
            let at_floor = w[0].rel_linf_error <= floor && w[1].rel_linf_error <= floor;
            let ratio = w[0].rel_linf_error / w[1].rel_linf_error.max(1e-300);
            if !detail.is_empty() {
                detail.push_str("; ");
            }
            detail.push_str(&format!("{}->{}: ratio {ratio:.2}", w[0].resolution, w[1].resolution));
            if at_floor {
                detail.push_str(" (at floor)");
            }
            ok &= at_floor || ratio >= min_ratio;
        }
        verdicts.push(PropertyVerdict {
            name: "study-error-ratio".into(),
            pass: ok,
            detail: format!("{detail} (need >= {min_ratio}, floor {floor:.1e})"),
        });
    }
    finalize(cfg, report, verdicts)
}

fn run_property_check(cfg: &RunConfig, echo: &str) -> Result<i32> {
    let verdicts = full_suite(cfg.seed);
    write_verdicts_csv(&cfg.out_dir.join("verdicts.csv"), &verdicts)?;
    let mut report = base_report(cfg, echo);
    report.artifacts.push("verdicts.csv".into());
    finalize(cfg, report, verdicts)
}
