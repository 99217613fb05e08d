//! Acceptance gate: one test per criterion, tightest tolerances pinned here.
//! Each test prints a single summary line; the harness line per test is the
//! machine-readable pass/fail record.

use gradeq::domain::{BoundarySpec, Domain};
use gradeq::grid::{Field, Grid, Stencil};
use gradeq::levelset::MonotoneRhs;
use gradeq::outer::{solve, InnerKnobs, ProblemSpec, SchedulePlan};
use gradeq::properties::{
    maximum_principle_suite, mollified_law_suite, operator_identity_suite,
};
use gradeq::pucci::Ellipticity;
use gradeq::radial::{closed_form_constant_rhs, shoot_radial, verify_radial_substitution};
use std::process::Command;
use std::time::Instant;

const PROPERTY_SEED: u64 = 7;

fn disk_problem(gamma: f64, ell: Ellipticity, f: MonotoneRhs) -> ProblemSpec {
    ProblemSpec { gamma, ell, f, g: BoundarySpec::Constant(0.0) }
}

fn solve_on_disk(prob: &ProblemSpec, plan: &SchedulePlan, res: u32) -> (Grid, Field) {
    let grid = Grid::build(Domain::disk(1.0).unwrap(), res).unwrap();
    let sten = Stencil::build(&grid, &prob.g).unwrap();
    let (u, _) = solve(prob, plan, &InnerKnobs::default(), &sten, &grid).unwrap();
    (grid, u)
}

fn rel_linf_vs(grid: &Grid, u: &Field, exact: impl Fn(f64) -> f64, scale: f64) -> f64 {
    let mut worst = 0.0f64;
    for &idx in grid.inside() {
        let p = grid.point(idx);
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        worst = worst.max((u.get(idx) - exact(r)).abs());
    }
    worst / scale
}

/// Shared body for the two closed-form ladders (criteria 1 and 2): the
/// degenerate profile u(r) = (2/3)(r^(3/2) - 1) solves both problems.
fn closed_form_ladder(label: &str, ell: Ellipticity, c: f64, budget_s: f64) {
    let start = Instant::now();
    // Machine-verified oracle first: the closed form must pass substitution.
    let profile = closed_form_constant_rhs(1.0, ell, 2, c, 1.0, 0.0, 4096).unwrap();
    let oracle_resid = verify_radial_substitution(&profile, |_| c, 1e-6).unwrap();

    let prob = disk_problem(1.0, ell, MonotoneRhs::constant(c).unwrap());
    let plan = SchedulePlan::default();
    let exact = |r: f64| (2.0 / 3.0) * (r.powf(1.5) - 1.0);

    // Single-threaded by contract: the runtime budget assumes one worker.
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let errors: Vec<f64> = pool.install(|| {
        [16u32, 32, 64]
            .iter()
            .map(|&res| {
                let (grid, u) = solve_on_disk(&prob, &plan, res);
                rel_linf_vs(&grid, &u, exact, 2.0 / 3.0)
            })
            .collect()
    });
    let elapsed = start.elapsed().as_secs_f64();

    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let pass = monotone && errors[2] <= 5e-2 && elapsed <= budget_s && oracle_resid <= 1e-6;
    println!(
        "{label}: {} - oracle residual {oracle_resid:.2e} (<= 1e-6), errors {errors:?} monotone={monotone}, final <= 5e-2, {elapsed:.1}s <= {budget_s}s",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(oracle_resid <= 1e-6, "oracle self-check failed: {oracle_resid:.3e}");
    assert!(monotone, "errors not monotone: {errors:?}");
    assert!(errors[2] <= 5e-2, "final error {:.3e} above 5e-2", errors[2]);
    assert!(elapsed <= budget_s, "runtime {elapsed:.1}s over budget {budget_s}s");
}

#[test]
fn criterion_1_degenerate_closed_form_ladder() {
    closed_form_ladder("criterion 1", Ellipticity::new(1.0, 1.0).unwrap(), 1.5, 300.0);
}

#[test]
fn criterion_2_pucci_closed_form_ladder() {
    closed_form_ladder("criterion 2", Ellipticity::new(1.0, 2.0).unwrap(), 3.0, 300.0);
}

#[test]
fn criterion_3_nonlocal_radial_cross_check() {
    // f(s) = s: the right-hand side is the superlevel-set measure itself.
    let f = MonotoneRhs::from_breakpoints(vec![(0.0, 0.0), (4.0, 4.0)]).unwrap();
    let profile = shoot_radial(&f, 1.0, Ellipticity::new(1.0, 1.0).unwrap(), 2, 1.0, 0.0, 4096).unwrap();
    let crhs = |r: f64| std::f64::consts::PI * (1.0 - r * r);
    let self_resid = verify_radial_substitution(&profile, crhs, 1e-5).unwrap();

    let prob = disk_problem(1.0, Ellipticity::new(1.0, 1.0).unwrap(), f);
    let (grid, u) = solve_on_disk(&prob, &SchedulePlan::default(), 64);
    let scale = profile.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rel = rel_linf_vs(&grid, &u, |r| profile.eval(r), scale);

    let pass = rel <= 5e-2 && self_resid <= 1e-5;
    println!(
        "criterion 3: {} - oracle self-residual {self_resid:.2e} (<= 1e-5), relative sup error {rel:.2e} (<= 5e-2)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(self_resid <= 1e-5);
    assert!(rel <= 5e-2, "relative error {rel:.3e}");
}

#[test]
fn criterion_4_operator_identities_and_matrix_laws() {
    let verdicts = operator_identity_suite(PROPERTY_SEED);
    let pass = verdicts.iter().all(|v| v.pass);
    println!(
        "criterion 4: {} - {}",
        if pass { "PASS" } else { "FAIL" },
        verdicts.iter().map(|v| format!("{}={}", v.name, v.pass)).collect::<Vec<_>>().join(", ")
    );
    for v in verdicts {
        assert!(v.pass, "{}: {}", v.name, v.detail);
    }
}

#[test]
fn criterion_5_mollified_rhs_laws() {
    let verdicts = mollified_law_suite(PROPERTY_SEED);
    let pass = verdicts.iter().all(|v| v.pass);
    println!(
        "criterion 5: {} - {}",
        if pass { "PASS" } else { "FAIL" },
        verdicts.iter().map(|v| format!("{}={}", v.name, v.pass)).collect::<Vec<_>>().join(", ")
    );
    for v in verdicts {
        assert!(v.pass, "{}: {}", v.name, v.detail);
    }
}

#[test]
fn criterion_6_maximum_principle_and_comparison() {
    let verdicts = maximum_principle_suite(PROPERTY_SEED);
    let pass = verdicts.iter().all(|v| v.pass);
    println!(
        "criterion 6: {} - {}",
        if pass { "PASS" } else { "FAIL" },
        verdicts.iter().map(|v| format!("{}={}", v.name, v.pass)).collect::<Vec<_>>().join(", ")
    );
    for v in verdicts {
        assert!(v.pass, "{}: {}", v.name, v.detail);
    }
}

#[test]
fn criterion_7_viscosity_continuation_stability() {
    // Criterion-1 problem, eps driven low enough that the last halving moves
    // the iterate by a physically negligible amount; two distinct ladders
    // sharing eps_min must agree at the endpoint.
    let prob = disk_problem(1.0, Ellipticity::new(1.0, 1.0).unwrap(), MonotoneRhs::constant(1.5).unwrap());
    let grid = Grid::build(Domain::disk(1.0).unwrap(), 32).unwrap();
    let sten = Stencil::build(&grid, &prob.g).unwrap();

    let plan_a = SchedulePlan { eps0: 1e-1, eps_min: 2e-6, ..SchedulePlan::default() };
    let plan_b = SchedulePlan { eps0: 6.4e-2, eps_min: 2e-6, ..SchedulePlan::default() };
    let (ua, rep_a) = solve(&prob, &plan_a, &InnerKnobs::default(), &sten, &grid).unwrap();
    let (ub, rep_b) = solve(&prob, &plan_b, &InnerKnobs::default(), &sten, &grid).unwrap();

    let bound = 10.0 * rep_a.fixed_point_tol;
    let gap_a = *rep_a.rung_gaps.last().unwrap();
    let gap_b = *rep_b.rung_gaps.last().unwrap();
    let cross = ua.linf_diff(&ub, &grid);
    assert_eq!(rep_a.eps_ladder.last(), rep_b.eps_ladder.last());
    assert_ne!(rep_a.eps_ladder.len(), rep_b.eps_ladder.len());

    let pass = gap_a <= bound && gap_b <= bound && cross <= bound;
    println!(
        "criterion 7: {} - final rung gaps {gap_a:.2e} / {gap_b:.2e}, cross-ladder agreement {cross:.2e} (all <= {bound:.1e})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(gap_a <= bound, "ladder A final rung gap {gap_a:.3e} above {bound:.1e}");
    assert!(gap_b <= bound, "ladder B final rung gap {gap_b:.3e} above {bound:.1e}");
    assert!(cross <= bound, "ladders disagree by {cross:.3e} at shared eps_min");
}

#[test]
fn criterion_8_gamma_zero_poisson_regression() {
    // gamma = 0 collapses the pipeline to (1 + eps_min) Laplace(u) = 1. The
    // exact solution (r^2 - 1) / (4 (1 + eps_min)) is quadratic, and the
    // stencil is exact on quadratics, so the error sits at the solver
    // tolerance floor instead of decaying like h^2. Pinned logic: pass when
    // both errors are at the floor (<= 1e-4 relative), otherwise require
    // the 16 -> 32 error ratio to reach 3.
    let plan = SchedulePlan::default();
    let eps_min = plan.eps_min;
    let prob = disk_problem(0.0, Ellipticity::new(1.0, 1.0).unwrap(), MonotoneRhs::constant(1.0).unwrap());
    let exact = move |r: f64| (r * r - 1.0) / (4.0 * (1.0 + eps_min));
    let scale = 1.0 / (4.0 * (1.0 + eps_min));

    let errors: Vec<f64> = [16u32, 32]
        .iter()
        .map(|&res| {
            let (grid, u) = solve_on_disk(&prob, &plan, res);
            rel_linf_vs(&grid, &u, exact, scale)
        })
        .collect();

    let floor = 1e-4;
    let at_floor = errors[0] <= floor && errors[1] <= floor;
    let ratio = errors[0] / errors[1].max(1e-300);
    let pass = at_floor || ratio >= 3.0;
    println!(
        "criterion 8: {} - errors {errors:?}, at tolerance floor {floor:.0e}: {at_floor}, ratio {ratio:.2}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "errors {errors:?} neither at floor {floor:.0e} nor contracting by 3 (ratio {ratio:.2})");
}

/// Strip the wall_ms column (the third) from convergence CSV text.
fn strip_wall(text: &str) -> String {
    text.lines()
        .map(|l| l.splitn(3, ',').take(2).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

fn artifact_map(root: &std::path::Path) -> std::collections::BTreeMap<String, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn compare_trees(a: &std::path::Path, b: &std::path::Path) -> Vec<String> {
    let ma = artifact_map(a);
    let mb = artifact_map(b);
    let mut mismatches = Vec::new();
    if ma.keys().collect::<Vec<_>>() != mb.keys().collect::<Vec<_>>() {
        mismatches.push("artifact sets differ".to_string());
        return mismatches;
    }
    for (name, data_a) in &ma {
        let data_b = &mb[name];
        let same = if name.contains("convergence/") || name.contains("convergence\\") {
            strip_wall(&String::from_utf8_lossy(data_a)) == strip_wall(&String::from_utf8_lossy(data_b))
        } else {
            data_a == data_b
        };
        if !same {
            mismatches.push(name.clone());
        }
    }
    mismatches
}

#[test]
fn criterion_9_byte_identical_artifacts_at_any_thread_count() {
    let bin = env!("CARGO_BIN_EXE_gradeq");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/c9_determinism.toml");
    let tmp = tempfile::tempdir().unwrap();
    let runs = [
        ("run1", "1"),
        ("run2", "1"),
        ("run4", "4"),
    ];
    for (tag, threads) in &runs {
        let status = Command::new(bin)
            .args(["--config", config, "--out"])
            .arg(tmp.path().join(tag))
            .env("GRADEQ_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success(), "{tag} exited with {status}");
    }
    let repeat = compare_trees(&tmp.path().join("run1"), &tmp.path().join("run2"));
    let threads = compare_trees(&tmp.path().join("run1"), &tmp.path().join("run4"));
    let pass = repeat.is_empty() && threads.is_empty();
    println!(
        "criterion 9: {} - repeat mismatches {repeat:?}, 1-vs-4-thread mismatches {threads:?} (wall_ms column excluded)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(repeat.is_empty(), "repeat run artifacts differ: {repeat:?}");
    assert!(threads.is_empty(), "thread count changed artifacts: {threads:?}");
}
