//! TOML run configuration: parsing, defaulting, and validation with
//! diagnostics that name the offending key (parse errors carry line and
//! column from the TOML reader; unknown keys are rejected).

use crate::domain::{BoundarySpec, Domain};
use crate::error::{Error, Result};
use crate::levelset::MonotoneRhs;
use crate::outer::{InnerKnobs, ProblemSpec, SchedulePlan};
use crate::pucci::Ellipticity;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Solve,
    OracleCompare,
    ConvergenceStudy,
    PropertyCheck,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "solve" => Ok(Mode::Solve),
            "oracle-compare" => Ok(Mode::OracleCompare),
            "convergence-study" => Ok(Mode::ConvergenceStudy),
            "property-check" => Ok(Mode::PropertyCheck),
            other => Err(Error::config(format!(
                "mode must be one of solve, oracle-compare, convergence-study, property-check; got {other:?}"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::OracleCompare => "oracle-compare",
            Mode::ConvergenceStudy => "convergence-study",
            Mode::PropertyCheck => "property-check",
        }
    }
}

/// Settings for radial-oracle comparisons.
#[derive(Debug, Clone)]
pub struct OracleCfg {
    pub samples: usize,
    pub tol_rel_linf: f64,
    pub self_residual_tol: f64,
}

impl Default for OracleCfg {
    fn default() -> Self {
        OracleCfg { samples: 4096, tol_rel_linf: 5e-2, self_residual_tol: 1e-5 }
    }
}

/// Expectations checked by convergence-study mode. Unset bounds are not
/// enforced. `ratio_error_floor` exempts resolutions whose error already
/// sits at the tolerance floor from the ratio requirement (the stencil is
/// exact on quadratics, so smooth problems can hit the floor immediately).
#[derive(Debug, Clone)]
pub struct StudyCfg {
    pub expect_monotone: bool,
    pub max_final_rel_error: Option<f64>,
    pub min_error_ratio: Option<f64>,
    pub ratio_error_floor: f64,
}

impl Default for StudyCfg {
    fn default() -> Self {
        StudyCfg {
            expect_monotone: true,
            max_final_rel_error: None,
            min_error_ratio: None,
            ratio_error_floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub domain: Domain,
    pub resolution: u32,
    pub resolutions: Vec<u32>,
    pub problem: ProblemSpec,
    pub plan: SchedulePlan,
    pub knobs: InnerKnobs,
    pub oracle: OracleCfg,
    pub study: StudyCfg,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    seed: Option<u64>,
    out_dir: Option<String>,
    domain: RawDomain,
    problem: RawProblem,
    schedule: Option<RawSchedule>,
    inner: Option<RawInner>,
    oracle: Option<RawOracle>,
    study: Option<RawStudy>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    shape: String,
    radius: Option<f64>,
    widths: Option<[f64; 2]>,
    r_in: Option<f64>,
    r_out: Option<f64>,
    resolution: Option<u32>,
    resolutions: Option<Vec<u32>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    gamma: f64,
    lambda: Option<f64>,
    lambda_upper: Option<f64>,
    f: Option<Vec<[f64; 2]>>,
    f_const: Option<f64>,
    g: Option<RawBoundary>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    kind: String,
    value: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    c: Option<f64>,
    table: Option<Vec<[f64; 2]>>,
    points: Option<Vec<[f64; 3]>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    eps0: Option<f64>,
    eps_min: Option<f64>,
    i0: Option<u32>,
    i_max: Option<u32>,
    tol_fixedpoint_factor: Option<f64>,
    max_picard: Option<u32>,
    damping: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInner {
    cfl_safety: Option<f64>,
    tol_residual_factor: Option<f64>,
    max_iters: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    samples: Option<usize>,
    tol_rel_linf: Option<f64>,
    self_residual_tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    expect_monotone: Option<bool>,
    max_final_rel_error: Option<f64>,
    min_error_ratio: Option<f64>,
    ratio_error_floor: Option<f64>,
}

fn ctx(key: &str, e: Error) -> Error {
    Error::config(format!("{key}: {e}"))
}

fn build_domain(raw: &RawDomain) -> Result<Domain> {
    let need = |field: &str, v: Option<f64>| {
        v.ok_or_else(|| Error::config(format!("domain.{field} is required for shape {:?}", raw.shape)))
    };
    match raw.shape.as_str() {
        "disk" => Domain::disk(need("radius", raw.radius)?).map_err(|e| ctx("domain", e)),
        "rectangle" => {
            let w = raw
                .widths
                .ok_or_else(|| Error::config("domain.widths is required for shape \"rectangle\""))?;
            Domain::rectangle(w).map_err(|e| ctx("domain", e))
        }
        "annulus" => Domain::annulus(need("r_in", raw.r_in)?, need("r_out", raw.r_out)?)
            .map_err(|e| ctx("domain", e)),
        other => Err(Error::config(format!(
            "domain.shape must be disk, rectangle, or annulus; got {other:?}"
        ))),
    }
}

fn build_boundary(raw: Option<&RawBoundary>) -> Result<BoundarySpec> {
    let Some(raw) = raw else {
        return Ok(BoundarySpec::Constant(0.0));
    };
    let spec = match raw.kind.as_str() {
        "constant" => BoundarySpec::Constant(
            raw.value.ok_or_else(|| Error::config("problem.g.value is required for kind \"constant\""))?,
        ),
        "affine" => BoundarySpec::Affine {
            a: raw.a.unwrap_or(0.0),
            b: raw.b.unwrap_or(0.0),
            c: raw.c.unwrap_or(0.0),
        },
        "radial-table" => {
            let t = raw
                .table
                .as_ref()
                .ok_or_else(|| Error::config("problem.g.table is required for kind \"radial-table\""))?;
            BoundarySpec::RadialTable(t.iter().map(|&[r, v]| (r, v)).collect())
        }
        "points" => {
            let p = raw
                .points
                .as_ref()
                .ok_or_else(|| Error::config("problem.g.points is required for kind \"points\""))?;
            BoundarySpec::Points(p.iter().map(|&[x, y, v]| ([x, y], v)).collect())
        }
        other => {
            return Err(Error::config(format!(
                "problem.g.kind must be constant, affine, radial-table, or points; got {other:?}"
            )))
        }
    };
    spec.validate().map_err(|e| ctx("problem.g", e))?;
    Ok(spec)
}

fn build_problem(raw: &RawProblem) -> Result<ProblemSpec> {
    let lambda = raw.lambda.unwrap_or(1.0);
    let upper = raw.lambda_upper.unwrap_or(lambda);
    let ell = Ellipticity::new(lambda, upper).map_err(|e| ctx("problem", e))?;
    let f = match (&raw.f, raw.f_const) {
        (Some(_), Some(_)) => {
            return Err(Error::config("problem.f and problem.f_const are mutually exclusive"))
        }
        (Some(rows), None) => {
            MonotoneRhs::from_breakpoints(rows.iter().map(|&[s, v]| (s, v)).collect())
                .map_err(|e| ctx("problem.f", e))?
        }
        (None, Some(c)) => MonotoneRhs::constant(c).map_err(|e| ctx("problem.f_const", e))?,
        (None, None) => return Err(Error::config("problem needs either f (breakpoints) or f_const")),
    };
    let prob = ProblemSpec { gamma: raw.gamma, ell, f, g: build_boundary(raw.g.as_ref())? };
    prob.validate().map_err(|e| ctx("problem", e))?;
    Ok(prob)
}

fn build_plan(raw: Option<&RawSchedule>) -> Result<SchedulePlan> {
    let mut plan = SchedulePlan::default();
    if let Some(r) = raw {
        if let Some(v) = r.eps0 {
            plan.eps0 = v;
        }
        if let Some(v) = r.eps_min {
            plan.eps_min = v;
        }
        if let Some(v) = r.i0 {
            plan.i0 = v;
        }
        if let Some(v) = r.i_max {
            plan.i_max = v;
        }
        if let Some(v) = r.tol_fixedpoint_factor {
            plan.tol_fixedpoint_factor = v;
        }
        if let Some(v) = r.max_picard {
            plan.max_picard = v;
        }
        if let Some(v) = r.damping {
            plan.damping = v;
        }
    }
    plan.validate().map_err(|e| ctx("schedule", e))?;
    Ok(plan)
}

fn build_knobs(raw: Option<&RawInner>) -> Result<InnerKnobs> {
    let mut knobs = InnerKnobs::default();
    if let Some(r) = raw {
        if let Some(v) = r.cfl_safety {
            knobs.cfl_safety = v;
        }
        if let Some(v) = r.tol_residual_factor {
            knobs.tol_residual_factor = v;
        }
        if let Some(v) = r.max_iters {
            knobs.max_iters = v;
        }
    }
    if !(knobs.cfl_safety > 0.0 && knobs.cfl_safety <= 1.0) {
        return Err(Error::config(format!(
            "inner.cfl_safety must lie in (0, 1], got {}",
            knobs.cfl_safety
        )));
    }
    if !(knobs.tol_residual_factor > 0.0) {
        return Err(Error::config("inner.tol_residual_factor must be positive"));
    }
    if knobs.max_iters == 0 {
        return Err(Error::config("inner.max_iters must be positive"));
    }
    Ok(knobs)
}

/// Parse and validate a config from TOML text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;

    let mode = Mode::parse(raw.mode.as_deref().unwrap_or("solve"))?;
    let domain = build_domain(&raw.domain)?;
    let problem = build_problem(&raw.problem)?;
    let plan = build_plan(raw.schedule.as_ref())?;
    let knobs = build_knobs(raw.inner.as_ref())?;

    let mut oracle = OracleCfg::default();
    if let Some(r) = &raw.oracle {
        if let Some(v) = r.samples {
            oracle.samples = v;
        }
        if let Some(v) = r.tol_rel_linf {
            oracle.tol_rel_linf = v;
        }
        if let Some(v) = r.self_residual_tol {
            oracle.self_residual_tol = v;
        }
    }
    if oracle.samples < 16 {
        return Err(Error::config(format!("oracle.samples must be >= 16, got {}", oracle.samples)));
    }
    if !(oracle.tol_rel_linf > 0.0) || !(oracle.self_residual_tol > 0.0) {
        return Err(Error::config("oracle tolerances must be positive"));
    }

    let mut study = StudyCfg::default();
    if let Some(r) = &raw.study {
        if let Some(v) = r.expect_monotone {
            study.expect_monotone = v;
        }
        study.max_final_rel_error = r.max_final_rel_error.or(study.max_final_rel_error);
        study.min_error_ratio = r.min_error_ratio.or(study.min_error_ratio);
        if let Some(v) = r.ratio_error_floor {
            study.ratio_error_floor = v;
        }
    }

    let resolutions: Vec<u32> = match (&raw.domain.resolutions, raw.domain.resolution) {
        (Some(list), _) if !list.is_empty() => list.clone(),
        (_, Some(r)) => vec![r],
        _ => return Err(Error::config("domain.resolution (or domain.resolutions) is required")),
    };
    let resolution = *resolutions.last().unwrap();
    if mode == Mode::ConvergenceStudy && resolutions.len() < 2 {
        return Err(Error::config(
            "convergence-study needs domain.resolutions with at least two entries",
        ));
    }

    Ok(RunConfig {
        mode,
        seed: raw.seed.unwrap_or(0),
        out_dir: PathBuf::from(raw.out_dir.as_deref().unwrap_or("out")),
        domain,
        resolution,
        resolutions,
        problem,
        plan,
        knobs,
        oracle,
        study,
    })
}

/// Load a config file, returning the validated config together with the raw
/// text (echoed verbatim into reports so runs are reproducible from their
/// own artifacts).
pub fn load_config(path: &Path) -> Result<(RunConfig, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    Ok((cfg, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [domain]
        shape = "disk"
        radius = 1.0
        resolution = 16

        [problem]
        gamma = 1.0
        f_const = 1.0
    "#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.mode, Mode::Solve);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.resolution, 16);
        assert_eq!(cfg.plan.eps0, 0.1);
        assert_eq!(cfg.plan.eps_min, 1e-4);
        assert_eq!(cfg.knobs.max_iters, 2_000_000);
        assert_eq!(cfg.oracle.samples, 4096);
        assert!(matches!(cfg.problem.g, BoundarySpec::Constant(v) if v == 0.0));
        assert!(cfg.problem.f.is_constant());
    }

    #[test]
    fn decreasing_f_breakpoints_are_rejected_by_name() {
        let text = MINIMAL.replace("f_const = 1.0", "f = [[0.0, 1.0], [1.0, 0.5]]");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("non-decreasing"), "unexpected message: {err}");
        assert!(err.contains("breakpoint 1"), "unexpected message: {err}");
    }

    #[test]
    fn inverted_ellipticity_is_rejected() {
        let text = MINIMAL.replace(
            "gamma = 1.0",
            "gamma = 1.0\nlambda = 2.0\nlambda_upper = 1.0",
        );
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("problem"), "unexpected message: {err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = format!("{MINIMAL}\n[schedule]\nepsilon_start = 0.1\n");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("epsilon_start") || err.contains("unknown field"), "{err}");
    }

    #[test]
    fn mode_strings_round_trip() {
        for s in ["solve", "oracle-compare", "convergence-study", "property-check"] {
            assert_eq!(Mode::parse(s).unwrap().as_str(), s);
        }
        assert!(Mode::parse("replay").is_err());
    }

    #[test]
    fn study_mode_needs_a_ladder() {
        let text = MINIMAL.replace("[domain]", "mode = \"convergence-study\"\n[domain]");
        assert!(parse_config(&text).is_err());
        let ok = text.replace("resolution = 16", "resolutions = [16, 32]");
        let cfg = parse_config(&ok).unwrap();
        assert_eq!(cfg.resolutions, vec![16, 32]);
        assert_eq!(cfg.resolution, 32);
    }

    #[test]
    fn boundary_kinds_parse() {
        let affine = MINIMAL.replace(
            "f_const = 1.0",
            "f_const = 1.0\n[problem.g]\nkind = \"affine\"\na = 1.0\nb = -0.5\n",
        );
        let cfg = parse_config(&affine).unwrap();
        assert!(matches!(cfg.problem.g, BoundarySpec::Affine { .. }));

        let table = MINIMAL.replace(
            "f_const = 1.0",
            "f_const = 1.0\n[problem.g]\nkind = \"radial-table\"\ntable = [[0.0, 1.0], [1.0, 2.0]]\n",
        );
        assert!(parse_config(&table).is_ok());

        let bad = MINIMAL.replace(
            "f_const = 1.0",
            "f_const = 1.0\n[problem.g]\nkind = \"mystery\"\n",
        );
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn f_and_f_const_are_mutually_exclusive() {
        let text = MINIMAL.replace("f_const = 1.0", "f_const = 1.0\nf = [[0.0, 1.0], [1.0, 2.0]]");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("mutually exclusive"), "{err}");
    }
}
