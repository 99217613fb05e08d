//! Artifact emission: the JSON run report and the CSV tables.
//!
//! Everything written here is deterministic for a fixed config and seed at
//! any thread count, with one documented exception: the wall_ms column of
//! the convergence CSVs records real elapsed time. Determinism checks
//! compare all artifacts byte for byte and strip only that column.
//!
//! All floating-point values are formatted with 17 significant digits so
//! the artifacts round-trip to the exact f64 bit patterns.

use crate::error::Result;
use crate::grid::{Field, Grid, Stencil};
use crate::levelset::{DistributionFunction, MonotoneRhs};
use crate::outer::StageRecord;
use crate::properties::PropertyVerdict;
use crate::pucci::gradient_central;
use crate::radial::RadialProfile;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Locale-independent 17-significant-digit float formatting: enough digits
/// to reconstruct the exact bit pattern.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Minimal CSV quoting for free-text cells.
fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvironmentFingerprint {
    pub package: &'static str,
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub float_format: &'static str,
}

impl EnvironmentFingerprint {
    pub fn current() -> Self {
        EnvironmentFingerprint {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            float_format: "ieee754-binary64",
        }
    }
}

/// Per-stage pipeline metrics as serialized into the report (wall time is
/// deliberately absent; it lives in the convergence CSVs).
#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub eps: f64,
    pub mollification: Option<u32>,
    pub picard_steps: u32,
    pub final_gap: f64,
    pub inner_iterations: u64,
    pub damping_used: f64,
}

impl From<&StageRecord> for StageSummary {
    fn from(s: &StageRecord) -> Self {
        StageSummary {
            eps: s.eps,
            mollification: s.mollification,
            picard_steps: s.picard_steps,
            final_gap: s.final_gap,
            inner_iterations: s.inner_iterations,
            damping_used: s.damping_used,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl From<&PropertyVerdict> for Verdict {
    fn from(v: &PropertyVerdict) -> Self {
        Verdict { name: v.name.clone(), pass: v.pass, detail: v.detail.clone() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: &'static str,
    pub seed: u64,
    pub environment: EnvironmentFingerprint,
    /// Verbatim text of the config file the run was started from.
    pub config_echo: String,
    /// "completed" or "non-convergence".
    pub outcome: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Trailing gap or residual history when the run did not converge.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_history: Option<Vec<f64>>,
    pub stages: Vec<StageSummary>,
    pub eps_ladder: Vec<f64>,
    pub rung_gaps: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub c_geom: f64,
    pub fixed_point_tol: f64,
    pub verdicts: Vec<Verdict>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub exit_code: i32,
}

impl RunReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let body = serde_json::to_string_pretty(self)
            .expect("report serialization cannot fail");
        writeln!(out, "{body}")?;
        Ok(())
    }
}

/// Solution table: one row per non-exterior node in lattice order.
pub fn write_solution_csv(
    path: &Path,
    grid: &Grid,
    sten: &Stencil,
    u: &Field,
    f: &MonotoneRhs,
) -> Result<()> {
    let dist = DistributionFunction::from_field(u, grid)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,y,u,grad_norm,superlevel_measure,h")?;
    for (k, &idx) in grid.inside().iter().enumerate() {
        let p = grid.point(idx);
        let val = u.get(idx);
        let grad = gradient_central(u, val, &sten.nodes[k]);
        let gn = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
        let mu = dist.measure_ge(val);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(p[0]),
            fmt17(p[1]),
            fmt17(val),
            fmt17(gn),
            fmt17(mu),
            fmt17(f.eval(mu))
        )?;
    }
    Ok(())
}

/// One convergence CSV per pipeline stage, named stage_000.csv and so on.
/// Returns the artifact paths relative to `out_dir`.
pub fn write_convergence_csvs(
    out_dir: &Path,
    subdir: &str,
    stages: &[StageRecord],
) -> Result<Vec<String>> {
    let dir = out_dir.join(subdir);
    std::fs::create_dir_all(&dir)?;
    let mut names = Vec::new();
    for (j, stage) in stages.iter().enumerate() {
        let name = format!("{subdir}/stage_{j:03}.csv");
        let mut out = std::io::BufWriter::new(std::fs::File::create(out_dir.join(&name))?);
        writeln!(out, "iter,residual_inf,wall_ms")?;
        for &(it, res, ms) in &stage.residual_log {
            writeln!(out, "{it},{},{}", fmt17(res), fmt17(ms))?;
        }
        names.push(name);
    }
    Ok(names)
}

/// Node-by-node comparison of the lattice solution against a radial profile.
pub fn write_oracle_csv(path: &Path, grid: &Grid, u: &Field, profile: &RadialProfile) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,y,r,u,u_oracle,abs_err")?;
    for &idx in grid.inside() {
        let p = grid.point(idx);
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let val = u.get(idx);
        let oracle = profile.eval(r);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(p[0]),
            fmt17(p[1]),
            fmt17(r),
            fmt17(val),
            fmt17(oracle),
            fmt17((val - oracle).abs())
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub resolution: u32,
    pub h: f64,
    pub rel_linf_error: f64,
}

/// Error-versus-spacing table for convergence studies.
pub fn write_study_csv(path: &Path, rows: &[StudyRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "resolution,h,rel_linf_error")?;
    for row in rows {
        writeln!(out, "{},{},{}", row.resolution, fmt17(row.h), fmt17(row.rel_linf_error))?;
    }
    Ok(())
}

/// Property-check verdict table.
pub fn write_verdicts_csv(path: &Path, verdicts: &[PropertyVerdict]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "name,pass,detail")?;
    for v in verdicts {
        writeln!(out, "{},{},{}", v.name, v.pass, csv_quote(&v.detail))?;
    }
    Ok(())
}
