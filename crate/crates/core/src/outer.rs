//! Outer driver: continuation in the viscosity parameter and damped
//! fixed-point iteration on the measure coupling.
//!
//! The measure right-hand side h(x) = f(|{u >= u(x)}|) is frozen at the
//! current iterate, the regularized problem is solved by the inner marcher,
//! and the result is blended back. Each viscosity rung eps_j = eps_0 2^-j
//! (clamped to end exactly at eps_min) runs a doubling ladder of
//! mollification windows i_0, 2 i_0, ..., i_max followed by one stage with
//! the exact (unmollified) coupling. Everything is warm-started, so later
//! stages cost little once the iterate stops moving.
//!
//! Two safety monitors run alongside:
//! * damping: if the fixed-point gap grows on two consecutive sweeps the
//!   blend weight is halved (floor 1/8);
//! * depth: after the first rung the solution's dip below its boundary
//!   extension calibrates a constant C so that dip <= C f(|O|)^(1/(1+gamma))
//!   with generous slack; later rungs must stay within it, otherwise the
//!   run aborts with a contract error instead of silently drifting.

use crate::domain::BoundarySpec;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Stencil};
use crate::inner::{harmonic_extension, pseudo_time_solve, InnerConfig};
use crate::levelset::{h_exact, h_mollified, MonotoneRhs};
use crate::pucci::{Ellipticity, FrameSet};

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub gamma: f64,
    pub ell: Ellipticity,
    pub f: MonotoneRhs,
    pub g: BoundarySpec,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        self.g.validate()
    }
}

/// Continuation and fixed-point schedule. The defaults are the reference
/// settings; studies override individual fields.
#[derive(Debug, Clone)]
pub struct SchedulePlan {
    pub eps0: f64,
    pub eps_min: f64,
    /// First mollification window; doubled until `i_max`, then one exact stage.
    pub i0: u32,
    pub i_max: u32,
    /// Fixed-point tolerance is this factor times (1 + max |g|).
    pub tol_fixedpoint_factor: f64,
    pub max_picard: u32,
    /// Initial blend weight for the fixed-point update, in (0, 1].
    pub damping: f64,
}

impl Default for SchedulePlan {
    fn default() -> Self {
        SchedulePlan {
            eps0: 0.1,
            eps_min: 1e-4,
            i0: 4,
            i_max: 32,
            tol_fixedpoint_factor: 1e-6,
            max_picard: 60,
            damping: 1.0,
        }
    }
}

impl SchedulePlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_min > 0.0) || !(self.eps0 >= self.eps_min) {
            return Err(Error::config(format!(
                "need eps0 >= eps_min > 0, got eps0 = {}, eps_min = {}",
                self.eps0, self.eps_min
            )));
        }
        if self.i0 == 0 || self.i_max < self.i0 {
            return Err(Error::config(format!(
                "need i_max >= i0 >= 1, got i0 = {}, i_max = {}",
                self.i0, self.i_max
            )));
        }
        if !(self.tol_fixedpoint_factor > 0.0) {
            return Err(Error::config("tol_fixedpoint_factor must be positive"));
        }
        if self.max_picard == 0 {
            return Err(Error::config("max_picard must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }

    /// Halving ladder from eps0 down to exactly eps_min.
    pub fn ladder(&self) -> Vec<f64> {
        let mut out = vec![self.eps0];
        let mut cur = self.eps0;
        while cur > self.eps_min * (1.0 + 1e-12) {
            cur *= 0.5;
            if cur <= self.eps_min * (1.0 + 1e-12) {
                out.push(self.eps_min);
                break;
            }
            out.push(cur);
        }
        out
    }

    /// Mollification windows for one rung; `None` is the exact-coupling stage.
    pub fn mollification_schedule(&self) -> Vec<Option<u32>> {
        let mut out = Vec::new();
        let mut i = self.i0;
        while i < self.i_max {
            out.push(Some(i));
            i = i.saturating_mul(2);
        }
        out.push(Some(self.i_max));
        out.push(None);
        out
    }
}

/// Loop-control knobs forwarded to the inner marcher.
#[derive(Debug, Clone)]
pub struct InnerKnobs {
    pub cfl_safety: f64,
    pub tol_residual_factor: f64,
    pub max_iters: u64,
}

impl Default for InnerKnobs {
    fn default() -> Self {
        InnerKnobs { cfl_safety: 0.5, tol_residual_factor: 1e-8, max_iters: 2_000_000 }
    }
}

#[derive(Debug, Clone)]
pub struct StageRecord {
    pub eps: f64,
    pub mollification: Option<u32>,
    pub picard_steps: u32,
    pub final_gap: f64,
    pub inner_iterations: u64,
    pub damping_used: f64,
    pub wall_ms: f64,
    /// Subsampled residual trace concatenated across the stage's sweeps:
    /// (cumulative inner iteration, residual sup-norm, cumulative ms).
    pub residual_log: Vec<(u64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub stages: Vec<StageRecord>,
    pub eps_ladder: Vec<f64>,
    /// Sup-norm change of the iterate across each rung (first entry measures
    /// the move away from the boundary extension).
    pub rung_gaps: Vec<f64>,
    /// Sup-norm of the iterate after each rung.
    pub sup_norms: Vec<f64>,
    /// Calibrated depth constant (0 when the right-hand side vanishes).
    pub c_geom: f64,
    pub fixed_point_tol: f64,
    pub total_inner_iterations: u64,
}

struct PicardOutcome {
    field: Field,
    record: StageRecord,
}

fn picard_stage(
    v0: Field,
    eps: f64,
    moll: Option<u32>,
    prob: &ProblemSpec,
    plan: &SchedulePlan,
    cfg: &InnerConfig,
    tol_fp: f64,
    sten: &Stencil,
    grid: &Grid,
) -> Result<PicardOutcome> {
    let start = std::time::Instant::now();
    let mut v = v0;
    let mut theta = plan.damping;
    let mut prev_gap = f64::INFINITY;
    let mut rising = 0u32;
    let mut gaps: Vec<f64> = Vec::new();
    let mut inner_total = 0u64;
    let mut wall_base = 0.0f64;
    let mut residual_log: Vec<(u64, f64, f64)> = Vec::new();

    for step in 1..=plan.max_picard {
        let h = match moll {
            Some(i) => h_mollified(&v, &prob.f, i, grid)?,
            None => h_exact(&v, &prob.f, grid)?,
        };
        let (w, rep) = pseudo_time_solve(&v, &h, cfg, sten, grid)?;
        for &(it, res, ms) in &rep.residual_history {
            residual_log.push((inner_total + it, res, wall_base + ms));
        }
        inner_total += rep.iterations;
        wall_base += rep.wall_ms;
        let gap = w.linf_diff(&v, grid);
        gaps.push(gap);
        if gap <= tol_fp {
            return Ok(PicardOutcome {
                field: w,
                record: StageRecord {
                    eps,
                    mollification: moll,
                    picard_steps: step,
                    final_gap: gap,
                    inner_iterations: inner_total,
                    damping_used: theta,
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    residual_log,
                },
            });
        }
        if gap > prev_gap {
            rising += 1;
            if rising >= 2 && theta > 0.125 {
                theta = (theta * 0.5).max(0.125);
                rising = 0;
            }
        } else {
            rising = 0;
        }
        prev_gap = gap;
        if theta >= 1.0 {
            v = w;
        } else {
            for &idx in grid.inside() {
                let i = idx as usize;
                v.data[i] += theta * (w.data[i] - v.data[i]);
            }
        }
    }
    Err(Error::NonConvergence {
        message: format!(
            "fixed-point gap {prev_gap:.3e} still above {tol_fp:.3e} after {} sweeps (eps = {eps:.3e}, window = {moll:?})",
            plan.max_picard
        ),
        history: gaps,
    })
}

/// Full constructive pipeline. Returns the final iterate together with the
/// per-stage log.
pub fn solve(
    prob: &ProblemSpec,
    plan: &SchedulePlan,
    knobs: &InnerKnobs,
    sten: &Stencil,
    grid: &Grid,
) -> Result<(Field, PipelineReport)> {
    prob.validate()?;
    plan.validate()?;
    let ladder = plan.ladder();
    let moll_sched = plan.mollification_schedule();
    let tol_fp = plan.tol_fixedpoint_factor * (1.0 + sten.g_sup_abs);

    let mut v = harmonic_extension(sten, grid)?;
    let ext_floor = v.min_inside(grid);

    // Depth monitor scale: largest value the coupling can take, through the
    // homogeneity of the operator.
    let f_cap = prob.f.eval(grid.measure());
    let depth_scale = if f_cap > 0.0 { f_cap.powf(1.0 / (1.0 + prob.gamma)) } else { 0.0 };
    let mut c_geom = 0.0f64;

    let mut stages = Vec::new();
    let mut rung_gaps = Vec::new();
    let mut sup_norms = Vec::new();
    let mut total_inner = 0u64;

    for &eps in &ladder {
        let cfg = InnerConfig {
            gamma: prob.gamma,
            ell: prob.ell,
            eps,
            frames: FrameSet::default_2d(),
            cfl_safety: knobs.cfl_safety,
            tol_residual_factor: knobs.tol_residual_factor,
            max_iters: knobs.max_iters,
        };
        cfg.validate()?;
        let rung_start = v.clone();
        for &moll in &moll_sched {
            let out = picard_stage(v, eps, moll, prob, plan, &cfg, tol_fp, sten, grid)?;
            total_inner += out.record.inner_iterations;
            stages.push(out.record);
            v = out.field;
        }
        rung_gaps.push(v.linf_diff(&rung_start, grid));
        sup_norms.push(v.linf_norm(grid));

        let dip = (ext_floor - v.min_inside(grid)).max(0.0);
        if depth_scale > 0.0 {
            if c_geom == 0.0 {
                c_geom = 1.5 * dip / depth_scale;
            } else if dip > c_geom * depth_scale + 10.0 * tol_fp {
                return Err(Error::contract(format!(
                    "solution depth {dip:.6e} exceeds the calibrated bound {:.6e} at eps = {eps:.3e}",
                    c_geom * depth_scale
                )));
            }
        } else if dip > 1e-4 * (1.0 + sten.g_sup_abs) {
            return Err(Error::contract(format!(
                "zero right-hand side but the solution dips {dip:.3e} below its boundary extension"
            )));
        }
    }

    let report = PipelineReport {
        stages,
        eps_ladder: ladder,
        rung_gaps,
        sup_norms,
        c_geom,
        fixed_point_tol: tol_fp,
        total_inner_iterations: total_inner,
    };
    Ok((v, report))
}
