//! Pseudo-time solver for the regularized problem with a frozen right-hand
//! side:
//!
//! ```text
//! |Du|^gamma M+(D^2 u) + eps Laplace(u) = h   in the domain,
//! u = g                                       on the boundary.
//! ```
//!
//! Forward Euler on u_t = |Du|^gamma M+(D^2 u) + eps Laplace(u) - h with a
//! per-node step: the monotone discrete operator raises F when any
//! neighbor rises and lowers it when the center rises, so with
//!
//! ```text
//! tau(x) = cfl / ( Lambda |Du(x)|^gamma S_op(x) + eps S_lap(x) + floor )
//! ```
//!
//! (S_op, S_lap the largest possible center coefficients at x) each update
//! is a monotone average and the iteration cannot overshoot. On a uniform
//! interior stencil this reduces to the familiar tau = cfl h^2 / (2 N
//! (Lambda |Du|^gamma + eps)). The degeneracy factor is frozen within each
//! step and re-evaluated from the current iterate.
//!
//! Iteration is Jacobi with two buffers so results are bit-identical for
//! any thread count; the parallel map writes each node's value to its own
//! slot and the residual maximum is reduced serially in lattice order.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Stencil};
use crate::pucci::{
    degeneracy_factor, gradient_central, pucci_plus_discrete, second_difference, Ellipticity,
    FrameSet,
};
use rayon::prelude::*;

/// Additive floor keeping the step finite when both operator terms vanish.
pub const TAU_FLOOR: f64 = 1e-14;

/// History subsampling stride (every 64th iterate plus the final one).
const HISTORY_STRIDE: u64 = 64;

#[derive(Debug, Clone)]
pub struct InnerConfig {
    pub gamma: f64,
    pub ell: Ellipticity,
    /// Viscosity weight in front of the discrete Laplacian.
    pub eps: f64,
    pub frames: FrameSet,
    /// Fraction of the stability limit actually taken. In (0, 1].
    pub cfl_safety: f64,
    /// Stop when the residual sup-norm falls below factor * (1 + max |h|).
    pub tol_residual_factor: f64,
    pub max_iters: u64,
}

impl InnerConfig {
    pub fn new(gamma: f64, ell: Ellipticity, eps: f64) -> Result<InnerConfig> {
        let cfg = InnerConfig {
            gamma,
            ell,
            eps,
            frames: FrameSet::default_2d(),
            cfl_safety: 0.5,
            tol_residual_factor: 1e-8,
            max_iters: 2_000_000,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::config(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.tol_residual_factor > 0.0) {
            return Err(Error::config(format!(
                "tol_residual_factor must be positive, got {}",
                self.tol_residual_factor
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: u64,
    pub final_residual: f64,
    /// Residual threshold the run stopped against.
    pub tolerance: f64,
    /// (iteration, residual sup-norm, elapsed ms), subsampled plus the
    /// final entry. The elapsed column is the only nondeterministic output
    /// the solver produces.
    pub residual_history: Vec<(u64, f64, f64)>,
    pub wall_ms: f64,
}

/// Residual sup-norm of |Du|^gamma M+ u + eps Lap u - h over the active
/// (non-pinned, non-exterior) nodes of the current field.
pub fn residual_inf(u: &Field, h: &Field, cfg: &InnerConfig, sten: &Stencil, grid: &Grid) -> f64 {
    let pinned: Vec<bool> = pinned_mask(grid, sten);
    let mut worst = 0.0f64;
    for (k, &idx) in grid.inside().iter().enumerate() {
        if pinned[k] {
            continue;
        }
        let node = &sten.nodes[k];
        let u0 = u.get(idx);
        let f = node_residual(u, u0, node, cfg, h.get(idx));
        worst = worst.max(f.abs());
    }
    worst
}

#[inline]
fn node_residual(u: &Field, u0: f64, node: &crate::grid::NodeStencil, cfg: &InnerConfig, hval: f64) -> f64 {
    let dfac = if cfg.gamma == 0.0 {
        1.0
    } else {
        degeneracy_factor(gradient_central(u, u0, node), cfg.gamma)
    };
    let mp = pucci_plus_discrete(u, u0, node, &cfg.frames, cfg.ell);
    let lap = if cfg.eps > 0.0 {
        second_difference(u, u0, node, 0) + second_difference(u, u0, node, 1)
    } else {
        0.0
    };
    dfac * mp + cfg.eps * lap - hval
}

fn pinned_mask(grid: &Grid, sten: &Stencil) -> Vec<bool> {
    let mut mask = vec![false; grid.inside().len()];
    for &(idx, _) in &sten.pinned_values {
        let k = sten.inside_pos[idx as usize];
        mask[k as usize] = true;
    }
    mask
}

/// March the frozen-right-hand-side problem to its discrete steady state.
///
/// The returned field is the iterate whose residual was measured, i.e. the
/// convergence check runs before the update is applied. Pinned nodes hold
/// their boundary value throughout and are excluded from the residual.
///
/// With gamma > 0 the viscosity term is what keeps the step bounded at
/// critical points of the iterate; eps = 0 is accepted but can take huge
/// steps where the gradient vanishes and then fail with a non-finite
/// residual. The outer pipeline always passes eps > 0.
pub fn pseudo_time_solve(
    u_init: &Field,
    h: &Field,
    cfg: &InnerConfig,
    sten: &Stencil,
    grid: &Grid,
) -> Result<(Field, SolveReport)> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let inside = grid.inside();
    let m = inside.len();
    let pinned = pinned_mask(grid, sten);
    let active: Vec<u32> = (0..m as u32).filter(|&k| !pinned[k as usize]).collect();

    // Largest center coefficients per node: the operator term takes the
    // worst frame, the viscosity term always uses the two axis pairs.
    let mut s_op = vec![0.0f64; m];
    let mut s_lap = vec![0.0f64; m];
    for k in 0..m {
        let pc = &sten.nodes[k].pair_coeff;
        let mut worst = 0.0f64;
        for frame in &cfg.frames.frames {
            worst = worst.max(frame.iter().map(|&pk| pc[pk]).sum());
        }
        s_op[k] = worst;
        s_lap[k] = pc[0] + pc[1];
    }

    let mut cur = u_init.clone();
    for &(idx, val) in &sten.pinned_values {
        cur.data[idx as usize] = val;
    }
    let mut nxt = cur.clone();

    let tol = cfg.tol_residual_factor * (1.0 + h.linf_norm(grid));
    let cfl = cfg.cfl_safety;
    let mut upd: Vec<(f64, f64)> = Vec::new();
    let mut history: Vec<(u64, f64, f64)> = Vec::new();

    let mut iter = 0u64;
    loop {
        {
            let cur_ref = &cur;
            active
                .par_iter()
                .map(|&k| {
                    let k = k as usize;
                    let idx = inside[k];
                    let node = &sten.nodes[k];
                    let u0 = cur_ref.get(idx);
                    let dfac = if cfg.gamma == 0.0 {
                        1.0
                    } else {
                        degeneracy_factor(gradient_central(cur_ref, u0, node), cfg.gamma)
                    };
                    let mp = pucci_plus_discrete(cur_ref, u0, node, &cfg.frames, cfg.ell);
                    let lap = if cfg.eps > 0.0 {
                        second_difference(cur_ref, u0, node, 0)
                            + second_difference(cur_ref, u0, node, 1)
                    } else {
                        0.0
                    };
                    let f = dfac * mp + cfg.eps * lap - h.get(idx);
                    let denom = cfg.ell.upper * dfac * s_op[k] + cfg.eps * s_lap[k] + TAU_FLOOR;
                    (u0 + cfl / denom * f, f.abs())
                })
                .collect_into_vec(&mut upd);
        }

        let mut res = 0.0f64;
        for &(_, fa) in &upd {
            res = res.max(fa);
        }
        if iter % HISTORY_STRIDE == 0 {
            history.push((iter, res, start.elapsed().as_secs_f64() * 1e3));
        }
        if !res.is_finite() {
            return Err(Error::NonConvergence {
                message: format!("residual became non-finite at iteration {iter}"),
                history: history.iter().map(|&(_, r, _)| r).collect(),
            });
        }
        if res <= tol {
            if history.last().map(|&(i, _, _)| i) != Some(iter) {
                history.push((iter, res, start.elapsed().as_secs_f64() * 1e3));
            }
            let report = SolveReport {
                iterations: iter,
                final_residual: res,
                tolerance: tol,
                residual_history: history,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            return Ok((cur, report));
        }
        if iter >= cfg.max_iters {
            return Err(Error::NonConvergence {
                message: format!(
                    "residual {res:.3e} still above tolerance {tol:.3e} after {iter} iterations"
                ),
                history: history.iter().map(|&(_, r, _)| r).collect(),
            });
        }

        for (pos, &k) in active.iter().enumerate() {
            nxt.data[inside[k as usize] as usize] = upd[pos].0;
        }
        std::mem::swap(&mut cur, &mut nxt);
        iter += 1;
    }
}

/// Initial guess for the outer pipeline: the monotone extension of the
/// boundary data solving the axis-frame discrete Laplace equation, at a
/// deliberately loose tolerance of 1e-6 (1 + max |g|).
pub fn harmonic_extension(sten: &Stencil, grid: &Grid) -> Result<Field> {
    let frames = FrameSet::from_offsets(vec![vec![[1, 0], [0, 1]]])?;
    let cfg = InnerConfig {
        gamma: 0.0,
        ell: Ellipticity::new(1.0, 1.0)?,
        eps: 0.0,
        frames,
        cfl_safety: 0.5,
        tol_residual_factor: 1e-6 * (1.0 + sten.g_sup_abs),
        max_iters: 2_000_000,
    };
    let zero = Field::zeros(grid);
    let (u, _) = pseudo_time_solve(&zero, &zero, &cfg, sten, grid)?;
    Ok(u)
}
