//! Radial reference solutions on the disk/ball, independent of the lattice.
//!
//! For radially symmetric, radially non-decreasing u with slope w = u' >= 0,
//! the operator |Du|^gamma M+(D^2 u) acts as
//!
//! ```text
//! |w|^gamma [ Lambda (w')+ - lambda (w')- + (N-1)( Lambda (w/r)+ - lambda (w/r)- ) ]
//! ```
//!
//! and the superlevel set {u >= u(r)} is the annulus {|x| >= r}, of measure
//! omega_N (R^N - r^N), with omega_2 = pi and omega_3 = 4 pi / 3. Two
//! independent oracles are built on this reduction:
//!
//! * a closed form for constant right-hand side c:
//!   u(r) = g - a (R^(beta+1) - r^(beta+1)) / (beta+1), beta = 1/(gamma+1),
//!   a = ( c / (Lambda (beta + N - 1)) )^(1/(gamma+1));
//! * a shooting integrator for profile right-hand sides f: classical
//!   fourth-order steps on the degeneracy-removing variable
//!   v = w^(gamma+1)/(gamma+1) (the implicit Pucci relation re-solved each
//!   step, selecting the Lambda or lambda branch from the current signs),
//!   with a series start on the first step out of the origin and trapezoidal
//!   reconstruction of u anchored at u(R) = g.
//!
//! Profiles are validated (w >= 0, finite values) and record how often the
//! radial curvature changes sign.

use crate::error::{Error, Result};
use crate::levelset::MonotoneRhs;
use crate::pucci::Ellipticity;
use std::io::Write;

/// Internal integration substeps per reported sample; keeps the trapezoidal
/// reconstruction error well under the cross-oracle tolerance.
const SUBSTEPS: usize = 8;

/// Unit-ball volume for the supported dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("radial oracles support N in {{2, 3}}, got {n}"),
    }
}

#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub gamma: f64,
    pub ell: Ellipticity,
    pub dim_n: usize,
    pub radius: f64,
    pub g_const: f64,
    /// False when a validity post-check failed (the constructors also refuse
    /// to return clearly broken profiles).
    pub valid: bool,
    /// Number of sign changes of w' along the profile.
    pub curvature_sign_changes: usize,
}

impl RadialProfile {
    /// Linear interpolation in r, clamped at the ends.
    pub fn eval(&self, r: f64) -> f64 {
        let rows: Vec<(f64, f64)> = self.radii.iter().copied().zip(self.u.iter().copied()).collect();
        crate::domain::interp_clamped(&rows, r)
    }

    /// CSV export with columns r, u, w.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let fmt17 = crate::report::fmt17;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "r,u,w")?;
        for k in 0..self.radii.len() {
            writeln!(
                out,
                "{},{},{}",
                fmt17(self.radii[k]),
                fmt17(self.u[k]),
                fmt17(self.w[k])
            )?;
        }
        Ok(())
    }
}

fn check_params(gamma: f64, n: usize, radius: f64, samples: usize) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::config(format!("gamma must be >= 0, got {gamma}")));
    }
    if n != 2 && n != 3 {
        return Err(Error::config(format!("radial oracles support N in {{2, 3}}, got {n}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::config(format!("radius must be positive, got {radius}")));
    }
    if samples < 16 {
        return Err(Error::config(format!("need at least 16 samples, got {samples}")));
    }
    Ok(())
}

/// Closed-form profile for constant right-hand side c >= 0.
pub fn closed_form_constant_rhs(
    gamma: f64,
    ell: Ellipticity,
    dim_n: usize,
    c: f64,
    radius: f64,
    g_const: f64,
    samples: usize,
) -> Result<RadialProfile> {
    check_params(gamma, dim_n, radius, samples)?;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::config(format!("constant rhs must be >= 0, got {c}")));
    }
    let beta = 1.0 / (gamma + 1.0);
    let a = (c / (ell.upper * (beta + dim_n as f64 - 1.0))).powf(beta);
    let mut radii = Vec::with_capacity(samples + 1);
    let mut u = Vec::with_capacity(samples + 1);
    let mut w = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let r = radius * k as f64 / samples as f64;
        radii.push(r);
        w.push(a * r.powf(beta));
        u.push(g_const - a * (radius.powf(beta + 1.0) - r.powf(beta + 1.0)) / (beta + 1.0));
    }
    Ok(RadialProfile {
        radii,
        u,
        w,
        gamma,
        ell,
        dim_n,
        radius,
        g_const,
        valid: true,
        curvature_sign_changes: 0,
    })
}

/// Substitute a profile back into the radial operator with finite-difference
/// slopes and return the maximum absolute residual against `f_of_r` over
/// r in [R/10, R(1 - 1/256)]. Exceeding `tol` is an oracle-invalid error.
pub fn verify_radial_substitution(
    profile: &RadialProfile,
    f_of_r: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<f64> {
    let n = profile.radii.len();
    if n < 3 {
        return Err(Error::contract("profile too short to verify"));
    }
    let (lo, hi) = (profile.radius / 10.0, profile.radius * (1.0 - 1.0 / 256.0));
    let lam = profile.ell.lower;
    let cap = profile.ell.upper;
    let nm1 = (profile.dim_n - 1) as f64;
    let mut worst = 0.0f64;
    for k in 1..n - 1 {
        let r = profile.radii[k];
        if r < lo || r > hi {
            continue;
        }
        let w = profile.w[k];
        let wp = (profile.w[k + 1] - profile.w[k - 1]) / (profile.radii[k + 1] - profile.radii[k - 1]);
        let wr = w / r;
        let pucci = branch(wp, lam, cap) + nm1 * branch(wr, lam, cap);
        let resid = (w.abs().powf(profile.gamma) * pucci - f_of_r(r)).abs();
        worst = worst.max(resid);
    }
    if worst > tol {
        return Err(Error::OracleInvalid(format!(
            "substitution residual {worst:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    Ok(worst)
}

#[inline]
fn branch(x: f64, lam: f64, cap: f64) -> f64 {
    if x >= 0.0 {
        cap * x
    } else {
        lam * x
    }
}

/// Shooting oracle for a profile right-hand side: the measure argument is
/// the exact annulus measure omega_N (R^N - r^N), so c(r) = f(...) is
/// non-increasing in r.
pub fn shoot_radial(
    f: &MonotoneRhs,
    gamma: f64,
    ell: Ellipticity,
    dim_n: usize,
    radius: f64,
    g_const: f64,
    samples: usize,
) -> Result<RadialProfile> {
    check_params(gamma, dim_n, radius, samples)?;
    let omega = unit_ball_volume(dim_n);
    let rn = radius.powi(dim_n as i32);
    let c = |r: f64| f.eval(omega * (rn - r.powi(dim_n as i32)));

    // Transformed slope variable: v = w^(gamma+1)/(gamma+1), so
    // v' = w^gamma w' and the implicit Pucci relation becomes
    //   v' = q / Lambda  if q >= 0,   v' = q / lambda  otherwise,
    // with q = c(r) - (N-1) Lambda (gamma+1) v / r. Near the origin
    // v ~ C r with C = c(0) / (Lambda (1 + (N-1)(gamma+1))).
    let gp1 = gamma + 1.0;
    let kk = (dim_n as f64 - 1.0) * gp1;
    let c0 = c(0.0);
    let slope0 = c0 / (ell.upper * (1.0 + kk));
    let deriv = |r: f64, v: f64| -> f64 {
        let q = c(r) - ell.upper * kk * v / r;
        if q >= 0.0 {
            q / ell.upper
        } else {
            q / ell.lower
        }
    };

    let m = samples * SUBSTEPS;
    let dr = radius / m as f64;
    let mut v = vec![0.0f64; m + 1];
    let mut w = vec![0.0f64; m + 1];
    v[1] = slope0 * dr;
    let to_w = |v: f64| -> f64 { (gp1 * v).powf(1.0 / gp1) };
    w[0] = 0.0;
    w[1] = to_w(v[1]);
    for k in 1..m {
        let r = k as f64 * dr;
        let k1 = deriv(r, v[k]);
        let k2 = deriv(r + 0.5 * dr, v[k] + 0.5 * dr * k1);
        let k3 = deriv(r + 0.5 * dr, v[k] + 0.5 * dr * k2);
        let k4 = deriv(r + dr, v[k] + dr * k3);
        let next = v[k] + dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::OracleInvalid(format!("slope blew up near r = {r:.6}")));
        }
        // The true v never crosses zero for f >= 0; clamp only roundoff.
        v[k + 1] = next.max(0.0);
        w[k + 1] = to_w(v[k + 1]);
    }

    // Trapezoidal cumulative integral of w on the fine lattice; the first
    // cell [0, dr] uses the exact series integral.
    let a_series = (gp1 * slope0).powf(1.0 / gp1);
    let beta = 1.0 / gp1;
    let mut cum = vec![0.0f64; m + 1];
    cum[1] = a_series * dr.powf(beta + 1.0) / (beta + 1.0);
    for k in 1..m {
        cum[k + 1] = cum[k] + 0.5 * dr * (w[k] + w[k + 1]);
    }
    let w_total = cum[m];

    let mut radii_out = Vec::with_capacity(samples + 1);
    let mut u_out = Vec::with_capacity(samples + 1);
    let mut w_out = Vec::with_capacity(samples + 1);
    for s in 0..=samples {
        let k = s * SUBSTEPS;
        radii_out.push(k as f64 * dr);
        u_out.push(g_const - (w_total - cum[k]));
        w_out.push(w[k]);
    }

    let mut sign_changes = 0usize;
    let mut last_sign = 0i32;
    for k in 1..w.len() {
        let d = w[k] - w[k - 1];
        let s = if d > 1e-14 {
            1
        } else if d < -1e-14 {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                sign_changes += 1;
            }
            last_sign = s;
        }
    }

    let valid = w_out.iter().all(|x| x.is_finite() && *x >= 0.0)
        && u_out.iter().all(|x| x.is_finite());
    if !valid {
        return Err(Error::OracleInvalid("profile failed the sign/finiteness post-check".into()));
    }
    Ok(RadialProfile {
        radii: radii_out,
        u: u_out,
        w: w_out,
        gamma,
        ell,
        dim_n,
        radius,
        g_const,
        valid,
        curvature_sign_changes: sign_changes,
    })
}
