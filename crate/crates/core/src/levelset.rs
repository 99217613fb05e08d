//! Superlevel-set measures and the nonlocal right-hand side.
//!
//! For a field v on the grid, mu(s) = |{v >= s}| is computed from the sorted
//! distinct values with one full cell measure h^2 per non-exterior node (the
//! boundary band therefore carries an O(h) measure bias; see the grid module
//! docs). mu is a step function, constant between field values, so every
//! quantity here is a finite sum of interval-length times measure terms; no
//! quadrature is involved anywhere.
//!
//! The right-hand sides built from a non-decreasing profile f:
//!
//! * exact:      h(x) = f( mu(v(x)) )
//! * mollified:  h_i(x) = f( i * integral_0^(1/i) mu(v(x) - t) dt )
//!
//! The mollified average is >= mu(v(x)) (the integrand only grows as the
//! threshold drops), so h_i dominates h pointwise, decreases as i grows, and
//! equals h exactly once 1/i is smaller than the smallest gap between
//! distinct field values.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Distribution function of a field: sorted distinct values with suffix
/// measures and the prefix integral of mu over value space.
#[derive(Debug, Clone)]
pub struct DistributionFunction {
    /// Distinct values ascending.
    vals: Vec<f64>,
    /// measure_ge[k] = |{v >= vals[k]}|.
    measure_ge: Vec<f64>,
    /// cum[k] = integral of mu from vals[0] to vals[k] (cum[0] = 0).
    cum: Vec<f64>,
    total: f64,
}

impl DistributionFunction {
    /// Build from explicit (value, cell measure) samples.
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<DistributionFunction> {
        if samples.is_empty() {
            return Err(Error::contract("distribution function of an empty field"));
        }
        if samples.iter().any(|(v, m)| !v.is_finite() || !(*m > 0.0)) {
            return Err(Error::contract(
                "distribution function needs finite values and positive cell measures",
            ));
        }
        let mut sorted: Vec<(f64, f64)> = samples.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut vals: Vec<f64> = Vec::new();
        let mut mass: Vec<f64> = Vec::new();
        for (v, m) in sorted {
            if vals.last().is_some_and(|last| *last == v) {
                *mass.last_mut().unwrap() += m;
            } else {
                vals.push(v);
                mass.push(m);
            }
        }
        let k = vals.len();
        let mut measure_ge = vec![0.0; k];
        let mut acc = 0.0;
        for i in (0..k).rev() {
            acc += mass[i];
            measure_ge[i] = acc;
        }
        let total = acc;
        let mut cum = vec![0.0; k];
        for i in 1..k {
            cum[i] = cum[i - 1] + measure_ge[i] * (vals[i] - vals[i - 1]);
        }
        Ok(DistributionFunction { vals, measure_ge, cum, total })
    }

    /// Build from the non-exterior nodes of a field, one h^2 cell each.
    pub fn from_field(v: &Field, grid: &Grid) -> Result<DistributionFunction> {
        let m = grid.cell_measure();
        let samples: Vec<(f64, f64)> =
            grid.inside().iter().map(|&i| (v.get(i), m)).collect();
        DistributionFunction::from_samples(&samples)
    }

    /// mu(s) = |{v >= s}|.
    pub fn measure_ge(&self, s: f64) -> f64 {
        let k = self.vals.partition_point(|v| *v < s);
        if k == self.vals.len() {
            0.0
        } else {
            self.measure_ge[k]
        }
    }

    /// Total measure |Omega| seen by the field.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Smallest gap between distinct values; +inf for a constant field.
    pub fn min_gap(&self) -> f64 {
        self.vals
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of an exact field value (values passed to the per-node queries
    /// must come from the same field the function was built from).
    fn index_of(&self, value: f64) -> usize {
        let k = self.vals.partition_point(|v| *v < value);
        debug_assert!(k < self.vals.len() && self.vals[k] == value, "value not in the field");
        k
    }

    /// Integral of mu over the value interval [lo, vals[idx]], where mu is
    /// extended by `total` below the minimum value. Exact: a finite sum of
    /// interval-length times measure terms organized as prefix sums.
    fn integral_below(&self, idx: usize, lo: f64) -> f64 {
        let v_hi = self.vals[idx];
        if lo >= v_hi {
            return 0.0;
        }
        if lo < self.vals[0] {
            return self.cum[idx] + (self.vals[0] - lo) * self.total;
        }
        let j = self.vals.partition_point(|v| *v <= lo) - 1;
        // lo sits in [vals[j], vals[j+1]); mu on (vals[j], vals[j+1]] is
        // measure_ge[j+1].
        let partial = if j + 1 <= idx { (self.vals[j + 1].min(v_hi) - lo) * self.measure_ge[j + 1] } else { 0.0 };
        let whole = if j + 1 <= idx { self.cum[idx] - self.cum[j + 1] } else { 0.0 };
        whole + partial
    }

    /// Mollified superlevel average i * integral_0^(1/i) mu(value - t) dt for
    /// an exact field value. Clamped to [mu(value), total], which only ever
    /// corrects roundoff: the true average always lies in that interval.
    pub fn mollified_average(&self, value: f64, i: u32) -> f64 {
        assert!(i >= 1, "mollification index must be >= 1");
        let idx = self.index_of(value);
        let mu_here = self.measure_ge[idx];
        let t = 1.0 / i as f64;
        // No value inside the window below: the average equals mu exactly;
        // return it without arithmetic so equality is bitwise.
        if idx == 0 || value - self.vals[idx - 1] >= t {
            return mu_here;
        }
        let avg = self.integral_below(idx, value - t) * i as f64;
        avg.clamp(mu_here, self.total)
    }

    /// Decreasing rearrangement u*(t) = inf { s : |{v < s}| >= t }, realized
    /// over the discrete candidate set as the smallest field value whose
    /// closed sublevel measure reaches t.
    pub fn rearrangement(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.total * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::contract(format!(
                "rearrangement argument t = {t} outside [0, {}]",
                self.total
            )));
        }
        // |{v <= vals[k]}| = total - measure_ge[k+1].
        let k = self
            .measure_ge
            .iter()
            .enumerate()
            .find(|(k, _)| {
                let le = self.total
                    - if *k + 1 < self.measure_ge.len() { self.measure_ge[*k + 1] } else { 0.0 };
                le >= t
            })
            .map(|(k, _)| k)
            .unwrap_or(self.vals.len() - 1);
        Ok(self.vals[k])
    }
}

/// Non-decreasing right-hand-side profile f over superlevel measures,
/// piecewise linear between breakpoints and clamped outside them.
#[derive(Debug, Clone)]
pub struct MonotoneRhs {
    breaks: Vec<(f64, f64)>,
}

impl MonotoneRhs {
    pub fn constant(c: f64) -> Result<MonotoneRhs> {
        MonotoneRhs::from_breakpoints(vec![(0.0, c)])
    }

    pub fn from_breakpoints(breaks: Vec<(f64, f64)>) -> Result<MonotoneRhs> {
        if breaks.is_empty() {
            return Err(Error::config("rhs profile needs at least one breakpoint"));
        }
        for (k, (s, f)) in breaks.iter().enumerate() {
            if !s.is_finite() || !f.is_finite() {
                return Err(Error::config(format!("rhs breakpoint {k} is not finite")));
            }
            if *f < 0.0 {
                return Err(Error::config(format!(
                    "rhs must be nonnegative; breakpoint {k} has f = {f}"
                )));
            }
        }
        for (k, w) in breaks.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::config(format!(
                    "rhs breakpoints must have strictly increasing s; breakpoint {} has s = {}, breakpoint {} has s = {}",
                    k, w[0].0, k + 1, w[1].0
                )));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::config(format!(
                    "rhs must be non-decreasing; breakpoint {} has f = {} after f = {}",
                    k + 1, w[1].1, w[0].1
                )));
            }
        }
        Ok(MonotoneRhs { breaks })
    }

    pub fn eval(&self, s: f64) -> f64 {
        crate::domain::interp_clamped(&self.breaks, s)
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breaks
    }

    pub fn is_constant(&self) -> bool {
        self.breaks.iter().all(|(_, f)| *f == self.breaks[0].1)
    }
}

/// Exact nonlocal right-hand side h(x) = f(|{v >= v(x)}|).
pub fn h_exact(v: &Field, f: &MonotoneRhs, grid: &Grid) -> Result<Field> {
    let df = DistributionFunction::from_field(v, grid)?;
    let mut h = Field::zeros(grid);
    for &i in grid.inside() {
        h.data[i as usize] = f.eval(df.measure_ge(v.get(i)));
    }
    Ok(h)
}

/// Mollified right-hand side h_i(x) = f( i * integral_0^(1/i) |{v >= v(x) - t}| dt ).
pub fn h_mollified(v: &Field, f: &MonotoneRhs, i: u32, grid: &Grid) -> Result<Field> {
    if i < 1 {
        return Err(Error::contract("mollification index must be >= 1"));
    }
    let df = DistributionFunction::from_field(v, grid)?;
    let mut h = Field::zeros(grid);
    for &k in grid.inside() {
        h.data[k as usize] = f.eval(df.mollified_average(v.get(k), i));
    }
    Ok(h)
}

/// Decreasing rearrangement of a field at sublevel mass t.
pub fn decreasing_rearrangement(v: &Field, grid: &Grid, t: f64) -> Result<f64> {
    DistributionFunction::from_samples(
        &grid.inside().iter().map(|&i| (v.get(i), grid.cell_measure())).collect::<Vec<_>>(),
    )?
    .rearrangement(t)
}
