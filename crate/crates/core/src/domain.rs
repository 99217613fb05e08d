//! Bounded domains in the plane and Dirichlet boundary data.
//!
//! Three shape families are supported: disk, axis-aligned rectangle, and
//! annulus, all centered at the origin. Each shape answers three geometric
//! questions exactly (closed form, no iteration unless floating point forces
//! a bisection fallback):
//!
//! * is a point strictly inside,
//! * the signed distance to the boundary,
//! * the first crossing of a ray segment with the boundary.
//!
//! The ray query is what the lattice uses to cut stencil arms, so its
//! accuracy budget (1e-12 on the hit point) is what the grid tests pin.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Shape {
    Disk { radius: f64 },
    Rectangle { widths: [f64; 2] },
    Annulus { r_in: f64, r_out: f64 },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Domain {
    pub shape: Shape,
}

impl Domain {
    pub fn disk(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::config(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Domain { shape: Shape::Disk { radius } })
    }

    pub fn rectangle(widths: [f64; 2]) -> Result<Self> {
        if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::config(format!(
                "rectangle widths must be positive, got [{}, {}]",
                widths[0], widths[1]
            )));
        }
        Ok(Domain { shape: Shape::Rectangle { widths } })
    }

    pub fn annulus(r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0) || !r_in.is_finite() || !r_out.is_finite() {
            return Err(Error::config(format!("annulus radii must be positive, got {r_in}, {r_out}")));
        }
        if r_in >= r_out {
            return Err(Error::config(format!(
                "annulus needs r_in < r_out, got r_in = {r_in}, r_out = {r_out}"
            )));
        }
        Ok(Domain { shape: Shape::Annulus { r_in, r_out } })
    }

    /// Exact Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius } => std::f64::consts::PI * radius * radius,
            Shape::Rectangle { widths } => widths[0] * widths[1],
            Shape::Annulus { r_in, r_out } => std::f64::consts::PI * (r_out * r_out - r_in * r_in),
        }
    }

    /// Half-widths of the tight axis-aligned bounding box.
    pub fn half_extents(&self) -> [f64; 2] {
        match self.shape {
            Shape::Disk { radius } => [radius, radius],
            Shape::Rectangle { widths } => [widths[0] / 2.0, widths[1] / 2.0],
            Shape::Annulus { r_out, .. } => [r_out, r_out],
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.signed_distance(p) < 0.0
    }

    /// Negative inside, positive outside, zero on the boundary. Exact
    /// distance for all three shapes (including rectangle corners).
    pub fn signed_distance(&self, p: [f64; 2]) -> f64 {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        match self.shape {
            Shape::Disk { radius } => r - radius,
            Shape::Rectangle { widths } => {
                let qx = p[0].abs() - widths[0] / 2.0;
                let qy = p[1].abs() - widths[1] / 2.0;
                let ox = qx.max(0.0);
                let oy = qy.max(0.0);
                (ox * ox + oy * oy).sqrt() + qx.max(qy).min(0.0)
            }
            Shape::Annulus { r_in, r_out } => (r_in - r).max(r - r_out),
        }
    }

    /// First `t` in `(0, t_max]` with `p + t*dir` on the boundary, for a unit
    /// direction `dir`. Returns `None` when the open segment stays strictly
    /// on one side. A bisection fallback covers the rare case where roundoff
    /// makes the closed forms and `contains` disagree near the boundary.
    pub fn first_crossing(&self, p: [f64; 2], dir: [f64; 2], t_max: f64) -> Option<f64> {
        let hit = match self.shape {
            Shape::Disk { radius } => circle_crossing(p, dir, radius, t_max),
            Shape::Rectangle { widths } => {
                let mut best: Option<f64> = None;
                for axis in 0..2 {
                    if dir[axis] == 0.0 {
                        continue;
                    }
                    for wall in [widths[axis] / 2.0, -widths[axis] / 2.0] {
                        let t = (wall - p[axis]) / dir[axis];
                        if t > 0.0 && t <= t_max {
                            // The hit must lie on the actual wall segment.
                            let other = 1 - axis;
                            let o = p[other] + t * dir[other];
                            if o.abs() <= widths[other] / 2.0 + 1e-12 {
                                best = Some(best.map_or(t, |b: f64| b.min(t)));
                            }
                        }
                    }
                }
                best
            }
            Shape::Annulus { r_in, r_out } => {
                let a = circle_crossing(p, dir, r_in, t_max);
                let b = circle_crossing(p, dir, r_out, t_max);
                match (a, b) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                }
            }
        };
        if hit.is_some() {
            return hit;
        }
        // Fallback: sign change of the distance along the segment.
        let inside0 = self.contains(p);
        let end = [p[0] + t_max * dir[0], p[1] + t_max * dir[1]];
        if self.contains(end) == inside0 {
            return None;
        }
        let (mut lo, mut hi) = (0.0f64, t_max);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let q = [p[0] + mid * dir[0], p[1] + mid * dir[1]];
            if self.contains(q) == inside0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// Smallest positive root of |p + t*dir| = radius within (0, t_max].
fn circle_crossing(p: [f64; 2], dir: [f64; 2], radius: f64, t_max: f64) -> Option<f64> {
    // t^2 + 2 (p.dir) t + (|p|^2 - R^2) = 0 for unit dir.
    let b = p[0] * dir[0] + p[1] * dir[1];
    let c = p[0] * p[0] + p[1] * p[1] - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Evaluate the smaller root in a cancellation-safe order.
    let (r1, r2) = if b > 0.0 {
        let q = -b - sq;
        (c / q, q)
    } else {
        let q = -b + sq;
        (q, c / q)
    };
    let mut best: Option<f64> = None;
    for t in [r1, r2] {
        if t > 1e-14 && t <= t_max {
            best = Some(best.map_or(t, |x: f64| x.min(t)));
        }
    }
    best
}

/// Dirichlet data g on the domain boundary.
///
/// `Points` is the generality escape hatch: a list of (location, value)
/// samples, evaluated by nearest sample. The structured families evaluate
/// exactly at the arm intersection points the grid produces.
#[derive(Debug, Clone, Serialize)]
pub enum BoundarySpec {
    Constant(f64),
    /// g(x, y) = a*x + b*y + c
    Affine { a: f64, b: f64, c: f64 },
    /// Piecewise-linear in r = |x|; rows sorted by r, clamped at the ends.
    RadialTable(Vec<(f64, f64)>),
    /// Nearest-sample lookup over explicit (point, value) rows.
    Points(Vec<([f64; 2], f64)>),
}

impl BoundarySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            BoundarySpec::Constant(v) => {
                if !v.is_finite() {
                    return Err(Error::config("constant boundary value must be finite"));
                }
            }
            BoundarySpec::Affine { a, b, c } => {
                if ![a, b, c].iter().all(|v| v.is_finite()) {
                    return Err(Error::config("affine boundary coefficients must be finite"));
                }
            }
            BoundarySpec::RadialTable(rows) => {
                if rows.is_empty() {
                    return Err(Error::config("radial boundary table is empty"));
                }
                for (k, w) in rows.windows(2).enumerate() {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::config(format!(
                            "radial boundary table must have strictly increasing r; row {} has r = {}, row {} has r = {}",
                            k, w[0].0, k + 1, w[1].0
                        )));
                    }
                }
                if rows.iter().any(|(r, v)| !r.is_finite() || !v.is_finite()) {
                    return Err(Error::config("radial boundary table has non-finite entries"));
                }
            }
            BoundarySpec::Points(rows) => {
                if rows.is_empty() {
                    return Err(Error::config("point boundary table is empty"));
                }
            }
        }
        Ok(())
    }

    /// Evaluate g at a point assumed to lie on the boundary. No contract
    /// check; see [`boundary_value`] for the checked public entry.
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            BoundarySpec::Constant(v) => *v,
            BoundarySpec::Affine { a, b, c } => a * p[0] + b * p[1] + c,
            BoundarySpec::RadialTable(rows) => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                interp_clamped(rows, r)
            }
            BoundarySpec::Points(rows) => {
                let mut best = (f64::INFINITY, 0.0);
                for (q, v) in rows {
                    let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2);
                    if d2 < best.0 {
                        best = (d2, *v);
                    }
                }
                best.1
            }
        }
    }
}

/// Piecewise-linear interpolation over sorted (x, y) rows, clamped outside.
pub(crate) fn interp_clamped(rows: &[(f64, f64)], x: f64) -> f64 {
    if x <= rows[0].0 {
        return rows[0].1;
    }
    if x >= rows[rows.len() - 1].0 {
        return rows[rows.len() - 1].1;
    }
    let k = rows.partition_point(|(r, _)| *r <= x);
    let (x0, y0) = rows[k - 1];
    let (x1, y1) = rows[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Checked boundary evaluation: `point` must lie on the boundary to within
/// `tol`; anything farther is a contract violation.
pub fn boundary_value(g: &BoundarySpec, domain: &Domain, point: [f64; 2], tol: f64) -> Result<f64> {
    let d = domain.signed_distance(point).abs();
    if d > tol {
        return Err(Error::contract(format!(
            "boundary_value called at ({}, {}) which is {d:.3e} from the boundary (tolerance {tol:.3e})",
            point[0], point[1]
        )));
    }
    Ok(g.eval(point))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measures_are_exact() {
        let d = Domain::disk(1.0).unwrap();
        assert!((d.measure() - std::f64::consts::PI).abs() < 1e-15);
        let r = Domain::rectangle([2.0, 0.5]).unwrap();
        assert!((r.measure() - 1.0).abs() < 1e-15);
        let a = Domain::annulus(0.5, 1.0).unwrap();
        assert!((a.measure() - 0.75 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn invalid_shapes_are_config_errors() {
        assert!(Domain::disk(0.0).is_err());
        assert!(Domain::rectangle([1.0, -1.0]).is_err());
        assert!(Domain::annulus(1.0, 0.5).is_err());
        assert!(Domain::annulus(1.0, 1.0).is_err());
    }

    #[test]
    fn disk_crossing_is_exact() {
        let d = Domain::disk(1.0).unwrap();
        let t = d.first_crossing([0.5, 0.0], [1.0, 0.0], 1.0).unwrap();
        assert!((t - 0.5).abs() < 1e-14);
        // Ray that stays inside.
        assert!(d.first_crossing([0.0, 0.0], [1.0, 0.0], 0.5).is_none());
        // Diagonal hit.
        let s = 1.0 / 2.0_f64.sqrt();
        let t = d.first_crossing([0.0, 0.0], [s, s], 2.0).unwrap();
        assert!((t - 1.0).abs() < 1e-13);
    }

    #[test]
    fn rectangle_crossing_hits_walls() {
        let r = Domain::rectangle([1.0, 1.0]).unwrap();
        let t = r.first_crossing([0.45, 0.0], [1.0, 0.0], 1.0).unwrap();
        assert!((t - 0.05).abs() < 1e-14);
        let t = r.first_crossing([0.0, -0.3], [0.0, -1.0], 1.0).unwrap();
        assert!((t - 0.2).abs() < 1e-14);
    }

    #[test]
    fn annulus_crossing_sees_both_circles() {
        let a = Domain::annulus(0.5, 1.0).unwrap();
        // Walking inward from r = 0.7 hits the inner circle at t = 0.2.
        let t = a.first_crossing([0.7, 0.0], [-1.0, 0.0], 1.0).unwrap();
        assert!((t - 0.2).abs() < 1e-13);
        // Walking outward hits the outer circle at t = 0.3.
        let t = a.first_crossing([0.7, 0.0], [1.0, 0.0], 1.0).unwrap();
        assert!((t - 0.3).abs() < 1e-13);
        // A chord from inside the annulus can cross the hole: first hit is
        // the inner circle.
        let t = a.first_crossing([-0.7, 0.0], [1.0, 0.0], 2.0).unwrap();
        assert!((t - 0.2).abs() < 1e-13);
    }

    #[test]
    fn signed_distance_signs() {
        let d = Domain::disk(1.0).unwrap();
        assert!(d.signed_distance([0.0, 0.0]) < 0.0);
        assert!(d.signed_distance([2.0, 0.0]) > 0.0);
        let r = Domain::rectangle([1.0, 1.0]).unwrap();
        assert!(r.signed_distance([0.49, 0.49]) < 0.0);
        // Exact corner distance outside.
        let dist = r.signed_distance([0.5 + 3.0, 0.5 + 4.0]);
        assert!((dist - 5.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_value_contract() {
        let d = Domain::disk(1.0).unwrap();
        let g = BoundarySpec::Affine { a: 1.0, b: 0.0, c: 0.0 };
        // g(x,y) = x at (1, 0) on the unit circle evaluates to 1.
        let v = boundary_value(&g, &d, [1.0, 0.0], 1e-12).unwrap();
        assert_eq!(v, 1.0);
        assert!(boundary_value(&g, &d, [1.1, 0.0], 1e-6).is_err());
    }

    #[test]
    fn radial_table_interpolates_and_clamps() {
        let g = BoundarySpec::RadialTable(vec![(0.5, 1.0), (1.0, 3.0)]);
        g.validate().unwrap();
        assert_eq!(g.eval([0.75, 0.0]), 2.0);
        assert_eq!(g.eval([0.1, 0.0]), 1.0);
        assert_eq!(g.eval([2.0, 0.0]), 3.0);
        let bad = BoundarySpec::RadialTable(vec![(1.0, 0.0), (0.5, 0.0)]);
        assert!(bad.validate().is_err());
    }
}
