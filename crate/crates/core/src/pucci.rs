//! Pucci maximal operator: exact spectral form and monotone wide-stencil form.
//!
//! For a symmetric matrix S with eigenvalues e_i and ellipticity constants
//! 0 < lambda <= Lambda,
//!
//! ```text
//! M+(S) = Lambda * sum of positive e_i + lambda * sum of negative e_i.
//! ```
//!
//! Equivalently M+(S) is the maximum of the frame sums
//! sum_i [ Lambda*(v_i' S v_i)+ - lambda*(v_i' S v_i)- ] over orthonormal
//! frames {v_i}, attained at an eigenframe. The discrete operator evaluates
//! that maximum over a fixed finite frame set using directional second
//! differences, which makes it monotone (each sample enters with a positive
//! coefficient) and a one-sided approximation: it never exceeds the exact
//! operator on quadratics, and matches it whenever the Hessian is diagonal
//! in one of the frames.
//!
//! Eigenvalues are closed-form: quadratic formula for 2x2, trigonometric
//! solution of the characteristic cubic for 3x3.

use crate::error::{Error, Result};
use crate::grid::{ArmRef, Field, NodeStencil, Stencil, CUT, PAIRS};
use serde::Serialize;

/// Ellipticity pair 0 < lambda <= Lambda.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Ellipticity {
    pub lower: f64,
    pub upper: f64,
}

impl Ellipticity {
    pub fn new(lower: f64, upper: f64) -> Result<Ellipticity> {
        if !(lower > 0.0) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::config(format!("ellipticity needs 0 < lambda, got lambda = {lower}")));
        }
        if lower > upper {
            return Err(Error::config(format!(
                "ellipticity needs lambda <= Lambda, got lambda = {lower}, Lambda = {upper}"
            )));
        }
        Ok(Ellipticity { lower, upper })
    }
}

/// Symmetric matrix in dimension 2 or 3, stored as
/// [a11, a22, a33, a12, a13, a23].
#[derive(Debug, Clone, Copy)]
pub struct SymMatrix {
    pub n: usize,
    pub m: [f64; 6],
}

impl SymMatrix {
    pub fn sym2(a11: f64, a12: f64, a22: f64) -> SymMatrix {
        SymMatrix { n: 2, m: [a11, a22, 0.0, a12, 0.0, 0.0] }
    }

    pub fn sym3(a11: f64, a22: f64, a33: f64, a12: f64, a13: f64, a23: f64) -> SymMatrix {
        SymMatrix { n: 3, m: [a11, a22, a33, a12, a13, a23] }
    }

    pub fn diag(d: &[f64]) -> SymMatrix {
        match d.len() {
            2 => SymMatrix::sym2(d[0], 0.0, d[1]),
            3 => SymMatrix::sym3(d[0], d[1], d[2], 0.0, 0.0, 0.0),
            n => panic!("diag supports n in {{2, 3}}, got {n}"),
        }
    }

    pub fn identity(n: usize) -> SymMatrix {
        SymMatrix::diag(&vec![1.0; n])
    }

    pub fn trace(&self) -> f64 {
        self.m[0] + self.m[1] + if self.n == 3 { self.m[2] } else { 0.0 }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        let mut m = [0.0; 6];
        for k in 0..6 {
            m[k] = self.m[k] + other.m[k];
        }
        SymMatrix { n: self.n, m }
    }

    pub fn scale(&self, t: f64) -> SymMatrix {
        let mut m = self.m;
        for v in &mut m {
            *v *= t;
        }
        SymMatrix { n: self.n, m }
    }

    /// Eigenvalues in ascending order; only the first `n` entries are valid.
    pub fn eigenvalues(&self) -> [f64; 3] {
        match self.n {
            2 => {
                let [a, c, _, b, _, _] = self.m;
                let tr = a + c;
                let disc = ((a - c) * 0.5).hypot(b);
                [tr * 0.5 - disc, tr * 0.5 + disc, 0.0]
            }
            3 => eig3(self.m),
            n => panic!("eigenvalues supports n in {{2, 3}}, got {n}"),
        }
    }

    /// Spectral norm (largest eigenvalue magnitude).
    pub fn norm(&self) -> f64 {
        let e = self.eigenvalues();
        e[..self.n].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Closed-form symmetric 3x3 eigenvalues via the characteristic cubic
/// (shifted trigonometric form), ascending.
fn eig3(m: [f64; 6]) -> [f64; 3] {
    let [a11, a22, a33, a12, a13, a23] = m;
    let p1 = a12 * a12 + a13 * a13 + a23 * a23;
    if p1 == 0.0 {
        let mut e = [a11, a22, a33];
        e.sort_by(f64::total_cmp);
        return e;
    }
    let q = (a11 + a22 + a33) / 3.0;
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    // B = (A - q I) / p; r = det(B) / 2 lies in [-1, 1] up to roundoff.
    let b11 = (a11 - q) / p;
    let b22 = (a22 - q) / p;
    let b33 = (a33 - q) / p;
    let b12 = a12 / p;
    let b13 = a13 / p;
    let b23 = a23 / p;
    let det_b = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13)
        + b13 * (b12 * b23 - b22 * b13);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e_hi = q + 2.0 * p * phi.cos();
    let e_lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let e_mid = 3.0 * q - e_hi - e_lo;
    [e_lo, e_mid, e_hi]
}

/// Exact Pucci maximal operator from the eigenvalue decomposition.
pub fn pucci_plus_exact(s: &SymMatrix, ell: Ellipticity) -> f64 {
    let e = s.eigenvalues();
    let mut acc = 0.0;
    for &v in &e[..s.n] {
        acc += if v >= 0.0 { ell.upper * v } else { ell.lower * v };
    }
    acc
}

/// A frame is a set of mutually orthogonal stencil pair directions,
/// referenced by their index in [`grid::PAIRS`]. The default 2D frame set is
/// the axis frame and the diagonal frame; wider stencils would extend this
/// list together with the grid's arm directions.
#[derive(Debug, Clone, Serialize)]
pub struct FrameSet {
    pub frames: Vec<Vec<usize>>,
}

impl FrameSet {
    /// Axis frame {(1,0),(0,1)} and diagonal frame {(1,1),(1,-1)}.
    pub fn default_2d() -> FrameSet {
        FrameSet { frames: vec![vec![0, 1], vec![2, 3]] }
    }

    /// Build from explicit lattice offsets (one list per frame). Offsets must
    /// be nonzero, lie in the 8-neighborhood, and be pairwise orthogonal
    /// within a frame.
    pub fn from_offsets(frames: Vec<Vec<[i32; 2]>>) -> Result<FrameSet> {
        if frames.is_empty() {
            return Err(Error::config("frame set is empty"));
        }
        let mut out = Vec::with_capacity(frames.len());
        for (fi, frame) in frames.iter().enumerate() {
            if frame.len() != 2 {
                return Err(Error::config(format!("frame {fi} must have exactly 2 directions in 2D")));
            }
            let dot = frame[0][0] * frame[1][0] + frame[0][1] * frame[1][1];
            if dot != 0 {
                return Err(Error::config(format!("frame {fi} directions are not orthogonal")));
            }
            let mut pairs = Vec::with_capacity(2);
            for off in frame {
                if off[0].abs() > 1 || off[1].abs() > 1 || (off[0] == 0 && off[1] == 0) {
                    return Err(Error::config(format!(
                        "frame {fi} offset ({}, {}) is outside the supported 8-neighborhood",
                        off[0], off[1]
                    )));
                }
                pairs.push(pair_of_offset(*off)?);
            }
            if pairs[0] == pairs[1] {
                return Err(Error::config(format!("frame {fi} repeats a direction pair")));
            }
            out.push(pairs);
        }
        Ok(FrameSet { frames: out })
    }
}

fn pair_of_offset(off: [i32; 2]) -> Result<usize> {
    for (pk, &(dp, dm)) in PAIRS.iter().enumerate() {
        for d in [dp, dm] {
            if crate::grid::DIRS[d] == off {
                return Ok(pk);
            }
        }
    }
    Err(Error::config(format!("offset ({}, {}) is not a stencil direction", off[0], off[1])))
}

#[inline]
fn sample(u: &Field, arm: &ArmRef) -> f64 {
    if arm.nbr == CUT {
        arm.bval
    } else {
        u.data[arm.nbr as usize]
    }
}

/// Directional second difference along one pair: exact on quadratics for any
/// arm lengths (three-point Shortley-Weller formula).
#[inline]
pub fn second_difference(u: &Field, u0: f64, node: &NodeStencil, pk: usize) -> f64 {
    let (plus, minus) = &node.pair[pk];
    let (a, b) = (plus.dist, minus.dist);
    let up = sample(u, plus);
    let um = sample(u, minus);
    2.0 * (up / (a * (a + b)) + um / (b * (a + b)) - u0 / (a * b))
}

/// Centered gradient from the two axis pairs; unequal arms use the
/// three-point formula that stays exact on quadratics.
#[inline]
pub fn gradient_central(u: &Field, u0: f64, node: &NodeStencil) -> [f64; 2] {
    let mut g = [0.0f64; 2];
    for (k, slot) in g.iter_mut().enumerate() {
        let (plus, minus) = &node.pair[k];
        let (a, b) = (plus.dist, minus.dist);
        let up = sample(u, plus);
        let um = sample(u, minus);
        *slot = (b * b * up - a * a * um + (a * a - b * b) * u0) / (a * b * (a + b));
    }
    g
}

/// |grad|^gamma with the 0^0 = 1 convention at gamma = 0.
#[inline]
pub fn degeneracy_factor(grad: [f64; 2], gamma: f64) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    let norm = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
    if gamma == 1.0 {
        norm
    } else if gamma == 2.0 {
        norm * norm
    } else {
        norm.powf(gamma)
    }
}

/// Monotone discrete Pucci operator: max over frames of the per-direction
/// Lambda/lambda weighted second differences.
#[inline]
pub fn pucci_plus_discrete(u: &Field, u0: f64, node: &NodeStencil, frames: &FrameSet, ell: Ellipticity) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for frame in &frames.frames {
        let mut acc = 0.0;
        for &pk in frame {
            let d = second_difference(u, u0, node, pk);
            acc += if d >= 0.0 { ell.upper * d } else { ell.lower * d };
        }
        best = best.max(acc);
    }
    best
}

/// Convenience wrapper evaluating the discrete operator at a lattice node.
pub fn pucci_plus_at(u: &Field, idx: u32, sten: &Stencil, frames: &FrameSet, ell: Ellipticity) -> f64 {
    let k = sten.inside_pos[idx as usize];
    assert_ne!(k, u32::MAX, "operator evaluated at an exterior node");
    pucci_plus_discrete(u, u.get(idx), &sten.nodes[k as usize], frames, ell)
}
