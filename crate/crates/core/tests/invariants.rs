//! Randomized invariants of the pure layers: the exact extremal operator,
//! distribution functions, and monotone right-hand sides. These hold for
//! arbitrary inputs, so let the generator hunt for counterexamples.

use gradeq::levelset::{DistributionFunction, MonotoneRhs};
use gradeq::pucci::{pucci_plus_exact, Ellipticity, SymMatrix};
use proptest::prelude::*;

fn sym2_strategy() -> impl Strategy<Value = SymMatrix> {
    (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b, c)| SymMatrix::sym2(a, b, c))
}

fn ell_strategy() -> impl Strategy<Value = Ellipticity> {
    (0.1f64..3.0, 0.0f64..4.0).prop_map(|(lo, extra)| Ellipticity::new(lo, lo + extra).unwrap())
}

fn samples_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0f64..3.0, 0.05f64..1.0), 2..40)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    /// Positive homogeneity: M(tS) = t M(S) for t >= 0.
    #[test]
    fn exact_operator_positively_homogeneous(s in sym2_strategy(), ell in ell_strategy(), t in 0.0f64..10.0) {
        let lhs = pucci_plus_exact(&s.scale(t), ell);
        let rhs = t * pucci_plus_exact(&s, ell);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    /// Subadditivity: M(S + T) <= M(S) + M(T).
    #[test]
    fn exact_operator_subadditive(s in sym2_strategy(), t in sym2_strategy(), ell in ell_strategy()) {
        let joint = pucci_plus_exact(&s.add(&t), ell);
        let split = pucci_plus_exact(&s, ell) + pucci_plus_exact(&t, ell);
        prop_assert!(joint <= split + 1e-9 * (1.0 + split.abs()));
    }

    /// Monotonicity in the matrix argument: adding a PSD matrix cannot
    /// decrease the operator. Diagonal PSD increments suffice to pin the
    /// ordering because the property is basis-independent.
    #[test]
    fn exact_operator_monotone_in_psd_direction(
        s in sym2_strategy(),
        ell in ell_strategy(),
        d1 in 0.0f64..3.0,
        d2 in 0.0f64..3.0,
    ) {
        let bumped = pucci_plus_exact(&s.add(&SymMatrix::diag(&[d1, d2])), ell);
        let base = pucci_plus_exact(&s, ell);
        prop_assert!(bumped >= base - 1e-9 * (1.0 + base.abs()));
    }

    /// Widening the ellipticity bracket can only increase the maximal
    /// operator's value.
    #[test]
    fn exact_operator_monotone_in_ellipticity(s in sym2_strategy(), lo in 0.1f64..2.0, extra in 0.0f64..3.0, widen in 0.0f64..2.0) {
        let narrow = pucci_plus_exact(&s, Ellipticity::new(lo, lo + extra).unwrap());
        let wide = pucci_plus_exact(&s, Ellipticity::new(lo, lo + extra + widen).unwrap());
        prop_assert!(wide >= narrow - 1e-9 * (1.0 + narrow.abs()));
    }

    /// measure_ge is antitone in the threshold and bounded by the total.
    #[test]
    fn distribution_measure_antitone_and_bounded(samples in samples_strategy(), s1 in -4.0f64..4.0, s2 in -4.0f64..4.0) {
        let dist = DistributionFunction::from_samples(&samples).unwrap();
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let m_lo = dist.measure_ge(lo);
        let m_hi = dist.measure_ge(hi);
        prop_assert!(m_hi <= m_lo);
        prop_assert!(m_lo <= dist.total() + 1e-12);
        prop_assert!(m_hi >= 0.0);
    }

    /// The window average dominates the pointwise measure, never exceeds the
    /// total mass, and doubling i (halving the window) can only pull it down
    /// toward the pointwise measure. Queries must use exact sampled values;
    /// that is the coupling's contract.
    #[test]
    fn mollified_average_squeezed_and_monotone_in_window(
        samples in samples_strategy(),
        which in any::<prop::sample::Index>(),
        i in 1u32..64,
    ) {
        let dist = DistributionFunction::from_samples(&samples).unwrap();
        let value = which.get(&samples).0;
        let avg = dist.mollified_average(value, i);
        let avg_narrower = dist.mollified_average(value, 2 * i);
        let slack = 1e-12 * (1.0 + dist.total());
        prop_assert!(avg >= dist.measure_ge(value) - slack);
        prop_assert!(avg <= dist.total() + slack);
        prop_assert!(avg_narrower <= avg + slack);
    }

    /// The rearrangement is the generalized inverse of the sublevel-measure
    /// map s -> |{v <= s}|: non-decreasing in t, within the sampled value
    /// range, and equal to a brute-force scan over the candidate values.
    #[test]
    fn rearrangement_inverts_sublevel_measure(samples in samples_strategy(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let dist = DistributionFunction::from_samples(&samples).unwrap();
        let total = dist.total();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let r_lo = dist.rearrangement(lo * total).unwrap();
        let r_hi = dist.rearrangement(hi * total).unwrap();
        prop_assert!(r_lo <= r_hi);
        let vmax = samples.iter().fold(f64::NEG_INFINITY, |m, &(v, _)| m.max(v));
        let vmin = samples.iter().fold(f64::INFINITY, |m, &(v, _)| m.min(v));
        prop_assert!(vmin <= r_lo && r_hi <= vmax);

        // Inverse property, checked with slack so ulp-level differences in
        // cumulative sums cannot flip a boundary case: the returned value
        // reaches mass t, and no strictly smaller sampled value does.
        let t = hi * total;
        let slack = 1e-9 * (1.0 + total);
        let mass_le = |s: f64| -> f64 {
            samples.iter().filter(|&&(v, _)| v <= s).map(|&(_, m)| m).sum()
        };
        prop_assert!(mass_le(r_hi) >= t - slack, "returned value misses mass t");
        let pred = samples
            .iter()
            .map(|&(v, _)| v)
            .filter(|&v| v < r_hi)
            .fold(f64::NEG_INFINITY, f64::max);
        if pred.is_finite() {
            prop_assert!(mass_le(pred) < t + slack, "a smaller value already reaches mass t");
        }
    }

    /// Piecewise-linear monotone interpolation stays monotone and clamped.
    #[test]
    fn monotone_rhs_eval_is_monotone_and_clamped(
        ys in prop::collection::vec(0.0f64..2.0, 2..8),
        s1 in -1.0f64..6.0,
        s2 in -1.0f64..6.0,
    ) {
        let mut acc = 0.0;
        let breaks: Vec<(f64, f64)> = ys
            .iter()
            .enumerate()
            .map(|(k, &dy)| {
                acc += dy;
                (k as f64, acc)
            })
            .collect();
        let f = MonotoneRhs::from_breakpoints(breaks.clone()).unwrap();
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(f.eval(lo) <= f.eval(hi) + 1e-12);
        prop_assert!(f.eval(-10.0) == breaks.first().unwrap().1);
        prop_assert!(f.eval(1e9) == breaks.last().unwrap().1);
    }
}
