//! Seeded structural self-checks, shared by the property-check CLI mode and
//! the acceptance suite. Every check draws its cases from a ChaCha stream
//! keyed by the caller's seed, so a verdict is reproducible from the seed
//! alone.

use crate::domain::{BoundarySpec, Domain};
use crate::grid::{Field, Grid, Stencil};
use crate::inner::{pseudo_time_solve, InnerConfig};
use crate::levelset::{h_exact, h_mollified, DistributionFunction, MonotoneRhs};
use crate::outer::{solve, InnerKnobs, ProblemSpec, SchedulePlan};
use crate::pucci::{
    pucci_plus_at, pucci_plus_exact, Ellipticity, FrameSet, SymMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct PropertyVerdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn verdict(name: &str, pass: bool, detail: String) -> PropertyVerdict {
    PropertyVerdict { name: name.to_string(), pass, detail }
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let mut e = || rng.gen_range(-2.0..2.0);
    if n == 2 {
        SymMatrix::sym2(e(), e(), e())
    } else {
        SymMatrix::sym3(e(), e(), e(), e(), e(), e())
    }
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    // C^T C for a random C is positive semidefinite by construction.
    let mut c = [[0.0f64; 3]; 3];
    for row in c.iter_mut().take(n) {
        for x in row.iter_mut().take(n) {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    let mut m = [0.0f64; 6];
    let at = |i: usize, j: usize| (0..n).map(|k| c[k][i] * c[k][j]).sum::<f64>();
    m[0] = at(0, 0);
    m[1] = at(1, 1);
    m[3] = at(0, 1);
    if n == 3 {
        m[2] = at(2, 2);
        m[4] = at(0, 2);
        m[5] = at(1, 2);
    }
    if n == 2 {
        SymMatrix::sym2(m[0], m[3], m[1])
    } else {
        SymMatrix::sym3(m[0], m[1], m[2], m[3], m[4], m[5])
    }
}

/// Exact-operator identities and the 1000-matrix law checks.
pub fn operator_identity_suite(seed: u64) -> Vec<PropertyVerdict> {
    let mut out = Vec::new();
    let pairs = [(1.0, 1.0), (1.0, 2.0), (0.5, 3.0)];

    let mut worst_id = 0.0f64;
    for &(lo, hi) in &pairs {
        let ell = Ellipticity::new(lo, hi).unwrap();
        for n in [2usize, 3] {
            let nf = n as f64;
            worst_id = worst_id
                .max((pucci_plus_exact(&SymMatrix::identity(n), ell) - nf * hi).abs())
                .max((pucci_plus_exact(&SymMatrix::identity(n).scale(-1.0), ell) + nf * lo).abs());
        }
        let saddle = SymMatrix::sym2(1.0, 0.0, -1.0);
        worst_id = worst_id.max((pucci_plus_exact(&saddle, ell) - (hi - lo)).abs());
    }
    out.push(verdict(
        "operator-identity-values",
        worst_id <= 1e-12,
        format!("worst deviation {worst_id:.2e} (tol 1e-12)"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_trace = 0.0f64;
    for k in 0..1000 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let lam = if k % 4 < 2 { 1.0 } else { 1.7 };
        let ell = Ellipticity::new(lam, lam).unwrap();
        let s = random_sym(&mut rng, n);
        let dev = (pucci_plus_exact(&s, ell) - lam * s.trace()).abs() / (1.0 + s.norm());
        worst_trace = worst_trace.max(dev);
    }
    out.push(verdict(
        "operator-trace-reduction",
        worst_trace <= 1e-12,
        format!("1000 matrices, worst scaled deviation {worst_trace:.2e} (tol 1e-12)"),
    ));

    let ell = Ellipticity::new(1.0, 2.5).unwrap();
    let mut worst_sub = f64::NEG_INFINITY;
    let mut worst_psd = f64::NEG_INFINITY;
    let mut worst_hom = 0.0f64;
    for k in 0..1000 {
        let n = if k % 2 == 0 { 2 } else { 3 };
        let a = random_sym(&mut rng, n);
        let b = random_sym(&mut rng, n);
        let sum = a.add(&b);
        worst_sub = worst_sub
            .max(pucci_plus_exact(&sum, ell) - pucci_plus_exact(&a, ell) - pucci_plus_exact(&b, ell));
        let p = random_psd(&mut rng, n);
        worst_psd = worst_psd.max(pucci_plus_exact(&a, ell) - pucci_plus_exact(&a.add(&p), ell));
        let t = rng.gen_range(0.0..3.0);
        worst_hom = worst_hom
            .max((pucci_plus_exact(&a.scale(t), ell) - t * pucci_plus_exact(&a, ell)).abs());
    }
    out.push(verdict(
        "operator-subadditivity",
        worst_sub <= 1e-9,
        format!("1000 pairs, worst excess {worst_sub:.2e} (tol 1e-9)"),
    ));
    out.push(verdict(
        "operator-psd-monotonicity",
        worst_psd <= 1e-9,
        format!("1000 bumps, worst drop {worst_psd:.2e} (tol 1e-9)"),
    ));
    out.push(verdict(
        "operator-homogeneity",
        worst_hom <= 1e-9,
        format!("1000 scalings, worst deviation {worst_hom:.2e} (tol 1e-9)"),
    ));

    // Discrete operator: raising a neighbor never lowers the value, raising
    // the center never raises it.
    let grid = Grid::build(Domain::disk(1.0).unwrap(), 16).unwrap();
    let sten = Stencil::build(&grid, &BoundarySpec::Constant(0.0)).unwrap();
    let frames = FrameSet::default_2d();
    let mut worst_mono = f64::NEG_INFINITY;
    let mut probes = 0;
    while probes < 500 {
        let mut u = random_field(&mut rng, &grid);
        let pos = rng.gen_range(0..grid.inside().len());
        let idx = grid.inside()[pos];
        let before = pucci_plus_at(&u, idx, &sten, &frames, ell);
        let delta = rng.gen_range(0.01..0.5);
        if rng.gen_bool(0.5) {
            let dir = crate::grid::DIRS[rng.gen_range(0..8)];
            match grid.neighbor(idx, dir) {
                Some(nb) if !matches!(grid.class(nb), crate::grid::NodeClass::Exterior) => {
                    u.data[nb as usize] += delta;
                }
                _ => continue,
            }
            worst_mono = worst_mono.max(before - pucci_plus_at(&u, idx, &sten, &frames, ell));
        } else {
            u.data[idx as usize] += delta;
            worst_mono = worst_mono.max(pucci_plus_at(&u, idx, &sten, &frames, ell) - before);
        }
        probes += 1;
    }
    out.push(verdict(
        "operator-discrete-monotonicity",
        worst_mono <= 1e-11,
        format!("500 probes, worst violation {worst_mono:.2e} (tol 1e-11)"),
    ));
    out
}

fn random_field(rng: &mut ChaCha8Rng, grid: &Grid) -> Field {
    let mut coef = [[0.0f64; 4]; 3];
    for row in coef.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
    }
    let quant: Option<f64> = if rng.gen_bool(0.3) { Some(0.05) } else { None };
    Field::from_fn(grid, |x, y| {
        let mut v = 0.0;
        for (k, c) in coef.iter().enumerate() {
            let fk = (k + 1) as f64;
            v += c[0] * (fk * std::f64::consts::PI * x + c[1]).sin()
                * (fk * std::f64::consts::PI * y + c[2]).sin()
                + 0.2 * c[3] * x.powi(k as i32 + 1);
        }
        match quant {
            // Quantized fields force value ties and exercise the averaging
            // window's crossing branch.
            Some(q) => (v / q).round() * q,
            None => v,
        }
    })
}

fn random_monotone_rhs(rng: &mut ChaCha8Rng, total: f64) -> MonotoneRhs {
    if rng.gen_bool(0.2) {
        return MonotoneRhs::constant(rng.gen_range(0.0..2.0)).unwrap();
    }
    let k = rng.gen_range(2..6);
    let mut s = 0.0f64;
    let mut f = rng.gen_range(0.0..0.5);
    let mut breaks = vec![(s, f)];
    for _ in 0..k {
        s += rng.gen_range(0.05..0.5) * total;
        f += rng.gen_range(0.0..1.0);
        breaks.push((s, f));
    }
    MonotoneRhs::from_breakpoints(breaks).unwrap()
}

/// Structural laws of the mollified superlevel coupling, on 50 seeded
/// random fields at resolution 16.
pub fn mollified_law_suite(seed: u64) -> Vec<PropertyVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f6c6c);
    let grid = Grid::build(Domain::disk(1.0).unwrap(), 16).unwrap();
    let total = grid.measure();

    let mut worst_bound = f64::NEG_INFINITY;
    let mut worst_dom = f64::NEG_INFINITY;
    let mut worst_mono = f64::NEG_INFINITY;
    let mut resolved_checked = 0usize;
    let mut resolved_ok = true;
    let slack = 1e-12 * (1.0 + total);

    for _ in 0..50 {
        let v = random_field(&mut rng, &grid);
        let f = random_monotone_rhs(&mut rng, total);
        let cap = f.eval(total);
        let exact = h_exact(&v, &f, &grid).unwrap();
        let windows = [2u32, 4, 8, 16, 64];
        for (wi, &i) in windows.iter().enumerate() {
            let hi = h_mollified(&v, &f, i, &grid).unwrap();
            for &idx in grid.inside() {
                worst_bound = worst_bound.max(hi.get(idx) - cap);
                worst_dom = worst_dom.max(exact.get(idx) - hi.get(idx));
            }
            if wi > 0 {
                let prev = h_mollified(&v, &f, windows[wi - 1], &grid).unwrap();
                for &idx in grid.inside() {
                    worst_mono = worst_mono.max(hi.get(idx) - prev.get(idx));
                }
            }
        }
        let dist = DistributionFunction::from_field(&v, &grid).unwrap();
        let gap = dist.min_gap();
        if gap > 0.0 && gap.is_finite() {
            let i = (1.0 / gap).ceil() as u32 + 1;
            if i < 1_000_000 {
                let hi = h_mollified(&v, &f, i, &grid).unwrap();
                resolved_ok &= hi.bit_identical(&exact, &grid);
                resolved_checked += 1;
            }
        }
    }
    vec![
        verdict(
            "coupling-upper-bound",
            worst_bound <= slack,
            format!("worst excess over f(measure) {worst_bound:.2e} (slack {slack:.1e})"),
        ),
        verdict(
            "coupling-domination",
            worst_dom <= 0.0,
            format!("worst exact-over-mollified excess {worst_dom:.2e} (must be <= 0)"),
        ),
        verdict(
            "coupling-window-monotonicity",
            worst_mono <= slack,
            format!("worst increase under window doubling {worst_mono:.2e} (slack {slack:.1e})"),
        ),
        verdict(
            "coupling-exact-when-resolved",
            resolved_ok && resolved_checked > 0,
            format!("bitwise equality on {resolved_checked} resolved fields"),
        ),
    ]
}

fn random_nonneg_field(rng: &mut ChaCha8Rng, grid: &Grid) -> Field {
    let base = random_field(rng, grid);
    let mut f = Field::zeros(grid);
    for &i in grid.inside() {
        f.data[i as usize] = base.get(i).abs();
    }
    f
}

/// Discrete maximum principle and comparison monotonicity for converged
/// inner solutions at resolution 16.
pub fn maximum_principle_suite(seed: u64) -> Vec<PropertyVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d617870);
    let grid = Grid::build(Domain::disk(1.0).unwrap(), 16).unwrap();

    let mut worst_mp = f64::NEG_INFINITY;
    for k in 0..20 {
        let gamma = [0.0, 1.0, 2.0][k % 3];
        let ell = if k % 2 == 0 {
            Ellipticity::new(1.0, 1.0).unwrap()
        } else {
            Ellipticity::new(1.0, 2.0).unwrap()
        };
        let eps = if gamma == 0.0 { 0.0 } else { 1e-2 };
        let g = BoundarySpec::Affine {
            a: rng.gen_range(-0.5..0.5),
            b: rng.gen_range(-0.5..0.5),
            c: rng.gen_range(-0.5..0.5),
        };
        let sten = Stencil::build(&grid, &g).unwrap();
        let h = random_nonneg_field(&mut rng, &grid);
        let cfg = InnerConfig::new(gamma, ell, eps).unwrap();
        let (u, _) = pseudo_time_solve(&Field::zeros(&grid), &h, &cfg, &sten, &grid).unwrap();
        let scale = 1.0 + sten.g_sup_abs + h.linf_norm(&grid);
        worst_mp = worst_mp.max((u.max_inside(&grid) - sten.g_sup_abs) / scale);
    }

    let mut worst_cmp = f64::NEG_INFINITY;
    for k in 0..10 {
        let gamma = [0.0, 1.0][k % 2];
        let ell = Ellipticity::new(1.0, 2.0).unwrap();
        let eps = 1e-2;
        let g = BoundarySpec::Constant(rng.gen_range(-0.3..0.3));
        let sten = Stencil::build(&grid, &g).unwrap();
        let h1 = random_nonneg_field(&mut rng, &grid);
        let bump = random_nonneg_field(&mut rng, &grid);
        let mut h2 = h1.clone();
        for &i in grid.inside() {
            h2.data[i as usize] += bump.get(i);
        }
        let cfg = InnerConfig::new(gamma, ell, eps).unwrap();
        let (u1, _) = pseudo_time_solve(&Field::zeros(&grid), &h1, &cfg, &sten, &grid).unwrap();
        let (u2, _) = pseudo_time_solve(&Field::zeros(&grid), &h2, &cfg, &sten, &grid).unwrap();
        let scale = 1.0 + h2.linf_norm(&grid);
        for &i in grid.inside() {
            worst_cmp = worst_cmp.max((u2.get(i) - u1.get(i)) / scale);
        }
    }

    // Raising the boundary data can only raise the solution.
    let mut worst_bnd = f64::NEG_INFINITY;
    for _ in 0..5 {
        let ell = Ellipticity::new(1.0, 2.0).unwrap();
        let c1 = rng.gen_range(-0.3..0.0);
        let lift = rng.gen_range(0.1..0.5);
        let sten1 = Stencil::build(&grid, &BoundarySpec::Constant(c1)).unwrap();
        let sten2 = Stencil::build(&grid, &BoundarySpec::Constant(c1 + lift)).unwrap();
        let h = random_nonneg_field(&mut rng, &grid);
        let cfg = InnerConfig::new(1.0, ell, 1e-2).unwrap();
        let (u1, _) = pseudo_time_solve(&Field::zeros(&grid), &h, &cfg, &sten1, &grid).unwrap();
        let (u2, _) = pseudo_time_solve(&Field::zeros(&grid), &h, &cfg, &sten2, &grid).unwrap();
        for &i in grid.inside() {
            worst_bnd = worst_bnd.max(u1.get(i) - u2.get(i));
        }
    }

    vec![
        verdict(
            "solve-maximum-principle",
            worst_mp <= 1e-6,
            format!("20 pairs, worst scaled excess over boundary max {worst_mp:.2e} (tol 1e-6)"),
        ),
        verdict(
            "solve-rhs-comparison",
            worst_cmp <= 1e-6,
            format!("10 pairs, worst scaled violation of u2 <= u1 {worst_cmp:.2e} (tol 1e-6)"),
        ),
        verdict(
            "solve-boundary-comparison",
            worst_bnd <= 1e-6,
            format!("5 pairs, worst violation of u1 <= u2 {worst_bnd:.2e} (tol 1e-6)"),
        ),
    ]
}

/// Bit-level repeatability of the full pipeline on a small coupled problem.
pub fn determinism_suite(seed: u64) -> Vec<PropertyVerdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x64657465);
    let grid = Grid::build(Domain::disk(1.0).unwrap(), 12).unwrap();
    let sten = Stencil::build(&grid, &BoundarySpec::Constant(0.0)).unwrap();
    let slope = rng.gen_range(0.5..1.5);
    let prob = ProblemSpec {
        gamma: 1.0,
        ell: Ellipticity::new(1.0, 2.0).unwrap(),
        f: MonotoneRhs::from_breakpoints(vec![(0.0, 0.0), (4.0, 4.0 * slope)]).unwrap(),
        g: BoundarySpec::Constant(0.0),
    };
    let plan = SchedulePlan { eps_min: 1e-2, ..SchedulePlan::default() };
    let run = || solve(&prob, &plan, &InnerKnobs::default(), &sten, &grid).unwrap();
    let (u1, r1) = run();
    let (u2, r2) = run();
    let bits = u1.bit_identical(&u2, &grid);
    let iters = r1.total_inner_iterations == r2.total_inner_iterations;
    vec![verdict(
        "solve-determinism",
        bits && iters,
        format!(
            "fields bit-identical: {bits}; inner iteration counts equal: {iters} ({} vs {})",
            r1.total_inner_iterations, r2.total_inner_iterations
        ),
    )]
}

/// Everything, in a stable order.
pub fn full_suite(seed: u64) -> Vec<PropertyVerdict> {
    let mut out = operator_identity_suite(seed);
    out.extend(mollified_law_suite(seed));
    out.extend(maximum_principle_suite(seed));
    out.extend(determinism_suite(seed));
    out
}
