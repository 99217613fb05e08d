//! Cell-centered lattice over a domain, with cut-cell boundary arms.
//!
//! Nodes sit at cell centers of a uniform lattice with spacing
//! h = bounding-box extent / resolution, so a grid-aligned rectangle tiles
//! exactly (1x1 at resolution 10 has total cell measure exactly 1) and no
//! node ever sits on a curved boundary. Every node is exactly one of
//!
//! * exterior: center outside the closed domain (never touched again),
//! * interior: all eight stencil arms reach their neighbor nodes,
//! * boundary-adjacent: the center is inside but at least one arm crosses
//!   the boundary first; the arm is cut at the exact intersection
//!   (Shortley-Weller) and carries the fraction theta in (0, 1].
//!
//! The eight arm directions are the union of the default frame set: the two
//! axis pairs and the two diagonal pairs. Arms are computed by the domain's
//! closed-form ray intersection, so cut points reproduce the circle or wall
//! to 1e-12. A segment that exits and re-enters (annulus chord over the
//! hole) is cut at the first exit even when the neighbor node is inside.
//!
//! Superlevel-set measures count one full h^2 cell per non-exterior node;
//! the boundary band therefore carries an O(h) measure bias, accepted as
//! part of the scheme's first-order boundary treatment.

use crate::domain::{BoundarySpec, Domain};
use crate::error::{Error, Result};

/// Directed stencil offsets, ordered as plus/minus pairs: E W N S NE SW SE NW.
pub const DIRS: [[i32; 2]; 8] = [
    [1, 0],
    [-1, 0],
    [0, 1],
    [0, -1],
    [1, 1],
    [-1, -1],
    [1, -1],
    [-1, 1],
];

/// Indices into [`DIRS`] forming the four undirected second-difference pairs:
/// two axis pairs then two diagonal pairs.
pub const PAIRS: [(usize, usize); 4] = [(0, 1), (2, 3), (4, 5), (6, 7)];

/// Arms with theta below this are pinned: the node is slaved to the boundary
/// value at its nearest cut point instead of being solved for, because the
/// cut-cell center coefficient ~ 1/theta would push the converged residual
/// into floating-point noise near the residual tolerance.
pub const THETA_PIN: f64 = 3e-5;

const MIN_RESOLUTION: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    BoundaryAdjacent,
    Exterior,
}

/// One directed arm of a boundary-adjacent node. `theta` is the reached
/// fraction of the full step; `hit` is the exact boundary intersection when
/// the arm is cut (`theta < 1`), `None` for a full arm.
#[derive(Debug, Clone, Copy)]
pub struct Arm {
    pub theta: f64,
    pub hit: Option<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub domain: Domain,
    pub resolution: u32,
    /// Lattice spacing (same on both axes).
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Coordinates of node (0, 0).
    pub origin: [f64; 2],
    class: Vec<NodeClass>,
    /// Per-node index into `arms`, -1 when the node has no stored arms.
    arm_index: Vec<i32>,
    arms: Vec<[Arm; 8]>,
    /// Row-major ascending indices of all non-exterior nodes.
    inside: Vec<u32>,
    /// Nodes pinned to boundary data: (node index, cut point of shortest arm).
    pinned: Vec<(u32, [f64; 2])>,
}

impl Grid {
    /// Build the lattice, classify nodes, and cut boundary arms.
    pub fn build(domain: Domain, resolution: u32) -> Result<Grid> {
        if resolution < MIN_RESOLUTION {
            return Err(Error::config(format!(
                "resolution must be at least {MIN_RESOLUTION}, got {resolution}"
            )));
        }
        let half = domain.half_extents();
        let extent = 2.0 * half[0].max(half[1]);
        let h = extent / resolution as f64;
        let nx = cells_along(2.0 * half[0], h);
        let ny = cells_along(2.0 * half[1], h);
        let origin = [-half[0] + h / 2.0, -half[1] + h / 2.0];

        let n = nx * ny;
        let mut class = vec![NodeClass::Exterior; n];
        let mut arm_index = vec![-1i32; n];
        let mut arms: Vec<[Arm; 8]> = Vec::new();
        let mut inside: Vec<u32> = Vec::new();
        let mut pinned: Vec<(u32, [f64; 2])> = Vec::new();

        for iy in 0..ny {
            for ix in 0..nx {
                let idx = ix + iy * nx;
                let p = [origin[0] + ix as f64 * h, origin[1] + iy as f64 * h];
                if !domain.contains(p) {
                    continue;
                }
                let mut node_arms = [Arm { theta: 1.0, hit: None }; 8];
                let mut cut_any = false;
                for (d, dir) in DIRS.iter().enumerate() {
                    let step = [dir[0] as f64 * h, dir[1] as f64 * h];
                    let s = (step[0] * step[0] + step[1] * step[1]).sqrt();
                    let unit = [step[0] / s, step[1] / s];
                    let neighbor = [p[0] + step[0], p[1] + step[1]];
                    let neighbor_on_lattice = in_lattice(ix, iy, *dir, nx, ny);
                    let neighbor_inside = neighbor_on_lattice && domain.contains(neighbor);
                    let crossing = domain.first_crossing(p, unit, s);
                    match crossing {
                        Some(t) if t < s * (1.0 - 1e-12) || !neighbor_inside => {
                            let t = t.min(s);
                            let hit = [p[0] + t * unit[0], p[1] + t * unit[1]];
                            node_arms[d] = Arm { theta: t / s, hit: Some(hit) };
                            cut_any = true;
                        }
                        _ if !neighbor_inside => {
                            // No crossing found but the neighbor is outside:
                            // roundoff corner case; cut essentially at the
                            // neighbor.
                            let t = s * (1.0 - 1e-12);
                            let hit = [p[0] + t * unit[0], p[1] + t * unit[1]];
                            node_arms[d] = Arm { theta: t / s, hit: Some(hit) };
                            cut_any = true;
                        }
                        _ => {}
                    }
                }
                inside.push(idx as u32);
                if cut_any {
                    class[idx] = NodeClass::BoundaryAdjacent;
                    arm_index[idx] = arms.len() as i32;
                    let min_arm = node_arms
                        .iter()
                        .enumerate()
                        .filter(|(_, a)| a.hit.is_some())
                        .min_by(|a, b| a.1.theta.total_cmp(&b.1.theta))
                        .map(|(d, a)| (d, *a))
                        .expect("cut_any implies a cut arm");
                    if min_arm.1.theta < THETA_PIN {
                        pinned.push((idx as u32, min_arm.1.hit.unwrap()));
                    }
                    arms.push(node_arms);
                } else {
                    class[idx] = NodeClass::Interior;
                }
            }
        }

        if inside.is_empty() {
            return Err(Error::config("grid has no nodes inside the domain".to_string()));
        }

        Ok(Grid {
            domain,
            resolution,
            h,
            nx,
            ny,
            origin,
            class,
            arm_index,
            arms,
            inside,
            pinned,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn class(&self, idx: u32) -> NodeClass {
        self.class[idx as usize]
    }

    #[inline]
    pub fn point(&self, idx: u32) -> [f64; 2] {
        let ix = idx as usize % self.nx;
        let iy = idx as usize / self.nx;
        [self.origin[0] + ix as f64 * self.h, self.origin[1] + iy as f64 * self.h]
    }

    /// Non-exterior node indices in fixed row-major order.
    #[inline]
    pub fn inside(&self) -> &[u32] {
        &self.inside
    }

    pub fn pinned(&self) -> &[(u32, [f64; 2])] {
        &self.pinned
    }

    /// Arms of a boundary-adjacent node, `None` for interior nodes.
    pub fn arms(&self, idx: u32) -> Option<&[Arm; 8]> {
        let a = self.arm_index[idx as usize];
        (a >= 0).then(|| &self.arms[a as usize])
    }

    /// Cell measure per node (h^2).
    #[inline]
    pub fn cell_measure(&self) -> f64 {
        self.h * self.h
    }

    /// Total measure of the non-exterior cells.
    pub fn measure(&self) -> f64 {
        self.inside.len() as f64 * self.cell_measure()
    }

    /// Neighbor node index along a directed offset, if it stays on the lattice.
    pub fn neighbor(&self, idx: u32, dir: [i32; 2]) -> Option<u32> {
        let ix = (idx as usize % self.nx) as i64 + dir[0] as i64;
        let iy = (idx as usize / self.nx) as i64 + dir[1] as i64;
        (ix >= 0 && iy >= 0 && (ix as usize) < self.nx && (iy as usize) < self.ny)
            .then(|| (ix as usize + iy as usize * self.nx) as u32)
    }
}

fn in_lattice(ix: usize, iy: usize, dir: [i32; 2], nx: usize, ny: usize) -> bool {
    let jx = ix as i64 + dir[0] as i64;
    let jy = iy as i64 + dir[1] as i64;
    jx >= 0 && jy >= 0 && (jx as usize) < nx && (jy as usize) < ny
}

fn cells_along(width: f64, h: f64) -> usize {
    // Round when the width is an exact multiple of h, otherwise cover it.
    let exact = width / h;
    let rounded = exact.round();
    if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    }
}

/// Scalar field over the full lattice. Only non-exterior slots are
/// meaningful; exterior slots stay 0 and are never read by the operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Field {
        Field { data: vec![0.0; grid.node_count()] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Field {
        let mut f = Field::zeros(grid);
        for &i in grid.inside() {
            f.data[i as usize] = c;
        }
        f
    }

    pub fn from_fn(grid: &Grid, mut func: impl FnMut(f64, f64) -> f64) -> Field {
        let mut f = Field::zeros(grid);
        for &i in grid.inside() {
            let p = grid.point(i);
            f.data[i as usize] = func(p[0], p[1]);
        }
        f
    }

    #[inline]
    pub fn get(&self, idx: u32) -> f64 {
        self.data[idx as usize]
    }

    pub fn linf_diff(&self, other: &Field, grid: &Grid) -> f64 {
        grid.inside()
            .iter()
            .map(|&i| (self.data[i as usize] - other.data[i as usize]).abs())
            .fold(0.0, f64::max)
    }

    pub fn linf_norm(&self, grid: &Grid) -> f64 {
        grid.inside().iter().map(|&i| self.data[i as usize].abs()).fold(0.0, f64::max)
    }

    pub fn max_inside(&self, grid: &Grid) -> f64 {
        grid.inside().iter().map(|&i| self.data[i as usize]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_inside(&self, grid: &Grid) -> f64 {
        grid.inside().iter().map(|&i| self.data[i as usize]).fold(f64::INFINITY, f64::min)
    }

    /// Bitwise equality on the non-exterior slots.
    pub fn bit_identical(&self, other: &Field, grid: &Grid) -> bool {
        grid.inside()
            .iter()
            .all(|&i| self.data[i as usize].to_bits() == other.data[i as usize].to_bits())
    }
}

/// One side of a second-difference pair as the solver sees it: either a
/// lattice neighbor or a Dirichlet value at the cut point, at distance
/// `dist` from the center along the pair direction.
#[derive(Debug, Clone, Copy)]
pub struct ArmRef {
    /// Neighbor node index, or `u32::MAX` when the arm is cut.
    pub nbr: u32,
    /// Dirichlet value at the cut point (only read when `nbr == u32::MAX`).
    pub bval: f64,
    /// Distance from the center to the sample point.
    pub dist: f64,
}

pub const CUT: u32 = u32::MAX;

/// Solver-ready stencil for one node: the four pairs in [`PAIRS`] order
/// (axis x, axis y, diagonal, anti-diagonal).
#[derive(Debug, Clone, Copy)]
pub struct NodeStencil {
    pub pair: [(ArmRef, ArmRef); 4],
    /// Per-pair center coefficient 2/(a*b), precomputed for step control.
    pub pair_coeff: [f64; 4],
}

/// Immutable discretization data binding a grid to Dirichlet data: per
/// non-exterior node the sample references and distances for all four
/// second-difference pairs, with cut arms carrying g at the exact boundary
/// intersection.
#[derive(Debug, Clone)]
pub struct Stencil {
    /// Indexed in the order of `grid.inside()`.
    pub nodes: Vec<NodeStencil>,
    /// Position of each lattice index in `grid.inside()`, u32::MAX outside.
    pub inside_pos: Vec<u32>,
    /// Pinned nodes as (lattice index, boundary value).
    pub pinned_values: Vec<(u32, f64)>,
    /// max |g| over all cut-arm intersection points (the sampled boundary).
    pub g_sup_abs: f64,
}

impl Stencil {
    pub fn build(grid: &Grid, g: &BoundarySpec) -> Result<Stencil> {
        g.validate()?;
        let mut inside_pos = vec![u32::MAX; grid.node_count()];
        for (k, &i) in grid.inside().iter().enumerate() {
            inside_pos[i as usize] = k as u32;
        }
        let mut g_sup_abs = 0.0f64;
        let mut nodes = Vec::with_capacity(grid.inside().len());
        for &i in grid.inside() {
            let arms = grid.arms(i);
            let mut pair = [(ArmRef { nbr: 0, bval: 0.0, dist: 0.0 }, ArmRef { nbr: 0, bval: 0.0, dist: 0.0 }); 4];
            let mut pair_coeff = [0.0f64; 4];
            for (pk, &(dp, dm)) in PAIRS.iter().enumerate() {
                let mut make = |d: usize| -> ArmRef {
                    let dir = DIRS[d];
                    let s = grid.h * ((dir[0] * dir[0] + dir[1] * dir[1]) as f64).sqrt();
                    match arms.and_then(|a| a[d].hit.map(|hit| (a[d].theta, hit))) {
                        Some((theta, hit)) => {
                            let v = g.eval(hit);
                            g_sup_abs = g_sup_abs.max(v.abs());
                            ArmRef { nbr: CUT, bval: v, dist: theta * s }
                        }
                        None => {
                            let n = grid
                                .neighbor(i, dir)
                                .expect("full arm always ends at a lattice node");
                            ArmRef { nbr: n, bval: 0.0, dist: s }
                        }
                    }
                };
                let plus = make(dp);
                let minus = make(dm);
                pair_coeff[pk] = 2.0 / (plus.dist * minus.dist);
                pair[pk] = (plus, minus);
            }
            nodes.push(NodeStencil { pair, pair_coeff });
        }
        let pinned_values = grid
            .pinned()
            .iter()
            .map(|&(i, hit)| (i, g.eval(hit)))
            .collect();
        Ok(Stencil { nodes, inside_pos, pinned_values, g_sup_abs })
    }
}
