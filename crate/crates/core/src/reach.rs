//! Grid approximation of the accessible set `Γ`.
//!
//! `Γ` is the closure of the forward orbit of `0` under both flows. The grid
//! version propagates actual reachable points: every marked cell keeps up to
//! `K` representatives (the first points that entered it), and each
//! representative is flowed forward in both modes with a fixed exact step.
//! Consecutive trajectory points are joined by a grid traversal so that every
//! crossed cell is marked, and a trajectory stops once it settles on its
//! equilibrium. Both equilibria are
//! accessible from every point, so the search always starts from them and a
//! seed point only contributes its own orbit.

use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityGrid, GridGeometry};
use crate::error::{Error, Result};
use crate::linalg::expm;
use crate::model::{Mode, SwitchingSystem};
use crate::pgm::Pgm;

/// A set of grid cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub geometry: GridGeometry,
    pub mask: Vec<bool>,
}

/// Where the search starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSeed {
    Origin,
    P,
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaOptions {
    /// Flow step; `None` picks the largest admissible step.
    pub step: Option<f64>,
    /// Longest time a single trajectory is followed.
    pub t_horizon: Option<f64>,
    pub reps_per_cell: u8,
    pub seed: GammaSeed,
}

impl Default for GammaOptions {
    fn default() -> Self {
        GammaOptions {
            step: None,
            t_horizon: None,
            reps_per_cell: 2,
            seed: GammaSeed::Origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaStats {
    pub step: f64,
    pub max_step: f64,
    pub t_horizon: f64,
    pub sweeps: usize,
    pub representatives: usize,
    /// Trajectory points that left the box (they are followed but not marked).
    pub escaped_points: u64,
    pub marked_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaResult {
    pub region: Region,
    pub stats: GammaStats,
}

/// Largest `‖F_i‖` over the box; attained at a corner since `‖F_i‖` is convex.
fn max_field_on_box(sys: &SwitchingSystem, g: &GridGeometry) -> f64 {
    let d = g.dim();
    let mut best = 0.0f64;
    for corner in 0..(1usize << d) {
        let x = nalgebra::DVector::from_fn(d, |k, _| if corner >> k & 1 == 1 { g.hi[k] } else { g.lo[k] });
        for mode in [Mode::Zero, Mode::One] {
            best = best.max(sys.field(mode, &x).norm());
        }
    }
    best
}

/// Largest step that moves any point of the box by at most one cell diagonal.
pub fn max_gamma_step(sys: &SwitchingSystem, g: &GridGeometry) -> f64 {
    let diag = (0..g.dim()).map(|k| g.width(k).powi(2)).sum::<f64>().sqrt();
    let f = max_field_on_box(sys, g);
    if f == 0.0 {
        f64::INFINITY
    } else {
        diag / f
    }
}

/// Precomputed cell arithmetic for fast rasterisation.
struct Raster {
    d: usize,
    lo: Vec<f64>,
    inv_w: Vec<f64>,
    bins: Vec<i64>,
    strides: Vec<usize>,
}

impl Raster {
    fn new(g: &GridGeometry) -> Self {
        let d = g.dim();
        let mut strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * g.bins[k + 1];
        }
        Raster {
            d,
            lo: g.lo.clone(),
            inv_w: (0..d).map(|k| 1.0 / g.width(k)).collect(),
            bins: g.bins.iter().map(|&b| b as i64).collect(),
            strides,
        }
    }

    /// Cell coordinates of `x`; `false` when outside the box.
    fn coords(&self, x: &[f64], out: &mut [i64]) -> bool {
        let mut inside = true;
        for k in 0..self.d {
            let u = (x[k] - self.lo[k]) * self.inv_w[k];
            let n = self.bins[k];
            // the upper face belongs to the last cell
            let c = if u >= 0.0 && u <= n as f64 { (u as i64).min(n - 1) } else { -1 };
            inside &= c >= 0;
            out[k] = c;
        }
        inside
    }

    fn flat(&self, c: &[i64]) -> usize {
        c.iter().zip(&self.strides).map(|(&i, &s)| i as usize * s).sum()
    }

    /// Visits the cells crossed by the segment `a -> b` after the cell of
    /// `a`, in order, with the entry point of each. `ca` and `cb` are the
    /// cells of the two end points, both inside the box.
    #[allow(clippy::too_many_arguments)]
    fn traverse<F: FnMut(usize, &[f64])>(
        &self,
        a: &[f64],
        b: &[f64],
        ca: &[i64],
        cb: &[i64],
        scratch: &mut TraverseScratch,
        mut visit: F,
    ) {
        let d = self.d;
        let TraverseScratch {
            cell,
            t_max,
            t_delta,
            step,
            point,
        } = scratch;
        let mut budget = 0i64;
        for k in 0..d {
            cell[k] = ca[k];
            budget += (cb[k] - ca[k]).abs();
            let ua = (a[k] - self.lo[k]) * self.inv_w[k];
            let du = (b[k] - a[k]) * self.inv_w[k];
            if du > 0.0 {
                step[k] = 1;
                t_max[k] = ((ca[k] + 1) as f64 - ua) / du;
                t_delta[k] = 1.0 / du;
            } else if du < 0.0 {
                step[k] = -1;
                t_max[k] = (ca[k] as f64 - ua) / du;
                t_delta[k] = -1.0 / du;
            } else {
                step[k] = 0;
                t_max[k] = f64::INFINITY;
                t_delta[k] = f64::INFINITY;
            }
        }
        for _ in 0..budget {
            // only axes that still have cells to cross are eligible
            let mut axis = usize::MAX;
            for k in 0..d {
                if cell[k] != cb[k] && (axis == usize::MAX || t_max[k] < t_max[axis]) {
                    axis = k;
                }
            }
            let t = t_max[axis].clamp(0.0, 1.0);
            cell[axis] += step[axis];
            t_max[axis] += t_delta[axis];
            for k in 0..d {
                point[k] = a[k] + t * (b[k] - a[k]);
            }
            visit(self.flat(cell), point);
        }
    }
}

struct TraverseScratch {
    cell: Vec<i64>,
    t_max: Vec<f64>,
    t_delta: Vec<f64>,
    step: Vec<i64>,
    point: Vec<f64>,
}

impl TraverseScratch {
    fn new(d: usize) -> Self {
        TraverseScratch {
            cell: vec![0; d],
            t_max: vec![0.0; d],
            t_delta: vec![0.0; d],
            step: vec![0; d],
            point: vec![0.0; d],
        }
    }
}

/// Cells entered by one trajectory; the last entry is flagged when the
/// trajectory settled on its equilibrium.
struct Hits {
    cells: Vec<usize>,
    points: Vec<f64>,
    closure: Vec<bool>,
    escaped: u64,
}

struct Stepper {
    d: usize,
    e: Vec<f64>,
}

impl Stepper {
    fn apply(&self, x: &mut [f64], eq: &[f64], tmp: &mut [f64]) {
        let d = self.d;
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += self.e[i * d + j] * (x[j] - eq[j]);
            }
            tmp[i] = acc + eq[i];
        }
        x.copy_from_slice(tmp);
    }
}

#[allow(clippy::too_many_arguments)]
fn follow(
    raster: &Raster,
    stepper: &Stepper,
    start: &[f64],
    eq: &[f64],
    steps: usize,
    settle: f64,
) -> Hits {
    let d = raster.d;
    let mut hits = Hits {
        cells: Vec::new(),
        points: Vec::new(),
        closure: Vec::new(),
        escaped: 0,
    };
    let mut scratch = TraverseScratch::new(d);
    let mut x = start.to_vec();
    let mut prev = start.to_vec();
    let mut tmp = vec![0.0; d];
    let mut c_prev = vec![0i64; d];
    let mut c_new = vec![0i64; d];
    let mut prev_inside = raster.coords(&prev, &mut c_prev);
    let settle2 = settle * settle;
    for _ in 0..steps {
        stepper.apply(&mut x, eq, &mut tmp);
        let inside = raster.coords(&x, &mut c_new);
        if inside {
            if !prev_inside {
                hits.cells.push(raster.flat(&c_new));
                hits.points.extend_from_slice(&x);
                hits.closure.push(false);
            } else if c_new != c_prev {
                raster.traverse(&prev, &x, &c_prev, &c_new, &mut scratch, |cell, p| {
                    hits.cells.push(cell);
                    hits.points.extend_from_slice(p);
                    hits.closure.push(false);
                });
            }
        } else {
            hits.escaped += 1;
        }
        prev_inside = inside;
        prev.copy_from_slice(&x);
        std::mem::swap(&mut c_prev, &mut c_new);
        let dist2: f64 = x.iter().zip(eq).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist2 < settle2 {
            if raster.coords(eq, &mut c_new) {
                hits.cells.push(raster.flat(&c_new));
                hits.points.extend_from_slice(eq);
                hits.closure.push(true);
            }
            break;
        }
    }
    hits
}

/// Grid fixed point of the reachability operator.
pub fn compute_gamma(sys: &SwitchingSystem, geometry: &GridGeometry, opts: &GammaOptions) -> Result<GammaResult> {
    let d = sys.dim();
    if geometry.dim() != d {
        return Err(Error::invalid("grid dimension does not match the system"));
    }
    if opts.reps_per_cell == 0 {
        return Err(Error::invalid("reps_per_cell must be at least 1"));
    }
    let max_step = max_gamma_step(sys, geometry);
    let step = match opts.step {
        Some(s) => {
            if !(s.is_finite() && s > 0.0 && s <= max_step) {
                return Err(Error::invalid(format!(
                    "step {s} is too large: one step may cross more than one cell diagonal; need step <= {max_step:.6e}"
                )));
            }
            s
        }
        None => max_step.min(1.0),
    };
    let slowest = sys.spectrum().lambda_max().abs();
    let t_horizon = opts.t_horizon.unwrap_or(40.0 / slowest);
    if !(t_horizon.is_finite() && t_horizon > 0.0) {
        return Err(Error::invalid("t_horizon must be positive"));
    }
    let steps = (t_horizon / step).ceil() as usize;
    let h_min = (0..d).map(|k| geometry.width(k)).fold(f64::INFINITY, f64::min);
    let settle = h_min / 8.0;

    let e = expm(sys.a(), step)?;
    let stepper = Stepper {
        d,
        e: (0..d * d).map(|k| e.as_matrix()[(k / d, k % d)]).collect(),
    };
    let zero = vec![0.0; d];
    let p: Vec<f64> = sys.p().iter().copied().collect();

    let seed: Vec<f64> = match &opts.seed {
        GammaSeed::Origin => zero.clone(),
        GammaSeed::P => p.clone(),
        GammaSeed::Point(x) => {
            if x.len() != d {
                return Err(Error::invalid("seed point has the wrong dimension"));
            }
            x.clone()
        }
    };
    if geometry.locate(&seed).is_none() {
        return Err(Error::invalid("seed point lies outside the grid box"));
    }
    if geometry.locate(&zero).is_none() || geometry.locate(&p).is_none() {
        return Err(Error::invalid("the grid box must contain both 0 and p"));
    }

    let n = geometry.n_cells();
    let mut mask = vec![false; n];
    let mut reps = vec![0u8; n];
    // Both equilibria are accessible from every initial point, so the search
    // always starts from them; an extra seed only adds its own orbit.
    let mut frontier: Vec<Vec<f64>> = vec![zero.clone(), p.clone()];
    if seed != zero && seed != p {
        frontier.push(seed);
    }
    for x in &frontier {
        let c = geometry.locate(x).expect("checked above");
        mask[c] = true;
        reps[c] = reps[c].saturating_add(1);
    }
    let mut representatives = frontier.len();
    let mut escaped = 0u64;
    let mut sweeps = 0usize;
    let raster = Raster::new(geometry);
    while !frontier.is_empty() {
        sweeps += 1;
        let mut next = Vec::new();
        // bounded memory: trajectories are computed in parallel chunks and
        // merged in frontier order
        for chunk in frontier.chunks(1024) {
            let results: Vec<[Hits; 2]> = chunk
                .par_iter()
                .map(|x| {
                    [
                        follow(&raster, &stepper, x, &zero, steps, settle),
                        follow(&raster, &stepper, x, &p, steps, settle),
                    ]
                })
                .collect();
            for hits in results.iter().flatten() {
                escaped += hits.escaped;
                for (k, &cell) in hits.cells.iter().enumerate() {
                    mask[cell] = true;
                    // equilibria are already in the search
                    if !hits.closure[k] && reps[cell] < opts.reps_per_cell {
                        reps[cell] = reps[cell].saturating_add(1);
                        next.push(hits.points[k * d..(k + 1) * d].to_vec());
                        representatives += 1;
                    }
                }
            }
        }
        frontier = next;
    }
    let marked = mask.iter().filter(|&&m| m).count();
    Ok(GammaResult {
        region: Region {
            geometry: geometry.clone(),
            mask,
        },
        stats: GammaStats {
            step,
            max_step,
            t_horizon,
            sweeps,
            representatives,
            escaped_points: escaped,
            marked_cells: marked,
        },
    })
}

/// Box used for the built-in planar pictures of `Γ`.
pub fn default_gamma_box(example: &str) -> Option<(Vec<f64>, Vec<f64>)> {
    match example {
        "malrieu" => Some((vec![-1.5, -1.5], vec![2.5, 2.5])),
        "bhlm" => Some((vec![-0.25, -0.25], vec![1.25, 1.25])),
        _ => None,
    }
}

impl Region {
    pub fn new(geometry: GridGeometry, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != geometry.n_cells() {
            return Err(Error::invalid("mask length does not match the grid"));
        }
        Ok(Region { geometry, mask })
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.geometry.locate(x).is_some_and(|c| self.mask[c])
    }

    /// Cells whose full `3^d` neighbourhood of radius `r` meets the mask.
    pub fn dilate(&self, r: usize) -> Region {
        let mut mask = self.mask.clone();
        for axis in 0..self.geometry.dim() {
            mask = line_filter(&self.geometry, &mask, axis, r, true);
        }
        Region {
            geometry: self.geometry.clone(),
            mask,
        }
    }

    /// Cells whose full neighbourhood of radius `r` lies inside the mask
    /// (cells outside the box count as unmarked).
    pub fn erode(&self, r: usize) -> Region {
        let mut mask = self.mask.clone();
        for axis in 0..self.geometry.dim() {
            mask = line_filter(&self.geometry, &mask, axis, r, false);
        }
        Region {
            geometry: self.geometry.clone(),
            mask,
        }
    }

    /// Erosion by one cell.
    pub fn interior(&self) -> Region {
        self.erode(1)
    }

    /// Face-connected components.
    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.mask.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                for nb in self.geometry.neighbours(c) {
                    if self.mask[nb] && !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }

    pub fn jaccard(&self, other: &Region) -> Result<f64> {
        self.geometry.ensure_same(&other.geometry)?;
        Ok(jaccard(&self.mask, &other.mask))
    }

    /// Merges blocks of `factor` cells per axis; a block is marked when any
    /// of its cells is.
    pub fn coarsen(&self, factor: usize) -> Result<Region> {
        let g = &self.geometry;
        if factor == 0 || g.bins.iter().any(|b| b % factor != 0) {
            return Err(Error::invalid("bins must be divisible by the coarsening factor"));
        }
        let coarse = GridGeometry::new(
            g.lo.clone(),
            g.hi.clone(),
            g.bins.iter().map(|b| b / factor).collect(),
        )?;
        let mut mask = vec![false; coarse.n_cells()];
        for (f, &m) in self.mask.iter().enumerate() {
            if m {
                let idx: Vec<usize> = g.unflat(f).iter().map(|i| i / factor).collect();
                mask[coarse.flat(&idx)] = true;
            }
        }
        Region::new(coarse, mask)
    }

    /// 8-bit image, 255 for marked cells, oriented like density heatmaps.
    pub fn to_pgm(&self) -> Result<Pgm> {
        let g = &self.geometry;
        if g.dim() != 2 {
            return Err(Error::invalid("mask images need a planar grid"));
        }
        let (nx, ny) = (g.bins[0], g.bins[1]);
        let mut pixels = vec![0u16; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                if self.mask[ix * ny + iy] {
                    pixels[(ny - 1 - iy) * nx + ix] = 255;
                }
            }
        }
        Pgm::new(nx, ny, 255, pixels)
    }

    pub fn from_pgm(geometry: GridGeometry, img: &Pgm) -> Result<Region> {
        if geometry.dim() != 2 || img.width != geometry.bins[0] || img.height != geometry.bins[1] {
            return Err(Error::invalid("image size does not match the grid"));
        }
        let (nx, ny) = (img.width, img.height);
        let mut mask = vec![false; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                mask[ix * ny + iy] = img.pixels[(ny - 1 - iy) * nx + ix] > img.maxval / 2;
            }
        }
        Region::new(geometry, mask)
    }

    /// CSV `i1,...,id` with one row per marked cell.
    pub fn write_index_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.geometry.dim();
        let names: Vec<String> = (1..=d).map(|k| format!("i{k}")).collect();
        writeln!(w, "{}", names.join(","))?;
        for (f, &m) in self.mask.iter().enumerate() {
            if m {
                let idx: Vec<String> = self.geometry.unflat(f).iter().map(|i| i.to_string()).collect();
                writeln!(w, "{}", idx.join(","))?;
            }
        }
        Ok(())
    }
}

/// Running max/min of width `2r + 1` along one axis.
fn line_filter(g: &GridGeometry, mask: &[bool], axis: usize, r: usize, dilate: bool) -> Vec<bool> {
    let stride: usize = g.bins[axis + 1..].iter().product();
    let n = g.bins[axis];
    let mut out = vec![false; mask.len()];
    for f in 0..mask.len() {
        let i = (f / stride) % n;
        let lo = i.saturating_sub(r);
        let hi = i + r;
        let res = if dilate {
            (lo..=hi.min(n - 1)).any(|j| mask[f - i * stride + j * stride])
        } else {
            i >= r && hi < n && (lo..=hi).all(|j| mask[f - i * stride + j * stride])
        };
        out[f] = res;
    }
    out
}

fn jaccard(a: &[bool], b: &[bool]) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Jaccard index between the region dilated by `dilation` cells and the
/// cells whose total density exceeds `threshold`.
pub fn support_match(region: &Region, grid: &DensityGrid, threshold: f64, dilation: usize) -> Result<f64> {
    region.geometry.ensure_same(&grid.geometry)?;
    let support = grid.support(threshold);
    Ok(jaccard(&region.dilate(dilation).mask, &support))
}

/// Probability mass of `grid` outside the region dilated by `dilation`.
pub fn mass_outside(region: &Region, grid: &DensityGrid, dilation: usize) -> Result<f64> {
    region.geometry.ensure_same(&grid.geometry)?;
    let grown = region.dilate(dilation);
    let v = grid.geometry.cell_volume();
    Ok(grid
        .total()
        .iter()
        .zip(&grown.mask)
        .filter(|(_, &m)| !m)
        .map(|(r, _)| r * v)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> GridGeometry {
        GridGeometry::cube(&[0.0, 0.0], &[1.0, 1.0], n).unwrap()
    }

    fn crossed(g: &GridGeometry, a: &[f64], b: &[f64]) -> Vec<usize> {
        let r = Raster::new(g);
        let mut ca = vec![0; 2];
        let mut cb = vec![0; 2];
        assert!(r.coords(a, &mut ca) && r.coords(b, &mut cb));
        let mut cells = vec![r.flat(&ca)];
        r.traverse(a, b, &ca, &cb, &mut TraverseScratch::new(2), |c, p| {
            assert!(g.locate(p).is_some());
            cells.push(c);
        });
        cells
    }

    #[test]
    fn traversal_is_face_connected() {
        let g = square(10);
        let cells = crossed(&g, &[0.05, 0.05], &[0.93, 0.47]);
        assert_eq!(*cells.last().unwrap(), g.locate(&[0.93, 0.47]).unwrap());
        assert_eq!(cells.len(), 1 + 9 + 4);
        for w in cells.windows(2) {
            assert!(g.neighbours(w[0]).any(|n| n == w[1]));
        }
        // an exact diagonal passes through one side cell
        assert_eq!(crossed(&g, &[0.05, 0.05], &[0.15, 0.15]).len(), 3);
        let back = crossed(&g, &[0.93, 0.47], &[0.05, 0.05]);
        assert_eq!(back.len(), 14);
    }

    #[test]
    fn morphology() {
        let g = square(6);
        let full = Region::new(g.clone(), vec![true; 36]).unwrap();
        let inner = full.interior();
        assert_eq!(inner.count(), 16);
        assert_eq!(full.dilate(1), full);
        let mut single = vec![false; 36];
        single[g.flat(&[2, 3])] = true;
        let one = Region::new(g.clone(), single).unwrap();
        assert_eq!(one.interior().count(), 0);
        assert_eq!(one.dilate(1).count(), 9);
        assert_eq!(one.dilate(2).count(), 25);
        assert!(one.is_connected());
        let mut two = one.mask.clone();
        two[g.flat(&[5, 5])] = true;
        assert_eq!(Region::new(g, two).unwrap().components(), 2);
    }

    #[test]
    fn jaccard_extremes() {
        let g = square(4);
        let mut a = vec![false; 16];
        a[0] = true;
        let mut b = vec![false; 16];
        b[15] = true;
        let ra = Region::new(g.clone(), a).unwrap();
        let rb = Region::new(g, b).unwrap();
        assert_eq!(ra.jaccard(&ra).unwrap(), 1.0);
        assert_eq!(ra.jaccard(&rb).unwrap(), 0.0);
    }

    #[test]
    fn pgm_round_trip() {
        let g = GridGeometry::new(vec![0.0, 0.0], vec![1.0, 2.0], vec![3, 5]).unwrap();
        let mask: Vec<bool> = (0..15).map(|k| k % 4 == 1).collect();
        let r = Region::new(g.clone(), mask).unwrap();
        let img = r.to_pgm().unwrap();
        assert_eq!((img.width, img.height), (3, 5));
        assert_eq!(Region::from_pgm(g, &img).unwrap(), r);
        let mut buf = Vec::new();
        r.write_index_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + r.count());
    }

    #[test]
    fn step_validation() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let (lo, hi) = default_gamma_box("malrieu").unwrap();
        let g = GridGeometry::cube(&lo, &hi, 64).unwrap();
        let max = max_gamma_step(&sys, &g);
        let opts = GammaOptions {
            step: Some(2.0 * max),
            ..Default::default()
        };
        let err = compute_gamma(&sys, &g, &opts).unwrap_err();
        assert!(err.to_string().contains("step"));
    }

    #[test]
    fn malrieu_gamma_basics() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let (lo, hi) = default_gamma_box("malrieu").unwrap();
        let g = GridGeometry::cube(&lo, &hi, 64).unwrap();
        let res = compute_gamma(&sys, &g, &GammaOptions::default()).unwrap();
        let r = &res.region;
        assert!(r.contains_point(&[0.0, 0.0]));
        assert!(r.contains_point(&[1.0, 0.0]));
        assert!(r.is_connected());
        assert!(r.interior().count() > 0);
        let from_p = compute_gamma(
            &sys,
            &g,
            &GammaOptions {
                seed: GammaSeed::P,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(from_p.region.mask, r.mask);
        // a seed inside the set only retraces it, up to grazed boundary cells
        let inner = compute_gamma(
            &sys,
            &g,
            &GammaOptions {
                seed: GammaSeed::Point(vec![0.5, 0.0]),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.mask.iter().zip(&inner.region.mask).all(|(&a, &b)| !a || b));
        assert!(inner.region.jaccard(r).unwrap() > 0.95);
    }

    #[test]
    fn finer_grid_is_consistent() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let (lo, hi) = default_gamma_box("malrieu").unwrap();
        let coarse = GridGeometry::cube(&lo, &hi, 32).unwrap();
        let fine = GridGeometry::cube(&lo, &hi, 64).unwrap();
        let rc = compute_gamma(&sys, &coarse, &GammaOptions::default()).unwrap().region;
        let rf = compute_gamma(&sys, &fine, &GammaOptions::default()).unwrap().region;
        let down = rf.coarsen(2).unwrap();
        let grown = rc.dilate(1);
        assert!(down.mask.iter().zip(&grown.mask).all(|(&a, &b)| !a || b));
    }

    #[test]
    fn rejects_oversized_step() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let g = square(8);
        let g = GridGeometry::new(vec![-0.5, -0.5], vec![1.5, 1.5], g.bins.clone()).unwrap();
        let max = max_gamma_step(&sys, &g);
        let opts = GammaOptions {
            step: Some(2.0 * max),
            ..Default::default()
        };
        assert!(compute_gamma(&sys, &g, &opts).is_err());
    }
}
