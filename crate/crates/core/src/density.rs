//! Grid estimates of the invariant densities `(ρ0, ρ1)`.
//!
//! Grids are axis-aligned boxes split into equal cells and stored flat in
//! row-major order (first axis slowest). Densities are per unit volume with
//! respect to `dx ⊗ (δ0 + δ1)`, so `Σ (ρ0 + ρ1) · vol = 1`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mode, Point, SwitchingSystem};
use crate::norm::StateSpace;
use crate::pgm::Pgm;
use crate::simulate::{SampleBuffer, SampleSink};

/// Box and per-axis bin counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bins: Vec<usize>,
}

impl GridGeometry {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || hi.len() != d || bins.len() != d {
            return Err(Error::invalid("box corners and bins must share a positive dimension"));
        }
        for k in 0..d {
            if !(lo[k].is_finite() && hi[k].is_finite() && lo[k] < hi[k]) {
                return Err(Error::invalid(format!(
                    "axis {k}: need finite lo < hi, got [{}, {}]",
                    lo[k], hi[k]
                )));
            }
            if bins[k] == 0 {
                return Err(Error::invalid(format!("axis {k} has zero bins")));
            }
        }
        let total = bins.iter().try_fold(1usize, |acc, &b| acc.checked_mul(b));
        match total {
            Some(n) if n <= 1 << 28 => {}
            _ => return Err(Error::invalid("grid has too many cells")),
        }
        Ok(GridGeometry { lo, hi, bins })
    }

    /// Same bin count on every axis.
    pub fn cube(lo: &[f64], hi: &[f64], n: usize) -> Result<Self> {
        Self::new(lo.to_vec(), hi.to_vec(), vec![n; lo.len()])
    }

    /// Bounding box of `M` inflated by 10%.
    pub fn default_for(sys: &SwitchingSystem, n: usize) -> Result<Self> {
        let m = StateSpace::for_system(sys)?;
        let (lo, hi) = m.bounding_box(1.1);
        Self::cube(&lo, &hi, n)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn n_cells(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.bins[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k)).product()
    }

    /// Bin index along `axis`, if inside the half-open range (the upper face
    /// of the box is included in the last bin).
    pub fn axis_bin(&self, axis: usize, v: f64) -> Option<usize> {
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        if !(v >= lo && v <= hi) {
            return None;
        }
        let n = self.bins[axis];
        let k = ((v - lo) / (hi - lo) * n as f64) as usize;
        Some(k.min(n - 1))
    }

    /// Flat index of the cell containing `x`.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut flat = 0usize;
        for (axis, &v) in x.iter().enumerate() {
            flat = flat * self.bins[axis] + self.axis_bin(axis, v)?;
        }
        Some(flat)
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.bins)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn unflat(&self, mut flat: usize) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0; d];
        for axis in (0..d).rev() {
            idx[axis] = flat % self.bins[axis];
            flat /= self.bins[axis];
        }
        idx
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.unflat(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.lo[k] + (i as f64 + 0.5) * self.width(k))
            .collect()
    }

    /// Flat indices of the face neighbours of a cell.
    pub fn neighbours(&self, flat: usize) -> impl Iterator<Item = usize> + '_ {
        let idx = self.unflat(flat);
        let mut out = Vec::with_capacity(2 * self.dim());
        let mut stride = 1usize;
        for axis in (0..self.dim()).rev() {
            if idx[axis] > 0 {
                out.push(flat - stride);
            }
            if idx[axis] + 1 < self.bins[axis] {
                out.push(flat + stride);
            }
            stride *= self.bins[axis];
        }
        out.into_iter()
    }

    pub fn ensure_same(&self, other: &GridGeometry) -> Result<()> {
        if self != other {
            return Err(Error::invalid("grids have different geometry"));
        }
        Ok(())
    }
}

/// Raw per-mode cell counts; a mergeable [`SampleSink`].
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub geometry: GridGeometry,
    counts: Vec<u64>,
    inside: u64,
    clipped: u64,
}

impl Histogram {
    pub fn new(geometry: GridGeometry) -> Self {
        let n = geometry.n_cells();
        Histogram {
            geometry,
            counts: vec![0; 2 * n],
            inside: 0,
            clipped: 0,
        }
    }

    pub fn count(&self, mode: Mode, flat: usize) -> u64 {
        self.counts[mode.index() * self.geometry.n_cells() + flat]
    }

    pub fn inside(&self) -> u64 {
        self.inside
    }

    pub fn clipped(&self) -> u64 {
        self.clipped
    }

    /// Normalises by the number of in-box samples and the cell volume.
    pub fn finish(&self) -> Result<DensityGrid> {
        if self.inside == 0 {
            return Err(Error::invalid("no samples fell inside the grid box"));
        }
        if self.clipped > 0 {
            log::warn!(
                "{} of {} samples fell outside the grid box and were clipped",
                self.clipped,
                self.clipped + self.inside
            );
        }
        let n = self.geometry.n_cells();
        let scale = 1.0 / (self.inside as f64 * self.geometry.cell_volume());
        let rho = |m: usize| -> Vec<f64> {
            self.counts[m * n..(m + 1) * n]
                .iter()
                .map(|&c| c as f64 * scale)
                .collect()
        };
        Ok(DensityGrid {
            geometry: self.geometry.clone(),
            rho0: rho(0),
            rho1: rho(1),
            samples: self.inside,
            clipped: self.clipped,
        })
    }
}

impl SampleSink for Histogram {
    fn record(&mut self, x: &[f64], mode: Mode) {
        match self.geometry.locate(x) {
            Some(flat) => {
                self.counts[mode.index() * self.geometry.n_cells() + flat] += 1;
                self.inside += 1;
            }
            None => self.clipped += 1,
        }
    }

    fn merge(&mut self, other: Self) {
        debug_assert_eq!(self.geometry, other.geometry);
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.inside += other.inside;
        self.clipped += other.clipped;
    }
}

/// Normalised per-mode densities on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub geometry: GridGeometry,
    pub rho0: Vec<f64>,
    pub rho1: Vec<f64>,
    /// In-box samples behind the estimate.
    pub samples: u64,
    /// Samples that fell outside the box.
    pub clipped: u64,
}

/// Bins a sample buffer.
pub fn accumulate_histogram(samples: &SampleBuffer, geometry: &GridGeometry) -> Result<DensityGrid> {
    if samples.is_empty() {
        return Err(Error::invalid("empty sample set"));
    }
    if samples.dim != geometry.dim() {
        return Err(Error::invalid("sample dimension does not match the grid"));
    }
    let mut h = Histogram::new(geometry.clone());
    for k in 0..samples.len() {
        h.record(samples.point(k), samples.modes[k]);
    }
    h.finish()
}

/// A 2x2 row-stochastic matrix.
pub type Stochastic2 = [[f64; 2]; 2];

fn check_stochastic(u: &Stochastic2) -> Result<()> {
    for row in u {
        if row.iter().any(|&v| !(v.is_finite() && v >= 0.0)) || (row[0] + row[1] - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("{u:?} is not row-stochastic")));
        }
    }
    Ok(())
}

/// `ρ'_i = ρ0 U_{0i} + ρ1 U_{1i}`: the density of `π = Π U`.
pub fn pi_from_big_pi(grid: &DensityGrid, u: &Stochastic2) -> Result<DensityGrid> {
    check_stochastic(u)?;
    let mix = |i: usize| -> Vec<f64> {
        grid.rho0
            .iter()
            .zip(&grid.rho1)
            .map(|(a, b)| a * u[0][i] + b * u[1][i])
            .collect()
    };
    Ok(DensityGrid {
        geometry: grid.geometry.clone(),
        rho0: mix(0),
        rho1: mix(1),
        samples: grid.samples,
        clipped: grid.clipped,
    })
}

/// L1 distance `Σ (|Δρ0| + |Δρ1|) · vol`, in `[0, 2]` for probability grids.
pub fn compare_densities(a: &DensityGrid, b: &DensityGrid) -> Result<f64> {
    a.geometry.ensure_same(&b.geometry)?;
    let s: f64 = a
        .rho0
        .iter()
        .zip(&b.rho0)
        .chain(a.rho1.iter().zip(&b.rho1))
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(s * a.geometry.cell_volume())
}

impl DensityGrid {
    pub fn rho(&self, mode: Mode) -> &[f64] {
        match mode {
            Mode::Zero => &self.rho0,
            Mode::One => &self.rho1,
        }
    }

    /// `(m0, m1)`.
    pub fn mode_masses(&self) -> (f64, f64) {
        let v = self.geometry.cell_volume();
        (
            self.rho0.iter().sum::<f64>() * v,
            self.rho1.iter().sum::<f64>() * v,
        )
    }

    pub fn mass(&self) -> f64 {
        let (a, b) = self.mode_masses();
        a + b
    }

    /// `ρ0 + ρ1` per cell.
    pub fn total(&self) -> Vec<f64> {
        self.rho0.iter().zip(&self.rho1).map(|(a, b)| a + b).collect()
    }

    /// Cells whose total density exceeds `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<bool> {
        self.total().iter().map(|&v| v > threshold).collect()
    }

    /// CSV `x,y,rho0,rho1` at cell centres (planar grids only).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.geometry.dim() != 2 {
            return Err(Error::invalid("x,y CSV export needs a planar grid; use the index export"));
        }
        writeln!(w, "x,y,rho0,rho1")?;
        for k in 0..self.geometry.n_cells() {
            let c = self.geometry.center(k);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                c[0], c[1], self.rho0[k], self.rho1[k]
            )?;
        }
        Ok(())
    }

    /// CSV `i1,...,id,rho0,rho1` with integer cell indices, any dimension.
    pub fn write_index_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.geometry.dim();
        let names: Vec<String> = (1..=d).map(|k| format!("i{k}")).collect();
        writeln!(w, "{},rho0,rho1", names.join(","))?;
        for k in 0..self.geometry.n_cells() {
            let idx = self.geometry.unflat(k);
            for i in idx {
                write!(w, "{i},")?;
            }
            writeln!(w, "{:.16e},{:.16e}", self.rho0[k], self.rho1[k])?;
        }
        Ok(())
    }

    /// JSON sidecar describing the grid behind an index export.
    pub fn sidecar(&self) -> GridSidecar {
        GridSidecar {
            geometry: self.geometry.clone(),
            cell_volume: self.geometry.cell_volume(),
            samples: self.samples,
            clipped: self.clipped,
            mode_masses: self.mode_masses(),
        }
    }

    /// 16-bit heatmap of the chosen field, linearly scaled so the maximum maps
    /// to 65535. Columns follow the first axis, rows the second axis with the
    /// largest value on top.
    pub fn heatmap(&self, field: HeatmapField) -> Result<(Pgm, HeatmapScale)> {
        if self.geometry.dim() != 2 {
            return Err(Error::invalid("heatmaps need a planar grid; take a slice first"));
        }
        let values: Vec<f64> = match field {
            HeatmapField::Rho0 => self.rho0.clone(),
            HeatmapField::Rho1 => self.rho1.clone(),
            HeatmapField::Total => self.total(),
        };
        let max = values.iter().copied().fold(0.0, f64::max);
        let (nx, ny) = (self.geometry.bins[0], self.geometry.bins[1]);
        let mut pixels = vec![0u16; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                let v = values[ix * ny + iy];
                let q = if max > 0.0 { (v / max * 65535.0).round() } else { 0.0 };
                pixels[(ny - 1 - iy) * nx + ix] = q as u16;
            }
        }
        let img = Pgm::new(nx, ny, 65535, pixels)?;
        Ok((
            img,
            HeatmapScale {
                field,
                max_density: max,
                density_per_level: max / 65535.0,
                geometry: self.geometry.clone(),
            },
        ))
    }

    /// Planar slice through axes `(a, b)` with every other axis pinned at the
    /// index given in `at` (entries for `a` and `b` are ignored).
    pub fn slice(&self, a: usize, b: usize, at: &[usize]) -> Result<DensityGrid> {
        let g = &self.geometry;
        let d = g.dim();
        if a >= d || b >= d || a == b || at.len() != d {
            return Err(Error::invalid("bad slice axes or index"));
        }
        if at.iter().zip(&g.bins).any(|(&i, &n)| i >= n) {
            return Err(Error::invalid("slice index outside the grid"));
        }
        let geometry = GridGeometry::new(
            vec![g.lo[a], g.lo[b]],
            vec![g.hi[a], g.hi[b]],
            vec![g.bins[a], g.bins[b]],
        )?;
        let mut rho0 = Vec::with_capacity(geometry.n_cells());
        let mut rho1 = Vec::with_capacity(geometry.n_cells());
        let mut idx = at.to_vec();
        for i in 0..g.bins[a] {
            for j in 0..g.bins[b] {
                idx[a] = i;
                idx[b] = j;
                let f = g.flat(&idx);
                rho0.push(self.rho0[f]);
                rho1.push(self.rho1[f]);
            }
        }
        Ok(DensityGrid {
            geometry,
            rho0,
            rho1,
            samples: self.samples,
            clipped: self.clipped,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub geometry: GridGeometry,
    pub cell_volume: f64,
    pub samples: u64,
    pub clipped: u64,
    pub mode_masses: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapField {
    Rho0,
    Rho1,
    Total,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapScale {
    pub field: HeatmapField,
    pub max_density: f64,
    /// Density represented by one grey level.
    pub density_per_level: f64,
    pub geometry: GridGeometry,
}

/// Gaussian product-kernel estimate of `ρ_mode(x)` with Silverman's
/// bandwidth per axis. Comparable with grid densities: the kernel mass of
/// one mode is its sample fraction.
pub fn kde_density(samples: &SampleBuffer, mode: Mode, x: &[f64]) -> Result<f64> {
    let d = samples.dim;
    if x.len() != d {
        return Err(Error::invalid("evaluation point has the wrong dimension"));
    }
    let idx: Vec<usize> = (0..samples.len()).filter(|&k| samples.modes[k] == mode).collect();
    let n = idx.len();
    if n < 2 {
        return Ok(0.0);
    }
    let mut bw = vec![0.0; d];
    for (axis, h) in bw.iter_mut().enumerate() {
        let mean = idx.iter().map(|&k| samples.point(k)[axis]).sum::<f64>() / n as f64;
        let var = idx
            .iter()
            .map(|&k| (samples.point(k)[axis] - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        *h = var.sqrt() * (4.0 / ((d as f64 + 2.0) * n as f64)).powf(1.0 / (d as f64 + 4.0));
        if *h <= 0.0 {
            return Err(Error::invalid("degenerate sample spread for KDE"));
        }
    }
    let norm: f64 = bw
        .iter()
        .map(|h| h * (2.0 * std::f64::consts::PI).sqrt())
        .product();
    let sum: f64 = idx
        .iter()
        .map(|&k| {
            let q: f64 = samples
                .point(k)
                .iter()
                .zip(x)
                .zip(&bw)
                .map(|((s, v), h)| ((s - v) / h).powi(2))
                .sum();
            (-0.5 * q).exp()
        })
        .sum();
    Ok(sum / (norm * samples.len() as f64))
}

/// Finite-sample verdict thresholds for [`SmoothnessProbe`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeThresholds {
    /// Largest relative change between the last two levels for "bounded".
    pub stable_tol: f64,
    /// Smallest growth factor per halving, at every level, for "blow-up".
    pub growth: f64,
    /// Fewer window samples than this gives an inconclusive verdict.
    pub min_samples: u64,
}

impl Default for ProbeThresholds {
    fn default() -> Self {
        ProbeThresholds {
            stable_tol: 0.15,
            growth: 1.5,
            min_samples: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeVerdict {
    Bounded,
    BlowUpSuspected,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    pub h: f64,
    pub sup_density: f64,
    /// Largest `|ρ(a) - ρ(b)| / h` over face-adjacent cells of one mode.
    pub lipschitz: f64,
    /// Growth of `sup_density` against the previous level, per halving of `h`.
    pub growth_per_halving: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessProbe {
    pub center: Vec<f64>,
    /// Half-width of the cubic window shared by all levels.
    pub window: f64,
    pub samples_total: u64,
    pub samples_in_window: u64,
    pub levels: Vec<ProbeLevel>,
    pub thresholds: ProbeThresholds,
    pub verdict: ProbeVerdict,
}

/// Nested histograms on the cube of half-width `4 h_0` around a centre, one
/// per level, all aligned so that finer cells partition coarser ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSink {
    center: Vec<f64>,
    window: f64,
    levels: Vec<f64>,
    grids: Vec<Histogram>,
    total: u64,
}

impl ProbeSink {
    /// `levels` must decrease, and each ratio `h_k / h_{k+1}` must be an
    /// integer so the grids nest.
    pub fn new(center: &[f64], levels: &[f64]) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("at least one probe level is required"));
        }
        if levels.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid("probe levels must be positive"));
        }
        for w in levels.windows(2) {
            let r = w[0] / w[1];
            if !(r > 1.0 && (r - r.round()).abs() < 1e-9) {
                return Err(Error::invalid(format!(
                    "probe levels must decrease by integer ratios, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        let window = 4.0 * levels[0];
        let lo: Vec<f64> = center.iter().map(|c| c - window).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + window).collect();
        let grids = levels
            .iter()
            .map(|h| {
                let n = (2.0 * window / h).round() as usize;
                GridGeometry::cube(&lo, &hi, n).map(Histogram::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProbeSink {
            center: center.to_vec(),
            window,
            levels: levels.to_vec(),
            grids,
            total: 0,
        })
    }

    pub fn finish(&self, thresholds: ProbeThresholds) -> SmoothnessProbe {
        let n = self.total.max(1) as f64;
        let in_window = self.grids[0].inside();
        let mut levels: Vec<ProbeLevel> = Vec::with_capacity(self.levels.len());
        for (k, (&h, grid)) in self.levels.iter().zip(&self.grids).enumerate() {
            let g = &grid.geometry;
            let vol = g.cell_volume();
            let rho = |m: Mode, c: usize| grid.count(m, c) as f64 / (n * vol);
            let mut sup = 0.0f64;
            let mut lip = 0.0f64;
            for c in 0..g.n_cells() {
                for m in [Mode::Zero, Mode::One] {
                    let r = rho(m, c);
                    sup = sup.max(r);
                    for nb in g.neighbours(c).filter(|&nb| nb > c) {
                        lip = lip.max((r - rho(m, nb)).abs() / h);
                    }
                }
            }
            let growth = (k > 0 && levels[k - 1].sup_density > 0.0).then(|| {
                let halvings = (self.levels[k - 1] / h).log2();
                (sup / levels[k - 1].sup_density).powf(1.0 / halvings)
            });
            levels.push(ProbeLevel {
                h,
                sup_density: sup,
                lipschitz: lip,
                growth_per_halving: growth,
            });
        }
        let verdict = if in_window < thresholds.min_samples || levels.len() < 2 {
            ProbeVerdict::Inconclusive
        } else {
            let growths: Vec<f64> = levels.iter().filter_map(|l| l.growth_per_halving).collect();
            let last = &levels[levels.len() - 1];
            let prev = &levels[levels.len() - 2];
            let stable = (last.sup_density / prev.sup_density - 1.0).abs() <= thresholds.stable_tol;
            if growths.len() == levels.len() - 1 && growths.iter().all(|&g| g >= thresholds.growth) {
                ProbeVerdict::BlowUpSuspected
            } else if stable {
                ProbeVerdict::Bounded
            } else {
                ProbeVerdict::Inconclusive
            }
        };
        SmoothnessProbe {
            center: self.center.clone(),
            window: self.window,
            samples_total: self.total,
            samples_in_window: in_window,
            levels,
            thresholds,
            verdict,
        }
    }
}

impl SampleSink for ProbeSink {
    fn record(&mut self, x: &[f64], mode: Mode) {
        self.total += 1;
        if x
            .iter()
            .zip(&self.center)
            .any(|(v, c)| (v - c).abs() > self.window)
        {
            return;
        }
        for g in &mut self.grids {
            g.record(x, mode);
        }
    }

    fn merge(&mut self, other: Self) {
        self.total += other.total;
        for (a, b) in self.grids.iter_mut().zip(other.grids) {
            a.merge(b);
        }
    }
}

/// Halving levels `1/8, …, 1/128`.
pub fn default_probe_levels() -> Vec<f64> {
    (3..=7).map(|k| 1.0 / f64::from(1u32 << k)).collect()
}

/// Runs the ensemble described by `cfg` once and probes the resulting sample
/// set at every level.
pub fn smoothness_probe(
    sys: &SwitchingSystem,
    center: &Point,
    levels: &[f64],
    cfg: &crate::simulate::EnsembleConfig,
    thresholds: ProbeThresholds,
) -> Result<SmoothnessProbe> {
    if center.len() != sys.dim() {
        return Err(Error::invalid("probe centre has the wrong dimension"));
    }
    let template = ProbeSink::new(center.as_slice(), levels)?;
    let sink = crate::simulate::ensemble(sys, cfg, || template.clone())?;
    Ok(sink.finish(thresholds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> GridGeometry {
        GridGeometry::cube(&[0.0, 0.0], &[1.0, 1.0], n).unwrap()
    }

    #[test]
    fn geometry_indexing() {
        let g = GridGeometry::new(vec![0.0, -1.0, 0.0], vec![2.0, 1.0, 1.0], vec![4, 2, 3]).unwrap();
        assert_eq!(g.n_cells(), 24);
        assert!((g.cell_volume() - 0.5 * 1.0 / 3.0).abs() < 1e-15);
        for f in 0..24 {
            assert_eq!(g.flat(&g.unflat(f)), f);
            assert_eq!(g.locate(&g.center(f)), Some(f));
        }
        assert_eq!(g.unflat(1), vec![0, 0, 1]);
        assert_eq!(g.locate(&[2.0, 1.0, 1.0]), Some(23));
        assert_eq!(g.locate(&[2.1, 0.0, 0.0]), None);
        let nb: Vec<usize> = g.neighbours(0).collect();
        assert_eq!(nb.len(), 3);
        assert!(GridGeometry::new(vec![0.0], vec![0.0], vec![3]).is_err());
    }

    #[test]
    fn single_point() {
        let mut s = SampleBuffer::new(2);
        for _ in 0..10 {
            s.record(&[0.3, 0.6], Mode::Zero);
        }
        let g = accumulate_histogram(&s, &unit_grid(10)).unwrap();
        assert!(g.rho1.iter().all(|&v| v == 0.0));
        let hot = g.geometry.locate(&[0.3, 0.6]).unwrap();
        assert!((g.rho0[hot] - 100.0).abs() < 1e-12);
        assert_eq!(g.rho0.iter().filter(|&&v| v > 0.0).count(), 1);
        assert_eq!(g.mode_masses(), (1.0, 0.0));
    }

    #[test]
    fn clipping_and_errors() {
        let mut s = SampleBuffer::new(2);
        s.record(&[0.5, 0.5], Mode::One);
        s.record(&[5.0, 0.5], Mode::One);
        let g = accumulate_histogram(&s, &unit_grid(4)).unwrap();
        assert_eq!(g.clipped, 1);
        assert!((g.mass() - 1.0).abs() < 1e-12);
        assert!(accumulate_histogram(&SampleBuffer::new(2), &unit_grid(4)).is_err());
        let mut far = SampleBuffer::new(2);
        far.record(&[9.0, 9.0], Mode::Zero);
        assert!(accumulate_histogram(&far, &unit_grid(4)).is_err());
    }

    #[test]
    fn merge_equals_concatenation() {
        let g = unit_grid(8);
        let mut a = Histogram::new(g.clone());
        let mut b = Histogram::new(g.clone());
        let mut all = Histogram::new(g);
        for k in 0..100 {
            let x = [(k as f64 * 0.37) % 1.0, (k as f64 * 0.11) % 1.0];
            let m = if k % 3 == 0 { Mode::One } else { Mode::Zero };
            if k < 40 {
                a.record(&x, m)
            } else {
                b.record(&x, m)
            }
            all.record(&x, m);
        }
        a.merge(b);
        assert_eq!(a, all);
    }

    #[test]
    fn pi_conversion() {
        let mut s = SampleBuffer::new(2);
        for k in 0..50 {
            let m = if k % 2 == 0 { Mode::One } else { Mode::Zero };
            s.record(&[(k as f64 * 0.07) % 1.0, 0.4], m);
        }
        let g = accumulate_histogram(&s, &unit_grid(5)).unwrap();
        let id = pi_from_big_pi(&g, &[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(id, g);
        let u = [[0.75, 0.25], [0.25, 0.75]];
        let out = pi_from_big_pi(&g, &u).unwrap();
        assert!((out.mass() - g.mass()).abs() < 1e-12);
        let mut sym = g.clone();
        sym.rho1 = sym.rho0.clone();
        let out = pi_from_big_pi(&sym, &u).unwrap();
        assert!(compare_densities(&out, &sym).unwrap() < 1e-12);
        assert!(pi_from_big_pi(&g, &[[0.5, 0.6], [0.0, 1.0]]).is_err());
        assert!(pi_from_big_pi(&g, &[[1.5, -0.5], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn l1_distance() {
        let mut a = SampleBuffer::new(2);
        a.record(&[0.1, 0.1], Mode::Zero);
        let mut b = SampleBuffer::new(2);
        b.record(&[0.9, 0.9], Mode::One);
        let ga = accumulate_histogram(&a, &unit_grid(4)).unwrap();
        let gb = accumulate_histogram(&b, &unit_grid(4)).unwrap();
        assert_eq!(compare_densities(&ga, &ga).unwrap(), 0.0);
        assert!((compare_densities(&ga, &gb).unwrap() - 2.0).abs() < 1e-12);
        let gc = accumulate_histogram(&a, &unit_grid(5)).unwrap();
        assert!(compare_densities(&ga, &gc).is_err());
    }

    #[test]
    fn exports() {
        let mut s = SampleBuffer::new(2);
        s.record(&[0.1, 0.9], Mode::Zero);
        s.record(&[0.6, 0.1], Mode::One);
        let g = accumulate_histogram(&s, &unit_grid(2)).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,rho0,rho1");
        assert_eq!(
            lines[2],
            "2.5000000000000000e-1,7.5000000000000000e-1,2.0000000000000000e0,0.0000000000000000e0"
        );
        let mut buf = Vec::new();
        g.write_index_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("i1,i2,rho0,rho1\n0,0,"));
        let (img, scale) = g.heatmap(HeatmapField::Total).unwrap();
        assert_eq!(scale.max_density, 2.0);
        // (0.1, 0.9) is the top-left pixel, (0.6, 0.1) the bottom-right
        assert_eq!(img.pixels, vec![65535, 0, 0, 65535]);
        let json = serde_json::to_string(&g.sidecar()).unwrap();
        assert!(json.contains("\"bins\":[2,2]"));
    }

    #[test]
    fn slices() {
        let geom = GridGeometry::cube(&[0.0; 3], &[1.0; 3], 4).unwrap();
        let mut h = Histogram::new(geom);
        h.record(&[0.1, 0.6, 0.9], Mode::Zero);
        let g = h.finish().unwrap();
        let sl = g.slice(0, 1, &[0, 0, 3]).unwrap();
        assert_eq!(sl.geometry.bins, vec![4, 4]);
        assert_eq!(sl.rho0.iter().filter(|&&v| v > 0.0).count(), 1);
        let empty = g.slice(0, 1, &[0, 0, 0]).unwrap();
        assert!(empty.rho0.iter().all(|&v| v == 0.0));
        assert!(g.heatmap(HeatmapField::Rho0).is_err());
    }

    #[test]
    fn kde_of_gaussian_cloud() {
        let mut rng = crate::rng::SeedSpec::new(5, 0).rng();
        let mut s = SampleBuffer::new(1);
        for _ in 0..20_000 {
            let u1 = 1.0 - rng.uniform();
            let u2 = rng.uniform();
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            s.record(&[z], Mode::Zero);
        }
        let at0 = kde_density(&s, Mode::Zero, &[0.0]).unwrap();
        let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((at0 - exact).abs() < 0.02, "kde {at0}");
        assert_eq!(kde_density(&s, Mode::One, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn probe_sup_is_monotone_and_verdicts() {
        let mut sink = ProbeSink::new(&[0.0, 0.0], &[0.1, 0.05, 0.025]).unwrap();
        let mut rng = crate::rng::SeedSpec::new(6, 0).rng();
        for _ in 0..200_000 {
            let x = [rng.uniform() - 0.5, rng.uniform() - 0.5];
            sink.record(&x, Mode::Zero);
        }
        let p = sink.finish(ProbeThresholds::default());
        assert_eq!(p.samples_total, 200_000);
        for w in p.levels.windows(2) {
            assert!(w[1].sup_density >= w[0].sup_density);
        }
        assert_eq!(p.verdict, ProbeVerdict::Bounded);

        // density ~ |x|^(-3/2) near the origin
        let mut sink = ProbeSink::new(&[0.0, 0.0], &[0.1, 0.05, 0.025]).unwrap();
        for _ in 0..200_000 {
            let r = rng.uniform().powi(2) * 0.5;
            let th = std::f64::consts::TAU * rng.uniform();
            sink.record(&[r * th.cos(), r * th.sin()], Mode::One);
        }
        assert_eq!(sink.finish(ProbeThresholds::default()).verdict, ProbeVerdict::BlowUpSuspected);

        let mut far = ProbeSink::new(&[10.0, 10.0], &[0.1, 0.05]).unwrap();
        far.record(&[0.0, 0.0], Mode::Zero);
        assert_eq!(far.finish(ProbeThresholds::default()).verdict, ProbeVerdict::Inconclusive);
        assert!(ProbeSink::new(&[0.0], &[0.1, 0.03]).is_err());
    }
}
