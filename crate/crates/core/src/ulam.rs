//! Ulam discretisation of the induced chain `P = K U`.
//!
//! Each cell is sampled at uniform start points; every start point is flowed
//! for an `Exp(α)` time in the cell's mode, which estimates the cell-to-cell
//! kernel of `K` per mode. The leading left eigenvector of the cell chain then
//! approximates `π`, and one more application of `K` gives `Π = π K`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityGrid, GridGeometry, Stochastic2};
use crate::error::{Error, Result};
use crate::model::{Mode, SwitchingSystem};
use crate::rng::SeedSpec;
use crate::theory::u_matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlamOptions {
    pub samples_per_cell: usize,
    /// Chain steps per discretised transition: the matrix approximates
    /// `P^m`, which has the same invariant law and is projected onto the
    /// grid `m` times less often.
    pub steps_per_transition: usize,
    pub tol: f64,
    /// Residual accepted, with a warning, when `tol` is not reached.
    pub stall_tol: f64,
    pub max_sweeps: usize,
    pub seed: SeedSpec,
}

impl UlamOptions {
    pub fn new(samples_per_cell: usize, seed: SeedSpec) -> Self {
        UlamOptions {
            samples_per_cell,
            steps_per_transition: 1,
            tol: 1e-8,
            stall_tol: 1e-6,
            max_sweeps: 10_000,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UlamResult {
    /// Invariant law of the induced chain.
    pub pi: DensityGrid,
    /// Invariant law of the continuous-time process, `π K`.
    pub big_pi: DensityGrid,
    pub alpha: f64,
    pub sweeps: usize,
    pub residual: f64,
    /// Fraction of sampled transitions that left the box and were dropped.
    pub leaked: f64,
}

/// Incoming sparse rows over the states `mode * cells + cell`: for each
/// target, `(source, probability)`.
struct Kernel {
    offsets: Vec<usize>,
    sources: Vec<u32>,
    weights: Vec<f64>,
}

impl Kernel {
    /// `out[t] = Σ_s v[s] K[s, t]`.
    fn apply_left(&self, v: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(t, o)| {
            let range = self.offsets[t]..self.offsets[t + 1];
            *o = self.sources[range.clone()]
                .iter()
                .zip(&self.weights[range])
                .map(|(&s, &w)| v[s as usize] * w)
                .sum();
        });
    }
}

/// Monte Carlo estimate of a cell kernel. Every sample makes `steps` chain
/// steps; with `switch` false the mode is frozen, which gives `K`. Returns
/// the kernel and the number of samples that left the box.
fn build_kernel(
    sys: &SwitchingSystem,
    geom: &GridGeometry,
    alpha: f64,
    u: &Stochastic2,
    steps: usize,
    switch: bool,
    opts: &UlamOptions,
) -> (Kernel, u64) {
    let n = geom.n_cells();
    let d = geom.dim();
    let m = opts.samples_per_cell;
    // distinct streams for the two kernels
    let base = opts.seed.stream.wrapping_add(if switch { 0 } else { 1 << 40 });
    let rows: Vec<(Vec<(u32, u32)>, u64)> = (0..2 * n)
        .into_par_iter()
        .map(|s| {
            let mut rng = opts.seed.with_stream(base.wrapping_add(s as u64)).rng();
            let start_mode = s / n;
            let idx = geom.unflat(s % n);
            let mut x = vec![0.0; d];
            let mut scratch = vec![0.0; d];
            let mut hits: Vec<u32> = Vec::with_capacity(m);
            let mut lost = 0u64;
            for _ in 0..m {
                for k in 0..d {
                    x[k] = geom.lo[k] + (idx[k] as f64 + rng.uniform()) * geom.width(k);
                }
                let mut mode = start_mode;
                for _ in 0..steps {
                    let tau = rng.exponential(alpha);
                    let current = if mode == 0 { Mode::Zero } else { Mode::One };
                    sys.flow_in_place(current, tau, &mut x, &mut scratch);
                    if switch && rng.bernoulli(u[mode][1 - mode]) {
                        mode = 1 - mode;
                    }
                }
                match geom.locate(&x) {
                    Some(t) => hits.push((mode * n + t) as u32),
                    None => lost += 1,
                }
            }
            hits.sort_unstable();
            let mut row: Vec<(u32, u32)> = Vec::new();
            for t in hits {
                match row.last_mut() {
                    Some((last, count)) if *last == t => *count += 1,
                    _ => row.push((t, 1)),
                }
            }
            (row, lost)
        })
        .collect();
    let states = 2 * n;
    let mut offsets = vec![0usize; states + 1];
    for (row, _) in &rows {
        for &(t, _) in row {
            offsets[t as usize + 1] += 1;
        }
    }
    for t in 0..states {
        offsets[t + 1] += offsets[t];
    }
    let nnz = offsets[states];
    let mut sources = vec![0u32; nnz];
    let mut weights = vec![0.0; nnz];
    let mut fill = offsets.clone();
    let mut leaked = 0u64;
    for (s, (row, lost)) in rows.iter().enumerate() {
        leaked += lost;
        // rows are conditioned on staying in the box
        let kept: u32 = row.iter().map(|r| r.1).sum();
        for &(t, count) in row {
            let slot = fill[t as usize];
            sources[slot] = s as u32;
            weights[slot] = count as f64 / kept as f64;
            fill[t as usize] += 1;
        }
    }
    (
        Kernel {
            offsets,
            sources,
            weights,
        },
        leaked,
    )
}

fn to_grid(geom: &GridGeometry, v: &[f64], samples: u64, clipped: u64) -> DensityGrid {
    let n = geom.n_cells();
    let vol = geom.cell_volume();
    DensityGrid {
        geometry: geom.clone(),
        rho0: v[..n].iter().map(|m| m / vol).collect(),
        rho1: v[n..].iter().map(|m| m / vol).collect(),
        samples,
        clipped,
    }
}

fn normalise(v: &mut [f64]) -> Result<()> {
    let mass: f64 = v.iter().sum();
    if mass.is_nan() || mass <= 0.0 {
        return Err(Error::numerical("all mass left the Ulam box"));
    }
    v.iter_mut().for_each(|x| *x /= mass);
    Ok(())
}

/// Invariant densities of the discretised chain by power iteration.
///
/// The box should be forward invariant for both flows; samples that leave
/// it are dropped and reported in `leaked`.
pub fn ulam_invariant(sys: &SwitchingSystem, alpha: f64, geom: &GridGeometry, opts: &UlamOptions) -> Result<UlamResult> {
    let u: Stochastic2 = u_matrix(sys, alpha)?;
    if geom.dim() != sys.dim() {
        return Err(Error::invalid("grid dimension does not match the system"));
    }
    if opts.samples_per_cell == 0 || opts.steps_per_transition == 0 {
        return Err(Error::invalid("samples_per_cell and steps_per_transition must be positive"));
    }
    if 2 * geom.n_cells() > u32::MAX as usize {
        return Err(Error::invalid("too many cells for the Ulam kernel"));
    }
    let n = geom.n_cells();
    let (p, lost_p) = build_kernel(sys, geom, alpha, &u, opts.steps_per_transition, true, opts);
    let (k, lost_k) = build_kernel(sys, geom, alpha, &u, 1, false, opts);
    let mut pi = vec![0.5 / n as f64; 2 * n];
    let mut next = vec![0.0; 2 * n];
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        p.apply_left(&pi, &mut next);
        // mass sent to cells without rows is restored here
        normalise(&mut next)?;
        residual = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if residual < opts.tol {
            break;
        }
    }
    if residual >= opts.tol {
        if residual > opts.stall_tol {
            return Err(Error::numerical(format!(
                "power iteration stalled: residual {residual:.3e} after {sweeps} sweeps"
            )));
        }
        log::warn!("power iteration stopped at residual {residual:.3e} after {sweeps} sweeps");
    }
    let mut big = vec![0.0; 2 * n];
    k.apply_left(&pi, &mut big);
    normalise(&mut big)?;
    let total = (4 * n * opts.samples_per_cell) as u64;
    let lost = lost_p + lost_k;
    if lost > 0 {
        log::warn!("{lost} of {total} Ulam samples left the box");
    }
    Ok(UlamResult {
        pi: to_grid(geom, &pi, total - lost, lost),
        big_pi: to_grid(geom, &big, total - lost, lost),
        alpha,
        sweeps,
        residual,
        leaked: lost as f64 / total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ulam_is_a_probability_with_stationary_modes() {
        let sys = SwitchingSystem::bhlm(2.0, 1.0, 3.0, 6.0).unwrap();
        let geom = GridGeometry::cube(&[-0.25, -0.25], &[1.25, 1.25], 16).unwrap();
        let res = ulam_invariant(&sys, 12.0, &geom, &UlamOptions::new(200, SeedSpec::new(1, 0))).unwrap();
        for g in [&res.pi, &res.big_pi] {
            assert!((g.mass() - 1.0).abs() < 1e-9);
            assert!(g.rho0.iter().chain(&g.rho1).all(|&v| v >= 0.0));
        }
        let masses = res.big_pi.mode_masses();
        let want = sys.stationary_modes();
        assert!((masses.0 - want[0]).abs() < 0.01, "{masses:?} {want:?}");
        assert!(res.residual < 1e-8);
        assert_eq!(res.leaked, 0.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        let sys = SwitchingSystem::malrieu(1.0, 2.0).unwrap();
        let geom = GridGeometry::cube(&[-1.0, -1.0], &[2.0, 2.0], 4).unwrap();
        assert!(ulam_invariant(&sys, 2.0, &geom, &UlamOptions::new(10, SeedSpec::new(1, 0))).is_err());
    }
}
