//! Quantitative side of the regularity theorem: the rate threshold, operator
//! norm factors, the `Q + Δ` parameter search and the submersion determinant.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Stochastic2;
use crate::error::{Error, Result};
use crate::linalg::{expm, SquareMatrix};
use crate::model::SwitchingSystem;
use crate::rng::SeedSpec;

/// One inequality `left > right` (or `>=`), kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub left: f64,
    pub right: f64,
    pub strict: bool,
    pub holds: bool,
}

impl Inequality {
    fn greater(name: &str, left: f64, right: f64) -> Self {
        Inequality {
            name: name.to_string(),
            left,
            right,
            strict: true,
            holds: left > right,
        }
    }

    fn at_least(name: &str, left: f64, right: f64) -> Self {
        Inequality {
            name: name.to_string(),
            left,
            right,
            strict: false,
            holds: left >= right,
        }
    }
}

fn all_hold(checks: &[Inequality]) -> bool {
    checks.iter().all(|c| c.holds)
}

fn first_failure(checks: &[Inequality]) -> String {
    checks
        .iter()
        .find(|c| !c.holds)
        .map(|c| {
            let op = if c.strict { ">" } else { ">=" };
            format!("{} fails: {} {op} {} is false (deficit {})", c.name, c.left, c.right, c.right - c.left)
        })
        .unwrap_or_default()
}

/// `Σ|Λ_i| + r|Λ_1|`, the rate threshold for `C^r` densities.
fn rate_bound(sys: &SwitchingSystem, r: u32) -> f64 {
    let s = sys.spectrum();
    s.abs_sum() + r as f64 * s.lambda_min().abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub r: u32,
    pub min_rate: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Largest `r` with `min_rate > bound(r)`, if any.
    pub r_max: Option<u32>,
}

pub fn regularity_threshold(sys: &SwitchingSystem, r: u32) -> RegularityReport {
    let min_rate = sys.min_rate();
    let bound = rate_bound(sys, r);
    let base = sys.spectrum().abs_sum();
    let step = sys.spectrum().lambda_min().abs();
    let r_max = if min_rate > base {
        // estimate, then settle the boundary case exactly
        let mut k = ((min_rate - base) / step).floor().min(u32::MAX as f64 - 1.0) as u32;
        while k > 0 && min_rate <= rate_bound(sys, k) {
            k -= 1;
        }
        while k < u32::MAX - 1 && min_rate > rate_bound(sys, k + 1) {
            k += 1;
        }
        Some(k)
    } else {
        None
    };
    RegularityReport {
        r,
        min_rate,
        bound,
        satisfied: min_rate > bound,
        r_max,
    }
}

/// `exp(t (r|Λ_1| + Σ|Λ_i| + r ε))`, the `C^r` norm factor of the transfer
/// operator of a flow run for time `t`.
pub fn transfer_norm_bound(sys: &SwitchingSystem, r: u32, eps: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t must be nonnegative"));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid("eps must be positive"));
    }
    Ok((t * (rate_bound(sys, r) + r as f64 * eps)).exp())
}

/// `det(DΦ_i^{-t}) = e^{-t Tr A}`, the change of variables in the transfer
/// operator.
pub fn inverse_flow_jacobian(sys: &SwitchingSystem, t: f64) -> f64 {
    (-t * sys.a().trace()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaEps {
    pub alpha: f64,
    pub eps: f64,
    pub checks: Vec<Inequality>,
}

fn alpha_eps_checks(sys: &SwitchingSystem, r: u32, alpha: f64, eps: f64) -> Vec<Inequality> {
    vec![
        Inequality::greater("alpha > max rate", alpha, sys.max_rate()),
        Inequality::at_least("max rate >= min rate", sys.max_rate(), sys.min_rate()),
        Inequality::greater(
            "min rate > r|L1| + sum|Li| + r eps",
            sys.min_rate(),
            rate_bound(sys, r) + r as f64 * eps,
        ),
        Inequality::greater("eps > 0", eps, 0.0),
    ]
}

/// Half the slack of the threshold for `ε`, twice the fastest rate for `α`.
pub fn choose_alpha_eps(sys: &SwitchingSystem, r: u32) -> Result<AlphaEps> {
    let report = regularity_threshold(sys, r);
    if !report.satisfied {
        return Err(Error::invalid(format!(
            "rate threshold fails for r = {r}: min rate {} <= bound {} (deficit {})",
            report.min_rate,
            report.bound,
            report.bound - report.min_rate
        )));
    }
    let eps = (report.min_rate - report.bound) / (2.0 * r.max(1) as f64);
    let alpha = 2.0 * sys.max_rate();
    let checks = alpha_eps_checks(sys, r, alpha, eps);
    if !all_hold(&checks) {
        return Err(Error::numerical(first_failure(&checks)));
    }
    Ok(AlphaEps { alpha, eps, checks })
}

/// Mode transition matrix of the induced chain with clock rate `alpha`.
pub fn u_matrix(sys: &SwitchingSystem, alpha: f64) -> Result<Stochastic2> {
    if !(alpha.is_finite() && alpha > sys.max_rate()) {
        return Err(Error::invalid(format!(
            "alpha must exceed max(alpha01, alpha10) = {}, got {alpha}",
            sys.max_rate()
        )));
    }
    let (a01, a10) = (sys.alpha01(), sys.alpha10());
    Ok([[1.0 - a01 / alpha, a01 / alpha], [a10 / alpha, 1.0 - a10 / alpha]])
}

/// Number of adjacent unequal pairs.
pub fn switch_count(seq: &[u8]) -> Result<usize> {
    if seq.is_empty() {
        return Err(Error::invalid("switch count of an empty sequence"));
    }
    Ok(seq.windows(2).filter(|w| w[0] != w[1]).count())
}

/// `Π U[i_k][i_{k+1}]` along a mode sequence.
pub fn sequence_weight(u: &Stochastic2, seq: &[u8]) -> f64 {
    seq.windows(2).map(|w| u[w[0] as usize][w[1] as usize]).product()
}

fn check_z(u: &Stochastic2, z: f64) -> Result<()> {
    let z_max = 1.0 / u[0][0].max(u[1][1]);
    if !(z > 1.0 && z < z_max) {
        return Err(Error::invalid(format!("z = {z} must lie in (1, {z_max})")));
    }
    Ok(())
}

/// Markov bound on the probability that a `U`-chain started in mode 0 makes
/// fewer than `d` switches in `n - 1` steps.
///
/// The switch waiting times alternate between geometric laws with parameters
/// `U01` and `U10`; for odd `d` the first law gets the extra factor.
pub fn tail_bound(u: &Stochastic2, d: usize, n: usize, z: f64) -> Result<f64> {
    check_z(u, z)?;
    if d == 0 || n == 0 {
        return Err(Error::invalid("tail bound needs d >= 1 and n >= 1"));
    }
    let g0 = z * (1.0 - u[0][0]) / (1.0 - z * u[0][0]);
    let g1 = z * (1.0 - u[1][1]) / (1.0 - z * u[1][1]);
    let e0 = d.div_ceil(2) as f64;
    let e1 = (d / 2) as f64;
    Ok((e0 * g0.ln() + e1 * g1.ln() - (n as f64 - 1.0) * z.ln()).exp())
}

/// Exact `Pr(S < d)` for the chain started in mode 0 over `n - 1` steps.
pub fn switch_tail_exact(u: &Stochastic2, d: usize, n: usize) -> f64 {
    // prob[mode][switches so far], switches capped at d
    let mut prob = vec![[0.0f64; 2]; d + 1];
    prob[0][0] = 1.0;
    for _ in 1..n {
        let mut next = vec![[0.0f64; 2]; d + 1];
        for (s, row) in prob.iter().enumerate() {
            for m in 0..2 {
                let w = row[m];
                if w == 0.0 {
                    continue;
                }
                next[s][m] += w * u[m][m];
                next[(s + 1).min(d)][1 - m] += w * u[m][1 - m];
            }
        }
        prob = next;
    }
    prob[..d].iter().map(|r| r[0] + r[1]).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Monte Carlo estimate of `Pr(S < d)` from simulated mode sequences.
pub fn switch_tail_mc(u: &Stochastic2, d: usize, n: usize, samples: u64, seed: SeedSpec) -> McEstimate {
    const CHUNK: u64 = 1 << 14;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.with_stream(seed.stream.wrapping_add(c)).rng();
            let count = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let mut m = 0usize;
                let mut s = 0usize;
                for _ in 1..n {
                    if rng.bernoulli(u[m][1 - m]) {
                        m = 1 - m;
                        s += 1;
                        if s >= d {
                            break;
                        }
                    }
                }
                hits += (s < d) as u64;
            }
            hits
        })
        .sum();
    let p = hits as f64 / samples as f64;
    McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    }
}

/// Parameters for which the part of `P^n` with fewer than `d` switches has
/// `C^r` norm below `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QDeltaCertificate {
    pub r: u32,
    pub d: usize,
    pub alpha: f64,
    pub eps: f64,
    pub z: f64,
    pub n: usize,
    pub u: Stochastic2,
    pub tail_bound: f64,
    /// `1 - (r|Λ_1| + Σ|Λ_i| + r ε) / α`.
    pub contraction_base: f64,
    pub eta_budget: f64,
    /// `tail_bound · contraction_base^{-n}`.
    pub delta_norm: f64,
    pub checks: Vec<Inequality>,
}

fn contraction_base(sys: &SwitchingSystem, r: u32, alpha: f64, eps: f64) -> f64 {
    1.0 - (rate_bound(sys, r) + r as f64 * eps) / alpha
}

fn certificate_checks(
    sys: &SwitchingSystem,
    r: u32,
    alpha: f64,
    eps: f64,
    z: f64,
    n: usize,
    eta: f64,
) -> Result<(Vec<Inequality>, Stochastic2, f64, f64, f64)> {
    let u = u_matrix(sys, alpha)?;
    let base = contraction_base(sys, r, alpha, eps);
    let z_max = 1.0 / u[0][0].max(u[1][1]);
    let mut checks = alpha_eps_checks(sys, r, alpha, eps);
    checks.push(Inequality::greater("z > 1", z, 1.0));
    checks.push(Inequality::greater("1/max(U00, U11) > z", z_max, z));
    checks.push(Inequality::greater("z * contraction base > 1", z * base, 1.0));
    let tail = if z > 1.0 && z < z_max {
        tail_bound(&u, sys.dim(), n, z)?
    } else {
        f64::INFINITY
    };
    let delta = tail * base.powf(-(n as f64));
    checks.push(Inequality::greater("1 > tail bound", 1.0, tail));
    checks.push(Inequality::greater("eta > tail * base^-n", eta, delta));
    checks.push(Inequality::at_least("n >= d + 1", n as f64, sys.dim() as f64 + 1.0));
    Ok((checks, u, base, tail, delta))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::invalid(format!("eta must lie in (0, 1/2), got {eta}")));
    }
    Ok(())
}

pub const DEFAULT_ETA: f64 = 0.4;
const Z_GRID: usize = 1000;

/// Scans `z` over a grid of the admissible interval and keeps the value
/// that needs the fewest steps `n`.
pub fn qdelta_search(sys: &SwitchingSystem, r: u32, eta: f64) -> Result<QDeltaCertificate> {
    check_eta(eta)?;
    let AlphaEps { alpha, eps, .. } = choose_alpha_eps(sys, r)?;
    let u = u_matrix(sys, alpha)?;
    let base = contraction_base(sys, r, alpha, eps);
    let d = sys.dim();
    let z_max = 1.0 / u[0][0].max(u[1][1]);
    if z_max * base <= 1.0 {
        return Err(Error::numerical(format!(
            "no admissible z: z * contraction base <= {} at the top of (1, {z_max})",
            z_max * base
        )));
    }
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 1..=Z_GRID {
        let z = 1.0 + (z_max - 1.0) * k as f64 / (Z_GRID + 1) as f64;
        if z * base <= 1.0 {
            continue;
        }
        // tail(n) base^-n = z g(z) (z base)^-n with g(z) = tail(1)
        let lead = tail_bound(&u, d, 1, z)?;
        let need = (lead / eta).ln() / (z * base).ln();
        let mut n = (need.floor().max(0.0) as usize + 1).max(d + 1);
        // guard the floating point boundary
        while tail_bound(&u, d, n, z)? * base.powf(-(n as f64)) >= eta {
            n += 1;
        }
        while n > d + 1 && tail_bound(&u, d, n - 1, z)? * base.powf(-((n - 1) as f64)) < eta {
            n -= 1;
        }
        let value = tail_bound(&u, d, n, z)? * base.powf(-(n as f64));
        if best.is_none_or(|(bn, _, bv)| n < bn || (n == bn && value < bv)) {
            best = Some((n, z, value));
        }
    }
    let (n, z, _) = best.ok_or_else(|| Error::numerical("no grid value of z satisfies z * contraction base > 1"))?;
    let cert = build_certificate(sys, r, alpha, eps, z, n, eta)?;
    if !cert.verify(sys)? {
        return Err(Error::numerical(first_failure(&cert.checks)));
    }
    Ok(cert)
}

fn build_certificate(
    sys: &SwitchingSystem,
    r: u32,
    alpha: f64,
    eps: f64,
    z: f64,
    n: usize,
    eta: f64,
) -> Result<QDeltaCertificate> {
    let (checks, u, base, tail, delta) = certificate_checks(sys, r, alpha, eps, z, n, eta)?;
    Ok(QDeltaCertificate {
        r,
        d: sys.dim(),
        alpha,
        eps,
        z,
        n,
        u,
        tail_bound: tail,
        contraction_base: base,
        eta_budget: eta,
        delta_norm: delta,
        checks,
    })
}

impl QDeltaCertificate {
    /// Recomputes every inequality from the system and the stored
    /// parameters alone; stored derived values must agree.
    pub fn verify(&self, sys: &SwitchingSystem) -> Result<bool> {
        if self.d != sys.dim() {
            return Ok(false);
        }
        let fresh = build_certificate(sys, self.r, self.alpha, self.eps, self.z, self.n, self.eta_budget)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        let derived = close(fresh.tail_bound, self.tail_bound)
            && close(fresh.contraction_base, self.contraction_base)
            && close(fresh.delta_norm, self.delta_norm)
            && fresh.u == self.u;
        Ok(derived && all_hold(&fresh.checks) && check_eta(self.eta_budget).is_ok())
    }
}

/// `f(t_2, …, t_{d+1}) = det(e^{t_{d+1} A} p, …, e^{t_2 A} p)`.
pub fn submersion_det(a: &SquareMatrix, p: &DVector<f64>, t: &[f64]) -> Result<f64> {
    let d = a.dim();
    if t.len() != d || p.len() != d {
        return Err(Error::invalid(format!("need {d} offsets and a vector of length {d}")));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("offsets must be finite"));
    }
    let mut m = DMatrix::zeros(d, d);
    for (col, &tk) in t.iter().rev().enumerate() {
        let v = expm(a, tk)?.as_matrix() * p;
        m.set_column(col, &v);
    }
    Ok(m.determinant())
}

/// Finite-difference weights for the `order`-th derivative at 0 on the
/// nodes `x` (Fornberg's recursion).
fn fd_weights(x: &[f64], order: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0];
    for i in 1..n {
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i];
        let mm = i.min(order);
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            for k in (0..=mm).rev() {
                if j == i - 1 {
                    let prev = if k > 0 { c[i - 1][k - 1] } else { 0.0 };
                    c[i][k] = c1 * (k as f64 * prev - c5 * c[i - 1][k]) / c2;
                }
                let prev = if k > 0 { c[j][k - 1] } else { 0.0 };
                c[j][k] = (c4 * c[j][k] - k as f64 * prev) / c3;
            }
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionAnchor {
    /// Mixed derivative `∂_{t2} ∂²_{t3} … ∂^d_{t_{d+1}} f(0)` by finite differences.
    pub finite_difference: f64,
    /// `det(A^d p, …, A² p, A p)`.
    pub direct: f64,
    pub rel_error: f64,
    pub step: f64,
    pub evaluations: usize,
}

/// Central stencil half-width for the given derivative order and accuracy.
fn half_width(order: usize, accuracy: usize) -> usize {
    order.div_ceil(2) - 1 + accuracy / 2
}

/// Compares a tensor-product central difference of `f` at the origin with the
/// determinant of the Krylov columns.
pub fn submersion_anchor(a: &SquareMatrix, p: &DVector<f64>, step: f64, accuracy: usize) -> Result<SubmersionAnchor> {
    let d = a.dim();
    if d > 6 {
        return Err(Error::invalid("the tensor stencil is limited to d <= 6"));
    }
    if !(step > 0.0 && step.is_finite()) || accuracy < 2 || !accuracy.is_multiple_of(2) {
        return Err(Error::invalid("need a positive step and an even accuracy >= 2"));
    }
    // variable t_{k+2} carries derivative order k + 1
    let stencils: Vec<(Vec<i64>, Vec<f64>)> = (0..d)
        .map(|k| {
            let m = half_width(k + 1, accuracy) as i64;
            let nodes: Vec<i64> = (-m..=m).collect();
            let xs: Vec<f64> = nodes.iter().map(|&j| j as f64).collect();
            let w = fd_weights(&xs, k + 1)
                .into_iter()
                .map(|w| w / step.powi(k as i32 + 1))
                .collect();
            (nodes, w)
        })
        .collect();
    let total: usize = stencils.iter().map(|s| s.0.len()).product();
    let mut acc = 0.0;
    let mut idx = vec![0usize; d];
    let mut t = vec![0.0; d];
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..d {
            t[k] = stencils[k].0[idx[k]] as f64 * step;
            w *= stencils[k].1[idx[k]];
        }
        if w != 0.0 {
            acc += w * submersion_det(a, p, &t)?;
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < stencils[k].0.len() {
                break;
            }
            idx[k] = 0;
        }
    }
    let mut m = DMatrix::zeros(d, d);
    let mut v = p.clone();
    let mut powers = Vec::with_capacity(d);
    for _ in 0..d {
        v = a.as_matrix() * v;
        powers.push(v.clone());
    }
    for (col, pw) in powers.iter().rev().enumerate() {
        m.set_column(col, pw);
    }
    let direct = m.determinant();
    let rel_error = (acc - direct).abs() / direct.abs().max(f64::MIN_POSITIVE);
    Ok(SubmersionAnchor {
        finite_difference: acc,
        direct,
        rel_error,
        step,
        evaluations: total,
    })
}

pub const DEFAULT_FD_STEP: f64 = 0.05;
pub const DEFAULT_FD_ACCURACY: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionScan {
    pub draws: usize,
    pub t_max: f64,
    pub min_abs: f64,
    pub below_threshold: usize,
    pub threshold: f64,
}

/// Evaluates `|f|` at offsets drawn uniformly from `(0, t_max)^d`.
pub fn submersion_scan(sys: &SwitchingSystem, draws: usize, t_max: f64, threshold: f64, seed: SeedSpec) -> Result<SubmersionScan> {
    let d = sys.dim();
    let mut rng = seed.rng();
    let mut min_abs = f64::INFINITY;
    let mut below = 0;
    for _ in 0..draws {
        let t: Vec<f64> = (0..d).map(|_| t_max * (1.0 - rng.uniform())).collect();
        let f = submersion_det(sys.a(), sys.p(), &t)?.abs();
        min_abs = min_abs.min(f);
        below += (f <= threshold) as usize;
    }
    Ok(SubmersionScan {
        draws,
        t_max,
        min_abs,
        below_threshold: below,
        threshold,
    })
}
