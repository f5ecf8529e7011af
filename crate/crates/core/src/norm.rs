//! Adapted scalar products and the compact state space `M`.
//!
//! For `λ = Λ_d + ε` the quadratic form
//!
//! ```text
//! (x, y)_ε = ∫_0^τ <e^{sA} x, e^{sA} y> e^{-2λs} ds = x^T G y
//! ```
//!
//! satisfies `(Ax, x)_ε <= λ N_ε(x)^2` as soon as `‖e^{τA}‖ <= e^{λτ}`.
//! The lower variant, built from `-A`, gives `<Ax, x>_ε >= (Λ_1 - ε) ‖x‖_ε^2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_raw, operator_norm, SquareMatrix};
use crate::model::{Mode, SwitchingSystem};
use crate::quad::integrate;
use crate::rng::SeedSpec;

/// Spacing of the ladder on which `τ` is searched.
pub const TAU_STEP: f64 = 0.25;
/// Spacing of the spot checks beyond `τ`.
pub const TAU_CHECK_STEP: f64 = 0.05;
/// Length of the spot-check window `[τ, τ + 10]`.
pub const TAU_CHECK_WINDOW: f64 = 10.0;
const TAU_MAX: f64 = 500.0;
const GRAM_TOL: f64 = 1e-10;
const RADIUS_MARGIN: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// `(Ax, x) <= λ N(x)^2` with `λ = Λ_d + ε`.
    Upper,
    /// `<Ax, x> >= λ ‖x‖^2` with `λ = Λ_1 - ε`.
    Lower,
}

/// Evidence for the choice of `τ`: the largest value of `‖e^{tA}‖ e^{-λt}`
/// seen on the check grid over `[τ, τ + 10]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauCertificate {
    pub samples: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptedNorm {
    pub kind: NormKind,
    #[serde(with = "crate::linalg::matrix_rows")]
    pub gram: DMatrix<f64>,
    pub eps: f64,
    /// Rate appearing in the inequality (`Λ_d + ε` or `Λ_1 - ε`).
    pub lambda: f64,
    pub tau: f64,
    pub tau_certificate: TauCertificate,
    /// Radius of `M`, present when the norm was built for a system with
    /// `ε < |Λ_d|`.
    pub radius: Option<f64>,
    #[serde(skip)]
    factor: DMatrix<f64>,
}

/// `(A - λ)` shifted matrix used in the integrand.
fn shifted(a: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    a - DMatrix::identity(a.nrows(), a.ncols()) * lambda
}

/// Smallest `τ` on the 0.25 ladder with `‖e^{t(A-λ)}‖ <= 1` on the check grid.
fn choose_tau(shift: &DMatrix<f64>) -> Result<(f64, TauCertificate)> {
    let per_rung = (TAU_STEP / TAU_CHECK_STEP).round() as usize;
    let window = (TAU_CHECK_WINDOW / TAU_CHECK_STEP).round() as usize;
    let mut ratios: Vec<f64> = Vec::new();
    let ratio_at = |k: usize, ratios: &mut Vec<f64>| -> Result<f64> {
        while ratios.len() <= k {
            let t = ratios.len() as f64 * TAU_CHECK_STEP;
            ratios.push(operator_norm(&expm_raw(&(shift * t))?));
        }
        Ok(ratios[k])
    };
    let mut rung = 1usize;
    loop {
        let start = rung * per_rung;
        if start as f64 * TAU_CHECK_STEP > TAU_MAX {
            return Err(Error::numerical(format!(
                "no τ <= {TAU_MAX} with ‖e^(tA)‖ <= e^(λt); A is too non-normal for this ε"
            )));
        }
        let mut max_ratio = 0.0f64;
        let mut failed_at = None;
        for k in start..=start + window {
            let r = ratio_at(k, &mut ratios)?;
            max_ratio = max_ratio.max(r);
            if r > 1.0 {
                failed_at = Some(k);
                break;
            }
        }
        match failed_at {
            None => {
                return Ok((
                    rung as f64 * TAU_STEP,
                    TauCertificate {
                        samples: window + 1,
                        max_ratio,
                    },
                ))
            }
            // jump straight past the offending sample
            Some(k) => rung = k / per_rung + 1,
        }
    }
}

impl AdaptedNorm {
    /// Upper adapted norm for `A` with rate `Λ_d + ε`. No radius.
    pub fn for_matrix(a: &SquareMatrix, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::invalid(format!("ε must be positive, got {eps}")));
        }
        let spec = crate::linalg::spectrum(a)?;
        Self::build(NormKind::Upper, a.as_matrix(), spec.lambda_max() + eps, eps)
    }

    /// Lower adapted norm for `A` with rate `Λ_1 - ε`, obtained from `-A`.
    pub fn lower_for_matrix(a: &SquareMatrix, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::invalid(format!("ε must be positive, got {eps}")));
        }
        let spec = crate::linalg::spectrum(a)?;
        let neg = -a.as_matrix();
        let mut norm = Self::build(NormKind::Lower, &neg, -spec.lambda_min() + eps, eps)?;
        norm.lambda = spec.lambda_min() - eps;
        Ok(norm)
    }

    fn build(kind: NormKind, a: &DMatrix<f64>, lambda: f64, eps: f64) -> Result<Self> {
        let shift = shifted(a, lambda);
        let (tau, tau_certificate) = choose_tau(&shift)?;
        let d = a.nrows();
        let gram = integrate(
            |s| {
                let e = expm_raw(&(&shift * s))?;
                Ok(e.transpose() * e)
            },
            0.0,
            tau,
            GRAM_TOL,
            (tau.ceil() as usize).max(1),
        )?;
        let gram = (&gram + gram.transpose()) * 0.5;
        let factor = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::numerical("Gram matrix is not positive definite"))?
            .l();
        debug_assert_eq!(factor.nrows(), d);
        Ok(AdaptedNorm {
            kind,
            gram,
            eps,
            lambda,
            tau,
            tau_certificate,
            radius: None,
            factor,
        })
    }

    fn factor(&self) -> DMatrix<f64> {
        if self.factor.nrows() == self.gram.nrows() {
            self.factor.clone()
        } else {
            self.gram.clone().cholesky().expect("gram is SPD").l()
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.gram * y))
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// Induced operator norm `sup N(Mx)/N(x) = ‖L^T M L^{-T}‖_2` with `G = L L^T`.
    pub fn operator_norm(&self, m: &DMatrix<f64>) -> f64 {
        let l = self.factor();
        let lt = l.transpose();
        let lt_inv = lt.clone().try_inverse().expect("Cholesky factor is invertible");
        operator_norm(&(lt * m * lt_inv))
    }

    /// Slack of the defining inequality at `x`; nonnegative when it holds.
    pub fn inequality_slack(&self, a: &SquareMatrix, x: &DVector<f64>) -> f64 {
        let ax = a.as_matrix() * x;
        let lhs = self.inner(&ax, x);
        let n2 = self.inner(x, x);
        match self.kind {
            NormKind::Upper => self.lambda * n2 - lhs,
            NormKind::Lower => lhs - self.lambda * n2,
        }
    }

    /// Smallest slack over `n` points drawn uniformly from the unit cube.
    pub fn min_sampled_slack(&self, a: &SquareMatrix, n: usize, seed: SeedSpec) -> f64 {
        let mut rng = seed.rng();
        let d = self.dim();
        (0..n)
            .map(|_| {
                let x = DVector::from_fn(d, |_, _| 2.0 * rng.uniform() - 1.0);
                self.inequality_slack(a, &x)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Residual of `(A-λ)^T G + G (A-λ) = E^T E - I`, `E = e^{τ(A-λ)}`,
    /// which the Gram integral satisfies exactly.
    pub fn lyapunov_residual(&self, a: &SquareMatrix) -> Result<f64> {
        let base = match self.kind {
            NormKind::Upper => a.as_matrix().clone(),
            NormKind::Lower => -a.as_matrix(),
        };
        let lambda = match self.kind {
            NormKind::Upper => self.lambda,
            NormKind::Lower => -self.lambda,
        };
        let shift = shifted(&base, lambda);
        let e = expm_raw(&(&shift * self.tau))?;
        let d = self.dim();
        let lhs = shift.transpose() * &self.gram + &self.gram * &shift;
        let rhs = e.transpose() * e - DMatrix::identity(d, d);
        Ok((lhs - rhs).amax())
    }
}

/// The upper adapted norm for a system. When `ε < |Λ_d|` it also carries the
/// radius of the absorbing ball `M`.
pub fn adapted_norm(sys: &SwitchingSystem, eps: f64) -> Result<AdaptedNorm> {
    let mut norm = AdaptedNorm::for_matrix(sys.a(), eps)?;
    if norm.lambda < 0.0 {
        let np = norm.norm(sys.p());
        let na = norm.operator_norm(sys.a().as_matrix());
        norm.radius = Some(RADIUS_MARGIN * (np + na * np / norm.lambda.abs()));
    }
    Ok(norm)
}

/// Default `ε_0 = |Λ_d| / 2` for the state space.
pub fn default_eps0(sys: &SwitchingSystem) -> f64 {
    sys.spectrum().lambda_max().abs() / 2.0
}

/// The ball `M = {x : N(x) <= R}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSpace {
    #[serde(with = "crate::linalg::matrix_rows")]
    pub gram: DMatrix<f64>,
    pub radius: f64,
    pub eps: f64,
}

pub fn state_space(sys: &SwitchingSystem, norm: &AdaptedNorm) -> Result<StateSpace> {
    let lambda_d = sys.spectrum().lambda_max();
    if norm.kind != NormKind::Upper || norm.eps >= lambda_d.abs() {
        return Err(Error::invalid(format!(
            "the state space needs an upper norm with 0 < ε < |Λ_d| = {}, got ε = {}",
            lambda_d.abs(),
            norm.eps
        )));
    }
    if norm.dim() != sys.dim() {
        return Err(Error::invalid("norm dimension does not match the system"));
    }
    let radius = match norm.radius {
        Some(r) => r,
        None => adapted_norm(sys, norm.eps)?
            .radius
            .ok_or_else(|| Error::numerical("radius unavailable"))?,
    };
    Ok(StateSpace {
        gram: norm.gram.clone(),
        radius,
        eps: norm.eps,
    })
}

impl StateSpace {
    pub fn for_system(sys: &SwitchingSystem) -> Result<Self> {
        let norm = adapted_norm(sys, default_eps0(sys))?;
        state_space(sys, &norm)
    }

    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.gram * x)).max(0.0).sqrt()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.norm(x) <= self.radius
    }

    /// Half-widths of the axis-aligned box enclosing the ellipsoid:
    /// `R sqrt((G^{-1})_{ii})`.
    pub fn half_widths(&self) -> Vec<f64> {
        let inv = self
            .gram
            .clone()
            .try_inverse()
            .expect("Gram matrix is invertible");
        (0..inv.nrows())
            .map(|i| self.radius * inv[(i, i)].sqrt())
            .collect()
    }

    /// `(lower, upper)` corners of the bounding box, inflated by `factor`.
    pub fn bounding_box(&self, factor: f64) -> (Vec<f64>, Vec<f64>) {
        let h: Vec<f64> = self.half_widths().iter().map(|w| w * factor).collect();
        (h.iter().map(|w| -w).collect(), h)
    }

    /// Largest value of `(F_i(x), x)_ε` over `n` random boundary points and
    /// both modes. Negative means the flows point strictly inward.
    pub fn max_boundary_derivative(&self, sys: &SwitchingSystem, n: usize, seed: SeedSpec) -> f64 {
        let mut rng = seed.rng();
        let d = sys.dim();
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..n {
            // Gaussian direction by Box-Muller, scaled onto the boundary
            let dir = DVector::from_fn(d, |_, _| {
                let u1 = 1.0 - rng.uniform();
                let u2 = rng.uniform();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            });
            let nd = self.norm(&dir);
            if nd == 0.0 {
                continue;
            }
            let x = dir * (self.radius / nd);
            for mode in [Mode::Zero, Mode::One] {
                let f = sys.field(mode, &x);
                worst = worst.max(f.dot(&(&self.gram * &x)));
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jordan() -> SquareMatrix {
        SquareMatrix::from_rows(&[vec![-1.0, 10.0], vec![0.0, -1.0]]).unwrap()
    }

    #[test]
    fn diagonal_gram_closed_form() {
        let a = SquareMatrix::diag(&[-2.0, -1.0]).unwrap();
        let n = AdaptedNorm::for_matrix(&a, 0.5).unwrap();
        // λ = -0.5; normal matrix so the first rung already works
        assert_eq!(n.tau, TAU_STEP);
        assert!(n.gram[(0, 1)].abs() < 1e-14);
        for (i, mu) in [(0usize, -2.0f64), (1, -1.0)] {
            let k = 2.0 * (mu - n.lambda);
            let exact = ((k * n.tau).exp() - 1.0) / k;
            assert!((n.gram[(i, i)] - exact).abs() < 1e-10);
        }
        assert!(n.min_sampled_slack(&a, 10_000, SeedSpec::new(1, 0)) >= -1e-9);
    }

    #[test]
    fn jordan_block_needs_adaptation() {
        let a = jordan();
        let sym = (a.as_matrix() + a.as_matrix().transpose()) * 0.5;
        let top = sym.symmetric_eigenvalues().max();
        assert!((top - 4.0).abs() < 1e-12);
        let n = AdaptedNorm::for_matrix(&a, 0.25).unwrap();
        assert!(n.tau > 1.0);
        assert!(n.tau_certificate.max_ratio <= 1.0);
        let slack = n.min_sampled_slack(&a, 10_000, SeedSpec::new(2, 0));
        assert!(slack >= -1e-9, "slack {slack}");
        assert!(n.lyapunov_residual(&a).unwrap() < 1e-8 * n.gram.amax().max(1.0));
    }

    #[test]
    fn lower_norm() {
        let a = jordan();
        let n = AdaptedNorm::lower_for_matrix(&a, 0.25).unwrap();
        assert_eq!(n.kind, NormKind::Lower);
        assert!((n.lambda + 1.25).abs() < 1e-12);
        assert!(n.min_sampled_slack(&a, 10_000, SeedSpec::new(3, 0)) >= -1e-9);
        assert!(n.lyapunov_residual(&a).unwrap() < 1e-8 * n.gram.amax().max(1.0));
    }

    #[test]
    fn zero_vector() {
        let n = AdaptedNorm::for_matrix(&jordan(), 0.25).unwrap();
        let z = DVector::zeros(2);
        assert_eq!(n.norm(&z), 0.0);
        assert_eq!(n.inequality_slack(&jordan(), &z), 0.0);
    }

    #[test]
    fn state_space_of_malrieu() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let m = StateSpace::for_system(&sys).unwrap();
        assert!(m.contains(&DVector::zeros(2)));
        assert!(m.contains(sys.p()));
        assert!(m.max_boundary_derivative(&sys, 2000, SeedSpec::new(4, 0)) < 0.0);
        let (lo, hi) = m.bounding_box(1.0);
        assert!(lo[0] < 0.0 && hi[0] > 1.0);
    }

    #[test]
    fn radius_scales_with_p() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let big = crate::model::make_system(sys.a().clone(), sys.p() * 2.0, 1.0, 1.0).unwrap();
        let r1 = adapted_norm(&sys, 0.5).unwrap().radius.unwrap();
        let r2 = adapted_norm(&big, 0.5).unwrap().radius.unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_eps_is_rejected() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let n = adapted_norm(&sys, 1.0).unwrap();
        assert!(n.radius.is_none());
        assert!(state_space(&sys, &n).is_err());
        assert!(AdaptedNorm::for_matrix(sys.a(), 0.0).is_err());
    }
}
