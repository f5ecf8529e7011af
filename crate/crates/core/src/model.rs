//! The switching system: two linear vector fields sharing the matrix `A`,
//!
//! ```text
//! F_0(x) = A x,    F_1(x) = A (x - p),
//! ```
//!
//! with exponential switching rates `alpha01` (leave mode 0) and `alpha10`
//! (leave mode 1).

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    expm, krylov_space, spectrum, vandermonde_check, ExpPropagator, KrylovBasis, Spectrum,
    SquareMatrix, VandermondeCheck,
};

pub type Point = DVector<f64>;

/// Discrete component of the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Mode {
    Zero,
    One,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::Zero => 0,
            Mode::One => 1,
        }
    }

    pub fn flip(self) -> Mode {
        match self {
            Mode::Zero => Mode::One,
            Mode::One => Mode::Zero,
        }
    }

    pub fn from_index(i: usize) -> Result<Mode> {
        match i {
            0 => Ok(Mode::Zero),
            1 => Ok(Mode::One),
            _ => Err(Error::invalid(format!("mode must be 0 or 1, got {i}"))),
        }
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m.index() as u8
    }
}

impl TryFrom<u8> for Mode {
    type Error = Error;
    fn try_from(v: u8) -> Result<Mode> {
        Mode::from_index(v as usize)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A validated model instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SwitchingSystem {
    a: SquareMatrix,
    p: Point,
    alpha01: f64,
    alpha10: f64,
    spectrum: Spectrum,
    krylov: KrylovBasis,
    independence: VandermondeCheck,
    propagator: ExpPropagator,
}

/// Validates inputs and builds a [`SwitchingSystem`].
pub fn make_system(a: SquareMatrix, p: Point, alpha01: f64, alpha10: f64) -> Result<SwitchingSystem> {
    let d = a.dim();
    if p.len() != d {
        return Err(Error::invalid(format!(
            "p has length {} but A is {d}x{d}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("p has non-finite entries"));
    }
    if p.norm() == 0.0 {
        return Err(Error::invalid("p must be nonzero"));
    }
    for (name, r) in [("alpha01", alpha01), ("alpha10", alpha10)] {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {r}")));
        }
    }
    let spectrum = spectrum(&a)?;
    if !spectrum.hurwitz {
        return Err(Error::invalid(format!(
            "A is not Hurwitz: largest eigenvalue real part is {}",
            spectrum.lambda_max()
        )));
    }
    let krylov = krylov_space(&a, &p)?;
    let independence = vandermonde_check(&a, &p)?;
    let propagator = ExpPropagator::new(&a)?;
    Ok(SwitchingSystem {
        a,
        p,
        alpha01,
        alpha10,
        spectrum,
        krylov,
        independence,
        propagator,
    })
}

impl SwitchingSystem {
    /// Malrieu's planar example: a stable focus with `p = (1, 0)`.
    pub fn malrieu(alpha01: f64, alpha10: f64) -> Result<Self> {
        let a = SquareMatrix::from_rows(&[vec![-1.0, -1.0], vec![1.0, -1.0]])?;
        make_system(a, DVector::from_vec(vec![1.0, 0.0]), alpha01, alpha10)
    }

    /// `A = diag(-l1, -l2)` with `p = (1, 1)` and `l1 > l2 > 0`.
    pub fn bhlm(l1: f64, l2: f64, alpha01: f64, alpha10: f64) -> Result<Self> {
        if !(l1 > l2 && l2 > 0.0) {
            return Err(Error::invalid(format!(
                "the diagonal example needs l1 > l2 > 0, got l1 = {l1}, l2 = {l2}"
            )));
        }
        let a = SquareMatrix::diag(&[-l1, -l2])?;
        make_system(a, DVector::from_element(2, 1.0), alpha01, alpha10)
    }

    /// `A = diag(-l_1, ..., -l_d)`, `p = (1, ..., 1)`, with `l_1 > ... > l_d > 0`.
    pub fn vandermonde(lambdas: &[f64], alpha01: f64, alpha10: f64) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(Error::invalid("need at least two rates"));
        }
        if lambdas.windows(2).any(|w| w[0] <= w[1]) || *lambdas.last().unwrap() <= 0.0 {
            return Err(Error::invalid(format!(
                "rates must be strictly decreasing and positive, got {lambdas:?}"
            )));
        }
        let neg: Vec<f64> = lambdas.iter().map(|l| -l).collect();
        let a = SquareMatrix::diag(&neg)?;
        make_system(a, DVector::from_element(lambdas.len(), 1.0), alpha01, alpha10)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &SquareMatrix {
        &self.a
    }

    pub fn p(&self) -> &Point {
        &self.p
    }

    pub fn alpha01(&self) -> f64 {
        self.alpha01
    }

    pub fn alpha10(&self) -> f64 {
        self.alpha10
    }

    /// Rate of leaving `mode`.
    pub fn rate_out(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Zero => self.alpha01,
            Mode::One => self.alpha10,
        }
    }

    pub fn max_rate(&self) -> f64 {
        self.alpha01.max(self.alpha10)
    }

    pub fn min_rate(&self) -> f64 {
        self.alpha01.min(self.alpha10)
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    pub fn krylov(&self) -> &KrylovBasis {
        &self.krylov
    }

    pub fn independence(&self) -> VandermondeCheck {
        self.independence
    }

    /// Whether `p, Ap, ..., A^{d-1} p` are linearly independent.
    pub fn is_nondegenerate(&self) -> bool {
        self.independence.independent
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.is_nondegenerate() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "p, Ap, ..., A^(d-1)p are dependent (H has dimension {} < {}); restrict to H first",
                self.krylov.dimension(),
                self.dim()
            )))
        }
    }

    /// Same fields, new rates.
    pub fn with_rates(&self, alpha01: f64, alpha10: f64) -> Result<Self> {
        make_system(self.a.clone(), self.p.clone(), alpha01, alpha10)
    }

    /// Stationary law of the mode process, `(α10, α01) / (α01 + α10)`.
    pub fn stationary_modes(&self) -> [f64; 2] {
        let s = self.alpha01 + self.alpha10;
        [self.alpha10 / s, self.alpha01 / s]
    }

    pub fn equilibrium(&self, mode: Mode) -> Point {
        match mode {
            Mode::Zero => DVector::zeros(self.dim()),
            Mode::One => self.p.clone(),
        }
    }

    /// `F_i(x)`.
    pub fn field(&self, mode: Mode, x: &Point) -> Point {
        match mode {
            Mode::Zero => self.a.as_matrix() * x,
            Mode::One => self.a.as_matrix() * (x - &self.p),
        }
    }

    /// `Φ_i^t(x)` through the matrix exponential.
    pub fn flow(&self, mode: Mode, t: f64, x: &Point) -> Result<Point> {
        let e = expm(&self.a, t)?;
        Ok(match mode {
            Mode::Zero => e.as_matrix() * x,
            Mode::One => e.as_matrix() * (x - &self.p) + &self.p,
        })
    }

    /// In-place `Φ_i^t` on a raw slice using the cached propagator.
    ///
    /// `scratch` must have length `d`.
    pub fn flow_in_place(&self, mode: Mode, t: f64, x: &mut [f64], scratch: &mut [f64]) {
        match mode {
            Mode::Zero => {
                scratch.copy_from_slice(x);
                self.propagator.apply(t, scratch, x);
            }
            Mode::One => {
                for (s, (xi, pi)) in scratch.iter_mut().zip(x.iter().zip(self.p.iter())) {
                    *s = xi - pi;
                }
                self.propagator.apply(t, scratch, x);
                for (xi, pi) in x.iter_mut().zip(self.p.iter()) {
                    *xi += pi;
                }
            }
        }
    }

    /// Writes `Φ_i^t(x)` into `out` without touching `x`.
    pub fn flow_into(&self, mode: Mode, t: f64, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        out.copy_from_slice(x);
        self.flow_in_place(mode, t, out, scratch);
    }

    pub fn propagator(&self) -> &ExpPropagator {
        &self.propagator
    }

    /// `F_i(Φ_{1-i}^s(y)) - e^{sA} F_{1-i}(y) - (-1)^i A p`, identically zero.
    pub fn commutator_identity_residual(&self, mode: Mode, s: f64, y: &Point) -> Result<Point> {
        let other = mode.flip();
        let moved = self.flow(other, s, y)?;
        let lhs = self.field(mode, &moved);
        let e = expm(&self.a, s)?;
        let rhs = e.as_matrix() * self.field(other, y);
        let ap = self.a.as_matrix() * &self.p;
        let sign = if mode == Mode::Zero { 1.0 } else { -1.0 };
        Ok(lhs - rhs - ap * sign)
    }

    /// Orthogonal projection onto `H` and the Euclidean distance to it.
    pub fn project_h(&self, x: &Point) -> (Point, f64) {
        let proj = self.krylov.project(x);
        let dist = (x - &proj).norm();
        (proj, dist)
    }

    /// The `d'`-dimensional system `(A|_H, P_H p)` in the Krylov basis.
    pub fn restrict_to_h(&self) -> Result<SwitchingSystem> {
        let q: DMatrix<f64> = self.krylov.matrix();
        let a_h = q.transpose() * self.a.as_matrix() * &q;
        let p_h = q.transpose() * &self.p;
        make_system(SquareMatrix::new(a_h)?, p_h, self.alpha01, self.alpha10)
    }

    pub fn to_spec(&self) -> SystemSpec {
        SystemSpec::Explicit {
            a: self.a.rows(),
            p: self.p.iter().copied().collect(),
            alpha01: self.alpha01,
            alpha10: self.alpha10,
        }
    }
}

/// Optional knobs for the built-in examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExampleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha10: Option<f64>,
}

/// JSON description of a system: explicit fields or a named example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Explicit {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        p: Vec<f64>,
        alpha01: f64,
        alpha10: f64,
    },
    Example {
        example: String,
        #[serde(default)]
        params: ExampleParams,
    },
}

/// Names accepted by [`SystemSpec::Example`].
pub const EXAMPLE_NAMES: [&str; 3] = ["malrieu", "bhlm", "vandermonde3"];

impl SystemSpec {
    pub fn build(&self) -> Result<SwitchingSystem> {
        match self {
            SystemSpec::Explicit {
                a,
                p,
                alpha01,
                alpha10,
            } => make_system(
                SquareMatrix::from_rows(a)?,
                DVector::from_column_slice(p),
                *alpha01,
                *alpha10,
            ),
            SystemSpec::Example { example, params } => {
                let a01 = params.alpha01.unwrap_or(1.0);
                let a10 = params.alpha10.unwrap_or(1.0);
                match example.as_str() {
                    "malrieu" => SwitchingSystem::malrieu(a01, a10),
                    "bhlm" => SwitchingSystem::bhlm(
                        params.l1.unwrap_or(2.0),
                        params.l2.unwrap_or(1.0),
                        a01,
                        a10,
                    ),
                    "vandermonde3" => {
                        let lambdas = params.lambdas.clone().unwrap_or_else(|| vec![3.0, 2.0, 1.0]);
                        SwitchingSystem::vandermonde(&lambdas, a01, a10)
                    }
                    other => Err(Error::invalid(format!(
                        "unknown example '{other}' (expected one of {EXAMPLE_NAMES:?})"
                    ))),
                }
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Point {
        DVector::from_column_slice(x)
    }

    #[test]
    fn construction_checks() {
        assert!(SwitchingSystem::malrieu(1.0, 1.0).is_ok());
        assert!(SwitchingSystem::bhlm(2.0, 1.0, 4.0, 4.0).is_ok());
        let not_hurwitz = SquareMatrix::diag(&[1.0, -1.0]).unwrap();
        let err = make_system(not_hurwitz, v(&[1.0, 1.0]), 1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("Hurwitz"));
        let a = SquareMatrix::diag(&[-1.0, -2.0]).unwrap();
        assert!(make_system(a.clone(), v(&[1.0, 1.0]), 0.0, 1.0).is_err());
        assert!(make_system(a.clone(), v(&[1.0, 1.0]), 1.0, -1.0).is_err());
        assert!(make_system(a.clone(), v(&[0.0, 0.0]), 1.0, 1.0).is_err());
        assert!(make_system(a, v(&[0.0, 0.0, 1.0]), 1.0, 1.0).is_err());
    }

    #[test]
    fn fields_and_equilibria() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        assert_eq!(sys.field(Mode::Zero, &v(&[0.0, 0.0])), v(&[0.0, 0.0]));
        assert_eq!(sys.field(Mode::One, sys.p()), v(&[0.0, 0.0]));
        assert_eq!(sys.field(Mode::Zero, &v(&[1.0, 0.0])), v(&[-1.0, 1.0]));
    }

    #[test]
    fn flows() {
        let sys = SwitchingSystem::bhlm(2.0, 1.0, 1.0, 1.0).unwrap();
        for &t in &[0.0, 0.3, 5.0] {
            assert!(sys.flow(Mode::Zero, t, &v(&[0.0, 0.0])).unwrap().norm() < 1e-15);
            assert!((sys.flow(Mode::One, t, sys.p()).unwrap() - sys.p()).norm() < 1e-15);
        }
        let y = sys.flow(Mode::Zero, 1.0, &v(&[1.0, 1.0])).unwrap();
        assert!((y[0] - (-2f64).exp()).abs() < 1e-15);
        assert!((y[1] - (-1f64).exp()).abs() < 1e-15);
        let x = v(&[0.4, -0.3]);
        assert!((sys.flow(Mode::One, 0.0, &x).unwrap() - &x).norm() < 1e-15);
    }

    #[test]
    fn fast_flow_agrees() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let x = [0.2, -0.7];
        let mut out = [0.0; 2];
        let mut scratch = [0.0; 2];
        for mode in [Mode::Zero, Mode::One] {
            sys.flow_into(mode, 0.9, &x, &mut out, &mut scratch);
            let exact = sys.flow(mode, 0.9, &v(&x)).unwrap();
            assert!((v(&out) - exact).norm() < 1e-13);
        }
    }

    #[test]
    fn commutator_residual_examples() {
        let sys = SwitchingSystem::malrieu(1.0, 1.0).unwrap();
        let r = sys
            .commutator_identity_residual(Mode::Zero, 0.0, &v(&[0.0, 0.0]))
            .unwrap();
        assert!(r.norm() < 1e-15);
        let r = sys
            .commutator_identity_residual(Mode::One, 0.7, &v(&[0.3, -0.2]))
            .unwrap();
        assert!(r.norm() < 1e-10);
        let sys3 = SwitchingSystem::vandermonde(&[3.0, 2.0, 1.0], 1.0, 1.0).unwrap();
        let r = sys3
            .commutator_identity_residual(Mode::Zero, 2.5, &v(&[0.9, -1.3, 2.2]))
            .unwrap();
        assert!(r.norm() < 1e-10);
    }

    #[test]
    fn projection_onto_h() {
        let a = SquareMatrix::diag(&[-2.0, -1.0, -0.5]).unwrap();
        let sys = make_system(a, v(&[1.0, 1.0, 0.0]), 1.0, 1.0).unwrap();
        assert!(!sys.is_nondegenerate());
        assert!(sys.require_nondegenerate().is_err());
        let (proj, dist) = sys.project_h(&v(&[0.0, 0.0, 3.0]));
        assert!(proj.norm() < 1e-14);
        assert!((dist - 3.0).abs() < 1e-14);
        let inside = v(&[0.5, -2.0, 0.0]);
        let (proj, dist) = sys.project_h(&inside);
        assert!((proj - &inside).norm() < 1e-14);
        assert!(dist < 1e-14);

        let restricted = sys.restrict_to_h().unwrap();
        assert_eq!(restricted.dim(), 2);
        assert!(restricted.is_nondegenerate());
        let mut re = restricted.spectrum().real_parts.clone();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trip() {
        let spec = SystemSpec::from_json(
            r#"{"example": "bhlm", "params": {"l1": 3, "l2": 1, "alpha01": 5, "alpha10": 2}}"#,
        )
        .unwrap();
        let sys = spec.build().unwrap();
        assert_eq!(sys.a().as_matrix()[(0, 0)], -3.0);
        assert_eq!(sys.alpha10(), 2.0);
        let explicit = sys.to_spec();
        let text = serde_json::to_string(&explicit).unwrap();
        assert!(text.contains("\"A\""));
        let again = SystemSpec::from_json(&text).unwrap().build().unwrap();
        assert_eq!(again.a(), sys.a());

        let bad = SystemSpec::from_json(r#"{"example": "nope"}"#).unwrap();
        assert!(bad.build().is_err());
        let sys = SystemSpec::from_json(r#"{"example": "vandermonde3"}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(sys.dim(), 3);
    }

    #[test]
    fn stationary_modes() {
        let sys = SwitchingSystem::malrieu(3.0, 1.0).unwrap();
        assert_eq!(sys.stationary_modes(), [0.25, 0.75]);
    }
}
