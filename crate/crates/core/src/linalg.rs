//! Dense linear algebra on small real matrices.
//!
//! Everything here works on `d x d` matrices with `d` at most [`MAX_DIM`]:
//! spectra (real parts only), the matrix exponential by scaling and squaring
//! with Padé approximants, Krylov spaces of `(A, p)` and the determinant of
//! the Krylov (controllability) matrix `[p, Ap, ..., A^{d-1} p]`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported state dimension.
pub const MAX_DIM: usize = 32;

/// Relative tolerance used by rank and independence decisions.
pub const RANK_TOL: f64 = 1e-10;

/// A finite real `d x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    /// Builds a matrix from rows, validating shape and finiteness.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::invalid("matrix must have at least one row"));
        }
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid(format!("matrix is not square ({d} rows)")));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "matrix is not square ({}x{})",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if m.nrows() > MAX_DIM {
            return Err(Error::invalid(format!(
                "dimension {} exceeds the supported maximum {MAX_DIM}",
                m.nrows()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(SquareMatrix(m))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }
}

/// Serde adapter writing a dense matrix as a list of rows.
pub(crate) mod matrix_rows {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SquareMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Real parts of the eigenvalues, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub real_parts: Vec<f64>,
    pub hurwitz: bool,
}

impl Spectrum {
    /// Most negative real part.
    pub fn lambda_min(&self) -> f64 {
        self.real_parts[0]
    }

    /// Least negative real part (`Λ_d`).
    pub fn lambda_max(&self) -> f64 {
        *self.real_parts.last().expect("spectrum is never empty")
    }

    /// `Σ |Λ_i|`.
    pub fn abs_sum(&self) -> f64 {
        self.real_parts.iter().map(|l| l.abs()).sum()
    }
}

pub fn spectrum(a: &SquareMatrix) -> Result<Spectrum> {
    let eigs = complex_eigenvalues(a)?;
    let mut real_parts: Vec<f64> = eigs.iter().map(|z| z.re).collect();
    real_parts.sort_by(|x, y| x.total_cmp(y));
    let hurwitz = *real_parts.last().unwrap() < 0.0;
    Ok(Spectrum {
        real_parts,
        hurwitz,
    })
}

fn complex_eigenvalues(a: &SquareMatrix) -> Result<Vec<Complex<f64>>> {
    let schur = nalgebra::linalg::Schur::try_new(a.0.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| {
            Error::numerical(format!(
                "Schur iteration did not converge for matrix {:?}",
                a.rows()
            ))
        })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

const PADE_THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[
            17_297_280.0,
            8_648_640.0,
            1_995_840.0,
            277_200.0,
            25_200.0,
            1_512.0,
            56.0,
            1.0,
        ],
        9 => &[
            17_643_225_600.0,
            8_821_612_800.0,
            2_075_673_600.0,
            302_702_400.0,
            30_270_240.0,
            2_162_160.0,
            110_880.0,
            3_960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64_764_752_532_480_000.0,
            32_382_376_266_240_000.0,
            7_771_770_303_897_600.0,
            1_187_353_796_428_800.0,
            129_060_195_264_000.0,
            10_559_470_521_600.0,
            670_442_572_800.0,
            33_522_128_640.0,
            1_323_241_920.0,
            40_840_800.0,
            960_960.0,
            16_380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("unsupported Padé degree {m}"),
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{tA}` by scaling and squaring with a diagonal Padé approximant.
pub fn expm(a: &SquareMatrix, t: f64) -> Result<SquareMatrix> {
    if !t.is_finite() {
        return Err(Error::invalid("expm time must be finite"));
    }
    let m = expm_raw(&(a.as_matrix() * t))?;
    Ok(SquareMatrix(m))
}

pub(crate) fn expm_raw(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let norm = one_norm(a);
    if norm == 0.0 {
        return Ok(ident);
    }
    for &(m, theta) in &PADE_THETA[..4] {
        if norm <= theta {
            return pade(a, m, &ident);
        }
    }
    let theta13 = PADE_THETA[4].1;
    let s = (norm / theta13).log2().ceil().max(0.0);
    if s > 1000.0 {
        return Err(Error::Overflow(format!(
            "|t|*||A||_1 = {norm:e} is too large for the matrix exponential"
        )));
    }
    let s = s as i32;
    let scaled = a * 2f64.powi(-s);
    let mut result = pade(&scaled, 13, &ident)?;
    for _ in 0..s {
        result = &result * &result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(
            "matrix exponential overflowed during squaring".into(),
        ));
    }
    Ok(result)
}

fn pade(a: &DMatrix<f64>, m: usize, ident: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let b = pade_coefficients(m);
    let a2 = a * a;
    let (u, v) = if m == 13 {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let w1 = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
        let w2 = &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1];
        let u = a * (&a6 * &w1 + w2);
        let z1 = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
        let z2 = &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
        let v = &a6 * &z1 + z2;
        (u, v)
    } else {
        let mut powers = vec![ident.clone(), a2.clone()];
        while powers.len() <= m / 2 {
            let next = powers.last().unwrap() * &a2;
            powers.push(next);
        }
        let mut u = DMatrix::zeros(ident.nrows(), ident.ncols());
        let mut v = DMatrix::zeros(ident.nrows(), ident.ncols());
        for (k, pk) in powers.iter().enumerate() {
            u += pk * b[2 * k + 1];
            v += pk * b[2 * k];
        }
        (a * u, v)
    };
    let lu = (&v - &u).lu();
    lu.solve(&(&v + &u))
        .ok_or_else(|| Error::numerical("Padé denominator is singular"))
}

/// Orthonormal basis of `H = span{A^k p}`.
#[derive(Debug, Clone)]
pub struct KrylovBasis {
    pub vectors: Vec<DVector<f64>>,
}

impl KrylovBasis {
    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    /// Basis vectors as columns of a `d x d'` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.vectors)
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.len());
        for q in &self.vectors {
            out += q * q.dot(x);
        }
        out
    }
}

fn check_vector(a: &SquareMatrix, p: &DVector<f64>) -> Result<()> {
    if p.len() != a.dim() {
        return Err(Error::invalid(format!(
            "vector has length {} but matrix has dimension {}",
            p.len(),
            a.dim()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("vector has non-finite entries"));
    }
    if p.norm() == 0.0 {
        return Err(Error::invalid("vector p must be nonzero"));
    }
    Ok(())
}

/// Arnoldi-style Gram-Schmidt on `p, Ap, A^2 p, ...`.
pub fn krylov_space(a: &SquareMatrix, p: &DVector<f64>) -> Result<KrylovBasis> {
    check_vector(a, p)?;
    let d = a.dim();
    let mut vectors = vec![p / p.norm()];
    while vectors.len() < d {
        let candidate = a.as_matrix() * vectors.last().unwrap();
        let scale = candidate.norm();
        if scale == 0.0 {
            break;
        }
        let mut w = candidate;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &vectors {
                let c = q.dot(&w);
                w -= q * c;
            }
        }
        let residual = w.norm();
        if residual <= RANK_TOL * scale {
            break;
        }
        vectors.push(w / residual);
    }
    Ok(KrylovBasis { vectors })
}

/// Result of the independence test for `p, Ap, ..., A^{d-1} p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VandermondeCheck {
    pub det: f64,
    pub independent: bool,
    /// `|det|` divided by the product of the column norms.
    pub margin: f64,
}

/// The matrix whose columns are `p, Ap, ..., A^{d-1} p`.
pub fn krylov_matrix(a: &SquareMatrix, p: &DVector<f64>) -> DMatrix<f64> {
    let d = a.dim();
    let mut cols = Vec::with_capacity(d);
    let mut v = p.clone();
    for _ in 0..d {
        cols.push(v.clone());
        v = a.as_matrix() * v;
    }
    DMatrix::from_columns(&cols)
}

pub fn vandermonde_check(a: &SquareMatrix, p: &DVector<f64>) -> Result<VandermondeCheck> {
    check_vector(a, p)?;
    let k = krylov_matrix(a, p);
    let det = k.clone().lu().determinant();
    let col_norms: f64 = k.column_iter().map(|c| c.norm()).product();
    let margin = if col_norms > 0.0 {
        det.abs() / col_norms
    } else {
        0.0
    };
    Ok(VandermondeCheck {
        det,
        independent: margin > RANK_TOL,
        margin,
    })
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Fast evaluator of `v -> e^{tA} v` for arbitrary `t`.
///
/// When `A` is diagonalizable with a well-conditioned eigenbasis the action is
/// computed as `V e^{tD} V^{-1} v`; otherwise every call falls back to
/// [`expm`]. The eigen route is validated against Padé at construction.
#[derive(Debug, Clone)]
pub struct ExpPropagator {
    dim: usize,
    method: PropagatorMethod,
}

#[derive(Debug, Clone)]
enum PropagatorMethod {
    Eigen {
        values: Vec<Complex<f64>>,
        vectors: DMatrix<Complex<f64>>,
        inverse: DMatrix<Complex<f64>>,
    },
    Pade(DMatrix<f64>),
}

const EIGEN_COND_LIMIT: f64 = 1e6;

impl ExpPropagator {
    pub fn new(a: &SquareMatrix) -> Result<Self> {
        let dim = a.dim();
        let method = match Self::try_eigen(a)? {
            Some(m) => m,
            None => PropagatorMethod::Pade(a.as_matrix().clone()),
        };
        Ok(ExpPropagator { dim, method })
    }

    pub fn uses_eigenbasis(&self) -> bool {
        matches!(self.method, PropagatorMethod::Eigen { .. })
    }

    fn try_eigen(a: &SquareMatrix) -> Result<Option<PropagatorMethod>> {
        let d = a.dim();
        let values = complex_eigenvalues(a)?;
        let ac = a.as_matrix().map(|v| Complex::new(v, 0.0));
        let scale = one_norm(a.as_matrix()).max(1.0);
        let mut cols = Vec::with_capacity(d);
        for (k, &lam) in values.iter().enumerate() {
            let shift = lam + Complex::new(scale * 1e-10, scale * 1e-11);
            let mut m = ac.clone();
            for i in 0..d {
                m[(i, i)] -= shift;
            }
            let lu = m.lu();
            let mut v = DVector::from_fn(d, |i, _| {
                Complex::new(1.0 + 0.1 * (i as f64) + 0.01 * k as f64, 0.3 * i as f64)
            });
            for _ in 0..3 {
                match lu.solve(&v) {
                    Some(w) => {
                        let n = w.norm();
                        if !n.is_finite() || n == 0.0 {
                            return Ok(None);
                        }
                        v = w / Complex::new(n, 0.0);
                    }
                    None => return Ok(None),
                }
            }
            cols.push(v);
        }
        let vectors = DMatrix::from_columns(&cols);
        let Some(inverse) = vectors.clone().try_inverse() else {
            return Ok(None);
        };
        let cond = vectors.norm() * inverse.norm();
        if !cond.is_finite() || cond > EIGEN_COND_LIMIT {
            return Ok(None);
        }
        let method = PropagatorMethod::Eigen {
            values,
            vectors,
            inverse,
        };
        let probe = ExpPropagator { dim: d, method };
        for &t in &[0.37, 1.0, 3.0] {
            let reference = expm_raw(&(a.as_matrix() * t))?;
            let mut col = vec![0.0; d];
            let mut out = vec![0.0; d];
            let mut worst: f64 = 0.0;
            for j in 0..d {
                col.iter_mut().for_each(|c| *c = 0.0);
                col[j] = 1.0;
                probe.apply(t, &col, &mut out);
                for i in 0..d {
                    worst = worst.max((out[i] - reference[(i, j)]).abs());
                }
            }
            let ref_norm = one_norm(&reference).max(f64::MIN_POSITIVE);
            if worst > 1e-11 * ref_norm.max(1.0) {
                return Ok(None);
            }
        }
        Ok(Some(probe.method))
    }

    /// Writes `e^{tA} v` into `out`.
    pub fn apply(&self, t: f64, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        match &self.method {
            PropagatorMethod::Eigen {
                values,
                vectors,
                inverse,
            } => {
                let d = self.dim;
                let mut w = [Complex::new(0.0, 0.0); MAX_DIM];
                for k in 0..d {
                    let mut acc = Complex::new(0.0, 0.0);
                    for j in 0..d {
                        acc += inverse[(k, j)] * v[j];
                    }
                    w[k] = acc * (values[k] * t).exp();
                }
                for i in 0..d {
                    let mut acc = 0.0;
                    for k in 0..d {
                        let z = vectors[(i, k)] * w[k];
                        acc += z.re;
                    }
                    out[i] = acc;
                }
            }
            PropagatorMethod::Pade(a) => {
                let e = expm_raw(&(a * t)).expect("finite exponent for bounded flow time");
                let dv = DVector::from_column_slice(v);
                let r = e * dv;
                out.copy_from_slice(r.as_slice());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn malrieu() -> SquareMatrix {
        SquareMatrix::from_rows(&[vec![-1.0, -1.0], vec![1.0, -1.0]]).unwrap()
    }

    #[test]
    fn spectrum_of_examples() {
        let s = spectrum(&malrieu()).unwrap();
        assert!((s.real_parts[0] + 1.0).abs() < 1e-12);
        assert!((s.real_parts[1] + 1.0).abs() < 1e-12);
        assert!(s.hurwitz);

        let s = spectrum(&SquareMatrix::diag(&[-2.0, -1.0]).unwrap()).unwrap();
        assert_eq!(s.real_parts, vec![-2.0, -1.0]);
        assert!(s.hurwitz);

        let s = spectrum(&SquareMatrix::identity(2).unwrap()).unwrap();
        assert_eq!(s.real_parts, vec![1.0, 1.0]);
        assert!(!s.hurwitz);
    }

    #[test]
    fn expm_at_zero_is_identity() {
        let e = expm(&malrieu(), 0.0).unwrap();
        assert_eq!(e.as_matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn expm_diagonal() {
        let a = SquareMatrix::diag(&[-2.0, -1.0]).unwrap();
        let e = expm(&a, 1.0).unwrap();
        assert!((e.as_matrix()[(0, 0)] - (-2f64).exp()).abs() < 1e-15);
        assert!((e.as_matrix()[(1, 1)] - (-1f64).exp()).abs() < 1e-15);
        assert!(e.as_matrix()[(0, 1)].abs() < 1e-16);
        // 0.135335, 0.367879 to six places
        assert!((e.as_matrix()[(0, 0)] - 0.135335).abs() < 1e-6);
        assert!((e.as_matrix()[(1, 1)] - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn expm_rotation_closed_form() {
        for &t in &[0.1, 1.0, 2.5, 7.0, -1.5] {
            let e = expm(&malrieu(), t).unwrap();
            let s = (-t).exp();
            let expected = DMatrix::from_row_slice(
                2,
                2,
                &[s * t.cos(), -s * t.sin(), s * t.sin(), s * t.cos()],
            );
            let err = (e.as_matrix() - &expected).norm() / expected.norm();
            assert!(err < 1e-12, "t = {t}: relative error {err}");
        }
    }

    #[test]
    fn expm_overflow_is_reported() {
        let a = SquareMatrix::diag(&[-1.0, -2.0]).unwrap();
        assert!(matches!(expm(&a, -1e6), Err(Error::Overflow(_))));
    }

    #[test]
    fn krylov_examples() {
        let a = SquareMatrix::diag(&[-2.0, -1.0, -0.5]).unwrap();
        let p = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let basis = krylov_space(&a, &p).unwrap();
        assert_eq!(basis.dimension(), 2);
        for q in &basis.vectors {
            assert!(q[2].abs() < 1e-14);
        }

        let basis = krylov_space(&malrieu(), &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(basis.dimension(), 2);

        // eigenvector of A
        let basis = krylov_space(&a, &DVector::from_vec(vec![0.0, 3.0, 0.0])).unwrap();
        assert_eq!(basis.dimension(), 1);
    }

    #[test]
    fn krylov_rejects_zero() {
        let a = malrieu();
        assert!(matches!(
            krylov_space(&a, &DVector::zeros(2)),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            vandermonde_check(&a, &DVector::zeros(2)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn vandermonde_examples() {
        let c = vandermonde_check(&malrieu(), &DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((c.det - 1.0).abs() < 1e-14);
        assert!(c.independent);

        // the 3x3 matrix [[1,-3,9],[1,-2,4],[1,-1,1]] has |det| = 2 by cofactor expansion
        let a = SquareMatrix::diag(&[-3.0, -2.0, -1.0]).unwrap();
        let c = vandermonde_check(&a, &DVector::from_element(3, 1.0)).unwrap();
        assert!((c.det.abs() - 2.0).abs() < 1e-12);
        assert!(c.independent);

        let a = SquareMatrix::diag(&[-1.0, -1.0]).unwrap();
        let c = vandermonde_check(&a, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(c.det, 0.0);
        assert!(!c.independent);
    }

    #[test]
    fn validation() {
        assert!(SquareMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(SquareMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(SquareMatrix::identity(MAX_DIM + 1).is_err());
        assert!(SquareMatrix::identity(MAX_DIM).is_ok());
    }

    #[test]
    fn propagator_matches_expm() {
        let cases = vec![
            malrieu(),
            SquareMatrix::diag(&[-2.0, -1.0]).unwrap(),
            SquareMatrix::diag(&[-3.0, -2.0, -1.0]).unwrap(),
            // Jordan block: not diagonalizable, must fall back
            SquareMatrix::from_rows(&[vec![-1.0, 10.0], vec![0.0, -1.0]]).unwrap(),
            SquareMatrix::identity(2).unwrap(),
        ];
        for a in cases {
            let prop = ExpPropagator::new(&a).unwrap();
            let d = a.dim();
            let v: Vec<f64> = (0..d).map(|i| 0.3 + i as f64).collect();
            let mut out = vec![0.0; d];
            for &t in &[0.0, 0.01, 0.7, 4.0] {
                prop.apply(t, &v, &mut out);
                let e = expm(&a, t).unwrap();
                let reference = e.as_matrix() * DVector::from_vec(v.clone());
                let err = (DVector::from_vec(out.clone()) - &reference).norm();
                assert!(err < 1e-11 * reference.norm().max(1.0), "err {err}");
            }
        }
        let jordan = SquareMatrix::from_rows(&[vec![-1.0, 10.0], vec![0.0, -1.0]]).unwrap();
        assert!(!ExpPropagator::new(&jordan).unwrap().uses_eigenbasis());
        assert!(ExpPropagator::new(&malrieu()).unwrap().uses_eigenbasis());
    }
}
