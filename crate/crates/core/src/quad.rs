//! Adaptive Gauss-Kronrod (7-15) quadrature for matrix-valued integrands.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Piece {
    lo: f64,
    hi: f64,
    value: DMatrix<f64>,
    error: f64,
}

fn gk15<F>(f: &F, lo: f64, hi: f64) -> Result<Piece>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center)?;
    let mut kronrod = &fc * WGK[7];
    let mut gauss = &fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx)? + f(center + dx)?;
        kronrod += &sum * WGK[j];
        if j % 2 == 1 {
            gauss += &sum * WG[j / 2];
        }
    }
    kronrod *= half;
    gauss *= half;
    let error = (&kronrod - &gauss).amax();
    Ok(Piece {
        lo,
        hi,
        value: kronrod,
        error,
    })
}

/// Integrates `f` over `[lo, hi]` until the summed entrywise error estimate
/// drops below `abs_tol`.
pub(crate) fn integrate<F>(f: F, lo: f64, hi: f64, abs_tol: f64, initial: usize) -> Result<DMatrix<f64>>
where
    F: Fn(f64) -> Result<DMatrix<f64>>,
{
    const MAX_PIECES: usize = 20_000;
    let n0 = initial.max(1);
    let width = (hi - lo) / n0 as f64;
    let mut pieces = Vec::with_capacity(n0);
    for k in 0..n0 {
        let a = lo + width * k as f64;
        let b = if k + 1 == n0 { hi } else { a + width };
        pieces.push(gk15(&f, a, b)?);
    }
    loop {
        let total: f64 = pieces.iter().map(|p| p.error).sum();
        if total <= abs_tol {
            break;
        }
        if pieces.len() >= MAX_PIECES {
            return Err(Error::numerical(format!(
                "quadrature did not reach tolerance {abs_tol:e} (estimate {total:e})"
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .unwrap();
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            // interval cannot be split further in floating point
            return Err(Error::numerical("quadrature interval collapsed"));
        }
        pieces.push(gk15(&f, p.lo, mid)?);
        pieces.push(gk15(&f, mid, p.hi)?);
    }
    let mut sum = pieces[0].value.clone();
    for p in &pieces[1..] {
        sum += &p.value;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_exponential() {
        let r = integrate(
            |s| Ok(DMatrix::from_element(1, 1, (-2.0 * s).exp())),
            0.0,
            3.0,
            1e-13,
            1,
        )
        .unwrap();
        let exact = (1.0 - (-6.0f64).exp()) / 2.0;
        assert!((r[(0, 0)] - exact).abs() < 1e-13);
    }

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|s| Ok(DMatrix::from_element(1, 1, s.powi(7))), 0.0, 2.0, 1e-12, 1).unwrap();
        assert!((r[(0, 0)] - 32.0).abs() < 1e-11);
    }
}
