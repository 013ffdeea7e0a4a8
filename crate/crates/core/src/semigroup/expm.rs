//! Matrix exponential by scaling and squaring with the degree-13 diagonal
//! Pade approximant (Higham 2005). The degree is fixed; only the number of
//! squarings depends on the 1-norm of the argument.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest 1-norm for which the [13/13] approximant is accurate to double
/// precision without scaling.
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
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
];

pub(crate) fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Number of squarings for `a`.
pub(crate) fn squaring_count(a: &DMatrix<f64>) -> u32 {
    let norm = one_norm(a);
    if norm <= THETA_13 {
        0
    } else {
        (norm / THETA_13).log2().ceil() as u32
    }
}

pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidParameter(format!("expm needs a square matrix, got {}x{}", n, a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("expm argument has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let s = squaring_count(a);
    let scaled = a / 2f64.powi(s as i32);
    let b = &PADE_13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Singular("Pade denominator in matrix exponential".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}
