//! 2-D Walsh-Hadamard transform in natural (bit-product) ordering.
//!
//! The kernel is (-1)^popcount(x & u); no sequency reordering. All
//! normalization is deferred to the inverse: the forward transform stores
//! H·f·H so that integer inputs give exactly integral coefficients, which the
//! lifting stage in `mrwht` relies on for perfect reconstruction. The inverse
//! divides by N² per axis pair; on coefficients of an integer image every
//! intermediate stays far below 2^53, so f64 arithmetic is exact.

use ndarray::Array2;

use crate::error::{Error, Result};

/// In-place unnormalized fast Walsh-Hadamard transform. `data.len()` must be
/// a power of two. Self-inverse up to a factor of N.
pub fn fwht_1d(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in (0..n).step_by(half * 2) {
            for i in block..block + half {
                let (a, b) = (data[i], data[i + half]);
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half *= 2;
    }
}

fn check_square_pow2(m: &Array2<f64>) -> Result<usize> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if !rows.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(rows));
    }
    Ok(rows)
}

fn transform_axes(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = check_square_pow2(m)?;
    let mut out = m.clone();
    for mut row in out.rows_mut() {
        fwht_1d(row.as_slice_mut().expect("row-major layout"));
    }
    let mut column = vec![0.0; n];
    for c in 0..n {
        for r in 0..n {
            column[r] = out[(r, c)];
        }
        fwht_1d(&mut column);
        for r in 0..n {
            out[(r, c)] = column[r];
        }
    }
    Ok(out)
}

/// Forward 2-D WHT: H·f·H, no normalization.
pub fn wht_forward_2d(img: &Array2<f64>) -> Result<Array2<f64>> {
    transform_axes(img)
}

/// Inverse 2-D WHT: (1/N²)·H·WH·H. Exact on forward outputs of integer
/// images; real-valued coefficients give the real inverse.
pub fn wht_inverse_2d(coefs: &Array2<f64>) -> Result<Array2<f64>> {
    let n = check_square_pow2(coefs)?;
    let mut out = transform_axes(coefs)?;
    let scale = 1.0 / (n as f64 * n as f64);
    out.mapv_inplace(|v| v * scale);
    Ok(out)
}
