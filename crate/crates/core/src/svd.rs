//! Singular value decomposition by one-sided Jacobi rotations.
//!
//! Deterministic by construction: fixed sweep order, stable descending sort,
//! and a sign convention (largest-magnitude entry of each U column made
//! nonnegative) so that key files reproduce bit-for-bit across runs.

use ndarray::Array2;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;
const OFFDIAG_TOL: f64 = 1e-12;

/// A = U·diag(S)·Vᵀ with orthogonal U (m×m), V (n×n) and non-increasing
/// nonnegative S of length min(m, n).
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Array2<f64>,
    pub s: Vec<f64>,
    pub v: Array2<f64>,
}

pub fn svd(a: &Array2<f64>) -> Result<SvdFactors> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (m, n) = a.dim();
    if m < n {
        let t = svd(&a.t().to_owned())?;
        return Ok(SvdFactors { u: t.v, s: t.s, v: t.u });
    }

    // Work on columns of B (m×n, m >= n); V accumulates the rotations.
    let mut b = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let norm_a: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = OFFDIAG_TOL * norm_a * norm_a;

    if norm_a > 0.0 {
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let mut max_off = 0.0f64;
            for p in 0..n {
                for q in p + 1..n {
                    let mut app = 0.0;
                    let mut aqq = 0.0;
                    let mut apq = 0.0;
                    for i in 0..m {
                        let (bp, bq) = (b[(i, p)], b[(i, q)]);
                        app += bp * bp;
                        aqq += bq * bq;
                        apq += bp * bq;
                    }
                    max_off = max_off.max(apq.abs());
                    if apq.abs() <= threshold {
                        continue;
                    }
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let (bp, bq) = (b[(i, p)], b[(i, q)]);
                        b[(i, p)] = c * bp - s * bq;
                        b[(i, q)] = s * bp + c * bq;
                    }
                    for i in 0..n {
                        let (vp, vq) = (v[(i, p)], v[(i, q)]);
                        v[(i, p)] = c * vp - s * vq;
                        v[(i, q)] = s * vp + c * vq;
                    }
                }
            }
            if max_off <= threshold {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::SvdNoConvergence(MAX_SWEEPS));
        }
    }

    // Column norms are the singular values; sort descending, stable in the
    // original column order for determinism.
    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| b[(i, j)] * b[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).expect("finite"));
    let sorted_sigma: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    sigma = sorted_sigma;

    let mut u = Array2::zeros((m, m));
    let mut v_sorted = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            v_sorted[(i, dst)] = v[(i, src)];
        }
        if sigma[dst] > 0.0 {
            for i in 0..m {
                u[(i, dst)] = b[(i, src)] / sigma[dst];
            }
        }
    }
    complete_basis(&mut u, count_positive(&sigma));

    // Sign convention: largest-magnitude entry of each U column nonnegative;
    // the first n columns adjust the paired V column.
    for j in 0..m {
        let pivot = (0..m).max_by(|&i, &k| {
            u[(i, j)]
                .abs()
                .partial_cmp(&u[(k, j)].abs())
                .expect("finite")
                .then(k.cmp(&i)) // first index wins ties
        });
        if let Some(i) = pivot {
            if u[(i, j)] < 0.0 {
                for r in 0..m {
                    u[(r, j)] = -u[(r, j)];
                }
                if j < n {
                    for r in 0..n {
                        v_sorted[(r, j)] = -v_sorted[(r, j)];
                    }
                }
            }
        }
    }

    Ok(SvdFactors { u, s: sigma, v: v_sorted })
}

fn count_positive(sigma: &[f64]) -> usize {
    sigma.iter().take_while(|&&s| s > 0.0).count()
}

/// Fill columns `rank..m` of U with an orthonormal completion, built from
/// canonical basis vectors by modified Gram-Schmidt. Deterministic.
fn complete_basis(u: &mut Array2<f64>, rank: usize) {
    let m = u.nrows();
    let mut next = rank;
    let mut candidate = 0usize;
    while next < m {
        assert!(candidate < m, "basis completion exhausted candidates");
        let mut col = vec![0.0; m];
        col[candidate] = 1.0;
        candidate += 1;
        for j in 0..next {
            let dot: f64 = (0..m).map(|i| col[i] * u[(i, j)]).sum();
            for i in 0..m {
                col[i] -= dot * u[(i, j)];
            }
        }
        let norm: f64 = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // candidate lies in the span already
        }
        for i in 0..m {
            u[(i, next)] = col[i] / norm;
        }
        next += 1;
    }
}

/// U·diag(S)·Vᵀ. S may contain negative entries (post-extraction spectra).
pub fn svd_compose(u: &Array2<f64>, s: &[f64], v: &Array2<f64>) -> Result<Array2<f64>> {
    let (m, mu) = u.dim();
    let (n, nv) = v.dim();
    if mu != m || nv != n || s.len() != m.min(n) {
        return Err(Error::DimensionMismatch(format!(
            "compose with U {:?}, S {}, V {:?}",
            u.dim(),
            s.len(),
            v.dim()
        )));
    }
    let mut out = Array2::zeros((m, n));
    for (k, &sk) in s.iter().enumerate() {
        if sk == 0.0 {
            continue;
        }
        for i in 0..m {
            let scaled = u[(i, k)] * sk;
            for j in 0..n {
                out[(i, j)] += scaled * v[(j, k)];
            }
        }
    }
    Ok(out)
}
