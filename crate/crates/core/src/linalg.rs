//! Small dense Cholesky kernels and the jittered log-determinant.
//!
//! Matrices are row-major `&[f64]` with an explicit stride so the kernels can
//! run on sub-blocks of a larger buffer without copying.

use nalgebra::DMatrix;

use crate::error::{MipError, Result};

/// Relative tolerance for the symmetry check on input matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// In-place lower Cholesky of the leading `n x n` block of `a` (row stride
/// `stride`). Returns `ln det` on success; `None` when a pivot is not
/// strictly positive. The strict upper triangle is left untouched.
pub fn cholesky_in_place(a: &mut [f64], n: usize, stride: usize) -> Option<f64> {
    let mut logdet = 0.0;
    for j in 0..n {
        let rj = &a[j * stride..j * stride + j];
        let d = a[j * stride + j] - dot(rj, rj);
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let ljj = d.sqrt();
        a[j * stride + j] = ljj;
        logdet += 2.0 * ljj.ln();
        for i in (j + 1)..n {
            let (head, tail) = a.split_at_mut(i * stride);
            let rj = &head[j * stride..j * stride + j];
            let ri = &mut tail[..=j];
            ri[j] = (ri[j] - dot(&ri[..j], rj)) / ljj;
        }
    }
    Some(logdet)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln det` of the principal submatrix of `a` (full row-major `n x n`,
/// stride `stride`) indexed by `idx`. `scratch` is resized as needed.
pub fn ln_det_principal(a: &[f64], stride: usize, idx: &[usize], scratch: &mut Vec<f64>) -> Option<f64> {
    let k = idx.len();
    if k == 0 {
        return Some(0.0);
    }
    if k == 1 {
        let d = a[idx[0] * stride + idx[0]];
        return if d > 0.0 && d.is_finite() { Some(d.ln()) } else { None };
    }
    scratch.clear();
    scratch.resize(k * k, 0.0);
    for (r, &i) in idx.iter().enumerate() {
        let row = &a[i * stride..];
        for (c, &j) in idx.iter().enumerate().take(r + 1) {
            scratch[r * k + c] = row[j];
        }
    }
    cholesky_in_place(scratch, k, k)
}

/// Inverse of a symmetric positive definite row-major matrix, or `None`.
pub fn spd_inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = a.to_vec();
    cholesky_in_place(&mut l, n, n)?;
    // Solve L Y = I column by column, then X = L^-T Y.
    let mut inv = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for c in 0..n {
        col.iter_mut().for_each(|x| *x = 0.0);
        col[c] = 1.0;
        for i in c..n {
            let mut s = col[i];
            for k in c..i {
                s -= l[i * n + k] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * col[k];
            }
            col[i] = s / l[i * n + i];
        }
        for r in 0..n {
            inv[r * n + c] = col[r];
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = v;
            inv[j * n + i] = v;
        }
    }
    Some(inv)
}

/// Diagonal regularization schedule used when a Cholesky factorization fails.
///
/// The jitter added at step `k` is `steps[k] * trace / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterPolicy {
    pub steps: Vec<f64>,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { steps: vec![1e-12, 1e-10, 1e-8] }
    }
}

impl JitterPolicy {
    pub fn none() -> Self {
        Self { steps: Vec::new() }
    }
}

/// Log-determinant in bits together with the jitter that made it computable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub bits: f64,
    pub jitter: f64,
}

pub(crate) fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let (r, c) = m.shape();
    if r != c {
        return Err(MipError::NotSquare { rows: r, cols: c });
    }
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    for i in 0..r {
        for j in 0..i {
            let diff = (m[(i, j)] - m[(j, i)]).abs();
            if diff > SYMMETRY_TOL * scale || !diff.is_finite() {
                return Err(MipError::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    Ok(())
}

/// Add `eps * trace / n` to the diagonal of a row-major matrix, trying each
/// step of `policy` until the Cholesky factorization succeeds. Returns the
/// natural-log determinant and the jitter applied (0 when none was needed).
pub(crate) fn factor_with_jitter(a: &[f64], n: usize, policy: &JitterPolicy) -> Result<(f64, f64)> {
    let mut work = a.to_vec();
    if let Some(ld) = cholesky_in_place(&mut work, n, n) {
        return Ok((ld, 0.0));
    }
    let mean_diag = (0..n).map(|i| a[i * n + i]).sum::<f64>() / n as f64;
    let mut last = 0.0;
    for &eps in &policy.steps {
        let jitter = eps * mean_diag;
        last = jitter;
        if jitter.is_nan() || jitter <= 0.0 {
            continue;
        }
        work.copy_from_slice(a);
        for i in 0..n {
            work[i * n + i] += jitter;
        }
        if let Some(ld) = cholesky_in_place(&mut work, n, n) {
            return Ok((ld, jitter));
        }
    }
    Err(MipError::Singular { jitter: last })
}

/// `log2 det(m + jitter * I)` for a symmetric matrix, escalating the jitter
/// per `policy` only when the unjittered factorization fails.
pub fn logdet_psd(m: &DMatrix<f64>, policy: &JitterPolicy) -> Result<LogDet> {
    check_symmetric(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(LogDet { bits: 0.0, jitter: 0.0 });
    }
    let (ln, jitter) = factor_with_jitter(&to_row_major(m), n, policy)?;
    Ok(LogDet { bits: ln * std::f64::consts::LOG2_E, jitter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Determinant by cofactor expansion along the first row.
    fn cofactor_det(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut det = 0.0;
        for c in 0..n {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v).collect())
                .collect();
            let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
            det += sign * m[0][c] * cofactor_det(&minor);
        }
        det
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.1
    }

    #[test]
    fn identity_and_diagonal() {
        let p = JitterPolicy::default();
        assert_eq!(logdet_psd(&DMatrix::identity(3, 3), &p).unwrap().bits, 0.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0]));
        let ld = logdet_psd(&d, &p).unwrap();
        assert!((ld.bits - 2.0).abs() < 1e-15);
        assert_eq!(ld.jitter, 0.0);
    }

    #[test]
    fn matches_cofactor_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            let m = random_spd(n, &mut rng);
            let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)]).collect()).collect();
            let expected = cofactor_det(&rows).log2();
            let got = logdet_psd(&m, &JitterPolicy::default()).unwrap().bits;
            assert!((got - expected).abs() < 1e-10, "n={n}: {got} vs {expected}");
        }
    }

    #[test]
    fn jitter_escalation_and_failure() {
        // rank one: [[1,1],[1,1]]
        let m = DMatrix::from_element(2, 2, 1.0);
        let ld = logdet_psd(&m, &JitterPolicy::default()).unwrap();
        assert_eq!(ld.jitter, 1e-12);
        assert!(matches!(logdet_psd(&m, &JitterPolicy::none()), Err(MipError::Singular { .. })));
        // negative definite never recovers
        let neg = -DMatrix::<f64>::identity(2, 2);
        assert!(matches!(logdet_psd(&neg, &JitterPolicy::default()), Err(MipError::Singular { .. })));
    }

    #[test]
    fn rejects_asymmetric_and_non_square() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(logdet_psd(&m, &JitterPolicy::default()), Err(MipError::NotSymmetric { .. })));
        let r = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(logdet_psd(&r, &JitterPolicy::default()), Err(MipError::NotSquare { .. })));
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_spd(7, &mut rng);
        let a = to_row_major(&m);
        let inv = spd_inverse(&a, 7).unwrap();
        let prod = &m * DMatrix::from_row_slice(7, 7, &inv);
        assert!((prod - DMatrix::identity(7, 7)).abs().max() < 1e-10);
    }
}
