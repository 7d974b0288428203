//! Small dense row-major matrices: Cholesky factorisation, triangular
//! solves and log-determinants for the d×d covariance blocks Ξ = σσᵀ.

/// Pivot floor below which a matrix is reported as not positive definite.
pub const PD_TOLERANCE: f64 = 1e-12;

/// `out = a aᵀ` for a row-major `rows × cols` matrix `a`.
pub fn gram(a: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(out.len(), rows * rows);
    for i in 0..rows {
        for j in 0..=i {
            let s: f64 = (0..cols).map(|c| a[i * cols + c] * a[j * cols + c]).sum();
            out[i * rows + j] = s;
            out[j * rows + i] = s;
        }
    }
}

/// Lower Cholesky factor of the symmetric `d × d` matrix `a`, written to `l`.
///
/// Only the lower triangle of `a` is read. On failure returns the offending
/// pivot value (the quantity whose square root would have been taken).
pub fn cholesky(a: &[f64], d: usize, l: &mut [f64]) -> Result<(), f64> {
    debug_assert_eq!(a.len(), d * d);
    debug_assert_eq!(l.len(), d * d);
    l.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..d {
        let mut pivot = a[j * d + j];
        for k in 0..j {
            pivot -= l[j * d + k] * l[j * d + k];
        }
        if pivot.is_nan() || pivot <= PD_TOLERANCE {
            return Err(pivot);
        }
        let ljj = pivot.sqrt();
        l[j * d + j] = ljj;
        for i in (j + 1)..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Ok(())
}

/// Solves `L y = b` in place for lower-triangular `l`.
pub fn forward_substitute(l: &[f64], d: usize, b: &mut [f64]) {
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
}

/// Solves `Lᵀ x = y` in place for lower-triangular `l`.
pub fn backward_substitute(l: &[f64], d: usize, y: &mut [f64]) {
    for i in (0..d).rev() {
        let mut s = y[i];
        for k in (i + 1)..d {
            s -= l[k * d + i] * y[k];
        }
        y[i] = s / l[i * d + i];
    }
}

/// `log det (L Lᵀ) = 2 Σ log Lᵢᵢ`.
pub fn log_det_from_cholesky(l: &[f64], d: usize) -> f64 {
    2.0 * (0..d).map(|i| l[i * d + i].ln()).sum::<f64>()
}

/// `vᵀ (L Lᵀ)⁻¹ v`, using `scratch` (length d) for the forward solve.
pub fn quad_form_from_cholesky(l: &[f64], d: usize, v: &[f64], scratch: &mut [f64]) -> f64 {
    scratch[..d].copy_from_slice(&v[..d]);
    forward_substitute(l, d, &mut scratch[..d]);
    scratch[..d].iter().map(|y| y * y).sum()
}

/// Inverse of `L Lᵀ`, column by column. Used off the hot path (Fisher matrix).
pub fn inverse_from_cholesky(l: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        forward_substitute(l, d, &mut col);
        backward_substitute(l, d, &mut col);
        for i in 0..d {
            inv[i * d + j] = col[i];
        }
    }
    inv
}

/// `c = a b` for square `d × d` matrices.
pub fn matmul(a: &[f64], b: &[f64], d: usize, c: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            c[i * d + j] = (0..d).map(|k| a[i * d + k] * b[k * d + j]).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_factor() {
        let a = [1.0, 0.0, 0.0, 1.0];
        let mut l = [0.0; 4];
        cholesky(&a, 2, &mut l).unwrap();
        assert_eq!(l, [1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn diagonal_factor() {
        let a = [18.0, 0.0, 0.0, 32.0];
        let mut l = [0.0; 4];
        cholesky(&a, 2, &mut l).unwrap();
        assert_relative_eq!(l[0], 18f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(l[3], 32f64.sqrt(), max_relative = 1e-15);
        assert_eq!(l[1], 0.0);
        assert_eq!(l[2], 0.0);
    }

    #[test]
    fn indefinite_rejected() {
        let a = [1.0, 2.0, 2.0, 1.0];
        let mut l = [0.0; 4];
        let pivot = cholesky(&a, 2, &mut l).unwrap_err();
        assert_relative_eq!(pivot, -3.0);
    }

    #[test]
    fn solves_and_logdet_agree_with_3x3_by_hand() {
        // A = M Mᵀ with M = [[2,0,0],[1,3,0],[-1,2,1]]
        let m = [2.0, 0.0, 0.0, 1.0, 3.0, 0.0, -1.0, 2.0, 1.0];
        let mut a = [0.0; 9];
        gram(&m, 3, 3, &mut a);
        let mut l = [0.0; 9];
        cholesky(&a, 3, &mut l).unwrap();
        for (x, y) in l.iter().zip(m.iter()) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
        assert_relative_eq!(
            log_det_from_cholesky(&l, 3),
            (36.0f64).ln(),
            epsilon = 1e-14
        );
        let inv = inverse_from_cholesky(&l, 3);
        let mut prod = [0.0; 9];
        matmul(&a, &inv, 3, &mut prod);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(prod[i * 3 + j], want, epsilon = 1e-13);
            }
        }
    }
}
