//! Asymptotic Fisher information I(θ₀) = diag(I_b, I_σ) along the limit
//! path X⁰, and the standardised estimation errors built from it.
//!
//! ```text
//! I_b^{ij} = ∫₀¹ (∂_{αᵢ} b)ᵀ [σσᵀ]⁻¹ (∂_{αⱼ} b) ds
//! I_σ^{ij} = ½ ∫₀¹ tr[ (∂_{βᵢ} σσᵀ) [σσᵀ]⁻¹ (∂_{βⱼ} σσᵀ) [σσᵀ]⁻¹ ] ds
//! ```

use crate::error::{domain, Result, SfdeError};
use crate::linalg;
use crate::model::ModelSpec;
use crate::simulate::PathGrid;

const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    p: usize,
    q: usize,
    /// p × p, row-major.
    pub i_b: Vec<f64>,
    /// q × q, row-major.
    pub i_sigma: Vec<f64>,
}

impl FisherInfo {
    pub fn new(p: usize, q: usize, i_b: Vec<f64>, i_sigma: Vec<f64>) -> Result<Self> {
        if i_b.len() != p * p || i_sigma.len() != q * q {
            return domain("Fisher block sizes do not match (p, q)");
        }
        let info = Self { p, q, i_b, i_sigma };
        info.check_positive_definite()?;
        Ok(info)
    }

    pub fn identity(p: usize, q: usize) -> Self {
        let eye = |m: usize| {
            (0..m * m)
                .map(|i| if i % (m + 1) == 0 { 1.0 } else { 0.0 })
                .collect()
        };
        Self {
            p,
            q,
            i_b: eye(p),
            i_sigma: eye(q),
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn drift(&self, i: usize, j: usize) -> f64 {
        self.i_b[i * self.p + j]
    }

    pub fn diffusion(&self, i: usize, j: usize) -> f64 {
        self.i_sigma[i * self.q + j]
    }

    /// Block-diagonal (p+q) × (p+q) matrix.
    pub fn full(&self) -> Vec<f64> {
        let m = self.p + self.q;
        let mut out = vec![0.0; m * m];
        for i in 0..self.p {
            for j in 0..self.p {
                out[i * m + j] = self.drift(i, j);
            }
        }
        for i in 0..self.q {
            for j in 0..self.q {
                out[(self.p + i) * m + self.p + j] = self.diffusion(i, j);
            }
        }
        out
    }

    fn check_positive_definite(&self) -> Result<()> {
        for (block, m, data) in [
            ("drift", self.p, &self.i_b),
            ("diffusion", self.q, &self.i_sigma),
        ] {
            if m == 0 {
                continue;
            }
            let mut l = vec![0.0; m * m];
            if linalg::cholesky(data, m, &mut l).is_err() {
                return Err(SfdeError::FisherNotPositiveDefinite { block });
            }
        }
        Ok(())
    }
}

/// Trapezoid quadrature of the Fisher integrands on the grid k/`quad_resolution`.
///
/// `ode` must be a limit path whose resolution is a multiple of `quad_resolution`;
/// H is taken from the H_n discretisation at `quad_resolution`.
pub fn fisher_info(
    spec: &ModelSpec,
    theta0: &[f64],
    ode: &PathGrid,
    quad_resolution: usize,
) -> Result<FisherInfo> {
    let dims = spec.dims();
    let (d, r, p, q) = (dims.d, dims.r, dims.p, dims.q);
    if theta0.len() != p + q {
        return domain("theta0 length does not match the model");
    }
    if ode.dim() != d {
        return domain("limit path dimension does not match the model");
    }
    if quad_resolution == 0 || ode.n() % quad_resolution != 0 {
        return domain(format!(
            "quadrature resolution {quad_resolution} must divide the path resolution {}",
            ode.n()
        ));
    }
    let stride = ode.n() / quad_resolution;
    let weights = spec.delay.grid_weights(quad_resolution)?;
    let lags = weights.lags();
    if lags * stride > ode.history_len() {
        return domain("limit path does not cover the delay horizon");
    }
    let count = lags + quad_resolution + 1;
    let first = ode.history_len() - lags * stride;
    let mut grid = Vec::with_capacity(count * d);
    for i in 0..count {
        grid.extend_from_slice(ode.state(first + i * stride));
    }

    let beta0 = &theta0[p..];
    let mut i_b = vec![0.0; p * p];
    let mut i_sigma = vec![0.0; q * q];
    let mut h = vec![0.0; d];
    let mut theta = theta0.to_vec();
    let mut b_up = vec![0.0; d];
    let mut b_down = vec![0.0; d];
    let mut db = vec![0.0; p * d];
    let mut dxi = vec![0.0; q * d * d];
    let mut sigma = vec![0.0; d * r];
    let mut xi_up = vec![0.0; d * d];
    let mut xi_down = vec![0.0; d * d];
    let mut l = vec![0.0; d * d];
    let mut left = vec![0.0; d * d];
    let mut right = vec![0.0; d * d];
    let mut scratch = vec![0.0; d];

    for k in 0..=quad_resolution {
        let pos = lags + k;
        let x = &grid[pos * d..(pos + 1) * d];
        weights.apply(&grid, d, pos, &mut h);
        let w = if k == 0 || k == quad_resolution {
            0.5
        } else {
            1.0
        } / quad_resolution as f64;

        for i in 0..p {
            let step = FD_STEP * (1.0 + theta0[i].abs());
            theta[i] = theta0[i] + step;
            spec.drift(x, &h, &theta, &mut b_up);
            theta[i] = theta0[i] - step;
            spec.drift(x, &h, &theta, &mut b_down);
            theta[i] = theta0[i];
            for c in 0..d {
                db[i * d + c] = (b_up[c] - b_down[c]) / (2.0 * step);
            }
        }
        let mut beta = beta0.to_vec();
        for j in 0..q {
            let step = FD_STEP * (1.0 + beta0[j].abs());
            beta[j] = beta0[j] + step;
            spec.diffusion(x, &h, &beta, &mut sigma);
            linalg::gram(&sigma, d, r, &mut xi_up);
            beta[j] = beta0[j] - step;
            spec.diffusion(x, &h, &beta, &mut sigma);
            linalg::gram(&sigma, d, r, &mut xi_down);
            beta[j] = beta0[j];
            for e in 0..d * d {
                dxi[j * d * d + e] = (xi_up[e] - xi_down[e]) / (2.0 * step);
            }
        }

        spec.diffusion(x, &h, beta0, &mut sigma);
        let mut xi = vec![0.0; d * d];
        linalg::gram(&sigma, d, r, &mut xi);
        linalg::cholesky(&xi, d, &mut l).map_err(|pivot| SfdeError::ModelViolation {
            x: x.to_vec(),
            h: h.clone(),
            beta: beta0.to_vec(),
            pivot,
        })?;
        let xi_inv = linalg::inverse_from_cholesky(&l, d);

        for i in 0..p {
            for j in 0..=i {
                // (∂ᵢb)ᵀ Ξ⁻¹ (∂ⱼb)
                scratch.iter_mut().enumerate().for_each(|(row, s)| {
                    *s = (0..d).map(|c| xi_inv[row * d + c] * db[j * d + c]).sum();
                });
                let v: f64 = (0..d).map(|c| db[i * d + c] * scratch[c]).sum();
                i_b[i * p + j] += w * v;
            }
        }
        for i in 0..q {
            linalg::matmul(&dxi[i * d * d..(i + 1) * d * d], &xi_inv, d, &mut left);
            for j in 0..=i {
                linalg::matmul(&dxi[j * d * d..(j + 1) * d * d], &xi_inv, d, &mut right);
                let tr: f64 = (0..d)
                    .map(|a| {
                        (0..d)
                            .map(|c| left[a * d + c] * right[c * d + a])
                            .sum::<f64>()
                    })
                    .sum();
                i_sigma[i * q + j] += w * 0.5 * tr;
            }
        }
    }
    for (m, block) in [(p, &mut i_b), (q, &mut i_sigma)] {
        for i in 0..m {
            for j in 0..i {
                block[j * m + i] = block[i * m + j];
            }
        }
    }
    FisherInfo::new(p, q, i_b, i_sigma)
}

/// Standardised errors and the χ² statistic of an estimate.
///
/// Drift coordinates: zᵢ = ε⁻¹ √(I_b^{ii}) (α̂ᵢ − αᵢ); diffusion coordinates:
/// zⱼ = √n √(I_σ^{jj}) (β̂ⱼ − βⱼ). The χ² statistic is vᵀ I(θ₀) v with
/// v = (ε⁻¹(α̂ − α), √n(β̂ − β)).
pub fn standardized_errors(
    theta_hat: &[f64],
    theta0: &[f64],
    fisher: &FisherInfo,
    epsilon: f64,
    n: usize,
) -> (Vec<f64>, f64) {
    let (p, q) = (fisher.p(), fisher.q());
    let sqrt_n = (n as f64).sqrt();
    let v: Vec<f64> = (0..p + q)
        .map(|i| {
            let e = theta_hat[i] - theta0[i];
            if i < p {
                e / epsilon
            } else {
                sqrt_n * e
            }
        })
        .collect();
    let z = (0..p + q)
        .map(|i| {
            if i < p {
                fisher.drift(i, i).sqrt() * v[i]
            } else {
                fisher.diffusion(i - p, i - p).sqrt() * v[i]
            }
        })
        .collect();
    let m = p + q;
    let full = fisher.full();
    let chi2 = (0..m)
        .map(|i| v[i] * (0..m).map(|j| full[i * m + j] * v[j]).sum::<f64>())
        .sum();
    (z, chi2)
}
