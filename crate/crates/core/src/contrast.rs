//! The local-Gauss contrast
//!
//! ```text
//! U(θ) = Σ_k { log det Ξ_{k−1}(β) + (n/ε²) P_kᵀ Ξ_{k−1}⁻¹(β) P_k(θ) }
//! P_k(θ) = Δ_k X − b(X_{t_{k−1}}, H_n(X_{t_{k−1}−·}), θ) / n
//! Ξ_{k−1}(β) = σσᵀ(X_{t_{k−1}}, H_n(X_{t_{k−1}−·}), β)
//! ```
//!
//! evaluated on one observed path. H_n and the increments only depend on the
//! data, so they are computed once in a [`ContrastWorkspace`].

use std::ops::Range;

use crate::delay_measure::DelayMeasure;
use crate::error::{domain, Result, SfdeError};
use crate::linalg;
use crate::model::ModelSpec;
use crate::simulate::PathGrid;

/// Per-step data of one path: X_{t_{k−1}}, H_n(X_{t_{k−1}−·}) and Δ_k X for
/// k = 1..n, each stored flat with stride d.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastWorkspace {
    n: usize,
    d: usize,
    epsilon: f64,
    states: Vec<f64>,
    delayed: Vec<f64>,
    increments: Vec<f64>,
}

impl ContrastWorkspace {
    pub fn new(path: &PathGrid, delay: &DelayMeasure) -> Result<Self> {
        let n = path.n();
        let d = path.dim();
        let weights = delay.grid_weights(n)?;
        if weights.lags() > path.history_len() {
            return domain(format!(
                "delay measure needs {} lags but the path holds {} history points",
                weights.lags(),
                path.history_len()
            ));
        }
        let mut states = Vec::with_capacity(n * d);
        let mut delayed = vec![0.0; n * d];
        let mut increments = Vec::with_capacity(n * d);
        let values = path.values();
        for k in 1..=n {
            let prev = path.obs_index(k - 1);
            states.extend_from_slice(path.state(prev));
            weights.apply(values, d, prev, &mut delayed[(k - 1) * d..k * d]);
            let cur = path.state(prev + 1);
            increments.extend(cur.iter().zip(path.state(prev)).map(|(a, b)| a - b));
        }
        Ok(Self {
            n,
            d,
            epsilon: path.epsilon(),
            states,
            delayed,
            increments,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// ε recorded with the path.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// X_{t_{k−1}} for 1 ≤ k ≤ n.
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[(k - 1) * self.d..k * self.d]
    }

    /// H_n(X_{t_{k−1}−·}) for 1 ≤ k ≤ n.
    pub fn delayed(&self, k: usize) -> &[f64] {
        &self.delayed[(k - 1) * self.d..k * self.d]
    }

    /// Δ_k X for 1 ≤ k ≤ n.
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[(k - 1) * self.d..k * self.d]
    }
}

/// P_k(θ) = Δ_k X − b(X_{t_{k−1}}, H_n, θ)/n.
pub fn residual_pk(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    k: usize,
    theta: &[f64],
) -> Result<Vec<f64>> {
    if k == 0 || k > ws.n {
        return domain(format!("step index {k} outside 1..={}", ws.n));
    }
    let mut out = vec![0.0; ws.d];
    residual_into(ws, spec, k, theta, &mut out);
    Ok(out)
}

#[inline]
fn residual_into(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    k: usize,
    theta: &[f64],
    out: &mut [f64],
) {
    spec.drift(ws.state(k), ws.delayed(k), theta, out);
    let inv_n = 1.0 / ws.n as f64;
    for (o, dx) in out.iter_mut().zip(ws.increment(k)) {
        *o = dx - *o * inv_n;
    }
}

/// The two parts of U: Σ log det Ξ and Σ P_kᵀ Ξ⁻¹ P_k (without the n/ε² factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastParts {
    pub log_det: f64,
    pub quadratic: f64,
}

impl ContrastParts {
    pub fn value(&self, n: usize, epsilon: f64) -> f64 {
        self.log_det + n as f64 / (epsilon * epsilon) * self.quadratic
    }
}

/// Both contrast sums over the steps `steps` (1-based, half-open).
pub fn contrast_parts(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    theta: &[f64],
    steps: Range<usize>,
) -> Result<ContrastParts> {
    let dims = spec.dims();
    if theta.len() != dims.n_params() {
        return domain("theta length does not match the model");
    }
    if dims.d != ws.d {
        return domain("model and path dimensions differ");
    }
    if steps.start == 0 || steps.end > ws.n + 1 {
        return domain("step range outside 1..=n");
    }
    let (d, r) = (dims.d, dims.r);
    let beta = &theta[dims.p..];
    let mut sigma = vec![0.0; d * r];
    let mut xi = vec![0.0; d * d];
    let mut l = vec![0.0; d * d];
    let mut p = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut parts = ContrastParts {
        log_det: 0.0,
        quadratic: 0.0,
    };
    for k in steps {
        let (x, h) = (ws.state(k), ws.delayed(k));
        spec.diffusion(x, h, beta, &mut sigma);
        linalg::gram(&sigma, d, r, &mut xi);
        linalg::cholesky(&xi, d, &mut l).map_err(|pivot| SfdeError::ModelViolation {
            x: x.to_vec(),
            h: h.to_vec(),
            beta: beta.to_vec(),
            pivot,
        })?;
        residual_into(ws, spec, k, theta, &mut p);
        parts.log_det += linalg::log_det_from_cholesky(&l, d);
        parts.quadratic += linalg::quad_form_from_cholesky(&l, d, &p, &mut scratch);
    }
    if !(parts.log_det.is_finite() && parts.quadratic.is_finite()) {
        return Err(SfdeError::NonFinite(format!("contrast at theta={theta:?}")));
    }
    Ok(parts)
}

/// U_{n,ε}(θ) on the whole path.
pub fn contrast(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    theta: &[f64],
    epsilon: f64,
) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return domain(format!("contrast needs epsilon > 0, got {epsilon}"));
    }
    let value = contrast_parts(ws, spec, theta, 1..ws.n + 1)?.value(ws.n, epsilon);
    if !value.is_finite() {
        return Err(SfdeError::NonFinite(format!("contrast at theta={theta:?}")));
    }
    Ok(value)
}

/// Finite-difference step for coordinate value `t`.
pub fn fd_step(t: f64) -> f64 {
    (1e-6 * t.abs()).max(1e-6)
}

/// Central finite-difference gradient of [`contrast`]. Stencil points are
/// kept inside the parameter box; near a face the stencil shifts inward.
pub fn contrast_gradient(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    theta: &[f64],
    epsilon: f64,
) -> Result<Vec<f64>> {
    let lo = spec.bounds.lower();
    let hi = spec.bounds.upper();
    let mut point = theta.to_vec();
    let mut grad = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let step = fd_step(theta[i]);
        let centre = theta[i].clamp(lo[i] + step, hi[i] - step);
        point[i] = centre + step;
        let up = contrast(ws, spec, &point, epsilon)?;
        point[i] = centre - step;
        let down = contrast(ws, spec, &point, epsilon)?;
        point[i] = theta[i];
        grad[i] = (up - down) / (2.0 * step);
    }
    Ok(grad)
}

/// Diagonal of the Hessian of [`contrast`] by second differences.
pub fn contrast_hessian_diagonal(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    theta: &[f64],
    epsilon: f64,
) -> Result<Vec<f64>> {
    let lo = spec.bounds.lower();
    let hi = spec.bounds.upper();
    let mut point = theta.to_vec();
    let mut diag = vec![0.0; theta.len()];
    for i in 0..theta.len() {
        let step = 1e-4 * (1.0 + theta[i].abs());
        let centre = theta[i].clamp(lo[i] + step, hi[i] - step);
        point[i] = centre;
        let mid = contrast(ws, spec, &point, epsilon)?;
        point[i] = centre + step;
        let up = contrast(ws, spec, &point, epsilon)?;
        point[i] = centre - step;
        let down = contrast(ws, spec, &point, epsilon)?;
        point[i] = theta[i];
        diag[i] = (up - 2.0 * mid + down) / (step * step);
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        builtin_benchmark, Dims, FnCoefficients, History, ParameterBox, BENCHMARK_THETA,
    };
    use crate::simulate::{simulate_path, SimConfig};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn model(
        dims: Dims,
        drift: impl Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        diffusion: impl Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        delta: f64,
    ) -> ModelSpec {
        ModelSpec::new(
            "toy",
            Arc::new(FnCoefficients::new(dims, drift, diffusion)),
            ParameterBox::uniform(dims.p, dims.q, -10.0, 10.0).unwrap(),
            DelayMeasure::dirac(delta).unwrap(),
            History::constant(vec![0.0; dims.d]),
        )
        .unwrap()
    }

    fn benchmark_path(n: usize, epsilon: f64, seed: u64) -> PathGrid {
        simulate_path(
            &builtin_benchmark(),
            &SimConfig::new(n, epsilon, seed),
            &BENCHMARK_THETA,
        )
        .unwrap()
    }

    /// Explicit 2×2 inverse and determinant.
    fn naive_benchmark_contrast(path: &PathGrid, theta: &[f64], epsilon: f64) -> f64 {
        let n = path.n();
        let lag = path.history_len();
        let mut u = 0.0;
        for k in 1..=n {
            let prev = path.obs_index(k - 1);
            let x0 = path.state(prev);
            let x1 = path.state(prev + 1);
            let h = path.state(prev - lag);
            let b = [theta[0] * h[1], theta[1] * h[0]];
            let p = [
                x1[0] - x0[0] - b[0] / n as f64,
                x1[1] - x0[1] - b[1] / n as f64,
            ];
            let s = [
                theta[2] * (1.0 + h[1] * h[1]).sqrt(),
                theta[3] * (1.0 + h[0] * h[0]).sqrt(),
            ];
            let m = [s[0] * s[0], 0.0, 0.0, s[1] * s[1]];
            let det = m[0] * m[3] - m[1] * m[2];
            let inv = [m[3] / det, -m[1] / det, -m[2] / det, m[0] / det];
            let q = p[0] * (inv[0] * p[0] + inv[1] * p[1]) + p[1] * (inv[2] * p[0] + inv[3] * p[1]);
            u += det.ln() + n as f64 / (epsilon * epsilon) * q;
        }
        u
    }

    #[test]
    fn zero_drift_residual_is_increment() {
        let m = model(
            Dims {
                d: 2,
                r: 2,
                p: 1,
                q: 1,
            },
            |_, _, _, out| out.fill(0.0),
            |_, _, _, out| out.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]),
            0.1,
        );
        let path = benchmark_path(20, 0.1, 3);
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        for k in 1..=20 {
            assert_eq!(
                residual_pk(&ws, &m, k, &[1.0, 1.0]).unwrap(),
                ws.increment(k)
            );
        }
        assert!(residual_pk(&ws, &m, 0, &[1.0, 1.0]).is_err());
        assert!(residual_pk(&ws, &m, 21, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_path_identity_drift() {
        let m = model(
            Dims {
                d: 1,
                r: 1,
                p: 1,
                q: 1,
            },
            |_, h, _, out| out[0] = h[0],
            |_, _, _, out| out[0] = 1.0,
            0.1,
        );
        let path = PathGrid::new(10, 0.1, 0.1, None, 1, vec![3.0; 12]).unwrap();
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        assert_relative_eq!(
            residual_pk(&ws, &m, 4, &[1.0, 1.0]).unwrap()[0],
            -0.3,
            epsilon = 1e-15
        );
    }

    #[test]
    fn benchmark_residual_by_hand() {
        // n = 3, δ = 1/3 so H_n is the value one step back
        let m = builtin_benchmark().with_delay(DelayMeasure::dirac(1.0 / 3.0).unwrap());
        let vals = vec![1.0, 2.0, 1.5, 2.5, 1.25, 3.0, 2.0, 2.0, 0.5, 4.0];
        let path = PathGrid::new(3, 1.0 / 3.0, 0.1, None, 2, vals).unwrap();
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        let theta = [1.0, 2.0, 3.0, 4.0];
        // k = 2: X_{t1} = (1.25, 3), H = X_{t0} = (1.5, 2.5), Δ = (0.75, −1)
        // P = (0.75 − 2.5/3, −1 − 2·1.5/3) = (−0.083333…, −2)
        let p2 = residual_pk(&ws, &m, 2, &theta).unwrap();
        assert_relative_eq!(p2[0], 0.75 - 2.5 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(p2[1], -2.0, epsilon = 1e-15);
        // k = 3: X = (2, 2), H = (1.25, 3), Δ = (−1.5, 2)
        let p3 = residual_pk(&ws, &m, 3, &theta).unwrap();
        assert_relative_eq!(p3[0], -1.5 - 1.0, epsilon = 1e-15);
        assert_relative_eq!(p3[1], 2.0 - 2.0 * 1.25 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn one_step_scalar_contrast() {
        let m = model(
            Dims {
                d: 1,
                r: 1,
                p: 1,
                q: 1,
            },
            |_, _, _, out| out[0] = 0.0,
            |_, _, _, out| out[0] = 1.0,
            1.0,
        );
        let path = PathGrid::new(1, 1.0, 1.0, None, 1, vec![0.0, 0.5, -0.7]).unwrap();
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        let u = contrast(&ws, &m, &[1.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(u, 1.2 * 1.2, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_covariance_algebra() {
        let a = 2.5f64;
        let m = model(
            Dims {
                d: 2,
                r: 2,
                p: 1,
                q: 1,
            },
            |_, h, t, out| {
                out[0] = t[0] * h[1];
                out[1] = -h[0];
            },
            move |_, _, _, out| out.copy_from_slice(&[a.sqrt(), 0.0, 0.0, a.sqrt()]),
            0.1,
        );
        let path = benchmark_path(50, 0.1, 8);
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        let eps = 0.1;
        let theta = [0.7, 1.0];
        let want: f64 = (1..=50)
            .map(|k| {
                let p = residual_pk(&ws, &m, k, &theta).unwrap();
                2.0 * a.ln() + 50.0 / (eps * eps) * (p[0] * p[0] + p[1] * p[1]) / a
            })
            .sum();
        assert_relative_eq!(
            contrast(&ws, &m, &theta, eps).unwrap(),
            want,
            max_relative = 1e-12
        );
    }

    #[test]
    fn benchmark_matches_naive_evaluator() {
        let path = benchmark_path(100, 0.1, 7);
        let spec = builtin_benchmark();
        let ws = ContrastWorkspace::new(&path, &spec.delay).unwrap();
        for theta in [BENCHMARK_THETA, [0.5, 3.0, 2.0, 6.0]] {
            let fast = contrast(&ws, &spec, &theta, 0.1).unwrap();
            let naive = naive_benchmark_contrast(&path, &theta, 0.1);
            assert_relative_eq!(fast, naive, max_relative = 1e-10);
        }
    }

    #[test]
    fn additivity_over_step_ranges() {
        let path = benchmark_path(120, 0.05, 21);
        let spec = builtin_benchmark();
        let ws = ContrastWorkspace::new(&path, &spec.delay).unwrap();
        let theta = [1.2, 1.8, 2.9, 4.2];
        let whole = contrast_parts(&ws, &spec, &theta, 1..121).unwrap();
        for m in [1, 37, 119] {
            let a = contrast_parts(&ws, &spec, &theta, 1..m + 1).unwrap();
            let b = contrast_parts(&ws, &spec, &theta, m + 1..121).unwrap();
            assert_relative_eq!(a.log_det + b.log_det, whole.log_det, max_relative = 1e-12);
            assert_relative_eq!(
                a.quadratic + b.quadratic,
                whole.quadratic,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn pure_noise_model_ignores_alpha() {
        let m = model(
            Dims {
                d: 1,
                r: 1,
                p: 1,
                q: 1,
            },
            |_, _, _, out| out[0] = 0.0,
            |_, _, b, out| out[0] = b[0],
            0.1,
        );
        let path = PathGrid::new(
            10,
            0.1,
            0.1,
            None,
            1,
            (0..12).map(|i| (i as f64 * 0.7).sin()).collect(),
        )
        .unwrap();
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        let u1 = contrast(&ws, &m, &[-3.0, 2.0], 0.1).unwrap();
        let u2 = contrast(&ws, &m, &[7.0, 2.0], 0.1).unwrap();
        assert_eq!(u1, u2);
    }

    #[test]
    fn epsilon_scaling_of_quadratic_part() {
        let path = benchmark_path(100, 0.1, 4);
        let spec = builtin_benchmark();
        let ws = ContrastWorkspace::new(&path, &spec.delay).unwrap();
        let theta = [1.1, 2.1, 3.1, 3.9];
        let eps = 0.1;
        let parts = contrast_parts(&ws, &spec, &theta, 1..101).unwrap();
        let q = 100.0 / (eps * eps) * parts.quadratic;
        for c in [0.5, 2.0, 3.0] {
            let diff = contrast(&ws, &spec, &theta, c * eps).unwrap()
                - contrast(&ws, &spec, &theta, eps).unwrap();
            assert_relative_eq!(diff, (1.0 / (c * c) - 1.0) * q, max_relative = 1e-9);
        }
    }

    #[test]
    fn quadratic_toy_gradient() {
        // n = 1, H ≡ 1, ΔX = 1, σ ≡ 1, ε = 1 ⇒ U(α) = (1 − α)²
        let m = ModelSpec::new(
            "toy",
            Arc::new(FnCoefficients::new(
                Dims {
                    d: 1,
                    r: 1,
                    p: 1,
                    q: 0,
                },
                |_, h, t, out| out[0] = t[0] * h[0],
                |_, _, _, out| out[0] = 1.0,
            )),
            ParameterBox::new(vec![-10.0], vec![10.0], vec![], vec![]).unwrap(),
            DelayMeasure::dirac(1.0).unwrap(),
            History::constant(vec![1.0]),
        )
        .unwrap();
        let path = PathGrid::new(1, 1.0, 1.0, None, 1, vec![1.0, 1.0, 2.0]).unwrap();
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        assert_relative_eq!(
            contrast(&ws, &m, &[2.0], 1.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let g = contrast_gradient(&ws, &m, &[2.0], 1.0).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-5, "{g:?}");
    }

    #[test]
    fn relabeling_equivariance_of_gradient() {
        let spec = builtin_benchmark();
        let path = benchmark_path(100, 0.1, 12);
        let swapped_vals: Vec<f64> = path.values().chunks(2).flat_map(|c| [c[1], c[0]]).collect();
        let swapped = PathGrid::new(100, 0.1, 0.1, None, 2, swapped_vals).unwrap();
        let ws = ContrastWorkspace::new(&path, &spec.delay).unwrap();
        let ws_s = ContrastWorkspace::new(&swapped, &spec.delay).unwrap();
        let theta = [1.3, 2.2, 2.7, 4.4];
        let theta_s = [2.2, 1.3, 4.4, 2.7];
        let g = contrast_gradient(&ws, &spec, &theta, 0.1).unwrap();
        let gs = contrast_gradient(&ws_s, &spec, &theta_s, 0.1).unwrap();
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            assert_relative_eq!(g[i], gs[j], max_relative = 1e-6, epsilon = 1e-4);
        }
    }

    #[test]
    fn non_positive_epsilon_rejected() {
        let path = benchmark_path(10, 0.1, 1);
        let spec = builtin_benchmark();
        let ws = ContrastWorkspace::new(&path, &spec.delay).unwrap();
        assert!(contrast(&ws, &spec, &BENCHMARK_THETA, 0.0).is_err());
    }

    #[test]
    fn singular_covariance_is_model_violation() {
        let m = model(
            Dims {
                d: 1,
                r: 1,
                p: 1,
                q: 1,
            },
            |_, _, _, out| out[0] = 0.0,
            |_, _, b, out| out[0] = b[0],
            0.1,
        );
        let path = PathGrid::new(10, 0.1, 0.1, None, 1, vec![0.0; 12]).unwrap();
        let ws = ContrastWorkspace::new(&path, &m.delay).unwrap();
        assert!(matches!(
            contrast(&ws, &m, &[1.0, 0.0], 0.1),
            Err(SfdeError::ModelViolation { .. })
        ));
    }
}
