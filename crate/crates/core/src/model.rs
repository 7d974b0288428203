//! SFDE model descriptions.
//!
//! A model is
//!
//! ```text
//! dX_t = b(X_t, H(X_{t−·}), θ) dt + ε σ(X_t, H(X_{t−·}), β) dW_t,   t ∈ [0, 1]
//! ```
//!
//! with θ = (α, β), a delay measure μ defining H, and a law for the initial
//! segment on [−δ, 0]. Coefficients are supplied in code through
//! [`Coefficients`]; the two-dimensional benchmark is available through
//! [`builtin_benchmark`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::delay_measure::DelayMeasure;
use crate::error::{domain, Result, SfdeError};
use crate::linalg;

pub const BENCHMARK_NAME: &str = "benchmark2d";

/// Dimensions of a model: state `d`, noise `r`, drift parameters `p`,
/// diffusion parameters `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub d: usize,
    pub r: usize,
    pub p: usize,
    pub q: usize,
}

impl Dims {
    pub fn n_params(&self) -> usize {
        self.p + self.q
    }
}

/// Drift and diffusion of the main equation. Implementations must be pure.
pub trait Coefficients: Send + Sync {
    fn dims(&self) -> Dims;

    /// b(x, h, θ) into `out` (length d). `theta` holds all p + q parameters.
    fn drift(&self, x: &[f64], h: &[f64], theta: &[f64], out: &mut [f64]);

    /// σ(x, h, β) into `out`, row-major d × r.
    fn diffusion(&self, x: &[f64], h: &[f64], beta: &[f64], out: &mut [f64]);
}

/// Coefficients of an auxiliary SDE generating the initial segment.
/// The diffusion receives ε and must include any small-noise scaling itself.
pub trait HistoryDynamics: Send + Sync {
    fn noise_dim(&self) -> usize;
    fn drift(&self, x: &[f64], out: &mut [f64]);
    fn diffusion(&self, x: &[f64], epsilon: f64, out: &mut [f64]);
}

pub type HistoryFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Law of the initial segment on [−δ, 0].
#[derive(Clone)]
pub enum History {
    /// A deterministic function φ(t).
    Deterministic(HistoryFn),
    /// An SDE started at t = −δ from `initial`.
    Auxiliary {
        initial: Vec<f64>,
        dynamics: Arc<dyn HistoryDynamics>,
    },
}

impl History {
    pub fn constant(value: Vec<f64>) -> Self {
        History::Deterministic(Arc::new(move |_, out: &mut [f64]| {
            out.copy_from_slice(&value)
        }))
    }
}

impl fmt::Debug for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            History::Deterministic(_) => f.write_str("History::Deterministic(..)"),
            History::Auxiliary { initial, .. } => f
                .debug_struct("History::Auxiliary")
                .field("initial", initial)
                .finish_non_exhaustive(),
        }
    }
}

/// Box Θ = Θ_α × Θ_β with componentwise bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    pub alpha_lo: Vec<f64>,
    pub alpha_hi: Vec<f64>,
    pub beta_lo: Vec<f64>,
    pub beta_hi: Vec<f64>,
}

impl ParameterBox {
    pub fn new(
        alpha_lo: Vec<f64>,
        alpha_hi: Vec<f64>,
        beta_lo: Vec<f64>,
        beta_hi: Vec<f64>,
    ) -> Result<Self> {
        if alpha_lo.len() != alpha_hi.len() || beta_lo.len() != beta_hi.len() {
            return domain("parameter box bound lengths differ");
        }
        let ok = alpha_lo
            .iter()
            .zip(&alpha_hi)
            .chain(beta_lo.iter().zip(&beta_hi))
            .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi);
        if !ok {
            return domain("parameter box must be bounded with lo < hi in every coordinate");
        }
        Ok(Self {
            alpha_lo,
            alpha_hi,
            beta_lo,
            beta_hi,
        })
    }

    /// The same interval `[lo, hi]` for all p + q coordinates.
    pub fn uniform(p: usize, q: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; p], vec![hi; p], vec![lo; q], vec![hi; q])
    }

    pub fn lower(&self) -> Vec<f64> {
        self.alpha_lo.iter().chain(&self.beta_lo).copied().collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.alpha_hi.iter().chain(&self.beta_hi).copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.alpha_lo.len() + self.beta_lo.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower()
            .iter()
            .zip(self.upper())
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Closed-box membership.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower().iter().zip(self.upper()))
                .all(|(t, (lo, hi))| *lo <= *t && *t <= hi)
    }

    pub fn project(&self, theta: &mut [f64]) {
        for (t, (lo, hi)) in theta
            .iter_mut()
            .zip(self.lower().into_iter().zip(self.upper()))
        {
            *t = t.clamp(lo, hi);
        }
    }
}

/// A complete SFDE model.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    coefficients: Arc<dyn Coefficients>,
    pub bounds: ParameterBox,
    pub delay: DelayMeasure,
    pub history: History,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("dims", &self.dims())
            .field("bounds", &self.bounds)
            .field("delay", &self.delay)
            .field("history", &self.history)
            .finish()
    }
}

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        coefficients: Arc<dyn Coefficients>,
        bounds: ParameterBox,
        delay: DelayMeasure,
        history: History,
    ) -> Result<Self> {
        let dims = coefficients.dims();
        if dims.d == 0 || dims.r == 0 {
            return domain("state and noise dimensions must be positive");
        }
        if bounds.alpha_lo.len() != dims.p || bounds.beta_lo.len() != dims.q {
            return domain(format!(
                "parameter box has {}+{} coordinates, model expects {}+{}",
                bounds.alpha_lo.len(),
                bounds.beta_lo.len(),
                dims.p,
                dims.q
            ));
        }
        if let History::Auxiliary { initial, .. } = &history {
            if initial.len() != dims.d {
                return domain("auxiliary history initial value has wrong dimension");
            }
        }
        Ok(Self {
            name: name.into(),
            coefficients,
            bounds,
            delay,
            history,
        })
    }

    pub fn dims(&self) -> Dims {
        self.coefficients.dims()
    }

    pub fn coefficients(&self) -> &dyn Coefficients {
        self.coefficients.as_ref()
    }

    /// Replaces the delay measure, keeping everything else.
    pub fn with_delay(mut self, delay: DelayMeasure) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_bounds(mut self, bounds: ParameterBox) -> Result<Self> {
        let dims = self.dims();
        if bounds.alpha_lo.len() != dims.p || bounds.beta_lo.len() != dims.q {
            return domain("parameter box does not match model dimensions");
        }
        self.bounds = bounds;
        Ok(self)
    }

    #[inline]
    pub fn drift(&self, x: &[f64], h: &[f64], theta: &[f64], out: &mut [f64]) {
        self.coefficients.drift(x, h, theta, out)
    }

    #[inline]
    pub fn diffusion(&self, x: &[f64], h: &[f64], beta: &[f64], out: &mut [f64]) {
        self.coefficients.diffusion(x, h, beta, out)
    }

    /// σσᵀ(x, h, β), row-major d × d.
    pub fn sigma_sigma_t(&self, x: &[f64], h: &[f64], beta: &[f64]) -> Vec<f64> {
        let Dims { d, r, .. } = self.dims();
        let mut sigma = vec![0.0; d * r];
        self.diffusion(x, h, beta, &mut sigma);
        let mut out = vec![0.0; d * d];
        linalg::gram(&sigma, d, r, &mut out);
        out
    }

    /// Cholesky factor of σσᵀ(x, h, β), or a model violation if it is not
    /// positive definite.
    pub fn check_sigma_pd(&self, x: &[f64], h: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims().d;
        let xi = self.sigma_sigma_t(x, h, beta);
        let mut l = vec![0.0; d * d];
        linalg::cholesky(&xi, d, &mut l).map_err(|pivot| SfdeError::ModelViolation {
            x: x.to_vec(),
            h: h.to_vec(),
            beta: beta.to_vec(),
            pivot,
        })?;
        Ok(l)
    }
}

type DriftFn = dyn Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync;

/// [`Coefficients`] built from closures; handy for small models and tests.
pub struct FnCoefficients {
    dims: Dims,
    drift: Box<DriftFn>,
    diffusion: Box<DriftFn>,
}

impl FnCoefficients {
    pub fn new<B, S>(dims: Dims, drift: B, diffusion: S) -> Self
    where
        B: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        S: Fn(&[f64], &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dims,
            drift: Box::new(drift),
            diffusion: Box::new(diffusion),
        }
    }
}

impl Coefficients for FnCoefficients {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn drift(&self, x: &[f64], h: &[f64], theta: &[f64], out: &mut [f64]) {
        (self.drift)(x, h, theta, out)
    }

    fn diffusion(&self, x: &[f64], h: &[f64], beta: &[f64], out: &mut [f64]) {
        (self.diffusion)(x, h, beta, out)
    }
}

/// The two-dimensional cross-delay benchmark:
///
/// ```text
/// dX¹ = α₁ H(X²) dt + ε β₁ √(1 + H(X²)²) dW¹
/// dX² = α₂ H(X¹) dt + ε β₂ √(1 + H(X¹)²) dW²
/// ```
#[derive(Debug, Clone, Copy, Default)]
pub struct Benchmark2d;

impl Coefficients for Benchmark2d {
    fn dims(&self) -> Dims {
        Dims {
            d: 2,
            r: 2,
            p: 2,
            q: 2,
        }
    }

    #[inline]
    fn drift(&self, _x: &[f64], h: &[f64], theta: &[f64], out: &mut [f64]) {
        out[0] = theta[0] * h[1];
        out[1] = theta[1] * h[0];
    }

    #[inline]
    fn diffusion(&self, _x: &[f64], h: &[f64], beta: &[f64], out: &mut [f64]) {
        out[0] = beta[0] * (1.0 + h[1] * h[1]).sqrt();
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = beta[1] * (1.0 + h[0] * h[0]).sqrt();
    }
}

/// Pre-period dynamics of the benchmark on [−δ, 0]:
/// dX¹ = 5X² dt + 7ε√(1+(X²)²) dW¹, dX² = 6X¹ dt + 8ε√(1+(X¹)²) dW².
#[derive(Debug, Clone, Copy, Default)]
pub struct BenchmarkHistory;

impl HistoryDynamics for BenchmarkHistory {
    fn noise_dim(&self) -> usize {
        2
    }

    fn drift(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 5.0 * x[1];
        out[1] = 6.0 * x[0];
    }

    fn diffusion(&self, x: &[f64], epsilon: f64, out: &mut [f64]) {
        out[0] = 7.0 * epsilon * (1.0 + x[1] * x[1]).sqrt();
        out[1] = 0.0;
        out[2] = 0.0;
        out[3] = 8.0 * epsilon * (1.0 + x[0] * x[0]).sqrt();
    }
}

pub const BENCHMARK_DELTA: f64 = 0.1;
pub const BENCHMARK_THETA: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// The benchmark model: δ = 1/10, μ = Dirac at δ, history started from
/// (1, 2) at t = −δ, box [0.1, 10]⁴.
pub fn builtin_benchmark() -> ModelSpec {
    ModelSpec::new(
        BENCHMARK_NAME,
        Arc::new(Benchmark2d),
        ParameterBox::uniform(2, 2, 0.1, 10.0).expect("static box"),
        DelayMeasure::dirac(BENCHMARK_DELTA).expect("static measure"),
        History::Auxiliary {
            initial: vec![1.0, 2.0],
            dynamics: Arc::new(BenchmarkHistory),
        },
    )
    .expect("static model")
}

/// Looks up a config-selectable model by name.
pub fn by_name(name: &str) -> Option<ModelSpec> {
    (name == BENCHMARK_NAME).then(builtin_benchmark)
}
