//! Euler–Maruyama simulation of discretely observed SFDE paths and the
//! deterministic limit path X⁰ (the ε = 0 solution).
//!
//! Both run through one integrator on a fine grid of `n · substeps` steps
//! per unit time. The initial segment is produced first (sampled from φ, or
//! integrated from t = −δ when it follows an auxiliary SDE), then the main
//! segment on [0, 1]. With ε = 0 the noise contribution is exactly zero, so
//! a zero-noise simulation reproduces [`solve_limit_ode`] bit for bit.

use serde::{Deserialize, Serialize};

use crate::delay_measure::{grid_floor, DelayMeasure, HistorySegment};
use crate::error::{domain, Result, SfdeError};
use crate::model::{History, ModelSpec};
use crate::rng::NormalStream;

/// Scheme recorded for the limit path.
pub const LIMIT_ODE_SCHEME: &str = "euler";

/// One trajectory observed at t = −⌊nδ⌋/n, …, 0, 1/n, …, 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    n: usize,
    delta: f64,
    epsilon: f64,
    seed: Option<u64>,
    d: usize,
    values: Vec<f64>,
}

impl PathGrid {
    pub fn new(
        n: usize,
        delta: f64,
        epsilon: f64,
        seed: Option<u64>,
        d: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return domain("path grid needs n >= 1 and d >= 1");
        }
        if !(delta.is_finite() && delta > 0.0) {
            return domain(format!("invalid delay horizon {delta}"));
        }
        let want = (grid_floor(n, delta) + n + 1) * d;
        if values.len() != want {
            return domain(format!(
                "path has {} states, grid needs {}",
                values.len() / d,
                want / d
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SfdeError::NonFinite(format!("path state {}", i / d)));
        }
        Ok(Self {
            n,
            delta,
            epsilon,
            seed,
            d,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// ⌊nδ⌋: number of observations strictly before t = 0.
    pub fn history_len(&self) -> usize {
        grid_floor(self.n, self.delta)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Flat chronological buffer, `d` values per grid point.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    /// Time of grid index `i`.
    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.history_len() as f64) / self.n as f64
    }

    /// Index of t_k = k/n.
    pub fn obs_index(&self, k: usize) -> usize {
        self.history_len() + k
    }

    /// The observed initial segment {X(−i/n)}.
    pub fn history(&self) -> HistorySegment {
        let end = (self.history_len() + 1) * self.d;
        HistorySegment::new(self.n, self.delta, self.d, self.values[..end].to_vec())
            .expect("grid invariants hold")
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }
}

/// Simulation settings for one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub substeps: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(n: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            n,
            substeps: 1,
            epsilon,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return domain("n must be >= 1");
        }
        if self.substeps == 0 {
            return domain("substeps must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return domain(format!("epsilon must lie in [0, 1], got {}", self.epsilon));
        }
        Ok(())
    }
}

/// Simulates one path of `spec` under `theta_true` and returns the
/// observation-grid points.
pub fn simulate_path(spec: &ModelSpec, cfg: &SimConfig, theta_true: &[f64]) -> Result<PathGrid> {
    cfg.validate()?;
    check_theta(spec, theta_true)?;
    let mut noise = NormalStream::new(cfg.seed);
    let fine = integrate(
        spec,
        theta_true,
        cfg.epsilon,
        cfg.n * cfg.substeps,
        Some(&mut noise),
    )?;
    let d = spec.dims().d;
    let s = cfg.substeps;
    let obs_lags = grid_floor(cfg.n, spec.delay.delta());
    let first = fine.lags - obs_lags * s;
    let count = obs_lags + cfg.n + 1;
    let mut values = Vec::with_capacity(count * d);
    for i in 0..count {
        let pos = first + i * s;
        values.extend_from_slice(&fine.values[pos * d..(pos + 1) * d]);
    }
    PathGrid::new(
        cfg.n,
        spec.delay.delta(),
        cfg.epsilon,
        Some(cfg.seed),
        d,
        values,
    )
}

/// Euler solution of dX⁰ = b(X⁰, H_N(X⁰), θ₀) dt at `resolution` steps per
/// unit time. An auxiliary-SDE history is solved with its noise switched off.
pub fn solve_limit_ode(spec: &ModelSpec, theta0: &[f64], resolution: usize) -> Result<PathGrid> {
    if resolution == 0 {
        return domain("resolution must be >= 1");
    }
    check_theta(spec, theta0)?;
    let fine = integrate(spec, theta0, 0.0, resolution, None)?;
    PathGrid::new(
        resolution,
        spec.delay.delta(),
        0.0,
        None,
        spec.dims().d,
        fine.values,
    )
}

/// sup over the observation times of `path` of |X^ε_t − X⁰_t|.
pub fn path_to_ode_distance(path: &PathGrid, ode: &PathGrid) -> Result<f64> {
    if path.dim() != ode.dim() {
        return domain("path and ODE dimensions differ");
    }
    if ode.n() % path.n() != 0 {
        return domain(format!(
            "ODE resolution {} is not a multiple of the path resolution {}",
            ode.n(),
            path.n()
        ));
    }
    let stride = ode.n() / path.n();
    if ode.history_len() < path.history_len() * stride {
        return domain("ODE does not cover the observed initial segment");
    }
    let mut sup: f64 = 0.0;
    for i in 0..path.len() {
        let k = i as isize - path.history_len() as isize;
        let j = (ode.history_len() as isize + k * stride as isize) as usize;
        let dist = path
            .state(i)
            .iter()
            .zip(ode.state(j))
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(dist);
    }
    Ok(sup)
}

fn check_theta(spec: &ModelSpec, theta: &[f64]) -> Result<()> {
    if theta.len() != spec.dims().n_params() {
        return domain(format!(
            "theta has {} entries, model has {} parameters",
            theta.len(),
            spec.dims().n_params()
        ));
    }
    if !spec.bounds.contains(theta) {
        return domain(format!("theta {theta:?} outside the parameter box"));
    }
    Ok(())
}

struct FinePath {
    lags: usize,
    values: Vec<f64>,
}

fn diverged(time: f64) -> SfdeError {
    SfdeError::SimulationDiverged { time }
}

fn integrate(
    spec: &ModelSpec,
    theta: &[f64],
    epsilon: f64,
    steps: usize,
    mut noise: Option<&mut NormalStream>,
) -> Result<FinePath> {
    let dims = spec.dims();
    let d = dims.d;
    let delay: &DelayMeasure = &spec.delay;
    let weights = delay.grid_weights(steps)?;
    let lags = weights.lags();
    let h = 1.0 / steps as f64;
    let sqrt_h = h.sqrt();
    let mut values = vec![0.0; (lags + steps + 1) * d];

    match &spec.history {
        History::Deterministic(phi) => {
            for pos in 0..=lags {
                let t = (pos as f64 - lags as f64) * h;
                phi(t, &mut values[pos * d..(pos + 1) * d]);
                if values[pos * d..(pos + 1) * d]
                    .iter()
                    .any(|v| !v.is_finite())
                {
                    return Err(diverged(t));
                }
            }
        }
        History::Auxiliary { initial, dynamics } => {
            let r = dynamics.noise_dim();
            let mut x = initial.clone();
            let mut drift = vec![0.0; d];
            let mut sigma = vec![0.0; d * r];
            let mut z = vec![0.0; r];
            let mut step = |x: &mut [f64], tau: f64, noise: &mut Option<&mut NormalStream>| {
                dynamics.drift(x, &mut drift);
                dynamics.diffusion(x, epsilon, &mut sigma);
                if let Some(stream) = noise.as_deref_mut() {
                    stream.fill(&mut z);
                } else {
                    z.fill(0.0);
                }
                let sq = tau.sqrt();
                for i in 0..d {
                    let dw: f64 = (0..r).map(|c| sigma[i * r + c] * z[c]).sum();
                    x[i] += drift[i] * tau + dw * sq;
                }
            };
            // partial first step from −δ onto the grid when Nδ is not an integer
            let gap = delay.delta() - lags as f64 * h;
            if gap > 1e-12 * h {
                step(&mut x, gap, &mut noise);
            }
            values[..d].copy_from_slice(&x);
            for pos in 1..=lags {
                step(&mut x, h, &mut noise);
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(diverged((pos as f64 - lags as f64) * h));
                }
                values[pos * d..(pos + 1) * d].copy_from_slice(&x);
            }
        }
    }

    let r = dims.r;
    let mut hv = vec![0.0; d];
    let mut drift = vec![0.0; d];
    let mut sigma = vec![0.0; d * r];
    let mut z = vec![0.0; r];
    let beta = &theta[dims.p..];
    for j in 0..steps {
        let pos = lags + j;
        weights.apply(&values, d, pos, &mut hv);
        let (past, future) = values.split_at_mut((pos + 1) * d);
        let x = &past[pos * d..];
        let next = &mut future[..d];
        spec.drift(x, &hv, theta, &mut drift);
        for i in 0..d {
            next[i] = x[i] + drift[i] * h;
        }
        if let Some(stream) = noise.as_deref_mut() {
            spec.diffusion(x, &hv, beta, &mut sigma);
            stream.fill(&mut z);
            for i in 0..d {
                let dw: f64 = (0..r).map(|c| sigma[i * r + c] * z[c]).sum();
                next[i] += epsilon * dw * sqrt_h;
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(diverged((j + 1) as f64 * h));
        }
    }
    Ok(FinePath { lags, values })
}
