//! Minimum-contrast estimation.

pub mod closed_form;
pub mod fisher;
pub mod nelder_mead;

use serde::{Deserialize, Serialize};

use crate::contrast::{contrast, contrast_gradient, contrast_hessian_diagonal, ContrastWorkspace};
use crate::error::{domain, Result, SfdeError};
use crate::model::ModelSpec;

pub use closed_form::{closed_form_benchmark, closed_form_drift, closed_form_from_workspace};
pub use fisher::{fisher_info, standardized_errors, FisherInfo};
pub use nelder_mead::NelderMeadOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    ClosedForm,
    Optimizer,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::ClosedForm => "closed_form",
            Estimator::Optimizer => "optimizer",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "closed_form" => Ok(Estimator::ClosedForm),
            "optimizer" => Ok(Estimator::Optimizer),
            other => Err(format!(
                "unknown estimator `{other}` (expected closed_form or optimizer)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub theta_hat: Vec<f64>,
    pub contrast_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

/// Box-constrained Nelder–Mead on U_{n,ε}, followed by one projected,
/// diagonally scaled gradient step that is kept only if it lowers U.
pub fn minimize_contrast(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    epsilon: f64,
    start: &[f64],
    opts: &NelderMeadOptions,
) -> Result<EstimationResult> {
    if !spec.bounds.contains(start) {
        return domain(format!("start {start:?} outside the parameter box"));
    }
    let lower = spec.bounds.lower();
    let upper = spec.bounds.upper();
    let objective = |theta: &[f64]| contrast(ws, spec, theta, epsilon).unwrap_or(f64::INFINITY);
    let nm = nelder_mead::minimize(objective, start, &lower, &upper, opts);
    if !nm.value.is_finite() {
        return Err(SfdeError::OptimizationFailed(
            "contrast is non-finite at every visited point".into(),
        ));
    }

    let mut theta = nm.x;
    let mut value = nm.value;
    if let (Ok(grad), Ok(curv)) = (
        contrast_gradient(ws, spec, &theta, epsilon),
        contrast_hessian_diagonal(ws, spec, &theta, epsilon),
    ) {
        let direction: Vec<f64> = grad
            .iter()
            .zip(&curv)
            .map(|(g, c)| if *c > 0.0 { -g / c } else { -g })
            .collect();
        let mut t = 1.0;
        for _ in 0..30 {
            let mut trial: Vec<f64> = theta
                .iter()
                .zip(&direction)
                .map(|(x, dx)| x + t * dx)
                .collect();
            spec.bounds.project(&mut trial);
            if let Ok(v) = contrast(ws, spec, &trial, epsilon) {
                if v < value {
                    theta = trial;
                    value = v;
                    break;
                }
            }
            t *= 0.5;
        }
    }
    let gradient_norm = contrast_gradient(ws, spec, &theta, epsilon)
        .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
        .unwrap_or(f64::NAN);
    Ok(EstimationResult {
        theta_hat: theta,
        contrast_value: value,
        iterations: nm.iterations,
        converged: nm.converged,
        gradient_norm,
    })
}

/// Runs `estimator` on one workspace. The closed form applies to
/// two-dimensional benchmark-type models only.
pub fn estimate(
    ws: &ContrastWorkspace,
    spec: &ModelSpec,
    epsilon: f64,
    estimator: Estimator,
    start: &[f64],
) -> Result<EstimationResult> {
    match estimator {
        Estimator::Optimizer => {
            minimize_contrast(ws, spec, epsilon, start, &NelderMeadOptions::default())
        }
        Estimator::ClosedForm => {
            let theta_hat = closed_form_from_workspace(ws, epsilon)?.to_vec();
            let contrast_value = contrast(ws, spec, &theta_hat, epsilon)?;
            let gradient_norm = contrast_gradient(ws, spec, &theta_hat, epsilon)
                .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
                .unwrap_or(f64::NAN);
            Ok(EstimationResult {
                theta_hat,
                contrast_value,
                iterations: 0,
                converged: true,
                gradient_norm,
            })
        }
    }
}
