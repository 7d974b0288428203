//! Explicit minimiser of the contrast for the two-dimensional benchmark.
//!
//! Writing Hⱼ for H_n(X^{(j)}) at t_{k−1}, setting ∂U/∂α = 0 and ∂U/∂β = 0
//! gives
//!
//! ```text
//! α̂₁ = n Σ ΔX¹ H₂/(1+H₂²) / Σ H₂²/(1+H₂²)
//! α̂₂ = n Σ ΔX² H₁/(1+H₁²) / Σ H₁²/(1+H₁²)
//! β̂₁ = ε⁻¹ √( Σ (ΔX¹ − α̂₁H₂/n)² / (1+H₂²) )
//! β̂₂ = ε⁻¹ √( Σ (ΔX² − α̂₂H₁/n)² / (1+H₁²) )
//! ```

use crate::contrast::ContrastWorkspace;
use crate::delay_measure::DelayMeasure;
use crate::error::{domain, Result};
use crate::simulate::PathGrid;

/// (α̂₁, α̂₂). Defined at any ε, including the noiseless case.
pub fn closed_form_drift(ws: &ContrastWorkspace) -> Result<[f64; 2]> {
    check_dim(ws)?;
    let n = ws.n() as f64;
    let mut alpha = [0.0; 2];
    for (coord, other) in [(0, 1), (1, 0)] {
        let (mut num, mut den) = (0.0, 0.0);
        for k in 1..=ws.n() {
            let h = ws.delayed(k)[other];
            let w = 1.0 / (1.0 + h * h);
            num += ws.increment(k)[coord] * h * w;
            den += h * h * w;
        }
        if den == 0.0 {
            return domain(format!(
                "closed form for alpha{} undefined: delayed coordinate {} is identically zero",
                coord + 1,
                other + 1
            ));
        }
        alpha[coord] = n * num / den;
    }
    Ok(alpha)
}

/// (α̂₁, α̂₂, β̂₁, β̂₂) from a prepared workspace.
pub fn closed_form_from_workspace(ws: &ContrastWorkspace, epsilon: f64) -> Result<[f64; 4]> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return domain(format!(
            "diffusion estimator needs epsilon > 0, got {epsilon}"
        ));
    }
    let alpha = closed_form_drift(ws)?;
    let n = ws.n() as f64;
    let mut beta = [0.0; 2];
    for (coord, other) in [(0, 1), (1, 0)] {
        let mut s = 0.0;
        for k in 1..=ws.n() {
            let h = ws.delayed(k)[other];
            let resid = ws.increment(k)[coord] - alpha[coord] / n * h;
            s += resid * resid / (1.0 + h * h);
        }
        beta[coord] = s.sqrt() / epsilon;
    }
    Ok([alpha[0], alpha[1], beta[0], beta[1]])
}

/// Closed-form estimate for a benchmark path under delay measure `delay`.
pub fn closed_form_benchmark(path: &PathGrid, delay: &DelayMeasure) -> Result<[f64; 4]> {
    let ws = ContrastWorkspace::new(path, delay)?;
    closed_form_from_workspace(&ws, path.epsilon())
}

fn check_dim(ws: &ContrastWorkspace) -> Result<()> {
    if ws.dim() != 2 {
        return domain(format!(
            "closed form needs a 2-dimensional path, got d={}",
            ws.dim()
        ));
    }
    Ok(())
}
