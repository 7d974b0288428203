//! Finite delay measures μ on [0, δ] and the delay functional
//! H(F) = ∫₀^δ F(t−u) μ(du), both exactly and on an observation grid.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SfdeError};

/// Number of whole grid cells of width 1/n inside [0, x], i.e. ⌊n·x⌋.
///
/// Products that land within 1e-9 (relative) of an integer are snapped to it,
/// so that e.g. 100 × 0.29 counts 29 cells rather than 28.
pub fn grid_floor(n: usize, x: f64) -> usize {
    let y = n as f64 * x;
    let r = y.round();
    if (y - r).abs() <= 1e-9 * y.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        y.floor().max(0.0) as usize
    }
}

/// A finite measure on [0, δ]: point masses plus a piecewise-constant density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DelayMeasure {
    delta: f64,
    atoms: Vec<(f64, f64)>,
    density: Vec<DensityPiece>,
}

/// Constant density `height` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityPiece {
    pub start: f64,
    pub end: f64,
    pub height: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    delta: f64,
    #[serde(default)]
    atoms: Vec<[f64; 2]>,
    #[serde(default)]
    density: Vec<[f64; 3]>,
}

impl TryFrom<RawMeasure> for DelayMeasure {
    type Error = SfdeError;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DelayMeasure::new(
            raw.delta,
            raw.atoms.iter().map(|a| (a[0], a[1])).collect(),
            raw.density
                .iter()
                .map(|p| DensityPiece {
                    start: p[0],
                    end: p[1],
                    height: p[2],
                })
                .collect(),
        )
    }
}

impl From<DelayMeasure> for RawMeasure {
    fn from(m: DelayMeasure) -> Self {
        RawMeasure {
            delta: m.delta,
            atoms: m.atoms.iter().map(|&(u, w)| [u, w]).collect(),
            density: m
                .density
                .iter()
                .map(|p| [p.start, p.end, p.height])
                .collect(),
        }
    }
}

impl DelayMeasure {
    pub fn new(delta: f64, atoms: Vec<(f64, f64)>, mut density: Vec<DensityPiece>) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return domain(format!(
                "delay horizon must be positive and finite, got {delta}"
            ));
        }
        for &(u, w) in &atoms {
            if !(0.0..=delta).contains(&u) {
                return domain(format!("atom location {u} outside [0, {delta}]"));
            }
            if !(w.is_finite() && w > 0.0) {
                return domain(format!("atom mass {w} must be positive and finite"));
            }
        }
        for p in &density {
            if !(0.0 <= p.start && p.start < p.end && p.end <= delta) {
                return domain(format!(
                    "density interval [{}, {}) not a non-empty subset of [0, {delta}]",
                    p.start, p.end
                ));
            }
            if !(p.height.is_finite() && p.height >= 0.0) {
                return domain(format!(
                    "density height {} must be finite and >= 0",
                    p.height
                ));
            }
        }
        density.sort_by(|a, b| a.start.total_cmp(&b.start));
        for pair in density.windows(2) {
            if pair[1].start < pair[0].end {
                return domain(format!(
                    "density intervals [{}, {}) and [{}, {}) overlap",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                ));
            }
        }
        let m = Self {
            delta,
            atoms,
            density,
        };
        let total = m.total_mass();
        if !(total.is_finite() && total > 0.0) {
            return domain("delay measure must have positive finite total mass");
        }
        Ok(m)
    }

    /// Unit point mass at δ: H(F) = F(t − δ), the pure-delay (SDDE) case.
    pub fn dirac(delta: f64) -> Result<Self> {
        Self::new(delta, vec![(delta, 1.0)], Vec::new())
    }

    /// Density of constant `height` over all of [0, δ).
    pub fn uniform(delta: f64, height: f64) -> Result<Self> {
        Self::new(
            delta,
            Vec::new(),
            vec![DensityPiece {
                start: 0.0,
                end: delta,
                height,
            }],
        )
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> &[DensityPiece] {
        &self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>()
            + self
                .density
                .iter()
                .map(|p| p.height * (p.end - p.start))
                .sum::<f64>()
    }

    /// μ of the interval from `a` to `b` with the given endpoint inclusion.
    pub fn mass_of_interval(
        &self,
        a: f64,
        b: f64,
        include_left: bool,
        include_right: bool,
    ) -> Result<f64> {
        if !(0.0 <= a && a <= b && b <= self.delta) {
            return domain(format!(
                "interval [{a}, {b}] not inside [0, {}]",
                self.delta
            ));
        }
        let atom_mass: f64 = self
            .atoms
            .iter()
            .filter(|&&(u, _)| {
                let left = if include_left { u >= a } else { u > a };
                let right = if include_right { u <= b } else { u < b };
                left && right
            })
            .map(|a| a.1)
            .sum();
        let density_mass: f64 = self
            .density
            .iter()
            .map(|p| p.height * (b.min(p.end) - a.max(p.start)).max(0.0))
            .sum();
        Ok(atom_mass + density_mass)
    }

    /// Cell weights of the discretised functional H_n at resolution `n`.
    ///
    /// Cell `j < ⌊nδ⌋` is `[j/n, (j+1)/n)` and pairs with the lag-`j` value;
    /// the final cell `[δ_n, δ]` (closed) pairs with lag `⌊nδ⌋`.
    pub fn grid_weights(&self, n: usize) -> Result<GridWeights> {
        if n == 0 {
            return domain("grid resolution must be positive");
        }
        let lags = grid_floor(n, self.delta);
        let nf = n as f64;
        let mut dense = vec![0.0; lags + 1];
        for &(u, w) in &self.atoms {
            dense[grid_floor(n, u).min(lags)] += w;
        }
        for p in &self.density {
            let first = grid_floor(n, p.start).min(lags);
            for (j, slot) in dense.iter_mut().enumerate().skip(first) {
                let lo = j as f64 / nf;
                if lo >= p.end {
                    break;
                }
                let hi = if j == lags {
                    self.delta
                } else {
                    (j + 1) as f64 / nf
                };
                let overlap = (hi.min(p.end) - lo.max(p.start)).max(0.0);
                *slot += p.height * overlap;
            }
        }
        let entries = dense
            .into_iter()
            .enumerate()
            .filter(|&(_, w)| w != 0.0)
            .collect();
        Ok(GridWeights { n, lags, entries })
    }

    /// Exact H for a path given as `u ↦ F(t − u)`.
    ///
    /// Atoms are evaluated exactly; the density part uses composite midpoint
    /// quadrature with at least `resolution` nodes per unit length.
    pub fn h_exact<F>(&self, d: usize, resolution: usize, mut path: F) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &mut [f64]) -> Result<()>,
    {
        if resolution == 0 {
            return domain("quadrature resolution must be positive");
        }
        let mut out = vec![0.0; d];
        let mut value = vec![0.0; d];
        for &(u, w) in &self.atoms {
            path(u, &mut value)?;
            out.iter_mut().zip(&value).for_each(|(o, v)| *o += w * v);
        }
        for p in &self.density {
            let len = p.end - p.start;
            let cells = ((len * resolution as f64).ceil() as usize).max(1);
            let width = len / cells as f64;
            for c in 0..cells {
                let mid = p.start + (c as f64 + 0.5) * width;
                path(mid, &mut value)?;
                let w = p.height * width;
                out.iter_mut().zip(&value).for_each(|(o, v)| *o += w * v);
            }
        }
        Ok(out)
    }

    /// H_n from a lag-ordered window: block `j` of `lagged` holds X(t − j/n).
    pub fn h_discrete(&self, n: usize, d: usize, lagged: &[f64]) -> Result<Vec<f64>> {
        let weights = self.grid_weights(n)?;
        if lagged.len() < (weights.lags + 1) * d {
            return domain(format!(
                "history window has {} states, need {}",
                lagged.len() / d.max(1),
                weights.lags + 1
            ));
        }
        let mut out = vec![0.0; d];
        for &(lag, w) in &weights.entries {
            let x = &lagged[lag * d..(lag + 1) * d];
            out.iter_mut().zip(x).for_each(|(o, v)| *o += w * v);
        }
        Ok(out)
    }
}

/// Nonzero H_n cell weights at a fixed resolution, indexed by lag.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWeights {
    n: usize,
    lags: usize,
    entries: Vec<(usize, f64)>,
}

impl GridWeights {
    pub fn resolution(&self) -> usize {
        self.n
    }

    /// ⌊nδ⌋, the largest lag referenced.
    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// H_n at position `pos` of a chronological, flat `d`-strided buffer.
    #[inline]
    pub fn apply(&self, values: &[f64], d: usize, pos: usize, out: &mut [f64]) {
        out[..d].iter_mut().for_each(|o| *o = 0.0);
        for &(lag, w) in &self.entries {
            let base = (pos - lag) * d;
            for (o, v) in out[..d].iter_mut().zip(&values[base..base + d]) {
                *o += w * v;
            }
        }
    }
}

/// A discretely sampled initial segment {X(−i/n)}, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct HistorySegment {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl HistorySegment {
    pub fn new(n: usize, delta: f64, d: usize, values: Vec<f64>) -> Result<Self> {
        let want = (grid_floor(n, delta) + 1) * d;
        if values.len() != want {
            return domain(format!(
                "history has {} entries, expected {want}",
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SfdeError::NonFinite("history segment".into()));
        }
        Ok(Self { n, d, values })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// State at index `i`; index 0 is t = −⌊nδ⌋/n.
    pub fn state(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }
}
