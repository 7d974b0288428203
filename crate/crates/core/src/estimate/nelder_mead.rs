//! Nelder–Mead on a box. Trial points are clipped onto the box, and
//! non-finite objective values rank as +∞.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once every vertex lies within `xtol · (1 + |best|∞)` of the best.
    pub xtol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_scale: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            xtol: 1e-8,
            initial_scale: 0.05,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub evaluations: usize,
}

pub fn minimize<F>(
    mut f: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    let clip = |x: &mut [f64]| {
        for i in 0..dim {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut x0 = start.to_vec();
    clip(&mut x0);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(&x0);
    simplex.push((x0.clone(), v0));
    for i in 0..dim {
        let mut xi = x0.clone();
        let step = opts.initial_scale * (upper[i] - lower[i]);
        xi[i] = if xi[i] + step <= upper[i] {
            xi[i] + step
        } else {
            xi[i] - step
        };
        let vi = eval(&xi);
        simplex.push((xi, vi));
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let scale = 1.0 + best.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(best)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0f64, f64::max);
        if diameter < opts.xtol * scale && simplex[0].1.is_finite() {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.fill(0.0);
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let worst = simplex[dim].0.clone();
        let f_worst = simplex[dim].1;
        let f_best = simplex[0].1;
        let f_second = simplex[dim - 1].1;

        let along = |coef: f64, out: &mut Vec<f64>| {
            for i in 0..dim {
                out[i] = centroid[i] + coef * (centroid[i] - worst[i]);
            }
            clip(out);
        };

        along(opts.reflection, &mut trial);
        let f_reflect = eval(&trial);
        if f_reflect < f_best {
            let reflected = trial.clone();
            along(opts.reflection * opts.expansion, &mut trial);
            let f_expand = eval(&trial);
            simplex[dim] = if f_expand < f_reflect {
                (trial.clone(), f_expand)
            } else {
                (reflected, f_reflect)
            };
            continue;
        }
        if f_reflect < f_second {
            simplex[dim] = (trial.clone(), f_reflect);
            continue;
        }
        let outside = f_reflect < f_worst;
        let coef = if outside {
            opts.reflection * opts.contraction
        } else {
            -opts.contraction
        };
        along(coef, &mut trial);
        let f_contract = eval(&trial);
        if (outside && f_contract <= f_reflect) || (!outside && f_contract < f_worst) {
            simplex[dim] = (trial.clone(), f_contract);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for i in 0..dim {
                x[i] = anchor[i] + opts.shrink * (x[i] - anchor[i]);
            }
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadOutcome {
        x,
        value,
        iterations,
        converged,
        evaluations,
    }
}
