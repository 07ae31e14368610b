//! Derivative-free maximizers used to locate the tempered-posterior optimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub simplex_scale: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { tolerance: 1e-3, max_iterations: 5_000, simplex_scale: 0.05 }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(invalid("optimizer tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("optimizer max_iterations must be at least 1"));
        }
        if !(self.simplex_scale > 0.0) {
            return Err(invalid("simplex scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Nelder–Mead maximization of `objective` from `x0`.
///
/// Stops when the spread of function values over the simplex drops below
/// `settings.tolerance` or after `settings.max_iterations`; the best vertex is
/// returned either way and `converged` tells which.
pub fn nelder_mead<F>(objective: F, x0: &[f64], settings: &OptimizerSettings) -> Result<Maximum>
where
    F: Fn(&[f64]) -> f64,
{
    settings.validate()?;
    let d = x0.len();
    let f0 = objective(x0);
    if !f0.is_finite() {
        return Err(invalid(format!("objective is not finite at the start point ({f0})")));
    }
    if d == 0 {
        return Ok(Maximum { x: Vec::new(), value: f0, iterations: 0, evaluations: 1, converged: true });
    }

    // Work with g = -f so the textbook minimization steps apply verbatim.
    let mut evals = 1usize;
    let mut g = |x: &[f64]| {
        evals += 1;
        -sanitize(objective(x))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), -f0));
    for j in 0..d {
        let mut x = x0.to_vec();
        x[j] += (settings.simplex_scale * x0[j].abs()).max(settings.simplex_scale);
        let gx = g(&x);
        simplex.push((x, gx));
    }

    let mut iterations = 0;
    let mut converged = false;
    let mut centroid = vec![0.0; d];
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[d].1 - simplex[0].1;
        if spread.is_finite() && spread.abs() < settings.tolerance {
            converged = true;
            break;
        }
        if iterations >= settings.max_iterations {
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(1.0);
        let gr = g(&xr);
        if gr < simplex[0].1 {
            let xe = along(2.0);
            let ge = g(&xe);
            simplex[d] = if ge < gr { (xe, ge) } else { (xr, gr) };
            continue;
        }
        if gr < simplex[d - 1].1 {
            simplex[d] = (xr, gr);
            continue;
        }
        let (xc, gc) = if gr < worst.1 {
            let xc = along(0.5);
            let gc = g(&xc);
            (xc, gc)
        } else {
            let xc = along(-0.5);
            let gc = g(&xc);
            (xc, gc)
        };
        if gc < gr.min(worst.1) {
            simplex[d] = (xc, gc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&v.0).map(|(b, xi)| b + 0.5 * (xi - b)).collect();
            let gx = g(&x);
            *v = (x, gx);
        }
    }
    let (x, gbest) = simplex.swap_remove(0);
    Ok(Maximum { x, value: -gbest, iterations, evaluations: evals, converged })
}

/// One block update: overwrite the block of `x` with its conditional argmax.
pub type CoordinateUpdater<'a> = &'a dyn Fn(&mut [f64]);

#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub sweeps: usize,
    /// Objective after the start point and after every single block update.
    pub history: Vec<f64>,
}

/// Cyclic conditional maximization until the largest coordinate change in a
/// sweep is below `settings.tolerance`.
pub fn coordinate_maximize<F>(
    objective: F,
    updaters: &[CoordinateUpdater<'_>],
    x0: &[f64],
    settings: &OptimizerSettings,
) -> Result<CoordinateResult>
where
    F: Fn(&[f64]) -> f64,
{
    settings.validate()?;
    if updaters.is_empty() {
        return Err(invalid("coordinate_maximize needs at least one updater"));
    }
    let mut x = x0.to_vec();
    let mut history = vec![objective(&x)];
    for sweep in 1..=settings.max_iterations {
        let before = x.clone();
        for update in updaters {
            update(&mut x);
            history.push(objective(&x));
        }
        let change = x
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change < settings.tolerance || updaters.len() == 1 {
            let value = *history.last().unwrap();
            return Ok(CoordinateResult { x, value, sweeps: sweep, history });
        }
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iterations,
        best_value: *history.last().unwrap(),
        best_point: x,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMaximum {
    pub discrete: i64,
    pub continuous: Maximum,
}

/// Exhaustive search over `candidates`, maximizing the continuous block for
/// each one. Candidates run in parallel; ties go to the smaller integer.
pub fn discrete_line_search<M>(candidates: &[i64], continuous_maximizer: M) -> Result<DiscreteMaximum>
where
    M: Fn(i64) -> Result<Maximum> + Sync,
{
    if candidates.is_empty() {
        return Err(invalid("discrete_line_search needs at least one candidate"));
    }
    let results: Vec<(i64, Result<Maximum>)> = candidates
        .par_iter()
        .map(|&k| (k, continuous_maximizer(k)))
        .collect();
    let mut best: Option<(i64, Maximum)> = None;
    let mut first_err = None;
    for (k, r) in results {
        match r {
            Ok(m) if m.value.is_finite() => {
                let better = match &best {
                    None => true,
                    Some((bk, bm)) => m.value > bm.value || (m.value == bm.value && k < *bk),
                };
                if better {
                    best = Some((k, m));
                }
            }
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((discrete, continuous)) => Ok(DiscreteMaximum { discrete, continuous }),
        None => Err(first_err.unwrap_or_else(|| invalid("objective is not finite for any candidate"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> OptimizerSettings {
        OptimizerSettings { tolerance: 1e-12, max_iterations: 10_000, simplex_scale: 0.05 }
    }

    #[test]
    fn nm_rejects_non_finite_start() {
        assert!(nelder_mead(|_x| f64::NAN, &[0.0], &tight()).is_err());
        assert!(nelder_mead(|_x| f64::NEG_INFINITY, &[0.0], &tight()).is_err());
    }

    #[test]
    fn nm_reports_iteration_cap() {
        let s = OptimizerSettings { tolerance: 1e-12, max_iterations: 3, simplex_scale: 0.05 };
        let m = nelder_mead(|x| -(x[0] - 100.0).powi(2), &[0.0], &s).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn nm_rosenbrock() {
        let m = nelder_mead(
            |x| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            &[-1.2, 1.0],
            &tight(),
        )
        .unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn single_block_converges_immediately() {
        let upd = |x: &mut [f64]| x[0] = 2.0;
        let r = coordinate_maximize(|x| -(x[0] - 2.0).powi(2), &[&upd], &[0.0], &tight()).unwrap();
        assert_eq!(r.sweeps, 1);
        assert_eq!(r.x, vec![2.0]);
    }

    #[test]
    fn discrete_ties_go_low() {
        let r = discrete_line_search(&[3, 1, 2], |k| {
            Ok(Maximum { x: vec![], value: if k == 3 { -1.0 } else { 0.0 }, iterations: 0, evaluations: 1, converged: true })
        })
        .unwrap();
        assert_eq!(r.discrete, 1);
        assert!(discrete_line_search(&[1, 2], |_| {
            Ok(Maximum { x: vec![], value: f64::NEG_INFINITY, iterations: 0, evaluations: 1, converged: true })
        })
        .is_err());
    }
}
