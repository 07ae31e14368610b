//! Cubic B-spline approximation of the optimum manifold `tau -> theta_max(tau)`.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::TargetModel;
use crate::params::{ParameterVector, Transform};
use crate::profile::{theta_max, OptimumCache};

pub const INTERPOLATOR_SCHEMA: &str = "stwnc.profile-interpolator/v1";
pub const TAU_MIN: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterpolatorSettings {
    pub n_grid: usize,
    pub n_knots: usize,
}

impl Default for InterpolatorSettings {
    fn default() -> Self {
        Self { n_grid: 301, n_knots: 60 }
    }
}

/// Full clamped knot vector for `n_knots` distinct knots.
pub fn clamped_knots(distinct: &[f64], order: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(distinct.len() + 2 * (order - 1));
    t.extend(std::iter::repeat_n(distinct[0], order - 1));
    t.extend_from_slice(distinct);
    t.extend(std::iter::repeat_n(*distinct.last().unwrap(), order - 1));
    t
}

/// All B-spline basis values of the given order at `x` (Cox–de Boor).
pub fn bspline_basis(knots: &[f64], order: usize, x: f64) -> Vec<f64> {
    let nb = knots.len() - order;
    let lo = knots[order - 1];
    let hi = knots[nb];
    let x = x.clamp(lo, hi);
    // locate span [t_s, t_{s+1}) with t_s < t_{s+1}; the right end uses the last span
    let mut span = order - 1;
    while span < nb - 1 && x >= knots[span + 1] {
        span += 1;
    }
    let mut b = vec![0.0; knots.len() - 1];
    b[span] = 1.0;
    for k in 2..=order {
        for i in span.saturating_sub(k - 1)..=span {
            let mut v = 0.0;
            let d1 = knots[i + k - 1] - knots[i];
            if d1 > 0.0 {
                v += (x - knots[i]) / d1 * b[i];
            }
            let d2 = knots[i + k] - knots[i + 1];
            if d2 > 0.0 && i + 1 < b.len() {
                v += (knots[i + k] - x) / d2 * b[i + 1];
            }
            b[i] = v;
        }
    }
    b.truncate(nb);
    b
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileInterpolator {
    schema: String,
    order: usize,
    domain: [f64; 2],
    /// Distinct knots in log10(tau).
    knots: Vec<f64>,
    continuous_names: Vec<String>,
    transforms: Vec<Transform>,
    /// Spline coefficients per continuous parameter, in transformed space.
    coefficients: Vec<Vec<f64>>,
    grid_log10_tau: Vec<f64>,
    grid_optima: Vec<ParameterVector>,
    #[serde(skip)]
    clamped: AtomicU64,
}

impl Clone for ProfileInterpolator {
    fn clone(&self) -> Self {
        Self {
            schema: self.schema.clone(),
            order: self.order,
            domain: self.domain,
            knots: self.knots.clone(),
            continuous_names: self.continuous_names.clone(),
            transforms: self.transforms.clone(),
            coefficients: self.coefficients.clone(),
            grid_log10_tau: self.grid_log10_tau.clone(),
            grid_optima: self.grid_optima.clone(),
            clamped: AtomicU64::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

/// log10-uniform grid of `n` points over [TAU_MIN, 1], ascending.
pub fn log10_grid(n: usize) -> Vec<f64> {
    let lo = TAU_MIN.log10();
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| lo + (0.0 - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Optimize on a log10-uniform tau grid (from tau = 1 downward, warm-starting
/// each point from its neighbour) and fit the spline.
pub fn build_interpolator(model: &dyn TargetModel, settings: InterpolatorSettings) -> Result<ProfileInterpolator> {
    if settings.n_knots < 2 || settings.n_grid < settings.n_knots + 4 {
        return Err(invalid("interpolator needs n_knots >= 2 and n_grid >= n_knots + 4"));
    }
    let grid = log10_grid(settings.n_grid);
    let mut cache = OptimumCache::new();
    let mut optima = vec![ParameterVector::default(); grid.len()];
    for (i, lx) in grid.iter().enumerate().rev() {
        let tau = if i + 1 == grid.len() { 1.0 } else { 10f64.powf(*lx) };
        optima[i] = theta_max(model, tau, &mut cache)?.theta;
    }
    ProfileInterpolator::fit(model, grid, optima, settings.n_knots)
}

impl ProfileInterpolator {
    /// Least-squares spline fit of precomputed optima on a log10-tau grid.
    pub fn fit(model: &dyn TargetModel, grid_log10_tau: Vec<f64>, optima: Vec<ParameterVector>, n_knots: usize) -> Result<Self> {
        let order = 4;
        let layout = model.layout();
        if grid_log10_tau.len() != optima.len() || grid_log10_tau.is_empty() {
            return Err(invalid("grid and optima lengths differ"));
        }
        let lo = TAU_MIN.log10();
        let knots: Vec<f64> = (0..n_knots).map(|i| lo + (0.0 - lo) * i as f64 / (n_knots - 1) as f64).collect();
        let full = clamped_knots(&knots, order);
        let nb = full.len() - order;
        let design = DMatrix::from_fn(grid_log10_tau.len(), nb, |r, c| bspline_basis(&full, order, grid_log10_tau[r])[c]);
        let names: Vec<String> = layout.continuous.iter().map(|p| p.name.clone()).collect();
        let transforms: Vec<Transform> = layout.continuous.iter().map(|p| p.transform).collect();
        let svd = design.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let mut coefficients = Vec::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            if !(smax > 0.0) || smin / smax < 1e-12 {
                return Err(Error::RankDeficient(name.clone()));
            }
            let values: Vec<f64> = optima.iter().map(|t| transforms[j].forward(t.continuous[j])).collect();
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::RankDeficient(name.clone()));
            }
            let rhs = DVector::from_vec(values);
            let sol = svd.solve(&rhs, 1e-14).map_err(|_| Error::RankDeficient(name.clone()))?;
            coefficients.push(sol.iter().copied().collect());
        }
        Ok(Self {
            schema: INTERPOLATOR_SCHEMA.to_string(),
            order,
            domain: [TAU_MIN, 1.0],
            knots,
            continuous_names: names,
            transforms,
            coefficients,
            grid_log10_tau,
            grid_optima: optima,
            clamped: AtomicU64::new(0),
        })
    }

    /// Interpolated optimum at `tau`; queries below the domain are clamped and counted.
    pub fn eval(&self, tau: f64) -> ParameterVector {
        let tau = if tau < self.domain[0] {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            self.domain[0]
        } else {
            tau.min(self.domain[1])
        };
        let x = tau.log10();
        let full = clamped_knots(&self.knots, self.order);
        let basis = bspline_basis(&full, self.order, x);
        let continuous = self
            .coefficients
            .iter()
            .zip(&self.transforms)
            .map(|(c, tr)| tr.inverse(c.iter().zip(&basis).map(|(a, b)| a * b).sum()))
            .collect();
        let nearest = self
            .grid_log10_tau
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(i, _)| i)
            .unwrap();
        ParameterVector::new(continuous, self.grid_optima[nearest].discrete.clone())
    }

    pub fn clamped_queries(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    /// Grid taus and the optima they were fitted to.
    pub fn grid(&self) -> impl Iterator<Item = (f64, &ParameterVector)> {
        self.grid_log10_tau.iter().map(|x| 10f64.powf(*x)).zip(&self.grid_optima)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(text)?;
        if v.schema != INTERPOLATOR_SCHEMA {
            return Err(Error::Schema(format!("unsupported interpolator schema `{}`", v.schema)));
        }
        let nb = v.knots.len() + v.order - 2;
        if v.coefficients.iter().any(|c| c.len() != nb) || v.coefficients.len() != v.transforms.len() {
            return Err(Error::Schema("interpolator coefficient shape does not match its knots".into()));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_partition_of_unity() {
        let distinct: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let full = clamped_knots(&distinct, 4);
        for i in 0..=300 {
            let x = 3.0 * i as f64 / 300.0;
            let b = bspline_basis(&full, 4, x);
            assert_eq!(b.len(), distinct.len() + 2);
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-13, "x={x}");
            assert!(b.iter().all(|v| *v >= -1e-15));
        }
        let end = bspline_basis(&full, 4, 3.0);
        assert!((end.last().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn grid_endpoints() {
        let g = log10_grid(301);
        assert_eq!(g.len(), 301);
        assert_eq!(g[0], -15.0);
        assert_eq!(g[300], 0.0);
    }
}
