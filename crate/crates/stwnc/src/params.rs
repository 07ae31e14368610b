use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Inverse temperature in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(invalid(format!("inverse temperature {value} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for InverseTemperature {
    type Error = crate::error::Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<InverseTemperature> for f64 {
    fn from(t: InverseTemperature) -> f64 {
        t.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub continuous: Vec<f64>,
    pub discrete: Vec<i64>,
}

impl ParameterVector {
    pub fn new(continuous: Vec<f64>, discrete: Vec<i64>) -> Self {
        Self { continuous, discrete }
    }

    pub fn continuous(values: Vec<f64>) -> Self {
        Self { continuous: values, discrete: Vec::new() }
    }

    pub fn is_finite(&self) -> bool {
        self.continuous.iter().all(|x| x.is_finite())
    }
}

/// Reparameterization used by optimizers and the optimum-manifold spline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Log,
}

impl Transform {
    pub fn forward(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
        }
    }

    pub fn inverse(self, u: f64) -> f64 {
        match self {
            Transform::Identity => u,
            Transform::Log => u.exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousParam {
    pub name: String,
    pub transform: Transform,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteParam {
    pub name: String,
    pub min: i64,
    pub max: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub continuous: Vec<ContinuousParam>,
    pub discrete: Vec<DiscreteParam>,
}

impl ParameterLayout {
    pub fn push_continuous(&mut self, name: impl Into<String>, transform: Transform) {
        self.continuous.push(ContinuousParam { name: name.into(), transform });
    }

    pub fn push_discrete(&mut self, name: impl Into<String>, min: i64, max: i64) {
        self.discrete.push(DiscreteParam { name: name.into(), min, max });
    }

    /// Parameter names, continuous first, in trace-column order.
    pub fn names(&self) -> Vec<String> {
        self.continuous
            .iter()
            .map(|p| p.name.clone())
            .chain(self.discrete.iter().map(|p| p.name.clone()))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.continuous.len() + self.discrete.len()
    }

    /// Shape check plus discrete-support check.
    pub fn contains(&self, theta: &ParameterVector) -> bool {
        theta.continuous.len() == self.continuous.len()
            && theta.discrete.len() == self.discrete.len()
            && theta
                .discrete
                .iter()
                .zip(&self.discrete)
                .all(|(v, p)| (p.min..=p.max).contains(v))
    }

    /// Flattened values in `names()` order.
    pub fn flatten(&self, theta: &ParameterVector) -> Vec<f64> {
        theta
            .continuous
            .iter()
            .copied()
            .chain(theta.discrete.iter().map(|&k| k as f64))
            .collect()
    }

    pub fn unflatten(&self, values: &[f64]) -> Result<ParameterVector> {
        if values.len() != self.dim() {
            return Err(invalid(format!(
                "expected {} parameter values, found {}",
                self.dim(),
                values.len()
            )));
        }
        let (c, d) = values.split_at(self.continuous.len());
        let mut discrete = Vec::with_capacity(d.len());
        for v in d {
            if v.fract() != 0.0 {
                return Err(invalid(format!("discrete parameter value {v} is not an integer")));
            }
            discrete.push(*v as i64);
        }
        Ok(ParameterVector::new(c.to_vec(), discrete))
    }
}
