//! Column-oriented chain traces and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainId {
    Tempered,
    Target,
    Pt(usize),
}

impl ChainId {
    pub fn label(&self) -> String {
        match self {
            ChainId::Tempered => "tempered".into(),
            ChainId::Target => "target".into(),
            ChainId::Pt(t) => format!("pt_chain_{t}"),
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        match label {
            "tempered" => Some(ChainId::Tempered),
            "target" => Some(ChainId::Target),
            _ => label.strip_prefix("pt_chain_")?.parse().ok().map(ChainId::Pt),
        }
    }
}

/// One chain's record at one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: u64,
    pub chain_id: ChainId,
    pub theta: ParameterVector,
    pub tau: f64,
    pub log_lik: f64,
    pub log_prior: f64,
    pub accepted_theta: bool,
    pub accepted_tau: bool,
    pub exchanged: bool,
    pub burn_in: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ChainTrace {
    pub param_names: Vec<String>,
    pub n_continuous: usize,
    pub iteration: Vec<u64>,
    pub tau: Vec<f64>,
    pub log_lik: Vec<f64>,
    pub log_prior: Vec<f64>,
    pub accepted_theta: Vec<bool>,
    pub accepted_tau: Vec<bool>,
    pub exchanged: Vec<bool>,
    pub burn_in: Vec<bool>,
    /// One column per parameter; discrete values are stored as exact floats.
    pub params: Vec<Vec<f64>>,
}

const FIXED_COLUMNS: [&str; 8] = [
    "iteration",
    "tau",
    "log_lik",
    "log_prior",
    "accepted_theta",
    "accepted_tau",
    "exchanged",
    "burn_in",
];

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Schema(format!("not a number: `{s}`")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::Schema(format!("not a flag: `{other}`"))),
    }
}

impl ChainTrace {
    pub fn new(param_names: Vec<String>, n_continuous: usize) -> Self {
        let params = vec![Vec::new(); param_names.len()];
        Self { param_names, n_continuous, params, ..Self::default() }
    }

    pub fn with_capacity(param_names: Vec<String>, n_continuous: usize, cap: usize) -> Self {
        let mut t = Self::new(param_names, n_continuous);
        t.iteration.reserve(cap);
        t.tau.reserve(cap);
        t.log_lik.reserve(cap);
        t.log_prior.reserve(cap);
        t.params.iter_mut().for_each(|c| c.reserve(cap));
        t
    }

    pub fn len(&self) -> usize {
        self.iteration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iteration.is_empty()
    }

    pub fn push(&mut self, r: &TraceRecord) {
        self.iteration.push(r.iteration);
        self.tau.push(r.tau);
        self.log_lik.push(r.log_lik);
        self.log_prior.push(r.log_prior);
        self.accepted_theta.push(r.accepted_theta);
        self.accepted_tau.push(r.accepted_tau);
        self.exchanged.push(r.exchanged);
        self.burn_in.push(r.burn_in);
        let mut col = 0;
        for v in &r.theta.continuous {
            self.params[col].push(*v);
            col += 1;
        }
        for v in &r.theta.discrete {
            self.params[col].push(*v as f64);
            col += 1;
        }
    }

    pub fn theta(&self, i: usize) -> ParameterVector {
        let continuous = self.params[..self.n_continuous].iter().map(|c| c[i]).collect();
        let discrete = self.params[self.n_continuous..].iter().map(|c| c[i] as i64).collect();
        ParameterVector::new(continuous, discrete)
    }

    pub fn param(&self, name: &str) -> Option<&[f64]> {
        self.param_names.iter().position(|n| n == name).map(|i| &self.params[i][..])
    }

    /// Index of the first post-burn-in record.
    pub fn analysis_start(&self) -> usize {
        self.burn_in.iter().position(|b| !b).unwrap_or(self.len())
    }

    pub fn post_burn_in<'a>(&self, column: &'a [f64]) -> &'a [f64] {
        &column[self.analysis_start()..]
    }

    /// Tempered log-posterior at every record.
    pub fn log_posterior(&self) -> Vec<f64> {
        self.tau
            .iter()
            .zip(&self.log_lik)
            .zip(&self.log_prior)
            .map(|((t, l), p)| crate::model::combine(*t, *l, *p))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let header: Vec<&str> = FIXED_COLUMNS.iter().copied().chain(self.param_names.iter().map(String::as_str)).collect();
        wr.write_record(&header)?;
        let b = |x: bool| if x { "1" } else { "0" };
        for i in 0..self.len() {
            let mut row = vec![
                self.iteration[i].to_string(),
                fmt_f64(self.tau[i]),
                fmt_f64(self.log_lik[i]),
                fmt_f64(self.log_prior[i]),
                b(self.accepted_theta[i]).into(),
                b(self.accepted_tau[i]).into(),
                b(self.exchanged[i]).into(),
                b(self.burn_in[i]).into(),
            ];
            for (j, c) in self.params.iter().enumerate() {
                if j < self.n_continuous {
                    row.push(fmt_f64(c[i]));
                } else {
                    row.push(format!("{}", c[i] as i64));
                }
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Read a trace; `n_continuous` says how many parameter columns are continuous.
    pub fn read_csv<R: Read>(r: R, n_continuous: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() < FIXED_COLUMNS.len() || headers.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
            return Err(Error::Schema("trace header does not start with the standard columns".into()));
        }
        let names: Vec<String> = headers.iter().skip(FIXED_COLUMNS.len()).map(String::from).collect();
        if n_continuous > names.len() {
            return Err(Error::Schema("trace has fewer parameter columns than expected".into()));
        }
        let mut t = ChainTrace::new(names, n_continuous);
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != headers.len() {
                return Err(Error::Schema("ragged trace row".into()));
            }
            t.iteration.push(rec[0].trim().parse().map_err(|_| Error::Schema("bad iteration".into()))?);
            t.tau.push(parse_f64(&rec[1])?);
            t.log_lik.push(parse_f64(&rec[2])?);
            t.log_prior.push(parse_f64(&rec[3])?);
            t.accepted_theta.push(parse_bool(&rec[4])?);
            t.accepted_tau.push(parse_bool(&rec[5])?);
            t.exchanged.push(parse_bool(&rec[6])?);
            t.burn_in.push(parse_bool(&rec[7])?);
            for (j, col) in t.params.iter_mut().enumerate() {
                col.push(parse_f64(&rec[FIXED_COLUMNS.len() + j])?);
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = ChainTrace::new(vec!["a".into(), "k".into()], 1);
        for i in 0..5u64 {
            t.push(&TraceRecord {
                iteration: i,
                chain_id: ChainId::Tempered,
                theta: ParameterVector::new(vec![0.1 * i as f64 + 1.0 / 3.0], vec![i as i64]),
                tau: (i as f64 / 7.0).powi(3),
                log_lik: -1.0 / (i as f64 + 0.3),
                log_prior: if i == 2 { f64::NEG_INFINITY } else { 0.5 },
                accepted_theta: i % 2 == 0,
                accepted_tau: i % 3 == 0,
                exchanged: false,
                burn_in: i < 2,
            });
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ChainTrace::read_csv(&buf[..], 1).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.analysis_start(), 2);
    }

    #[test]
    fn chain_labels() {
        for id in [ChainId::Tempered, ChainId::Target, ChainId::Pt(12)] {
            assert_eq!(ChainId::parse(&id.label()), Some(id));
        }
    }
}
