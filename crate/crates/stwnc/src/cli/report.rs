//! Run-directory layout: summary and evidence documents, traces, plot data,
//! and their validation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::evidence::{
    combine_replicates, log_bayes_factor, pt_chain_samples, ti_pt_bias_corrected, ti_pt_trapezoid, ti_stwnc,
    EvidenceEstimate, Method, TiSeries,
};
use crate::math::mean;
use crate::tempering::{Algorithm, RunStats, TraceSet};
use crate::trace::{ChainId, ChainTrace};

pub const SUMMARY_SCHEMA: &str = "stwnc.summary/v1";
pub const EVIDENCE_SCHEMA: &str = "stwnc.evidence/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub chain: String,
    pub file: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateSummary {
    pub replicate: usize,
    pub stream: u64,
    pub algorithm: Algorithm,
    pub stats: RunStats,
    pub traces: Vec<TraceFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSummary {
    pub model: String,
    pub param_names: Vec<String>,
    pub n_continuous: usize,
    pub analytic_log_evidence: Option<f64>,
    /// Potential scale reduction of the target log-posterior.
    pub psrf_log_posterior: Option<f64>,
    /// "replicates" when computed across runs, "split-chain" for a single run.
    pub psrf_basis: String,
    pub replicates: Vec<ReplicateSummary>,
}

/// Everything in here varies between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub created_unix_seconds: u64,
    pub elapsed_seconds: f64,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub schema: String,
    pub command: String,
    pub config: RunConfig,
    pub models: Vec<ModelSummary>,
    pub metadata: Metadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateEvidence {
    pub replicate: usize,
    pub estimates: Vec<EvidenceEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEvidence {
    pub model: String,
    pub analytic: Option<f64>,
    pub replicates: Vec<ReplicateEvidence>,
    /// Mean and SD over replicates, per method.
    pub combined: Vec<EvidenceEstimate>,
    /// One estimate from all replicates' samples together.
    pub pooled: Vec<EvidenceEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesFactor {
    pub method: Method,
    pub numerator: String,
    pub denominator: String,
    pub log_bf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceReport {
    pub schema: String,
    pub models: Vec<ModelEvidence>,
    pub bayes_factors: Vec<BayesFactor>,
}

/// A model's replicate runs, in replicate order.
pub struct ModelRuns {
    pub model: String,
    pub analytic: Option<f64>,
    pub runs: Vec<TraceSet>,
}

fn replicate_estimates(run: &TraceSet) -> Result<Vec<EvidenceEstimate>> {
    match &run.algorithm {
        Algorithm::PtStwnc => Ok(vec![ti_stwnc(&TiSeries::from_pt_stwnc(run)?)?]),
        Algorithm::StandardPt { schedule } if schedule.len() < 2 => Ok(Vec::new()),
        Algorithm::StandardPt { .. } => {
            let (schedule, samples) = pt_chain_samples(run)?;
            let means: Vec<f64> = samples.iter().map(|s| mean(s)).collect();
            Ok(vec![ti_pt_trapezoid(&means, &schedule)?, ti_pt_bias_corrected(&samples, &schedule)?])
        }
    }
}

fn pooled_estimates(runs: &[TraceSet]) -> Result<Vec<EvidenceEstimate>> {
    let Some(first) = runs.first() else { return Ok(Vec::new()) };
    match &first.algorithm {
        Algorithm::PtStwnc => {
            let series = runs.iter().map(TiSeries::from_pt_stwnc).collect::<Result<Vec<_>>>()?;
            Ok(vec![ti_stwnc(&TiSeries::pooled(&series))?])
        }
        Algorithm::StandardPt { schedule } if schedule.len() < 2 => Ok(Vec::new()),
        Algorithm::StandardPt { schedule } => {
            let mut pooled = vec![Vec::new(); schedule.len()];
            for run in runs {
                let (s, samples) = pt_chain_samples(run)?;
                if &s != schedule {
                    return Err(Error::Schema("replicates use different temperature schedules".into()));
                }
                for (p, c) in pooled.iter_mut().zip(samples) {
                    p.extend(c);
                }
            }
            let means: Vec<f64> = pooled.iter().map(|s| mean(s)).collect();
            Ok(vec![ti_pt_trapezoid(&means, schedule)?, ti_pt_bias_corrected(&pooled, schedule)?])
        }
    }
}

pub fn evidence_report(models: &[ModelRuns]) -> Result<EvidenceReport> {
    let mut out = Vec::with_capacity(models.len());
    for m in models {
        if m.runs.iter().any(|r| r.model != m.model) {
            return Err(Error::Schema(format!("traces from another model mixed into `{}`", m.model)));
        }
        let mut replicates = Vec::new();
        let mut by_method: BTreeMap<&'static str, Vec<EvidenceEstimate>> = BTreeMap::new();
        for (i, run) in m.runs.iter().enumerate() {
            let estimates = replicate_estimates(run)?;
            for e in &estimates {
                by_method.entry(e.method.label()).or_default().push(e.clone());
            }
            replicates.push(ReplicateEvidence { replicate: i, estimates });
        }
        let combined = by_method.values().map(|v| combine_replicates(v)).collect::<Result<Vec<_>>>()?;
        out.push(ModelEvidence {
            model: m.model.clone(),
            analytic: m.analytic,
            replicates,
            combined,
            pooled: pooled_estimates(&m.runs)?,
        });
    }
    let mut bayes_factors = Vec::new();
    for i in 0..out.len() {
        for j in 0..i {
            for e in &out[i].combined {
                if let Some(d) = out[j].combined.iter().find(|d| d.method == e.method) {
                    bayes_factors.push(BayesFactor {
                        method: e.method,
                        numerator: out[i].model.clone(),
                        denominator: out[j].model.clone(),
                        log_bf: log_bayes_factor(e.log_ml, d.log_ml)?,
                    });
                }
            }
        }
    }
    Ok(EvidenceReport { schema: EVIDENCE_SCHEMA.into(), models: out, bayes_factors })
}

pub fn trace_path(model: &str, replicate: usize, chain: ChainId) -> String {
    format!("traces/{model}-r{replicate:03}-{}.csv", chain.label())
}

pub fn write_traces(dir: &Path, model: &str, replicate: usize, run: &TraceSet) -> Result<Vec<TraceFile>> {
    let mut files = Vec::with_capacity(run.chains.len());
    for (id, trace) in &run.chains {
        let rel = trace_path(model, replicate, *id);
        let f = File::create(dir.join(&rel))?;
        trace.write_csv(BufWriter::new(f))?;
        files.push(TraceFile { chain: id.label(), file: rel, rows: trace.len() });
    }
    Ok(files)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Tidy CSV writer: one observation per row.
pub struct Tidy {
    writer: csv::Writer<BufWriter<File>>,
}

impl Tidy {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reload every replicate of every model in a run directory.
pub fn load_runs(dir: &Path) -> Result<(Summary, Vec<ModelRuns>)> {
    let summary: Summary = read_json(&dir.join("summary.json"))?;
    if summary.schema != SUMMARY_SCHEMA {
        return Err(Error::Schema(format!("unsupported summary schema `{}`", summary.schema)));
    }
    let mut models = Vec::with_capacity(summary.models.len());
    for m in &summary.models {
        let mut runs = Vec::with_capacity(m.replicates.len());
        for r in &m.replicates {
            let mut chains = Vec::with_capacity(r.traces.len());
            for tf in &r.traces {
                let id = ChainId::parse(&tf.chain).ok_or_else(|| Error::Schema(format!("unknown chain `{}`", tf.chain)))?;
                let path = dir.join(&tf.file);
                let f = File::open(&path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
                let trace = ChainTrace::read_csv(BufReader::new(f), m.n_continuous)?;
                if trace.len() != tf.rows || trace.param_names != m.param_names {
                    return Err(Error::Schema(format!("{} does not match the summary", path.display())));
                }
                chains.push((id, trace));
            }
            runs.push(TraceSet { model: m.model.clone(), algorithm: r.algorithm.clone(), chains, stats: r.stats.clone() });
        }
        models.push(ModelRuns { model: m.model.clone(), analytic: m.analytic_log_evidence, runs });
    }
    Ok((summary, models))
}

fn plot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let p = dir.join("plotdata");
    if !p.is_dir() {
        return Ok(Vec::new());
    }
    let mut v: Vec<PathBuf> = std::fs::read_dir(p)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    v.sort();
    Ok(v)
}

/// Check every output file of a run directory against its schema.
pub fn validate_run_dir(dir: &Path) -> Result<()> {
    let (summary, models) = load_runs(dir)?;
    for (m, runs) in summary.models.iter().zip(&models) {
        for (r, set) in m.replicates.iter().zip(&runs.runs) {
            if set.chains.iter().any(|(_, t)| t.len() != r.stats.iterations) {
                return Err(Error::Schema(format!("{} replicate {}: trace length differs from iterations", m.model, r.replicate)));
            }
        }
    }
    let report: EvidenceReport = read_json(&dir.join("evidence.json"))?;
    if report.schema != EVIDENCE_SCHEMA {
        return Err(Error::Schema(format!("unsupported evidence schema `{}`", report.schema)));
    }
    let names: Vec<&str> = summary.models.iter().map(|m| m.model.as_str()).collect();
    if report.models.iter().map(|m| m.model.as_str()).ne(names.iter().copied()) {
        return Err(Error::Schema("evidence.json and summary.json list different models".into()));
    }
    for path in plot_files(dir)? {
        let mut rd = csv::Reader::from_path(&path)?;
        if rd.headers()?.is_empty() {
            return Err(Error::Schema(format!("{} has no header", path.display())));
        }
        for rec in rd.records() {
            rec.map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}
