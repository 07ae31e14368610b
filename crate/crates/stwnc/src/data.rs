//! Bundled datasets and CSV loaders.

use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::models::bimodal::BimodalModel;
use crate::models::sir::SirData;
use crate::tempering::stream_rng;

const GALAXIES_CSV: &str = include_str!("../data/galaxies.csv");
const OUTBREAK_CSV: &str = include_str!("../data/outbreak.csv");

/// Population size of the bundled outbreak series.
pub const OUTBREAK_POPULATION: u64 = 261;

/// Read a single-column CSV of numbers (with a header row).
pub fn read_values_csv<R: std::io::Read>(r: R) -> Result<Vec<f64>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = rec.get(0).ok_or_else(|| Error::Schema("empty row".into()))?;
        out.push(field.trim().parse().map_err(|_| Error::Schema(format!("not a number: `{field}`")))?);
    }
    Ok(out)
}

/// Read a two-column `time,count` CSV.
pub fn read_time_count_csv<R: std::io::Read>(r: R) -> Result<(Vec<f64>, Vec<u64>)> {
    let mut rd = csv::Reader::from_reader(r);
    let (mut t, mut c) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Schema("expected time,count rows".into()));
        }
        t.push(rec[0].trim().parse().map_err(|_| Error::Schema(format!("bad time `{}`", &rec[0])))?);
        c.push(rec[1].trim().parse().map_err(|_| Error::Schema(format!("bad count `{}`", &rec[1])))?);
    }
    Ok((t, c))
}

/// The 82 galaxy velocities in units of 1000 km/s.
pub fn galaxy_velocities() -> Vec<f64> {
    read_values_csv(GALAXIES_CSV.as_bytes()).expect("bundled galaxy data parses")
}

/// Bundled daily cumulative-removal series with terminal infected counts 1, 0.
pub fn outbreak() -> SirData {
    let (t, c) = read_time_count_csv(OUTBREAK_CSV.as_bytes()).expect("bundled outbreak data parses");
    SirData::with_terminal_constraints(OUTBREAK_POPULATION, t, c).expect("bundled outbreak data is valid")
}

pub fn load_values(path: &Path) -> Result<Vec<f64>> {
    let f = std::fs::File::open(path)?;
    let v = read_values_csv(f)?;
    if v.is_empty() {
        return Err(invalid(format!("{} contains no values", path.display())));
    }
    Ok(v)
}

pub fn load_outbreak(path: &Path, population: u64) -> Result<SirData> {
    let f = std::fs::File::open(path)?;
    let (t, c) = read_time_count_csv(f)?;
    SirData::with_terminal_constraints(population, t, c)
}

/// Seeded bimodal dataset: `n` draws from N(mu, sigma2).
pub fn bimodal_dataset(seed: u64, n: usize, mu: f64, sigma2: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, u64::MAX);
    BimodalModel::simulate_data(n, mu, sigma2, &mut rng)
}
