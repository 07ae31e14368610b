//! Galaxy velocities: evidence for the five preset mixtures from PT-STWNC
//! and from standard parallel tempering.
//!
//!     cargo run --release --example galaxy_model_selection -- [iterations] [seed]

use stwnc::data::galaxy_velocities;
use stwnc::evidence::{pt_estimates, ti_stwnc, TiSeries};
use stwnc::models::gmm::GALAXY_PRESETS;
use stwnc::models::GaussianMixtureModel;
use stwnc::profile::ProfilePrior;
use stwnc::tempering::{geometric_schedule, run_pt_stwnc, run_standard_pt, SamplerConfig};

fn main() -> stwnc::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let config = SamplerConfig { iterations, burn_in: iterations / 10, ..SamplerConfig::default() };
    let schedule = geometric_schedule(30)?;

    println!("{:<28} {:>10} {:>10} {:>10}", "model", "ti_stwnc", "ti_pt_nb", "ti_pt_b");
    for (k, equal) in GALAXY_PRESETS {
        let model = GaussianMixtureModel::new(galaxy_velocities(), k, equal)?;
        let t0 = std::time::Instant::now();
        let run = run_pt_stwnc(&model, ProfilePrior::optimized(), &config, seed, 0)?;
        let stwnc = ti_stwnc(&TiSeries::from_pt_stwnc(&run)?)?;
        let t1 = t0.elapsed().as_secs_f64();
        let pt = run_standard_pt(&model, &schedule, &config, seed, 1)?;
        let (nb, b) = pt_estimates(&pt)?;
        let label = format!("{k} components {}", if equal { "equal" } else { "unequal" });
        println!(
            "{label:<28} {:>10.2} {:>10.2} {:>10.2}   ({t1:.1}s + {:.1}s)",
            stwnc.log_ml,
            nb.log_ml,
            b.log_ml,
            pt.stats.elapsed_seconds
        );
    }
    Ok(())
}
