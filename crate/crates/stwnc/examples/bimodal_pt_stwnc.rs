//! PT-STWNC on the one-parameter bimodal model, compared with the exact
//! evidence.
//!
//!     cargo run --release --example bimodal_pt_stwnc -- [seed] [iterations] [replicates]

use stwnc::data::bimodal_dataset;
use stwnc::evidence::{combine_replicates, ti_stwnc, TiSeries};
use stwnc::models::BimodalModel;
use stwnc::profile::ProfilePrior;
use stwnc::tempering::{run_pt_stwnc, SamplerConfig};
use stwnc::trace::ChainId;

fn main() -> stwnc::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let iterations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let replicates: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let model = BimodalModel::one_parameter(bimodal_dataset(seed, 25, 1.5, 1.0))?;
    let config = SamplerConfig { iterations, burn_in: iterations * 3 / 10, ..SamplerConfig::default() };
    let run = run_pt_stwnc(&model, ProfilePrior::optimized(), &config, seed, 0)?;
    let exact = model.analytic_log_evidence()?;

    let target = run.chain(ChainId::Target).unwrap();
    let mu = target.post_burn_in(target.param("mu").unwrap());
    let positive = mu.iter().filter(|&&m| m > 0.0).count() as f64 / mu.len() as f64;

    let est = ti_stwnc(&TiSeries::from_pt_stwnc(&run)?)?;
    println!("exact log evidence   {exact:.4}");
    println!("ti_stwnc             {:.4}  (bias {:+.4})", est.log_ml, est.log_ml - exact);
    println!("P(mu > 0)            {positive:.3}");
    println!("exchange acceptance  {}/{}", run.stats.exchange_accepts[0], run.stats.exchange_attempts[0]);
    println!("tau acceptance       {}/{}", run.stats.tau_accepts, run.stats.tau_attempts);
    println!("optimizer calls      {}", run.stats.optimizer_calls);
    println!("elapsed              {:.2}s", run.stats.elapsed_seconds);
    if replicates > 1 {
        let mut ests = vec![est];
        for r in 1..replicates {
            let run = run_pt_stwnc(&model, ProfilePrior::optimized(), &config, seed, r)?;
            ests.push(ti_stwnc(&TiSeries::from_pt_stwnc(&run)?)?);
        }
        let all = combine_replicates(&ests)?;
        println!(
            "{replicates} replicates         {:.4} (bias {:+.4}, sd {:.4})",
            all.log_ml,
            all.log_ml - exact,
            all.replicate_sd.unwrap()
        );
    }
    Ok(())
}
