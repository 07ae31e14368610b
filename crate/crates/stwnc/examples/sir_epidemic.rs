//! PT-STWNC on the SIR model for the bundled outbreak, with the tau-prior
//! evaluated either through fresh optimization or a prebuilt spline.
//!
//!     cargo run --release --example sir_epidemic -- [iterations] [--optimize] [--log-walk SD] [--ridge-jumps]

use std::sync::Arc;

use stwnc::data::outbreak;
use stwnc::diagnostics::{lag1_autocorr, mode_occupancy};
use stwnc::interpolate::{build_interpolator, InterpolatorSettings};
use stwnc::model::TauKernel;
use stwnc::models::SirModel;
use stwnc::profile::ProfilePrior;
use stwnc::tempering::{run_pt_stwnc, SamplerConfig};
use stwnc::trace::ChainId;

fn main() -> stwnc::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let iterations: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(35_000);
    let optimize = args.iter().any(|a| a == "--optimize");

    let walk = args.iter().position(|a| a == "--log-walk").and_then(|i| args.get(i + 1)).and_then(|s| s.parse().ok());

    let mut model = SirModel::new(outbreak())?;
    if args.iter().any(|a| a == "--ridge-jumps") {
        model = model.with_ridge_jumps()?;
    }
    if let Some(sd) = walk {
        model = model.with_tau_kernel(TauKernel::LogRandomWalk(sd));
    }
    let prior = if optimize {
        ProfilePrior::optimized()
    } else {
        let t = std::time::Instant::now();
        let interp = build_interpolator(&model, InterpolatorSettings::default())?;
        println!("manifold built in {:.1}s", t.elapsed().as_secs_f64());
        ProfilePrior::Interpolated(Arc::new(interp))
    };
    let config = SamplerConfig { iterations, burn_in: iterations / 10, ..SamplerConfig::default() };
    let run = run_pt_stwnc(&model, prior, &config, 1, 0)?;

    let target = run.chain(ChainId::Target).unwrap();
    let i0 = target.post_burn_in(target.param("i0").unwrap());
    for (k, share) in mode_occupancy(i0, |&v| v as i64) {
        println!("I(0) = {k}: {share:.3}");
    }
    let lp = target.log_posterior();
    println!("lag-1 autocorrelation of log posterior {:.3}", lag1_autocorr(target.post_burn_in(&lp))?);
    println!("lag-1 autocorrelation of I(0)          {:.3}", lag1_autocorr(i0)?);
    println!("lag-1 autocorrelation of alpha         {:.3}", lag1_autocorr(target.post_burn_in(target.param("alpha").unwrap()))?);
    let tempered = run.chain(ChainId::Tempered).unwrap();
    let tau = tempered.post_burn_in(&tempered.tau);
    let decades = mode_occupancy(tau, |&t| (-t.log10()).floor() as i64);
    println!("tempered tau by decade below 1: {decades:?}");
    println!("tau acceptance {}/{}", run.stats.tau_accepts, run.stats.tau_attempts);
    println!("theta acceptance {:?}, exchange {}/{}", run.stats.theta_acceptance, run.stats.exchange_accepts[0], run.stats.exchange_attempts[0]);
    println!("elapsed {:.1}s", run.stats.elapsed_seconds);
    Ok(())
}
