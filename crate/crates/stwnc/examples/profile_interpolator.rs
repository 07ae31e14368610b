//! Build the optimum-manifold spline for the SIR model and compare it with
//! fresh optimization at a few temperatures.

use std::time::Instant;

use stwnc::data::outbreak;
use stwnc::interpolate::{build_interpolator, InterpolatorSettings};
use stwnc::models::SirModel;
use stwnc::profile::{theta_max, OptimumCache};
use stwnc::tempered_log_posterior;

fn main() -> stwnc::Result<()> {
    let model = SirModel::new(outbreak())?;
    let t = Instant::now();
    let interp = build_interpolator(&model, InterpolatorSettings::default())?;
    println!("built on {} grid points in {:.1}s", interp.grid().count(), t.elapsed().as_secs_f64());
    println!("{:>10} {:>10} {:>10} {:>4} {:>10}", "tau", "alpha", "beta", "I0", "deficit");
    for tau in [1.0, 0.37, 0.05, 3e-3, 1e-5, 1e-9] {
        let fresh = theta_max(&model, tau, &mut OptimumCache::new())?;
        let th = interp.eval(tau);
        let deficit = fresh.tempered(tau) - tempered_log_posterior(&model, &th, tau);
        println!(
            "{tau:>10.1e} {:>10.5} {:>10.3e} {:>4} {deficit:>10.4}",
            th.continuous[0], th.continuous[1], th.discrete[0]
        );
    }
    Ok(())
}
