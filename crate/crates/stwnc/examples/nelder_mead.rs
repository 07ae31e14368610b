//! Nelder-Mead on the Rosenbrock valley and on a tempered bimodal posterior.

use stwnc::data::bimodal_dataset;
use stwnc::models::BimodalModel;
use stwnc::optimize::{nelder_mead, OptimizerSettings};
use stwnc::{tempered_log_posterior, ParameterVector};

fn main() -> stwnc::Result<()> {
    let settings = OptimizerSettings { tolerance: 1e-12, max_iterations: 10_000, simplex_scale: 0.1 };
    let rosen = |x: &[f64]| -(100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2));
    let r = nelder_mead(rosen, &[-1.2, 1.0], &settings)?;
    println!("rosenbrock: x = ({:.6}, {:.6}) after {} iterations", r.x[0], r.x[1], r.iterations);

    let m = BimodalModel::two_parameter(bimodal_dataset(1, 25, 1.5, 1.0))?;
    for tau in [1.0, 0.1, 1e-3] {
        // optimize over (mu, log sigma2)
        let f = |x: &[f64]| tempered_log_posterior(&m, &ParameterVector::continuous(vec![x[0], x[1].exp()]), tau);
        let r = nelder_mead(f, &[0.5, 0.0], &settings)?;
        let (exact, _) = m.conditional_maximizers(tau, &ParameterVector::continuous(vec![0.5, 1.0]))?;
        println!(
            "tau {tau:>6}: simplex mu {:.5} sigma2 {:.5}   conditional ascent mu {:.5} sigma2 {:.5}",
            r.x[0],
            r.x[1].exp(),
            exact.continuous[0],
            exact.continuous[1]
        );
    }
    Ok(())
}
