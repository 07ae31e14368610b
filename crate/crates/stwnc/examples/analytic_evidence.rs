//! Exact log evidence of the one-parameter bimodal model for a few seeded
//! datasets, next to a brute-force trapezoid over mu.
//!
//!     cargo run --example analytic_evidence -- [n]

use stwnc::data::bimodal_dataset;
use stwnc::math::log_sum_exp;
use stwnc::models::BimodalModel;
use stwnc::{ParameterVector, TargetModel};

fn main() -> stwnc::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(25);
    println!("seed  exact        grid");
    for seed in 1..=5 {
        let m = BimodalModel::one_parameter(bimodal_dataset(seed, n, 1.5, 1.0))?;
        let h = 1e-3;
        let terms: Vec<f64> = (-12_000..=12_000)
            .map(|i| {
                let th = ParameterVector::continuous(vec![i as f64 * h]);
                m.log_lik(&th) + m.log_prior(&th)
            })
            .collect();
        println!("{seed:>4}  {:.6}  {:.6}", m.analytic_log_evidence()?, log_sum_exp(&terms) + h.ln());
    }
    Ok(())
}
