//! The optional ridge-following I(0) move, which lets the target chain switch
//! between initial-infective counts without leaving the (alpha, beta) ridge.

use std::sync::Arc;

use stwnc::data::outbreak;
use stwnc::diagnostics::mode_occupancy;
use stwnc::interpolate::{build_interpolator, InterpolatorSettings};
use stwnc::models::SirModel;
use stwnc::profile::ProfilePrior;
use stwnc::tempering::{run_pt_stwnc, SamplerConfig};
use stwnc::trace::ChainId;

#[test]
fn ridge_jumps_visit_neighbouring_initial_infective_counts() {
    let model = SirModel::new(outbreak()).unwrap().with_ridge_jumps().unwrap();
    let interp = Arc::new(build_interpolator(&model, InterpolatorSettings::default()).unwrap());
    let cfg = SamplerConfig { iterations: 35_000, burn_in: 3_500, ..SamplerConfig::default() };
    let run = run_pt_stwnc(&model, ProfilePrior::Interpolated(interp), &cfg, 1, 0).unwrap();
    let tr = run.chain(ChainId::Target).unwrap();
    let occ = mode_occupancy(tr.post_burn_in(tr.param("i0").unwrap()), |&v| v as i64);
    eprintln!("{occ:?}");
    for k in 3..=6 {
        assert!(occ.get(&k).is_some_and(|v| *v > 0.0), "I(0) = {k} never visited: {occ:?}");
    }
}
