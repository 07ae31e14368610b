mod common;

use common::*;
use stwnc::data::bimodal_dataset;
use stwnc::models::BimodalModel;

fn pass(c: Check) {
    match c {
        Ok(m) => eprintln!("{m}"),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn nelder_mead_recovers_quadratic_maxima() {
    pass(nm_quadratics());
}

#[test]
fn ode_matches_closed_forms() {
    pass(ode_closed_forms());
}

#[test]
fn gibbs_and_metropolis_agree_on_mixture_moments() {
    pass(gibbs_vs_mh());
}

#[test]
fn symmetrized_kl_is_free_of_normalizing_constants() {
    pass(kl_identity());
}

#[test]
fn batch_means_calibrated_on_ar1() {
    pass(ar1_batch_means());
}

#[test]
fn quadrature_oracle_on_standard_normal() {
    let v = log_integral(|x| -0.5 * x * x, -40.0, 40.0, &[]);
    assert!((v - 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
}

#[test]
fn analytic_evidence_matches_quadrature() {
    for seed in [1, 2, 99] {
        let m = BimodalModel::one_parameter(bimodal_dataset(seed, 25, 1.5, 1.0)).unwrap();
        let exact = m.analytic_log_evidence().unwrap();
        assert!((exact - bimodal_evidence_by_quadrature(&m)).abs() < 1e-9, "seed {seed}");
    }
}

#[test]
fn analytic_evidence_single_observation() {
    // y ~ N(|mu|, 1), mu ~ N(0, 1): folding mu gives 2 N(y; 0, 2) P(mu > 0 | y),
    // and mu | y ~ N(y / 2, 1 / 2)
    let y = 0.7f64;
    let m = BimodalModel::one_parameter(vec![y]).unwrap();
    let phi = 0.5 * statrs::function::erf::erfc(-y / 2.0);
    let exact = 2f64.ln() - 0.5 * (2.0 * std::f64::consts::PI * 2.0).ln() - y * y / 4.0 + phi.ln();
    assert!((m.analytic_log_evidence().unwrap() - exact).abs() < 1e-12);
}
