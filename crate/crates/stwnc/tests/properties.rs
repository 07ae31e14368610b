use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stwnc::data::{bimodal_dataset, galaxy_velocities, outbreak};
use stwnc::diagnostics::{mc_error, psrf};
use stwnc::evidence::{log_bayes_factor, ti_pt_trapezoid, ti_stwnc, TiSeries};
use stwnc::model::{combine, tempered_log_posterior, TargetModel, TauKernel};
use stwnc::models::{BimodalModel, GaussianMixtureModel, SirModel};
use stwnc::params::{ParameterVector, Transform};
use stwnc::profile::{log_tau_prior_unnormalized, theta_max, OptimumCache, ProfilePrior};
use stwnc::tempering::{exchange_log_ratio, pt_swap_log_ratio, tau_log_ratio};
use stwnc::trace::{ChainId, ChainTrace, TraceRecord};

fn bimodal_1p() -> &'static BimodalModel {
    static M: OnceLock<BimodalModel> = OnceLock::new();
    M.get_or_init(|| BimodalModel::one_parameter(bimodal_dataset(1, 25, 1.5, 1.0)).unwrap())
}

fn bimodal_2p() -> &'static BimodalModel {
    static M: OnceLock<BimodalModel> = OnceLock::new();
    M.get_or_init(|| BimodalModel::two_parameter(bimodal_dataset(1, 25, 1.5, 1.0)).unwrap())
}

fn galaxy3() -> &'static GaussianMixtureModel {
    static M: OnceLock<GaussianMixtureModel> = OnceLock::new();
    M.get_or_init(|| GaussianMixtureModel::new(galaxy_velocities(), 3, false).unwrap())
}

fn sir() -> &'static SirModel {
    static M: OnceLock<SirModel> = OnceLock::new();
    M.get_or_init(|| SirModel::new(outbreak()).unwrap())
}

fn tau() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64, (-12.0..0.0f64).prop_map(|e| 10f64.powf(e))]
}

fn std_normal_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_identity_holds_by_construction(t in tau()) {
        let models: [&dyn TargetModel; 3] = [bimodal_1p(), bimodal_2p(), galaxy3()];
        for m in models {
            let mut cache = OptimumCache::new();
            let lp = log_tau_prior_unnormalized(m, t, &mut cache).unwrap();
            let e = theta_max(m, t, &mut cache).unwrap();
            prop_assert_eq!(lp + tempered_log_posterior(m, &e.theta, t), 0.0);
        }
    }

    #[test]
    fn bimodal_optimum_dominates_random_points(t in tau(), mu in -4.0..4.0f64, s2 in 0.05..6.0f64) {
        let mut cache = OptimumCache::new();
        let best = theta_max(bimodal_2p(), t, &mut cache).unwrap().tempered(t);
        let other = tempered_log_posterior(bimodal_2p(), &ParameterVector::continuous(vec![mu, s2]), t);
        prop_assert!(other <= best + 1e-9, "{} > {}", other, best);
        let best1 = theta_max(bimodal_1p(), t, &mut OptimumCache::new()).unwrap().tempered(t);
        let other1 = tempered_log_posterior(bimodal_1p(), &ParameterVector::continuous(vec![mu]), t);
        prop_assert!(other1 <= best1 + 1e-12);
    }

    #[test]
    fn tau_ratio_is_antisymmetric(
        ll in -1e4..0.0f64, a in tau(), b in tau(), la in -1e3..1e3f64, lb in -1e3..1e3f64, h in -5.0..5.0f64,
    ) {
        let fwd = tau_log_ratio(ll, a, b, la, lb, h);
        let back = tau_log_ratio(ll, b, a, lb, la, -h);
        prop_assert!((fwd + back).abs() <= 1e-10 * (1.0 + ll.abs()));
    }

    #[test]
    fn tau_ratio_matches_tempered_posterior_difference(t in tau(), u in tau(), mu in -3.0..3.0f64) {
        let m = bimodal_1p();
        let th = ParameterVector::continuous(vec![mu]);
        let mut prior = ProfilePrior::optimized();
        let (pa, pb) = (prior.log_density(m, t).unwrap(), prior.log_density(m, u).unwrap());
        let r = tau_log_ratio(m.log_lik(&th), t, u, pa, pb, 0.0);
        let direct = (tempered_log_posterior(m, &th, u) + pb) - (tempered_log_posterior(m, &th, t) + pa);
        prop_assert!((r - direct).abs() < 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn exchange_ratio_closed_form(t in tau(), l1 in -500.0..0.0f64, l2 in -500.0..0.0f64) {
        let r = exchange_log_ratio(t, l1, l2);
        prop_assert!((r - (t - 1.0) * (l2 - l1)).abs() < 1e-9);
        // standard PT swap ratio is symmetric in the pair and reduces to the two-chain form
        prop_assert_eq!(pt_swap_log_ratio(t, l1, 1.0, l2), pt_swap_log_ratio(1.0, l2, t, l1));
        prop_assert!((pt_swap_log_ratio(t, l1, 1.0, l2) - r).abs() < 1e-9);
    }

    #[test]
    fn combine_at_zero_ignores_likelihood(lp in -50.0..50.0f64) {
        prop_assert_eq!(combine(0.0, f64::NEG_INFINITY, lp), lp);
        prop_assert_eq!(combine(0.0, -3.0, lp), lp);
    }

    #[test]
    fn cached_and_fresh_optima_agree(ts in prop::collection::vec(tau(), 1..12)) {
        let m = bimodal_2p();
        let mut warm = ProfilePrior::optimized();
        for &t in &ts {
            let a = warm.log_density(m, t).unwrap();
            let again = warm.log_density(m, t).unwrap();
            prop_assert_eq!(a, again);
            let fresh = ProfilePrior::optimized().log_density(m, t).unwrap();
            prop_assert!((a - fresh).abs() < 1e-6 * (1.0 + fresh.abs()), "tau {}: {} vs {}", t, a, fresh);
        }
    }

    #[test]
    fn mixture_density_is_permutation_invariant(
        mu in prop::collection::vec(5.0..35.0f64, 3),
        s2 in prop::collection::vec(0.5..20.0f64, 3),
        w in prop::collection::vec(0.05..1.0f64, 3),
        perm in Just(vec![0usize, 1, 2]).prop_shuffle(),
    ) {
        let m = galaxy3();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let a = m.pack(&mu, &s2, &p);
        let pick = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let b = m.pack(&pick(&mu), &pick(&s2), &pick(&p));
        prop_assert!((m.log_lik(&a) - m.log_lik(&b)).abs() < 1e-9);
        prop_assert!((m.log_prior(&a) - m.log_prior(&b)).abs() < 1e-9);
    }

    #[test]
    fn sir_trajectory_conserves_population(alpha in 0.01..0.5f64, r0 in 0.2..4.0f64, i0 in 1i64..30) {
        let m = sir();
        let n = m.data().population as f64;
        let traj = m.trajectory(alpha, r0 * alpha / n, i0).unwrap();
        for s in &traj {
            prop_assert!((s.iter().sum::<f64>() - n).abs() < 1e-6);
            prop_assert!(s.iter().all(|x| *x > -1e-6));
        }
        // removed never decreases
        prop_assert!(traj.windows(2).all(|w| w[1][2] >= w[0][2] - 1e-9));
    }

    #[test]
    fn psrf_is_affine_invariant(
        chains in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 20), 2..5),
        scale in prop_oneof![0.01..100.0f64, -100.0..-0.01f64],
        shift in -1e3..1e3f64,
    ) {
        let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
        let moved: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|x| scale * x + shift).collect()).collect();
        let moved_refs: Vec<&[f64]> = moved.iter().map(Vec::as_slice).collect();
        let (a, b) = (psrf(&refs).unwrap(), psrf(&moved_refs).unwrap());
        prop_assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn mc_error_ignores_shifts(xs in prop::collection::vec(-5.0..5.0f64, 4..400), c in -100.0..100.0f64) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let (a, b) = (mc_error(&xs).unwrap(), mc_error(&shifted).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + c.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn tau_kernels_have_correct_hastings_terms(from in 1e-12..1.0f64, to in 1e-12..1.0f64, sd in 0.1..3.0f64) {
        // independence truncated normal: q(x) proportional to phi(x) on [0, 1]
        let h = TauKernel::TruncatedStdNormal.log_hastings(from, to);
        prop_assert!((h - (std_normal_ln_pdf(from) - std_normal_ln_pdf(to))).abs() < 1e-12);
        // reflected log-scale walk, density written out in tau space
        let q = |x: f64, given: f64| {
            let (lx, lg) = (x.ln(), given.ln());
            let fold = (std_normal_ln_pdf((lx - lg) / sd).exp() + std_normal_ln_pdf((-lx - lg) / sd).exp()) / (sd * x);
            fold.ln()
        };
        let k = TauKernel::LogRandomWalk(sd);
        let expected = q(from, to) - q(to, from);
        prop_assert!((k.log_hastings(from, to) - expected).abs() < 1e-8 * (1.0 + expected.abs()));
        prop_assert_eq!(TauKernel::UniformIndependence.log_hastings(from, to), 0.0);
        prop_assert!((k.log_hastings(from, to) + k.log_hastings(to, from)).abs() < 1e-12);
    }

    #[test]
    fn tau_kernels_stay_in_unit_interval(seed in any::<u64>(), t in tau(), sd in 0.01..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in [TauKernel::UniformIndependence, TauKernel::TruncatedStdNormal, TauKernel::LogRandomWalk(sd)] {
            let p = k.propose(t, &mut rng);
            prop_assert!((0.0..=1.0).contains(&p.tau), "{:?} proposed {}", k, p.tau);
            prop_assert!((p.log_hastings - k.log_hastings(t, p.tau)).abs() < 1e-12 || t == 0.0);
        }
    }

    #[test]
    fn ti_stwnc_ignores_input_order(
        pairs in prop::collection::vec((0.0..=1.0f64, -100.0..0.0f64), 2..60),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = ti_stwnc(&TiSeries::new(pairs).unwrap()).unwrap().log_ml;
        let b = ti_stwnc(&TiSeries::new(shuffled).unwrap()).unwrap().log_ml;
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn ti_estimators_are_translation_equivariant(
        pairs in prop::collection::vec((0.0..=1.0f64, -100.0..0.0f64), 2..60),
        means in prop::collection::vec(-100.0..0.0f64, 2..20),
        c in -50.0..50.0f64,
    ) {
        let series = TiSeries::new(pairs.clone()).unwrap();
        let (lo, hi) = (series.pairs()[0].0, series.pairs()[series.len() - 1].0);
        let moved = TiSeries::new(pairs.iter().map(|(t, l)| (*t, l + c)).collect()).unwrap();
        let d = ti_stwnc(&moved).unwrap().log_ml - ti_stwnc(&series).unwrap().log_ml;
        prop_assert!((d - c * (hi - lo)).abs() < 1e-8 * (1.0 + c.abs()));

        let t = means.len();
        let schedule: Vec<f64> = (1..=t).map(|i| (i as f64 / t as f64).powi(5)).collect();
        let shifted: Vec<f64> = means.iter().map(|m| m + c).collect();
        let d = ti_pt_trapezoid(&shifted, &schedule).unwrap().log_ml - ti_pt_trapezoid(&means, &schedule).unwrap().log_ml;
        // the core trapezoid gains c (tau_T - tau_1) and the extension panel c tau_1
        prop_assert!((d - c).abs() < 1e-8 * (1.0 + c.abs()));
    }

    #[test]
    fn ti_stwnc_matches_hand_riemann_sum(
        taus in prop::collection::vec(0.0..=1.0f64, 2..40), a in -50.0..50.0f64, b in -50.0..50.0f64,
    ) {
        let pairs: Vec<(f64, f64)> = taus.iter().map(|t| (*t, a * t + b)).collect();
        let est = ti_stwnc(&TiSeries::new(pairs).unwrap()).unwrap().log_ml;
        let mut s = taus.clone();
        s.sort_by(f64::total_cmp);
        let hand: f64 = s.windows(2).map(|w| (w[1] - w[0]) * (a * w[1] + b)).sum();
        prop_assert!((est - hand).abs() < 1e-9 * (1.0 + hand.abs()));
    }

    #[test]
    fn bayes_factor_is_antisymmetric(x in -1e4..1e4f64, y in -1e4..1e4f64) {
        prop_assert_eq!(log_bayes_factor(x, y).unwrap(), -log_bayes_factor(y, x).unwrap());
    }

    #[test]
    fn log_transform_round_trips(x in 1e-300..1e300f64) {
        let u = Transform::Log.forward(x);
        // exp amplifies the rounding of u by |u|
        prop_assert!((Transform::Log.inverse(u) - x).abs() <= 4.0 * f64::EPSILON * (1.0 + u.abs()) * x);
    }

    #[test]
    fn traces_round_trip_through_csv(
        rows in prop::collection::vec((0.0..=1.0f64, -1e3..0.0f64, -10.0..10.0f64, 0.1..5.0f64, 0i64..9, any::<bool>()), 1..30),
    ) {
        let mut tr = ChainTrace::new(vec!["a".into(), "b".into(), "k".into()], 2);
        for (i, (t, ll, a, b, k, acc)) in rows.iter().enumerate() {
            tr.push(&TraceRecord {
                iteration: i as u64,
                chain_id: ChainId::Tempered,
                theta: ParameterVector::new(vec![*a, *b], vec![*k]),
                tau: *t,
                log_lik: *ll,
                log_prior: -a * a,
                accepted_theta: *acc,
                accepted_tau: !acc,
                exchanged: false,
                burn_in: i < 3,
            });
        }
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = ChainTrace::read_csv(buf.as_slice(), 2).unwrap();
        prop_assert_eq!(back, tr);
    }
}

#[test]
fn truncated_normal_kernel_moments() {
    // E|Z| restricted to [0, 1] is (phi(0) - phi(1)) / (Phi(1) - 1/2)
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 200_000;
    let draws: Vec<f64> = (0..n).map(|_| TauKernel::TruncatedStdNormal.propose(0.5, &mut rng).tau).collect();
    let phi = |x: f64| std_normal_ln_pdf(x).exp();
    let big_phi_1 = 0.5 * statrs::function::erf::erfc(-1.0 / 2f64.sqrt());
    let exact = (phi(0.0) - phi(1.0)) / (big_phi_1 - 0.5);
    let m = stwnc::math::mean(&draws);
    let se = (stwnc::math::variance(&draws) / n as f64).sqrt();
    assert!((m - exact).abs() < 4.0 * se, "{m} vs {exact}");
}

#[test]
fn sir_ridge_identity_on_a_coarse_grid() {
    let m = sir();
    let mut cache = OptimumCache::new();
    for t in [1.0, 0.3, 1e-2, 1e-5, 0.0] {
        let lp = log_tau_prior_unnormalized(m, t, &mut cache).unwrap();
        let e = theta_max(m, t, &mut cache).unwrap();
        assert_eq!(lp + tempered_log_posterior(m, &e.theta, t), 0.0);
    }
}
