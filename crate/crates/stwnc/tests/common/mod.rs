//! Independent oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use stwnc::diagnostics::mc_error;
use stwnc::evidence::panel_kl_terms;
use stwnc::math::{mean, variance};
use stwnc::model::TargetModel;
use stwnc::models::GaussianMixtureModel;
use stwnc::ode::{integrate, OdeProblem};
use stwnc::optimize::{nelder_mead, OptimizerSettings};
use stwnc::params::ParameterVector;
use stwnc::tempering::{mutate, stwnc_theta_step, ChainState, ProposalTuning};
use stwnc::InverseTemperature;

pub type Check = Result<String, String>;

pub fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// log of the integral of exp(log_f) over [a, b], split at `breaks`.
pub fn log_integral<F: Fn(f64) -> f64>(log_f: F, a: f64, b: f64, breaks: &[f64]) -> f64 {
    // shift by the maximum on a coarse grid so the integrand is O(1)
    let shift = (0..=4000).map(|i| log_f(a + (b - a) * i as f64 / 4000.0)).fold(f64::NEG_INFINITY, f64::max);
    let g = |x: f64| (log_f(x) - shift).exp();
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
    pts.push(b);
    // start from many panels so the adaptive rule cannot step over a narrow peak
    let panels = 256;
    let total: f64 = pts
        .windows(2)
        .flat_map(|w| {
            let h = (w[1] - w[0]) / panels as f64;
            (0..panels).map(move |i| (w[0] + h * i as f64, w[0] + h * (i + 1) as f64))
        })
        .map(|(lo, hi)| adaptive_simpson(&g, lo, hi, 1e-16))
        .sum();
    shift + total.ln()
}

/// Log evidence of the one-parameter bimodal model by quadrature over mu.
pub fn bimodal_evidence_by_quadrature(model: &dyn TargetModel) -> f64 {
    let f = |mu: f64| {
        let th = ParameterVector::continuous(vec![mu]);
        model.log_lik(&th) + model.log_prior(&th)
    };
    // the integrand has a kink at 0 and negligible mass beyond |mu| = 15
    log_integral(f, -15.0, 15.0, &[0.0])
}

pub fn nm_quadratics() -> Check {
    let settings = OptimizerSettings { tolerance: 1e-14, max_iterations: 20_000, simplex_scale: 0.5 };
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for d in 1..=5 {
        for _ in 0..4 {
            // f(x) = c - (x - m)' A (x - m) with A = B'B + I
            let b: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let a: Vec<Vec<f64>> = (0..d)
                .map(|i| (0..d).map(|j| (0..d).map(|k| b[k][i] * b[k][j]).sum::<f64>() + f64::from(u8::from(i == j))).collect())
                .collect();
            let m: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c = rng.random_range(-5.0..5.0);
            let f = |x: &[f64]| {
                let r: Vec<f64> = x.iter().zip(&m).map(|(x, m)| x - m).collect();
                c - (0..d).map(|i| (0..d).map(|j| r[i] * a[i][j] * r[j]).sum::<f64>()).sum::<f64>()
            };
            let res = nelder_mead(f, &vec![0.0; d], &settings).map_err(|e| e.to_string())?;
            let err = res.x.iter().zip(&m).map(|(x, m)| (x - m).abs()).fold(0.0, f64::max);
            ensure(res.converged, || format!("d={d}: not converged"))?;
            ensure(err < 1e-4, || format!("d={d}: argmax error {err:e}"))?;
            ensure((res.value - c).abs() < 1e-8, || format!("d={d}: value {} vs {c}", res.value))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("20 quadratics up to 5-d, worst argmax error {worst:.1e}"))
}

fn sir_rhs(alpha: f64, beta: f64) -> impl Fn(f64, &[f64], &mut [f64]) {
    move |_t, y, d| {
        let inf = beta * y[0] * y[1];
        d[0] = -inf;
        d[1] = inf - alpha * y[1];
        d[2] = alpha * y[1];
    }
}

pub fn ode_closed_forms() -> Check {
    let times: Vec<f64> = (0..=60).map(f64::from).collect();
    // no transmission: I decays exponentially
    let (alpha, i0) = (0.15, 7.0);
    let p = OdeProblem::new(sir_rhs(alpha, 0.0), vec![250.0, i0, 0.0], times.clone()).with_tolerances(1e-9, 1e-12);
    let out = integrate(&p).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (t, y) in times.iter().zip(&out) {
        let exact = i0 * (-alpha * t).exp();
        worst = worst.max(((y[1] - exact) / exact).abs());
    }
    ensure(worst < 1e-8, || format!("SIR decay relative error {worst:e}"))?;
    ensure(out[0] == vec![250.0, i0, 0.0], || "output at t=0 is not the initial state".into())?;

    // logistic growth x' = r x (1 - x / k)
    let (r, k, x0) = (0.4, 10.0, 0.1);
    let p = OdeProblem::new(move |_t: f64, y: &[f64], d: &mut [f64]| d[0] = r * y[0] * (1.0 - y[0] / k), vec![x0], times.clone())
        .with_tolerances(1e-10, 1e-12);
    let out = integrate(&p).map_err(|e| e.to_string())?;
    let mut worst_logistic = 0.0f64;
    for (t, y) in times.iter().zip(&out) {
        let exact = k / (1.0 + (k / x0 - 1.0) * (-r * t).exp());
        worst_logistic = worst_logistic.max(((y[0] - exact) / exact).abs());
    }
    ensure(worst_logistic < 1e-8, || format!("logistic relative error {worst_logistic:e}"))?;

    // epidemic: conservation and self-consistency under tolerance halving
    let rhs = sir_rhs(0.09, 1.6 * 0.09 / 261.0);
    let coarse = integrate(&OdeProblem::new(&rhs, vec![256.0, 5.0, 0.0], times.clone()).with_tolerances(1e-6, 1e-8))
        .map_err(|e| e.to_string())?;
    let fine = integrate(&OdeProblem::new(&rhs, vec![256.0, 5.0, 0.0], times.clone()).with_tolerances(5e-7, 5e-9))
        .map_err(|e| e.to_string())?;
    for (a, b) in coarse.iter().zip(&fine) {
        let total: f64 = b.iter().sum();
        ensure((total - 261.0).abs() < 1e-8, || format!("population drifted to {total}"))?;
        for (x, y) in a.iter().zip(b) {
            ensure((x - y).abs() <= 1e-6 * y.abs().max(1.0), || format!("halving tolerances moved {x} to {y}"))?;
        }
    }
    Ok(format!("SIR decay rel err {worst:.1e}, logistic rel err {worst_logistic:.1e}"))
}

/// Permutation-invariant functionals of a mixture draw: mean and second moment.
fn mixture_moments(model: &GaussianMixtureModel, theta: &ParameterVector) -> (f64, f64) {
    let v = model.view(theta);
    let m1 = (0..v.mu.len()).map(|j| v.p[j] * v.mu[j]).sum();
    let m2 = (0..v.mu.len()).map(|j| v.p[j] * (v.mu[j] * v.mu[j] + v.sigma2_of(j))).sum();
    (m1, m2)
}

fn toy_mixture_data() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = Normal::new(17.0, 1.5).unwrap();
    let b = Normal::new(23.0, 1.5).unwrap();
    (0..30).map(|i| if i % 2 == 0 { a.sample(&mut rng) } else { b.sample(&mut rng) }).collect()
}

fn mixture_chain(gibbs: bool, sweeps: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let model = GaussianMixtureModel::new(toy_mixture_data(), 2, false).unwrap().with_gibbs(gibbs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = InverseTemperature::new(1.0).unwrap();
    let mut state = ChainState::new(&model, model.reference_point(), tau);
    let mut tuning = ProposalTuning::new(model.proposal_blocks());
    let burn = sweeps / 10;
    let (mut m1, mut m2) = (Vec::with_capacity(sweeps), Vec::with_capacity(sweeps));
    for i in 0..burn + sweeps {
        tuning.adapting = i < burn;
        if gibbs {
            mutate(&model, &mut state, &mut tuning, &mut rng);
        } else {
            stwnc_theta_step(&model, &mut state, &mut tuning, &mut rng);
        }
        if i >= burn {
            let (a, b) = mixture_moments(&model, &state.theta);
            m1.push(a);
            m2.push(b);
        }
    }
    (m1, m2)
}

pub fn gibbs_vs_mh() -> Check {
    let (g1, g2) = mixture_chain(true, 20_000, 1);
    let (h1, h2) = mixture_chain(false, 200_000, 2);
    let mut out = Vec::new();
    for (name, g, h) in [("mean", &g1, &h1), ("second moment", &g2, &h2)] {
        let se = (mc_error(g).unwrap().powi(2) + mc_error(h).unwrap().powi(2)).sqrt();
        let z = (mean(g) - mean(h)) / se;
        ensure(z.abs() < 4.0, || format!("{name}: Gibbs {} vs MH {} (z = {z:.2})", mean(g), mean(h)))?;
        out.push(format!("{name} z={z:+.2}"));
    }
    Ok(out.join(", "))
}

/// Gaussian toy: log L = -theta^2 / 2, prior N(0, 1), so p_tau = N(0, 1 / (1 + tau)).
pub fn kl_identity() -> Check {
    let schedule = [0.0f64, 0.05, 0.2, 0.5, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 200_000;
    let samples: Vec<Vec<f64>> = schedule
        .iter()
        .map(|t| {
            let d = Normal::new(0.0, (1.0 / (1.0 + t)).sqrt()).unwrap();
            (0..n).map(|_| -0.5 * d.sample(&mut rng).powi(2)).collect()
        })
        .collect();
    let kl = panel_kl_terms(&samples, &schedule).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (i, p) in kl.iter().enumerate() {
        let (v0, v1) = (1.0 / (1.0 + schedule[i]), 1.0 / (1.0 + schedule[i + 1]));
        let exact = 0.5 * (v0 / v1 + v1 / v0) - 1.0;
        let d = schedule[i + 1] - schedule[i];
        // the identity is exact in the estimated terms: offsets cancel
        ensure((p.forward + p.backward - p.symmetrized).abs() < 1e-12, || format!("panel {i}: offsets do not cancel"))?;
        let se = d * ((variance(&samples[i]) + variance(&samples[i + 1])) / n as f64).sqrt();
        ensure((p.symmetrized - exact).abs() < 4.0 * se + 1e-12, || {
            format!("panel {i}: symmetrized KL {} vs exact {exact} (se {se:e})", p.symmetrized)
        })?;
        worst = worst.max((p.symmetrized - exact).abs() / se);
    }
    Ok(format!("{} panels, worst deviation {worst:.2} standard errors", kl.len()))
}

pub fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut x = z.sample(&mut rng) / (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            x = rho * x + z.sample(&mut rng);
            x
        })
        .collect()
}

pub fn ar1_batch_means() -> Check {
    let n = 1_000_000;
    let iid = ar1(0.0, n, 31);
    let e0 = mc_error(&iid).unwrap();
    let r0 = e0 * (n as f64).sqrt();
    ensure((r0 - 1.0).abs() < 0.2, || format!("iid batch-means error is {r0:.3} of 1/sqrt(n)"))?;
    let rho = 0.9;
    let x = ar1(rho, n, 32);
    // asymptotic variance of the AR(1) mean: sigma^2 / (1 - rho)^2 with unit innovations
    let exact = (1.0 / (1.0 - rho) / (1.0 - rho) / n as f64).sqrt();
    let ratio = mc_error(&x).unwrap() / exact;
    ensure((ratio - 1.0).abs() < 0.3, || format!("AR(1) batch-means error is {ratio:.3} of the closed form"))?;
    let inflation = mc_error(&x).unwrap() / (variance(&x) / n as f64).sqrt();
    let expected = ((1.0 + rho) / (1.0 - rho)).sqrt();
    ensure((inflation / expected - 1.0).abs() < 0.3, || format!("inflation {inflation:.2} vs {expected:.2}"))?;
    Ok(format!("iid ratio {r0:.3}, AR(1) ratio {ratio:.3}"))
}
