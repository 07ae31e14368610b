//! Dormand–Prince 5(4) integrator with dense output at requested times.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size {h:e} fell below the minimum at t = {t}")]
    StepUnderflow { t: f64, h: f64 },
    #[error("derivative is not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("invalid problem: {0}")]
    Invalid(String),
}

pub const MIN_STEP: f64 = 1e-12;

/// Share of the requested tolerances granted to the local error of one step.
const LOCAL_SHARE: f64 = 0.1;

const MAX_STEPS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct OdeProblem<F> {
    pub rhs: F,
    pub initial_state: Vec<f64>,
    /// Integration starts at the first output time.
    pub output_times: Vec<f64>,
    pub rtol: f64,
    pub atol: f64,
}

impl<F> OdeProblem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(rhs: F, initial_state: Vec<f64>, output_times: Vec<f64>) -> Self {
        Self { rhs, initial_state, output_times, rtol: 1e-8, atol: 1e-10 }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrate and return the state at every output time (one row per time).
pub fn integrate<F>(problem: &OdeProblem<F>) -> Result<Vec<Vec<f64>>, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let times = &problem.output_times;
    let n = problem.initial_state.len();
    if times.is_empty() {
        return Ok(Vec::new());
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(OdeError::Invalid("output times must be non-decreasing".into()));
    }
    if !(problem.rtol > 0.0 && problem.atol > 0.0) {
        return Err(OdeError::Invalid("tolerances must be positive".into()));
    }
    let f = &problem.rhs;
    // error accumulates over a trajectory, so each step is held to a fraction of the request
    let (rtol, atol) = (problem.rtol * LOCAL_SHARE, problem.atol * LOCAL_SHARE);

    let mut out = Vec::with_capacity(times.len());
    let mut t = times[0];
    let t_end = *times.last().unwrap();
    let mut y = problem.initial_state.clone();
    let mut next = 0;
    while next < times.len() && times[next] == t {
        out.push(y.clone());
        next += 1;
    }
    if next == times.len() {
        return Ok(out);
    }

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut cont = vec![[0.0f64; 5]; n];

    f(t, &y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::NonFinite { t });
    }
    let mut h = initial_step(f, t, &y, &k1, rtol, atol, t_end - t);

    let mut steps = 0usize;
    while next < times.len() {
        if steps >= MAX_STEPS {
            return Err(OdeError::TooManySteps(MAX_STEPS));
        }
        if h < MIN_STEP {
            return Err(OdeError::StepUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        steps += 1;

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + h };
        f(t_new, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t_new, &ynew, &mut k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = atol + rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sk) * (e / sk);
        }
        let err = (err / n as f64).sqrt();

        if !err.is_finite() {
            h *= 0.25;
            continue;
        }

        if err <= 1.0 {
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[i] = [
                    y[i],
                    ydiff,
                    bspl,
                    ydiff - h * k7[i] - bspl,
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]),
                ];
            }
            while next < times.len() && times[next] <= t_new {
                if times[next] == t_new {
                    out.push(ynew.clone());
                } else {
                    let s = (times[next] - t) / h;
                    let s1 = 1.0 - s;
                    out.push(
                        cont.iter()
                            .map(|c| c[0] + s * (c[1] + s1 * (c[2] + s * (c[3] + s1 * c[4]))))
                            .collect(),
                    );
                }
                next += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if k1.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite { t });
            }
            let fac = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            h *= fac;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(out)
}

fn initial_step<F>(f: &F, t: f64, y: &[f64], f0: &[f64], rtol: f64, atol: f64, span: f64) -> f64
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let norm = |v: &dyn Fn(usize) -> f64| {
        ((0..n)
            .map(|i| {
                let sk = atol + rtol * y[i].abs();
                (v(i) / sk).powi(2)
            })
            .sum::<f64>()
            / n as f64)
            .sqrt()
    };
    let d0 = norm(&|i| y[i]);
    let d1 = norm(&|i| f0[i]);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    f(t + h0, &y1, &mut f1);
    let d2 = norm(&|i| f1[i] - f0[i]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    let h = (100.0 * h0).min(h1).min(span);
    if h.is_finite() && h > 0.0 {
        h
    } else {
        span.min(1e-6)
    }
}
