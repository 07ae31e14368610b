//! Deterministic SIR curves from the adaptive Runge-Kutta solver.
//!
//!     cargo run --example ode_sir -- [alpha] [r0] [i0]

use stwnc::data::OUTBREAK_POPULATION;
use stwnc::ode::{integrate, OdeProblem};

fn main() {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().expect("numeric argument"));
    let alpha = args.next().unwrap_or(0.09);
    let r0 = args.next().unwrap_or(1.6);
    let i0 = args.next().unwrap_or(5.0);
    let n = OUTBREAK_POPULATION as f64;
    let beta = r0 * alpha / n;
    let rhs = |_t: f64, y: &[f64], d: &mut [f64]| {
        d[0] = -beta * y[0] * y[1];
        d[1] = beta * y[0] * y[1] - alpha * y[1];
        d[2] = alpha * y[1];
    };
    let times: Vec<f64> = (0..=135).step_by(15).map(f64::from).collect();
    let out = integrate(&OdeProblem::new(rhs, vec![n - i0, i0, 0.0], times.clone())).expect("SIR integrates");
    println!("{:>5} {:>9} {:>9} {:>9}", "day", "S", "I", "R");
    for (t, y) in times.iter().zip(out) {
        println!("{t:>5} {:>9.3} {:>9.3} {:>9.3}", y[0], y[1], y[2]);
    }
}
