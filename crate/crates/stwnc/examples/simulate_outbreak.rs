//! Chain-binomial outbreak simulation and the seed search that produced
//! `data/outbreak.csv`.
//!
//!     cargo run --release --example simulate_outbreak            # regenerate the bundled file
//!     cargo run --release --example simulate_outbreak -- scan 40  # print the first 40 matching seeds
//!
//! A seed qualifies when the outbreak lasts exactly 136 days (days 0..=135)
//! with one infective on day 134 and none on day 135, and the tau = 1
//! profile posterior over I(0) peaks inside {3,4,5,6} with all four values
//! within `MARGIN` nats of the peak.

use std::io::Write;

use stwnc::models::sir::{simulate_chain_binomial, SirData, SirModel};
use stwnc::tempering::stream_rng;

const N: u64 = 261;
const I0: u64 = 5;
const ALPHA: f64 = 0.09;
const R0: f64 = 1.6;
const DAYS: usize = 136;
const MARGIN: f64 = 6.0;
const BUNDLED_SEED: u64 = 1992;

fn outbreak(seed: u64) -> Option<Vec<u64>> {
    let beta = R0 * ALPHA / N as f64;
    let mut rng = stream_rng(seed, 0);
    let (infected, removed) = simulate_chain_binomial(N, I0, ALPHA, beta, 400, &mut rng);
    (infected.len() == DAYS && infected[DAYS - 2] == 1 && infected[DAYS - 1] == 0).then_some(removed)
}

fn profile(removed: &[u64]) -> stwnc::Result<Vec<(i64, f64)>> {
    let times = (0..removed.len()).map(|d| d as f64).collect();
    let model = SirModel::new(SirData::with_terminal_constraints(N, times, removed.to_vec())?)?;
    let start = [ALPHA.ln(), (R0 * ALPHA / N as f64).ln()];
    model
        .candidates()
        .iter()
        .map(|&k| Ok((k, model.maximize_continuous(1.0, k, start)?.value)))
        .collect()
}

fn qualifies(prof: &[(i64, f64)]) -> bool {
    let best = prof.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let argmax = prof.iter().find(|p| p.1 == best).unwrap().0;
    (3..=6).contains(&argmax) && prof.iter().filter(|p| (3..=6).contains(&p.0)).all(|p| best - p.1 < MARGIN)
}

fn main() -> stwnc::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    if args.get(1).map(String::as_str) == Some("scan") {
        let want: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20);
        let mut found = 0;
        for seed in 0.. {
            let Some(removed) = outbreak(seed) else { continue };
            let prof = profile(&removed)?;
            let best = prof.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
            let rel: Vec<String> = prof.iter().map(|(k, v)| format!("{k}:{:.2}", v - best)).collect();
            println!("seed {seed:5} R(end)={:3} ok={} {}", removed[DAYS - 1], qualifies(&prof), rel.join(" "));
            found += 1;
            if found == want {
                break;
            }
        }
        return Ok(());
    }
    let removed = outbreak(BUNDLED_SEED).expect("bundled seed no longer matches the end pattern");
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/outbreak.csv");
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "time,count")?;
    for (day, r) in removed.iter().enumerate() {
        writeln!(f, "{day},{r}")?;
    }
    println!("wrote {path} ({} rows, final removed {})", removed.len(), removed[DAYS - 1]);
    Ok(())
}
