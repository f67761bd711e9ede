//! Closed form against direct beam-splitter simulation in a truncated Fock
//! space: overlap defect and heralding-probability mismatch per configuration.
//!
//!     cargo run --release --example oracle_check

use dqsqueeze::dq::{build_dq, to_fock, CMConfig};
use dqsqueeze::fock::{brute_force_cm, Truncation};

fn main() -> dqsqueeze::Result<()> {
    println!(" n  m  |alpha|^2      R   dim   1-|<oracle|closed>|   |dP|");
    for (n, m, a2, r) in [
        (1, 0, 3.05, 0.6),
        (1, 2, 2.5, 0.2),
        (2, 1, 5.45, 0.8175),
        (2, 3, 3.0, 0.4),
        (3, 1, 6.0, 0.765),
        (4, 1, 6.65, 0.7275),
        (4, 6, 9.0, 0.35),
    ] {
        let cfg = CMConfig::from_alpha_sq(n, m, a2, r)?;
        let t = Truncation::heuristic(n, m, a2);
        let (state, prob) = build_dq(&cfg)?;
        let closed = to_fock(&state, t)?;
        let (oracle, oracle_prob) = brute_force_cm(n, m, cfg.alpha, r, t)?;
        let defect = 1.0 - oracle.overlap(&closed)?.norm();
        println!(
            "{n:>2} {m:>2} {a2:>10} {r:>7} {:>4}   {:>18.3e}   {:.3e}",
            t.dim(),
            defect.abs(),
            (prob - oracle_prob).abs()
        );
    }
    Ok(())
}
