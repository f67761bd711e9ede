//! Heralding with an inefficient detector and an impure number-state source:
//! success probability, fidelity with the ideal state, and a coarse map.
//!
//!     cargo run --release --example imperfect_heralding

use dqsqueeze::dq::{build_dq, to_fock, CMConfig};
use dqsqueeze::fock::Truncation;
use dqsqueeze::imperfections::{fidelity_heatmap, HeraldedOutputs, ImperfectionParams};

fn main() -> dqsqueeze::Result<()> {
    let imp = ImperfectionParams::new(0.9, 0.9)?;
    println!("eta_d = eta_s = 0.9, single-photon heralding");
    for (n, a2, r) in [(1, 3.05, 0.6), (2, 5.45, 0.8175), (3, 6.00, 0.765), (4, 6.65, 0.7275)] {
        let cfg = CMConfig::from_alpha_sq(n, 1, a2, r)?;
        let t = Truncation::heuristic(n, 1, a2);
        let outputs = HeraldedOutputs::new(&cfg, t)?;
        let (ideal, p_ideal) = build_dq(&cfg)?;
        let (f, p) = outputs.fidelity_with(&to_fock(&ideal, t)?, imp)?;
        println!("  n={n}  S_p={p:.4} (ideal {p_ideal:.4})  F={f:.4}");
    }

    let cfg = CMConfig::from_alpha_sq(2, 1, 5.45, 0.8175)?;
    let t = Truncation::heuristic(2, 1, 5.45);
    let cells = fidelity_heatmap(&cfg, (0.5, 1.0), (0.0, 1.0), 6, t)?;
    println!("\nF(eta_d, eta_s) for n=2, rows eta_d = 0.5..1, columns eta_s = 0..1");
    for row in cells.chunks(6) {
        let line: Vec<String> = row.iter().map(|c| format!("{:.3}", c.fidelity)).collect();
        println!("  {:.1}  {}", row[0].eta_d, line.join("  "));
    }
    Ok(())
}
