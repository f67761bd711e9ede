//! Hilbert-Schmidt non-Gaussianity maxima of the heralded qubits and qutrits,
//! and the Wigner negative volume of the best single-photon-heralded squeezers.
//!
//!     cargo run --release --example nongaussianity

use dqsqueeze::dq::{build_dq, CMConfig, DQState};
use dqsqueeze::nongauss::{hsd_dq, max_hsd, wigner_negativity_default, HSD_ALPHA_SQ_RANGE, HSD_R_RANGE};
use num_complex::Complex64 as C64;

fn main() -> dqsqueeze::Result<()> {
    println!("largest HSD over |alpha|^2 in [0, 16], R in [0.05, 0.95]");
    for (label, n, m) in [("DQ2(+1)", 1, 0), ("DQ2(-1)", 1, 2), ("DQ3(+1)", 2, 1), ("DQ3(-1)", 2, 3)] {
        let best = max_hsd(n, m, HSD_ALPHA_SQ_RANGE, HSD_R_RANGE);
        println!(
            "  {label}  n={n} m={m}  hsd={:.5}  at |alpha|^2={:.3} R={:.4}{}",
            best.hsd,
            best.alpha_sq,
            best.reflectivity,
            if best.boundary_hit { "  (box edge)" } else { "" }
        );
    }

    println!("\nWigner negative volume, single-photon heralding");
    for (n, a2, r) in [(1, 3.05, 0.6), (2, 5.45, 0.8175), (3, 6.00, 0.765), (4, 6.65, 0.7275)] {
        let (state, _) = build_dq(&CMConfig::from_alpha_sq(n, 1, a2, r)?)?;
        println!(
            "  n={n} |alpha|^2={a2:<5} R={r:<7} W_N={:.5}  hsd={:.5}",
            wigner_negativity_default(&state)?,
            hsd_dq(&state)?
        );
    }

    let qubit = DQState::new(C64::new(0.0, 0.0), vec![C64::new(0.75f64.sqrt(), 0.0), C64::new(-0.5, 0.0)])?;
    println!("  optimal qubit squeezer          W_N={:.5}", wigner_negativity_default(&qubit)?);
    Ok(())
}
