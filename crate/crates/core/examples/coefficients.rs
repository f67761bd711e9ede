//! Closed-form coefficients of heralded displaced qudits, the classification by
//! n - m, and the amplitudes at which a coefficient vanishes.
//!
//!     cargo run --release --example coefficients [n m alpha_sq R]

use dqsqueeze::dq::{build_dq, coefficient, coefficient_laguerre, locus_solve, CMConfig, LocusTarget};

fn main() -> dqsqueeze::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (n, m, a2, r) = match args.as_slice() {
        [n, m, a2, r] => (*n as usize, *m as usize, *a2, *r),
        _ => (3, 1, 6.0, 0.765),
    };
    let cfg = CMConfig::from_alpha_sq(n, m, a2, r)?;
    let (state, prob) = build_dq(&cfg)?;
    println!("n={n} m={m} |alpha|^2={a2} R={r}: {}", cfg.class());
    println!("chi = {:.6}  displacement = {:.6}  P(m) = {:.6}", cfg.chi(), state.displacement(), prob);
    println!("  q   Hermite form (raw)           Laguerre form (raw)          normalized");
    for q in 0..=n {
        let h = coefficient(&cfg, q);
        let l = coefficient_laguerre(&cfg, q);
        println!("  {q}   {:>12.6e} {:>+12.6e}i   {:>12.6e} {:>+12.6e}i   {:+.6}", h.re, h.im, l.re, l.im, state.coeff(q).re);
    }

    println!("\nzeros of A_0 for n=1 (vacuum-free qubit), alpha on (0, 12]:");
    for m in 0..=3 {
        let roots = locus_solve(1, m, 0, LocusTarget::CoefficientZero, 0.5).unwrap_or_default();
        let shown: Vec<String> = roots.iter().map(|a| format!("{:.6}", a * a)).collect();
        println!("  m={m} R=0.5  |alpha|^2 = [{}]", shown.join(", "));
    }
    Ok(())
}
