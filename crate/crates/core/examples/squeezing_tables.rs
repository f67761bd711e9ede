//! Optimal quadrature squeezing over the (|alpha|^2, R) plane, and the
//! comparison with the best finite Fock superposition.
//!
//!     cargo run --release --example squeezing_tables [n_max]

use std::time::Instant;

use dqsqueeze::squeezing::{optimize_fock_superposition, table1, ALPHA_SQ_RANGE, R_RANGE};
use dqsqueeze::squeezing::optimize_cm_squeezing;

fn main() {
    let n_max: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);

    let start = Instant::now();
    println!("{:>2} {:>2} {:>9} {:>9} {:>8}  boundary", "n", "m", "min_var", "|a|^2", "R");
    for rec in table1(n_max, 4) {
        println!(
            "{:>2} {:>2} {:>9.5} {:>9.4} {:>8.5}  {}",
            rec.n, rec.m, rec.min_var, rec.alpha_sq, rec.reflectivity, rec.boundary_hit
        );
    }
    println!("table 1: {:.1?}", start.elapsed());

    println!("\n{:>2} {:>9} {:>9} {:>9}", "n", "dq(m=1)", "fock", "diff");
    for n in 1..=6 {
        let dq = optimize_cm_squeezing(n, 1, ALPHA_SQ_RANGE, R_RANGE);
        let fock = optimize_fock_superposition(n);
        println!("{:>2} {:>9.5} {:>9.5} {:>9.5}", n, dq.min_var, fock.min_var, dq.min_var - fock.min_var);
    }
    println!("total: {:.1?}", start.elapsed());
}
