//! Wigner function of a heralded state on a phase-space grid, printed as a
//! coarse character map, with normalization and negative volume.
//!
//!     cargo run --release --example wigner_grid

use dqsqueeze::dq::{build_dq, CMConfig};
use dqsqueeze::nongauss::{wigner_grid, wigner_negativity, PhaseGrid};

fn main() -> dqsqueeze::Result<()> {
    let cfg = CMConfig::from_alpha_sq(2, 1, 5.45, 0.8175)?;
    let (state, _) = build_dq(&cfg)?;
    let layout = PhaseGrid::for_state(&state, 201)?;
    let grid = wigner_grid(&state, &layout);
    println!("integral of W = {:.9}", grid.integrate(|w| w));
    println!("negative volume = {:.6}", wigner_negativity(&state, &layout)?);
    println!("edge/peak = {:.2e}", grid.edge_ratio());

    let peak = grid.values.iter().fold(0.0f64, |a, &w| a.max(w.abs()));
    let d = state.displacement();
    let view = PhaseGrid::layout((d.re - 2.0, d.re + 2.0), (d.im - 2.0, d.im + 2.0), 49, 25)?;
    let view = wigner_grid(&state, &view);
    println!("\n'#' > 0.5 peak, '+' > 0.1, '.' ~ 0, '-' < -0.01 peak (x across, p down)");
    for j in (0..view.np).rev() {
        let line: String = (0..view.nx)
            .map(|i| {
                let w = view.values[(i, j)] / peak;
                match w {
                    w if w > 0.5 => '#',
                    w if w > 0.1 => '+',
                    w if w < -0.01 => '-',
                    _ => '.',
                }
            })
            .collect();
        println!("  {line}");
    }
    Ok(())
}
