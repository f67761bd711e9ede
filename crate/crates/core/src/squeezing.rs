//! Normal-ordered moments, quadrature variances and the squeezing optimizers.
//!
//! Quadratures are `X = (a + a^dag)/sqrt(2)` and `P = (a - a^dag)/(i sqrt(2))`,
//! so the vacuum variance is 1/2.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dq::{build_dq, CMConfig, DQState};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::polynomials::{binomial, factorial};

/// Highest `l + s` accepted by [`moment`].
pub const MAX_MOMENT_ORDER: usize = 4;

/// Grid spacing of the coarse `(|alpha|^2, R)` search.
pub const ALPHA_SQ_STEP: f64 = 0.05;
pub const R_STEP: f64 = 0.0025;

/// Default search box.
pub const ALPHA_SQ_RANGE: (f64, f64) = (0.0, 30.0);
pub const R_RANGE: (f64, f64) = (0.01, 0.99);

/// `<a^dag^l a^s>` of a displaced qudit, expanding `D^dag a D = a + delta`
/// into a double binomial sum over finite-superposition moments.
pub fn moment(state: &DQState, l: usize, s: usize) -> Result<C64> {
    if l + s > MAX_MOMENT_ORDER {
        return Err(Error::IndexOutOfRange {
            l,
            s,
            max: MAX_MOMENT_ORDER,
        });
    }
    let delta = state.displacement();
    let mut total = C64::new(0.0, 0.0);
    for u in 0..=l {
        for v in 0..=s {
            let weight = binomial(l as u32, u as u32) * binomial(s as u32, v as u32);
            let shift = delta.conj().powu((l - u) as u32) * delta.powu((s - v) as u32);
            total += shift * qudit_moment(state.coeffs(), u, v) * weight;
        }
    }
    Ok(total)
}

/// `<phi| a^dag^u a^v |phi>` for `|phi> = sum_q c_q |q>`. Coefficients with
/// an index outside `0..=n` are zero.
fn qudit_moment(c: &[C64], u: usize, v: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for q in v..c.len() {
        let p = q - v + u;
        if p >= c.len() {
            continue;
        }
        let w = (factorial(q as u32) * factorial(p as u32)).sqrt() / factorial((q - v) as u32);
        acc += c[p].conj() * c[q] * w;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureReport {
    pub var_x: f64,
    pub var_p: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub min_var: f64,
}

impl QuadratureReport {
    pub fn uncertainty_product(&self) -> f64 {
        self.var_x * self.var_p
    }

    pub fn is_squeezed(&self) -> bool {
        self.min_var < 0.5
    }
}

pub fn quadratures(state: &DQState) -> QuadratureReport {
    let a1 = moment(state, 0, 1).expect("order 1");
    let a2 = moment(state, 0, 2).expect("order 2");
    let n = moment(state, 1, 1).expect("order 2").re;
    report_from_moments(a1, a2, n)
}

fn report_from_moments(a1: C64, a2: C64, n: f64) -> QuadratureReport {
    let central_a2 = a2 - a1 * a1;
    let central_n = n - a1.norm_sqr();
    let var_x = central_a2.re + central_n + 0.5;
    let var_p = -central_a2.re + central_n + 0.5;
    QuadratureReport {
        var_x,
        var_p,
        mean_x: std::f64::consts::SQRT_2 * a1.re,
        mean_p: std::f64::consts::SQRT_2 * a1.im,
        min_var: var_x.min(var_p),
    }
}

/// X-quadrature variance of a finite superposition (displacement does not matter).
pub fn qudit_var_x(coeffs: &[C64]) -> f64 {
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    let a1 = qudit_moment(coeffs, 0, 1) / norm;
    let a2 = qudit_moment(coeffs, 0, 2) / norm;
    let n = qudit_moment(coeffs, 1, 1).re / norm;
    report_from_moments(a1, a2, n).var_x
}

/// X variance of the heralded state at `(|alpha|^2, R)` with real alpha;
/// `+inf` outside the physical domain.
pub fn cm_var_x(n: usize, m: usize, alpha_sq: f64, reflectivity: f64) -> f64 {
    let Ok(cfg) = CMConfig::from_alpha_sq(n, m, alpha_sq, reflectivity) else {
        return f64::INFINITY;
    };
    match build_dq(&cfg) {
        Ok((st, _)) => qudit_var_x(st.coeffs()),
        Err(_) => f64::INFINITY,
    }
}

/// One row of the optimal-squeezing table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimumRecord {
    pub n: usize,
    pub m: usize,
    pub min_var: f64,
    pub alpha_sq: f64,
    pub reflectivity: f64,
    /// Best value on the coarse grid, before refinement.
    pub grid_min_var: f64,
    /// Refined optimum sits within one grid step of the search box edge.
    pub boundary_hit: bool,
}

impl OptimumRecord {
    pub fn squeezed(&self) -> bool {
        self.min_var <= 0.5
    }
}

fn grid_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let start = if lo > 0.0 { lo } else { step };
    let count = ((hi - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub alpha_sq: f64,
    pub reflectivity: f64,
    pub var_x: f64,
    pub var_p: f64,
}

/// Quadrature variances over a rectangular `(|alpha|^2, R)` grid, row-major
/// in `alpha_sq`.
pub fn squeezing_scan(n: usize, m: usize, alpha_sq: &[f64], reflectivity: &[f64]) -> Vec<ScanPoint> {
    alpha_sq
        .par_iter()
        .flat_map_iter(|&a2| {
            reflectivity.iter().map(move |&r| {
                let report = CMConfig::from_alpha_sq(n, m, a2, r)
                    .ok()
                    .and_then(|cfg| build_dq(&cfg).ok())
                    .map(|(st, _)| quadratures(&st));
                ScanPoint {
                    alpha_sq: a2,
                    reflectivity: r,
                    var_x: report.map_or(f64::NAN, |q| q.var_x),
                    var_p: report.map_or(f64::NAN, |q| q.var_p),
                }
            })
        })
        .collect()
}

/// Global minimum of the X variance over the box: a coarse grid
/// (steps 0.05 in `|alpha|^2`, 0.0025 in `R`) followed by simplex refinement
/// from the most promising grid minima.
pub fn optimize_cm_squeezing(
    n: usize,
    m: usize,
    alpha_sq_range: (f64, f64),
    r_range: (f64, f64),
) -> OptimumRecord {
    let alphas = grid_axis(alpha_sq_range.0, alpha_sq_range.1, ALPHA_SQ_STEP);
    let rs = grid_axis(r_range.0, r_range.1, R_STEP);
    let (na, nr) = (alphas.len(), rs.len());
    let values: Vec<f64> = alphas
        .par_iter()
        .flat_map_iter(|&a2| rs.iter().map(move |&r| cm_var_x(n, m, a2, r)))
        .collect();
    let at = |i: usize, j: usize| values[i * nr + j];

    // grid cells that are no worse than their 8 neighbours
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..na {
        for j in 0..nr {
            let v = at(i, j);
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= na as i64 || jj >= nr as i64 {
                        continue;
                    }
                    if at(ii as usize, jj as usize) < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                candidates.push((v, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(6);
    let (grid_min_var, gi, gj) = candidates[0];

    let (a_lo, a_hi) = (alphas[0], alphas[na - 1]);
    let (r_lo, r_hi) = (rs[0], rs[nr - 1]);
    let objective = |x: &[f64]| {
        if x[0] < a_lo || x[0] > a_hi || x[1] < r_lo || x[1] > r_hi {
            f64::INFINITY
        } else {
            cm_var_x(n, m, x[0], x[1])
        }
    };
    let opts = NelderMeadOptions {
        max_iter: 4_000,
        ftol: 1e-13,
        xtol: 1e-9,
    };
    let mut best = (grid_min_var, alphas[gi], rs[gj]);
    for &(_, i, j) in &candidates {
        let start = [alphas[i], rs[j]];
        let min = nelder_mead(objective, &start, &[ALPHA_SQ_STEP, R_STEP], &opts);
        if min.f < best.0 {
            best = (min.f, min.x[0], min.x[1]);
        }
    }
    let (min_var, alpha_sq, reflectivity) = best;
    let boundary_hit = alpha_sq - a_lo < ALPHA_SQ_STEP
        || a_hi - alpha_sq < ALPHA_SQ_STEP
        || reflectivity - r_lo < R_STEP
        || r_hi - reflectivity < R_STEP;
    OptimumRecord {
        n,
        m,
        min_var,
        alpha_sq,
        reflectivity,
        grid_min_var,
        boundary_hit,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockOptimum {
    pub n: usize,
    pub min_var: f64,
    /// Unit-norm real coefficients, sign fixed so the first nonzero one is positive.
    pub coeffs: Vec<f64>,
}

/// Number of random restarts in [`optimize_fock_superposition`].
pub const FOCK_STARTS: usize = 64;

/// Minimal X variance over real unit vectors in `span{|0>..|n>}`.
pub fn optimize_fock_superposition(n: usize) -> FockOptimum {
    let dim = n + 1;
    let objective = |x: &[f64]| {
        let c: Vec<C64> = x.iter().map(|&v| C64::new(v, 0.0)).collect();
        let norm: f64 = x.iter().map(|v| v * v).sum();
        if norm < 1e-12 {
            return f64::INFINITY;
        }
        qudit_var_x(&c)
    };
    let opts = NelderMeadOptions {
        max_iter: 40_000,
        ftol: 1e-15,
        xtol: 1e-10,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + n as u64);
    let mut best_f = f64::INFINITY;
    let mut best_x = vec![0.0; dim];
    for _ in 0..FOCK_STARTS {
        let start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut min = nelder_mead(objective, &start, &vec![0.25; dim], &opts);
        // restart from the result to escape a collapsed simplex
        let polished = nelder_mead(objective, &min.x, &vec![0.02; dim], &opts);
        if polished.f <= min.f {
            min = polished;
        }
        if min.f < best_f {
            best_f = min.f;
            best_x = min.x;
        }
    }
    let norm = best_x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let first = best_x.iter().find(|v| v.abs() > 1e-9).copied().unwrap_or(1.0);
    let sign = first.signum() / norm;
    FockOptimum {
        n,
        min_var: best_f,
        coeffs: best_x.iter().map(|v| v * sign).collect(),
    }
}

/// Optimal squeezing for every `1 <= n <= n_max`, `0 <= m <= m_max`.
pub fn table1(n_max: usize, m_max: usize) -> Vec<OptimumRecord> {
    (1..=n_max)
        .flat_map(|n| (0..=m_max).map(move |m| (n, m)))
        .map(|(n, m)| optimize_cm_squeezing(n, m, ALPHA_SQ_RANGE, R_RANGE))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub n: usize,
    /// Heralded state with single-photon detection.
    pub dq: OptimumRecord,
    pub fock: FockOptimum,
    /// `dq.min_var - fock.min_var`.
    pub difference: f64,
}

/// Single-photon-heralded squeezing against the best finite Fock superposition.
pub fn table2(n_max: usize) -> Vec<Table2Row> {
    (1..=n_max)
        .map(|n| {
            let dq = optimize_cm_squeezing(n, 1, ALPHA_SQ_RANGE, R_RANGE);
            let fock = optimize_fock_superposition(n);
            let difference = dq.min_var - fock.min_var;
            Table2Row {
                n,
                dq,
                fock,
                difference,
            }
        })
        .collect()
}

/// `|alpha|^2` on the vacuum-detection optimum locus, `|alpha|^2 R = 3`.
pub fn vacuum_detection_locus(reflectivity: f64) -> f64 {
    3.0 / reflectivity
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// `|alpha|^2` at which the qubit heralded from `|1>` by `m` detected photons
/// carries weight 3/4 on `|0>`, the optimal single-qubit squeezer:
/// `(1/4R) [sqrt(3) ± sqrt((3 + (4m - 3) R)/(1 - R))]^2`.
pub fn single_photon_locus(m: usize, reflectivity: f64, branch: Branch) -> f64 {
    let r = reflectivity;
    let root = ((3.0 + (4.0 * m as f64 - 3.0) * r) / (1.0 - r)).sqrt();
    let s = match branch {
        Branch::Plus => 3f64.sqrt() + root,
        Branch::Minus => 3f64.sqrt() - root,
    };
    s * s / (4.0 * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::to_fock;
    use crate::fock::Truncation;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn displaced_vacuum_moments() {
        let beta = c(1.2, -0.4);
        let st = DQState::new(beta, vec![c(1.0, 0.0)]).unwrap();
        assert!((moment(&st, 0, 1).unwrap() - beta).norm() < 1e-15);
        let q = quadratures(&st);
        assert!((q.var_x - 0.5).abs() < 1e-14 && (q.var_p - 0.5).abs() < 1e-14);
    }

    #[test]
    fn single_photon_moments() {
        let st = DQState::new(c(0.0, 0.0), vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((moment(&st, 1, 1).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let displaced = st.displaced_by(c(0.7, 0.3));
        let q = quadratures(&displaced);
        assert!((q.var_x - 1.5).abs() < 1e-13 && (q.var_p - 1.5).abs() < 1e-13);
    }

    #[test]
    fn optimal_qubit_squeezing() {
        let st = DQState::new(c(2.0, 0.0), vec![c(0.866, 0.0), c(-0.5, 0.0)]).unwrap();
        assert!((quadratures(&st).var_x - 0.3750).abs() < 5e-4);
    }

    #[test]
    fn order_limit() {
        let st = DQState::new(c(0.0, 0.0), vec![c(1.0, 0.0)]).unwrap();
        assert!(matches!(moment(&st, 3, 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn moments_match_dense_matrices() {
        let st = DQState::new(c(0.8, -0.6), vec![c(0.3, 0.2), c(-0.5, 0.1), c(0.4, -0.6)]).unwrap();
        let v = to_fock(&st, Truncation::new(45).unwrap()).unwrap();
        for l in 0..=2 {
            for s in 0..=2 {
                let closed = moment(&st, l, s).unwrap();
                let dense = v.expect_normal_ordered(l, s);
                assert!((closed - dense).norm() < 1e-9, "l={l} s={s}");
            }
        }
    }

    #[test]
    fn grid_axis_excludes_zero() {
        let a = grid_axis(0.0, 30.0, 0.05);
        assert_eq!(a.len(), 600);
        assert!((a[0] - 0.05).abs() < 1e-15 && (a[599] - 30.0).abs() < 1e-9);
        assert_eq!(grid_axis(0.01, 0.99, 0.0025).len(), 393);
    }

    #[test]
    fn loci_reduce_to_vacuum_rule() {
        for r in [0.2, 0.5, 0.8] {
            assert!((single_photon_locus(0, r, Branch::Plus) - vacuum_detection_locus(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn loci_give_optimal_qubit() {
        for m in 1..=4 {
            for r in [0.3, 0.6, 0.8] {
                for b in [Branch::Plus, Branch::Minus] {
                    let a2 = single_photon_locus(m, r, b);
                    assert!((cm_var_x(1, m, a2, r) - 0.375).abs() < 1e-10, "m={m} r={r}");
                }
            }
        }
    }

    #[test]
    fn fock_qubit_optimum() {
        let opt = optimize_fock_superposition(1);
        assert!((opt.min_var - 0.375).abs() < 1e-9);
        assert!((opt.coeffs[0].powi(2) - 0.75).abs() < 1e-6);
    }

    #[test]
    fn fock_qutrit_optimum() {
        let opt = optimize_fock_superposition(2);
        assert!((opt.min_var - 0.2753).abs() < 1e-4);
        assert!((opt.coeffs[0] - 0.9530).abs() < 5e-4);
        assert!(opt.coeffs[1].abs() < 1e-4);
        assert!((opt.coeffs[2] + 0.3030).abs() < 5e-4);
    }
}
