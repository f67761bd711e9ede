//! Non-Gaussianity: Hilbert-Schmidt distance to the moment-matched Gaussian
//! reference, the Wigner function, and its negative volume.
//!
//! Phase space is parametrized by `beta = x + i p` with measure
//! `d(Re beta) d(Im beta)`, so that every Wigner function integrates to one.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dq::{build_dq, CMConfig, DQState};
use crate::error::{invalid, Error, Result};
use crate::fock::{
    annihilation_matrix, displace_vector, displacement_matrix, squeeze_matrix, squeeze_vector,
    thermal_density, DensityMatrix, FockVector, Truncation, TAIL_TOLERANCE,
};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::polynomials::{factorial, hermite2};
use crate::squeezing::{moment, quadratures};

/// Displaced squeezed thermal state `D(gamma) S(zeta) nu(nbar) S^dag(zeta) D^dag(gamma)`
/// with `zeta = r e^{i phi}` and `S(zeta) = exp(1/2 (zeta a^dag^2 - zeta* a^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianRef {
    #[serde(serialize_with = "crate::dq::serialize_complex")]
    pub gamma: C64,
    pub r: f64,
    pub phi: f64,
    pub nbar: f64,
}

impl GaussianRef {
    /// Reference sharing the first and second moments `<a>`, `<a^2>`, `<a^dag a>`.
    pub fn from_moments(mean_a: C64, mean_a2: C64, mean_n: f64) -> Result<Self> {
        let m = mean_a2 - mean_a * mean_a;
        let n = mean_n - mean_a.norm_sqr();
        let det = (n + 0.5).powi(2) - m.norm_sqr();
        if det < 0.25 - 1e-9 || !det.is_finite() {
            return Err(Error::NonPhysicalCovariance(det));
        }
        let nu = det.max(0.25).sqrt();
        let cosh2r = ((n + 0.5) / nu).max(1.0);
        let r = 0.5 * cosh2r.acosh();
        let phi = if m.norm() < 1e-14 { 0.0 } else { m.arg() };
        Ok(Self {
            gamma: mean_a,
            r,
            phi,
            nbar: nu - 0.5,
        })
    }

    /// Quadrature covariance `[[s_xx, s_xp], [s_xp, s_pp]]`, vacuum = I/2.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let scale = self.nbar + 0.5;
        let (c, s) = ((2.0 * self.r).cosh(), (2.0 * self.r).sinh());
        let off = scale * s * self.phi.sin();
        [
            [scale * (c + s * self.phi.cos()), off],
            [off, scale * (c - s * self.phi.cos())],
        ]
    }

    /// Mean photon number about the centre, `(nbar + 1/2) cosh 2r - 1/2`.
    pub fn central_photons(&self) -> f64 {
        (self.nbar + 0.5) * (2.0 * self.r).cosh() - 0.5
    }

    /// Purity `Tr tau^2 = 1/(2 nbar + 1)`.
    pub fn purity(&self) -> f64 {
        1.0 / (2.0 * self.nbar + 1.0)
    }
}

/// Quadrature covariance of a state from its moments.
pub fn covariance_from_moments(mean_a: C64, mean_a2: C64, mean_n: f64) -> [[f64; 2]; 2] {
    let m = mean_a2 - mean_a * mean_a;
    let n = mean_n - mean_a.norm_sqr();
    [[m.re + n + 0.5, m.im], [m.im, -m.re + n + 0.5]]
}

fn density_moments(rho: &DensityMatrix) -> (C64, C64, f64) {
    let t = Truncation::new(rho.dim()).expect("non-empty");
    let a = annihilation_matrix(t);
    let a2 = &a * &a;
    let n = a.adjoint() * &a;
    let tr = rho.trace();
    let e = |op| rho.expect(op).expect("same dimension") / tr;
    (e(&a), e(&a2), e(&n).re)
}

pub fn match_reference(rho: &DensityMatrix) -> Result<GaussianRef> {
    let (a1, a2, n) = density_moments(rho);
    GaussianRef::from_moments(a1, a2, n)
}

/// Reference of a displaced qudit from its closed-form moments.
pub fn match_reference_dq(state: &DQState) -> Result<GaussianRef> {
    let a1 = moment(state, 0, 1)?;
    let a2 = moment(state, 0, 2)?;
    let n = moment(state, 1, 1)?.re;
    GaussianRef::from_moments(a1, a2, n)
}

/// Levels holding all but ~1e-13 of a centred Gaussian with this many
/// photons; its number distribution is no heavier than a geometric one.
fn central_levels(photons: f64) -> usize {
    if photons < 1e-12 {
        return 12;
    }
    (30.0 / (1.0 + 1.0 / photons).ln()).ceil() as usize + 12
}

/// `tau` in `t`, computed on a padded space and cut back.
pub fn reference_density(gref: &GaussianRef, t: Truncation) -> Result<DensityMatrix> {
    let work = t.padded(20);
    let nu = thermal_density(gref.nbar, work)?;
    let s = squeeze_matrix(gref.r, gref.phi, work);
    let d = displacement_matrix(gref.gamma, work);
    let u = d * s;
    let tau = nu.conjugated(&u)?.cropped(t.dim());
    let lost = 1.0 - tau.trace();
    if lost.abs() > 1e-8 {
        return Err(Error::TruncationTooSmall {
            dim: t.dim(),
            tail: lost.abs(),
        });
    }
    Ok(tau)
}

/// `Tr[(rho - tau)^2] / (2 Tr rho^2)` for any density matrix. The state is
/// first moved to the origin, which leaves the distance unchanged and keeps
/// the reference compact.
pub fn hsd(rho: &DensityMatrix) -> Result<f64> {
    let rho = rho.normalized()?;
    let gref = match_reference(&rho)?;
    let work = Truncation::new(rho.dim())?.padded(30);
    let unshift = displacement_matrix(-gref.gamma, work);
    let centred = rho.resized(work.dim()).conjugated(&unshift)?;
    let lost = (1.0 - centred.trace()).abs();
    if lost > 1e-8 {
        return Err(Error::TruncationTooSmall {
            dim: rho.dim(),
            tail: lost,
        });
    }
    let centred_ref = GaussianRef {
        gamma: C64::new(0.0, 0.0),
        ..gref
    };
    let dim = work.dim().max(central_levels(gref.central_photons()));
    let t = Truncation::new(dim)?;
    let tau = reference_density(&centred_ref, t)?;
    let diff = centred.resized(dim).into_matrix() - tau.into_matrix();
    let num: f64 = diff.iter().map(|z| z.norm_sqr()).sum();
    Ok(num / (2.0 * rho.purity()))
}

/// HSD of a pure displaced qudit, evaluated on the undisplaced superposition:
/// `Tr rho tau = sum_k p_k |<k| S^dag D^dag |phi>|^2` with thermal weights `p_k`.
pub fn hsd_dq(state: &DQState) -> Result<f64> {
    let centred = DQState::new(C64::new(0.0, 0.0), state.coeffs().to_vec())?;
    let gref = match_reference_dq(&centred)?;
    let mut dim = central_levels(gref.central_photons()).max(state.coeffs().len() + 12);
    // the squeeze can spread the qudit further than the reference itself
    let w = loop {
        let work = Truncation::new(dim + 20)?;
        let phi = centred.qudit_vector(work)?;
        let w = squeeze_vector(gref.r, gref.phi + PI, &displace_vector(-gref.gamma, &phi));
        let edge: f64 = w.amps().iter().skip(dim).map(|z| z.norm_sqr()).sum();
        if edge <= TAIL_TOLERANCE {
            break w;
        }
        if dim > 4000 {
            return Err(Error::TruncationTooSmall { dim, tail: edge });
        }
        dim += dim / 2;
    };
    let ratio = gref.nbar / (1.0 + gref.nbar);
    let mut p = 1.0 / (1.0 + gref.nbar);
    let mut overlap = 0.0;
    for z in w.amps().iter().take(dim) {
        overlap += p * z.norm_sqr();
        p *= ratio;
    }
    Ok((1.0 - 2.0 * overlap + gref.purity()) / 2.0)
}

/// Closed-form Wigner function of a displaced qudit `D(d) sum_q c_q |q>`:
/// `(2/pi) e^{-2|b|^2} sum_{p,q} c_p c_q* H_{q,p}(2b, 2b*) / sqrt(p! q!)`, `b = beta - d`.
pub fn wigner_closed(state: &DQState, beta: C64) -> f64 {
    let b = beta - state.displacement();
    let (g, gc) = (b * 2.0, b.conj() * 2.0);
    let c = state.coeffs();
    let mut sum = C64::new(0.0, 0.0);
    for (p, cp) in c.iter().enumerate() {
        for (q, cq) in c.iter().enumerate() {
            let w = 1.0 / (factorial(p as u32) * factorial(q as u32)).sqrt();
            sum += cp * cq.conj() * hermite2(q as u32, p as u32, g, gc) * w;
        }
    }
    FRAC_2_PI * (-2.0 * b.norm_sqr()).exp() * sum.re
}

fn displacement_padding(beta: C64) -> usize {
    let b = beta.norm();
    (b * b + 8.0 * b).ceil() as usize + 20
}

/// Displaced parity `(2/pi) sum_k (-1)^k <k| D(-beta) rho D(beta) |k>`.
pub fn wigner_oracle(rho: &DensityMatrix, beta: C64) -> Result<f64> {
    let work = Truncation::new(rho.dim())?.padded(displacement_padding(beta));
    let shifted = rho.resized(work.dim()).conjugated(&displacement_matrix(-beta, work))?;
    let lost = (rho.trace() - shifted.trace()).abs();
    if lost > 1e-9 {
        return Err(Error::TruncationTooSmall {
            dim: rho.dim(),
            tail: lost,
        });
    }
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..work.dim() {
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += shifted.matrix()[(k, k)] * s;
    }
    Ok(FRAC_2_PI * sum.re)
}

/// Same parity evaluation for a pure state, one vector action per point.
pub fn wigner_oracle_pure(psi: &FockVector, beta: C64) -> Result<f64> {
    let work = psi.dim() + displacement_padding(beta);
    let v = displace_vector(-beta, &psi.resized(work));
    let lost = (psi.norm_sqr() - v.norm_sqr()).abs();
    if lost > 1e-9 {
        return Err(Error::TruncationTooSmall {
            dim: psi.dim(),
            tail: lost,
        });
    }
    let parity: f64 = v
        .amps()
        .iter()
        .enumerate()
        .map(|(k, z)| if k % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
        .sum();
    Ok(FRAC_2_PI * parity)
}

/// Rectangular sampling of the `beta` plane; `values[(i, j)]` sits at
/// `x_i + i p_j`. Point counts are odd so composite Simpson weights apply.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nx: usize,
    pub np: usize,
    pub values: DMatrix<f64>,
}

/// Default points per axis.
pub const GRID_POINTS: usize = 201;
/// Largest Simpson change under step halving accepted by [`wigner_negativity`].
pub const RICHARDSON_TOLERANCE: f64 = 1e-3;
/// Edge values must stay below this fraction of the peak.
pub const COVERAGE_TOLERANCE: f64 = 1e-7;

impl PhaseGrid {
    pub fn layout(x_range: (f64, f64), p_range: (f64, f64), nx: usize, np: usize) -> Result<Self> {
        for (name, n) in [("nx", nx), ("np", np)] {
            if n < 3 || n % 2 == 0 {
                return Err(invalid(name, format!("{n} points; need an odd count >= 3")));
            }
        }
        for (name, (lo, hi)) in [("x_range", x_range), ("p_range", p_range)] {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid(name, format!("empty interval [{lo}, {hi}]")));
            }
        }
        Ok(Self {
            x_range,
            p_range,
            nx,
            np,
            values: DMatrix::zeros(nx, np),
        })
    }

    /// Square grid centred on the displacement with half-width
    /// `max(5, |d| + 5 sqrt(n))` for a qudit of top level `n`.
    pub fn for_state(state: &DQState, points: usize) -> Result<Self> {
        let d = state.displacement();
        let half = (d.norm() + 5.0 * (state.max_photon() as f64).sqrt()).max(5.0);
        Self::layout((d.re - half, d.re + half), (d.im - half, d.im + half), points, points)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_range.0 + self.step_x() * i as f64
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_range.0 + self.step_p() * j as f64
    }

    pub fn step_x(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64
    }

    pub fn step_p(&self) -> f64 {
        (self.p_range.1 - self.p_range.0) / (self.np - 1) as f64
    }

    /// Same ranges with the step halved along both axes.
    pub fn refined(&self) -> Self {
        Self::layout(self.x_range, self.p_range, 2 * self.nx - 1, 2 * self.np - 1).expect("valid layout")
    }

    /// Fill `values` with `f(beta)`, rows in parallel.
    pub fn sample<F>(mut self, f: F) -> Self
    where
        F: Fn(C64) -> f64 + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..self.nx)
            .into_par_iter()
            .map(|i| (0..self.np).map(|j| f(C64::new(self.x(i), self.p(j)))).collect())
            .collect();
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                self.values[(i, j)] = *v;
            }
        }
        self
    }

    /// Composite Simpson integral of `g(values)`, summed in a fixed order.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        simpson_2d(&self.values, self.step_x(), self.step_p(), 1, &g)
    }

    /// Largest `|W|` on the outer frame relative to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut edge = 0.0f64;
        for i in 0..self.nx {
            edge = edge.max(self.values[(i, 0)].abs()).max(self.values[(i, self.np - 1)].abs());
        }
        for j in 0..self.np {
            edge = edge.max(self.values[(0, j)].abs()).max(self.values[(self.nx - 1, j)].abs());
        }
        if peak > 0.0 {
            edge / peak
        } else {
            0.0
        }
    }
}

fn simpson_weights(n: usize, stride: usize) -> DVector<f64> {
    let count = (n - 1) / stride + 1;
    DVector::from_iterator(
        count,
        (0..count).map(|k| {
            if k == 0 || k == count - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        }),
    )
}

/// Simpson rule over every `stride`-th sample.
fn simpson_2d<G: Fn(f64) -> f64>(values: &DMatrix<f64>, hx: f64, hp: f64, stride: usize, g: &G) -> f64 {
    let (nx, np) = values.shape();
    let (wx, wp) = (simpson_weights(nx, stride), simpson_weights(np, stride));
    let (hx, hp) = (hx * stride as f64, hp * stride as f64);
    let mut total = 0.0;
    for (a, wi) in wx.iter().enumerate() {
        let mut row = 0.0;
        for (b, wj) in wp.iter().enumerate() {
            row += wj * g(values[(a * stride, b * stride)]);
        }
        total += wi * row;
    }
    total * hx * hp / 9.0
}

/// Closed-form Wigner function sampled on `grid`'s layout.
pub fn wigner_grid(state: &DQState, grid: &PhaseGrid) -> PhaseGrid {
    grid.clone().sample(|b| wigner_closed(state, b))
}

/// Oracle Wigner function of a pure state on a grid; each column shares
/// `D(-i p)` and each row applies `D(-x)` to it (the two differ from
/// `D(-x - i p)` by a phase only).
pub fn wigner_grid_oracle(psi: &FockVector, grid: &PhaseGrid) -> Result<PhaseGrid> {
    let reach = grid.x_range.0.abs().max(grid.x_range.1.abs()) + grid.p_range.0.abs().max(grid.p_range.1.abs());
    let work = Truncation::new(psi.dim() + displacement_padding(C64::new(reach, 0.0)))?;
    let base = psi.resized(work.dim());
    let columns: Vec<FockVector> = (0..grid.np)
        .into_par_iter()
        .map(|j| displace_vector(C64::new(0.0, -grid.p(j)), &base))
        .collect();
    let rows: Vec<Vec<f64>> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let dx = displacement_matrix(C64::new(-grid.x(i), 0.0), work);
            columns
                .iter()
                .map(|col| {
                    let v = col.apply(&dx).expect("same dimension");
                    let parity: f64 = v
                        .amps()
                        .iter()
                        .enumerate()
                        .map(|(k, z)| if k % 2 == 0 { z.norm_sqr() } else { -z.norm_sqr() })
                        .sum();
                    (FRAC_2_PI * parity, (psi.norm_sqr() - v.norm_sqr()).abs())
                })
                .collect::<Vec<_>>()
        })
        .map(|row| row.into_iter().map(|(w, lost)| if lost > 1e-9 { f64::NAN } else { w }).collect())
        .collect();
    let mut out = grid.clone();
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if v.is_nan() {
                return Err(Error::TruncationTooSmall {
                    dim: psi.dim(),
                    tail: f64::NAN,
                });
            }
            out.values[(i, j)] = *v;
        }
    }
    Ok(out)
}

/// Negative volume `int |W| - 1` from the closed-form Wigner function. The
/// integral is taken with the grid's step halved; the Simpson sum at the
/// grid's own step must agree within [`RICHARDSON_TOLERANCE`].
pub fn wigner_negativity(state: &DQState, grid: &PhaseGrid) -> Result<f64> {
    let fine = wigner_grid(state, &grid.refined());
    let ratio = fine.edge_ratio();
    if ratio >= COVERAGE_TOLERANCE {
        return Err(invalid(
            "grid",
            format!("edge |W| is {ratio:.3e} of the peak; enlarge the ranges"),
        ));
    }
    let abs = |w: f64| w.abs();
    let fine_value = simpson_2d(&fine.values, fine.step_x(), fine.step_p(), 1, &abs);
    let coarse_value = simpson_2d(&fine.values, fine.step_x(), fine.step_p(), 2, &abs);
    if (fine_value - coarse_value).abs() > RICHARDSON_TOLERANCE {
        return Err(Error::GridTooCoarse {
            coarse: coarse_value,
            fine: fine_value,
        });
    }
    Ok(fine_value - 1.0)
}

/// Convenience: negativity on the default grid for the state.
pub fn wigner_negativity_default(state: &DQState) -> Result<f64> {
    wigner_negativity(state, &PhaseGrid::for_state(state, GRID_POINTS)?)
}

/// Search box for the HSD maxima.
pub const HSD_ALPHA_SQ_RANGE: (f64, f64) = (0.0, 16.0);
pub const HSD_R_RANGE: (f64, f64) = (0.05, 0.95);
pub const HSD_ALPHA_SQ_STEP: f64 = 0.25;
pub const HSD_R_STEP: f64 = 0.025;

/// HSD of the heralded state at real `alpha`; `None` where the event is impossible.
pub fn cm_hsd(n: usize, m: usize, alpha_sq: f64, reflectivity: f64) -> Option<f64> {
    let cfg = CMConfig::from_alpha_sq(n, m, alpha_sq, reflectivity).ok()?;
    let (state, _) = build_dq(&cfg).ok()?;
    hsd_dq(&state).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsdPoint {
    pub alpha_sq: f64,
    pub reflectivity: f64,
    pub hsd: f64,
    pub min_var: f64,
}

/// HSD and minimal quadrature variance over a grid, row-major in `alpha_sq`.
pub fn hsd_scan(n: usize, m: usize, alpha_sq: &[f64], reflectivity: &[f64]) -> Vec<HsdPoint> {
    alpha_sq
        .par_iter()
        .flat_map_iter(|&a2| {
            reflectivity.iter().map(move |&r| {
                let state = CMConfig::from_alpha_sq(n, m, a2, r)
                    .ok()
                    .and_then(|cfg| build_dq(&cfg).ok())
                    .map(|(s, _)| s);
                let hsd = state.as_ref().and_then(|s| hsd_dq(s).ok()).unwrap_or(f64::NAN);
                let min_var = state.as_ref().map_or(f64::NAN, |s| quadratures(s).min_var);
                HsdPoint {
                    alpha_sq: a2,
                    reflectivity: r,
                    hsd,
                    min_var,
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsdMaximum {
    pub n: usize,
    pub m: usize,
    pub hsd: f64,
    pub alpha_sq: f64,
    pub reflectivity: f64,
    /// Maximizer lies within one coarse step of the box edge.
    pub boundary_hit: bool,
}

pub fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// Largest HSD over the box: coarse grid, then simplex refinement from the
/// best grid points (kept inside the box).
pub fn max_hsd(n: usize, m: usize, alpha_sq_range: (f64, f64), r_range: (f64, f64)) -> HsdMaximum {
    let alphas = axis(alpha_sq_range.0, alpha_sq_range.1, HSD_ALPHA_SQ_STEP);
    let rs = axis(r_range.0, r_range.1, HSD_R_STEP);
    let scan = hsd_scan(n, m, &alphas, &rs);
    let mut ranked: Vec<&HsdPoint> = scan.iter().filter(|p| p.hsd.is_finite()).collect();
    ranked.sort_by(|a, b| b.hsd.total_cmp(&a.hsd));
    let contains = |x: &[f64]| {
        x[0] >= alpha_sq_range.0 && x[0] <= alpha_sq_range.1 && x[1] >= r_range.0 && x[1] <= r_range.1
    };
    let objective = |x: &[f64]| {
        if !contains(x) {
            return f64::INFINITY;
        }
        cm_hsd(n, m, x[0], x[1]).map_or(f64::INFINITY, |v| -v)
    };
    let opts = NelderMeadOptions {
        max_iter: 2_000,
        ftol: 1e-12,
        xtol: 1e-7,
    };
    let mut best = ranked
        .first()
        .map(|p| (p.hsd, p.alpha_sq, p.reflectivity))
        .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    for p in ranked.iter().take(4) {
        // step inward so the initial simplex stays in the box
        let sa = if p.alpha_sq + HSD_ALPHA_SQ_STEP > alpha_sq_range.1 { -0.5 } else { 0.5 } * HSD_ALPHA_SQ_STEP;
        let sr = if p.reflectivity + HSD_R_STEP > r_range.1 { -0.5 } else { 0.5 } * HSD_R_STEP;
        let min = nelder_mead(objective, &[p.alpha_sq, p.reflectivity], &[sa, sr], &opts);
        if -min.f > best.0 {
            best = (-min.f, min.x[0], min.x[1]);
        }
    }
    let (hsd, alpha_sq, reflectivity) = best;
    let boundary_hit = alpha_sq - alpha_sq_range.0 < HSD_ALPHA_SQ_STEP
        || alpha_sq_range.1 - alpha_sq < HSD_ALPHA_SQ_STEP
        || reflectivity - r_range.0 < HSD_R_STEP
        || r_range.1 - reflectivity < HSD_R_STEP;
    HsdMaximum {
        n,
        m,
        hsd,
        alpha_sq,
        reflectivity,
        boundary_hit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::to_fock;
    use crate::fock::coherent;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn t(dim: usize) -> Truncation {
        Truncation::new(dim).unwrap()
    }

    fn fock_state(k: usize) -> DQState {
        let mut coeffs = vec![c(0.0, 0.0); k + 1];
        coeffs[k] = c(1.0, 0.0);
        DQState::new(c(0.0, 0.0), coeffs).unwrap()
    }

    #[test]
    fn references_of_simple_states() {
        let alpha = c(1.1, -0.7);
        let rho = coherent(alpha, t(40)).unwrap().density();
        let g = match_reference(&rho).unwrap();
        assert!((g.gamma - alpha).norm() < 1e-9 && g.r < 1e-6 && g.nbar < 1e-8);

        let th = match_reference(&thermal_density(0.5, t(60)).unwrap()).unwrap();
        assert!(th.gamma.norm() < 1e-12 && th.r < 1e-9 && (th.nbar - 0.5).abs() < 1e-6);

        let one = match_reference(&FockVector::basis(1, t(5)).unwrap().density()).unwrap();
        assert!(one.r < 1e-9 && (one.nbar - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_round_trip() {
        let st = DQState::new(c(0.4, 0.2), vec![c(0.8, 0.1), c(-0.3, 0.2), c(0.2, -0.4)]).unwrap();
        let g = match_reference_dq(&st).unwrap();
        let want = covariance_from_moments(
            moment(&st, 0, 1).unwrap(),
            moment(&st, 0, 2).unwrap(),
            moment(&st, 1, 1).unwrap().re,
        );
        let got = g.covariance();
        for i in 0..2 {
            for j in 0..2 {
                assert!((got[i][j] - want[i][j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reference_reproduces_moments() {
        let g = GaussianRef {
            gamma: c(0.5, -0.3),
            r: 0.4,
            phi: 1.1,
            nbar: 0.3,
        };
        let tau = reference_density(&g, t(70)).unwrap();
        let back = match_reference(&tau).unwrap();
        assert!((back.gamma - g.gamma).norm() < 1e-8);
        assert!((back.r - g.r).abs() < 1e-7 && (back.phi - g.phi).abs() < 1e-7);
        assert!((back.nbar - g.nbar).abs() < 1e-7);
        assert!((tau.purity() - g.purity()).abs() < 1e-8);
    }

    #[test]
    fn gaussian_states_have_zero_distance() {
        let rho = coherent(c(0.9, 0.4), t(40)).unwrap().density();
        assert!(hsd(&rho).unwrap().abs() < 1e-6);
        let sq = FockVector::basis(0, t(60)).unwrap().apply(&squeeze_matrix(0.5, 0.3, t(60))).unwrap();
        assert!(hsd(&sq.density()).unwrap().abs() < 1e-6);
        let vac = DQState::new(c(1.5, -0.5), vec![c(1.0, 0.0)]).unwrap();
        assert!(hsd_dq(&vac).unwrap().abs() < 1e-9);
    }

    #[test]
    fn number_state_distances() {
        assert!((hsd_dq(&fock_state(1)).unwrap() - 5.0 / 12.0).abs() < 1e-9);
        assert!((hsd_dq(&fock_state(2)).unwrap() - 0.451852).abs() < 1e-6);
    }

    #[test]
    fn fast_and_dense_paths_agree() {
        let cfg = CMConfig::from_alpha_sq(2, 1, 5.45, 0.8175).unwrap();
        let (st, _) = build_dq(&cfg).unwrap();
        let fast = hsd_dq(&st).unwrap();
        let rho = to_fock(&st, Truncation::heuristic(2, 1, 5.45)).unwrap().density();
        let dense = hsd(&rho).unwrap();
        assert!((fast - dense).abs() < 1e-8, "{fast} vs {dense}");
    }

    #[test]
    fn distance_is_displacement_invariant() {
        let st = DQState::new(c(0.0, 0.0), vec![c(0.6, 0.0), c(0.3, 0.4), c(-0.5, 0.1)]).unwrap();
        let base = hsd(&to_fock(&st, t(40)).unwrap().density()).unwrap();
        let moved = st.displaced_by(c(1.2, -0.8));
        let shifted = hsd(&to_fock(&moved, t(50)).unwrap().density()).unwrap();
        assert!((base - shifted).abs() < 1e-6);
        assert!((base - hsd_dq(&moved).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn wigner_special_values() {
        let coh = DQState::new(c(1.3, 0.0), vec![c(1.0, 0.0)]).unwrap();
        assert!((wigner_closed(&coh, c(1.3, 0.0)) - FRAC_2_PI).abs() < 1e-14);
        let one = DQState::new(c(-0.4, 0.9), vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((wigner_closed(&one, c(-0.4, 0.9)) + FRAC_2_PI).abs() < 1e-14);
        let vac = FockVector::basis(0, t(5)).unwrap().density();
        assert!((wigner_oracle(&vac, c(0.0, 0.0)).unwrap() - FRAC_2_PI).abs() < 1e-12);
        let th = thermal_density(0.7, t(80)).unwrap();
        assert!((wigner_oracle(&th, c(0.0, 0.0)).unwrap() - FRAC_2_PI / 2.4).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_parity_oracle() {
        let st = DQState::new(c(0.7, -0.2), vec![c(0.5, 0.2), c(-0.1, 0.6), c(0.3, -0.4), c(0.2, 0.1)]).unwrap();
        let psi = to_fock(&st, t(40)).unwrap();
        let rho = psi.density();
        for beta in [c(0.0, 0.0), c(0.7, -0.2), c(1.5, 0.8), c(-1.1, -1.7), c(2.9, 0.3)] {
            let closed = wigner_closed(&st, beta);
            assert!((closed - wigner_oracle(&rho, beta).unwrap()).abs() < 1e-9);
            assert!((closed - wigner_oracle_pure(&psi, beta).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_oracle_matches_closed_form() {
        let st = DQState::new(c(0.5, 0.5), vec![c(0.8, 0.0), c(0.0, 0.3), c(-0.5, 0.0)]).unwrap();
        let psi = to_fock(&st, t(35)).unwrap();
        let grid = PhaseGrid::layout((-2.5, 3.5), (-2.5, 3.5), 21, 21).unwrap();
        let oracle = wigner_grid_oracle(&psi, &grid).unwrap();
        let closed = wigner_grid(&st, &grid);
        assert!((oracle.values - closed.values).amax() < 1e-9);
    }

    #[test]
    fn normalization_and_negativity() {
        let coh = DQState::new(c(2.0, -1.0), vec![c(1.0, 0.0)]).unwrap();
        let grid = PhaseGrid::for_state(&coh, GRID_POINTS).unwrap();
        let w = wigner_grid(&coh, &grid);
        assert!((w.integrate(|v| v) - 1.0).abs() < 1e-6);
        assert!(wigner_negativity(&coh, &grid).unwrap().abs() < 1e-4);

        let one = fock_state(1).displaced_by(c(0.5, 0.5));
        let wn = wigner_negativity_default(&one).unwrap();
        // |W| integrates to 4 e^{-1/2} - 1 for |1>
        assert!((wn - (4.0 * (-0.5f64).exp() - 2.0)).abs() < 1e-4, "{wn}");
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let one = fock_state(2);
        let grid = PhaseGrid::layout((-1.0, 1.0), (-1.0, 1.0), 11, 11).unwrap();
        assert!(wigner_negativity(&one, &grid).is_err());
        let coarse = PhaseGrid::layout((-6.0, 6.0), (-6.0, 6.0), 5, 5).unwrap();
        assert!(matches!(
            wigner_negativity(&one, &coarse),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn layout_requires_odd_counts() {
        assert!(PhaseGrid::layout((0.0, 1.0), (0.0, 1.0), 10, 11).is_err());
        assert!(PhaseGrid::layout((1.0, 1.0), (0.0, 1.0), 11, 11).is_err());
    }
}
