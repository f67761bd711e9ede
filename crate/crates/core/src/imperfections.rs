//! Heralding with an inefficient number-resolving detector and an impure
//! single-mode source.
//!
//! The source emits `(1 - eta_s)|0><0| + eta_s |n><n|`; the detector's
//! element for `m` counts is `sum_k C(k,m) eta_d^m (1-eta_d)^(k-m) |k><k|`.
//! Both the input mixture and the detector are diagonal in the pure
//! components, so the realized state is assembled from the conditional
//! mode-1 vectors `<k|_2 U |alpha>|j>` for `j in {0, n}`.

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::dq::{build_dq, to_fock, CMConfig};
use crate::error::{invalid, Error, Result};
use crate::fock::{
    evolve_coherent_and_number, CMatrix, DensityMatrix, FockVector, Truncation, TAIL_TOLERANCE,
};
use crate::polynomials::binomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImperfectionParams {
    pub eta_d: f64,
    pub eta_s: f64,
}

impl ImperfectionParams {
    pub fn new(eta_d: f64, eta_s: f64) -> Result<Self> {
        for (name, v) in [("eta_d", eta_d), ("eta_s", eta_s)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("{v} is outside [0, 1]")));
            }
        }
        Ok(Self { eta_d, eta_s })
    }

    pub fn ideal() -> Self {
        Self {
            eta_d: 1.0,
            eta_s: 1.0,
        }
    }
}

/// Diagonal of the POVM element for `m` counts over `dim` levels.
pub fn povm_weights(m: usize, eta_d: f64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            if k < m {
                0.0
            } else {
                binomial(k as u32, m as u32) * eta_d.powi(m as i32) * (1.0 - eta_d).powi((k - m) as i32)
            }
        })
        .collect()
}

pub fn povm_element(m: usize, eta_d: f64, t: Truncation) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta_d) {
        return Err(invalid("eta_d", format!("{eta_d} is outside [0, 1]")));
    }
    let diag = povm_weights(m, eta_d, t.dim());
    DensityMatrix::from_matrix(CMatrix::from_diagonal(&DVector::from_iterator(
        t.dim(),
        diag.into_iter().map(|w| C64::new(w, 0.0)),
    )))
}

pub fn mixed_source(n: usize, eta_s: f64, t: Truncation) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta_s) {
        return Err(invalid("eta_s", format!("{eta_s} is outside [0, 1]")));
    }
    if n >= t.dim() {
        return Err(Error::TruncationTooSmall { dim: t.dim(), tail: eta_s });
    }
    let mut mat = CMatrix::zeros(t.dim(), t.dim());
    mat[(0, 0)] += C64::new(1.0 - eta_s, 0.0);
    mat[(n, n)] += C64::new(eta_s, 0.0);
    DensityMatrix::from_matrix(mat)
}

/// Unnormalized mode-1 vectors for every detector level `k`, for the
/// vacuum and the `|n>` source component. They do not depend on the
/// efficiencies, so scans over `(eta_d, eta_s)` reuse them.
#[derive(Debug, Clone)]
pub struct HeraldedOutputs {
    pub cfg: CMConfig,
    pub truncation: Truncation,
    /// `vacuum[k] = <k|_2 U |alpha>|0>`.
    pub vacuum: Vec<FockVector>,
    /// `photons[k] = <k|_2 U |alpha>|n>`.
    pub photons: Vec<FockVector>,
}

fn conditional_vectors(cfg: &CMConfig, j: usize, t: Truncation) -> Result<Vec<FockVector>> {
    let out = evolve_coherent_and_number(cfg.alpha, j, cfg.reflectivity, t)?;
    let (_, cols) = out.dims();
    let mut kept_total = 0.0;
    let mut vectors = Vec::with_capacity(cols);
    for k in 0..cols {
        let v = out.project_second(k).expect("column in range");
        let cut = v.resized(t.dim());
        kept_total += cut.norm_sqr();
        vectors.push(cut);
    }
    let lost = out.norm_sqr() - kept_total;
    if lost > TAIL_TOLERANCE {
        return Err(Error::TruncationTooSmall {
            dim: t.dim(),
            tail: lost,
        });
    }
    Ok(vectors)
}

impl HeraldedOutputs {
    pub fn new(cfg: &CMConfig, t: Truncation) -> Result<Self> {
        let vacuum = conditional_vectors(cfg, 0, t)?;
        let photons = if cfg.n == 0 {
            vacuum.clone()
        } else {
            conditional_vectors(cfg, cfg.n, t)?
        };
        Ok(Self {
            cfg: *cfg,
            truncation: t,
            vacuum,
            photons,
        })
    }

    fn weighted_terms(&self, imp: ImperfectionParams) -> impl Iterator<Item = (f64, &FockVector)> {
        let levels = self.vacuum.len().max(self.photons.len());
        let w = povm_weights(self.cfg.m, imp.eta_d, levels);
        let source = [(1.0 - imp.eta_s, &self.vacuum), (imp.eta_s, &self.photons)];
        source.into_iter().flat_map(move |(p, vs)| {
            let w = w.clone();
            vs.iter().enumerate().map(move |(k, v)| (p * w[k], v)).filter(|(c, _)| *c > 0.0)
        })
    }

    /// Normalized realized state and the heralding probability.
    pub fn realized(&self, imp: ImperfectionParams) -> Result<(DensityMatrix, f64)> {
        let d = self.truncation.dim();
        let mut mat = CMatrix::zeros(d, d);
        for (c, v) in self.weighted_terms(imp) {
            mat.gerc(C64::new(c, 0.0), v.amps(), v.amps(), C64::new(1.0, 0.0));
        }
        let rho = DensityMatrix::from_matrix(mat)?;
        let prob = rho.trace();
        if !(prob > 1e-300) {
            return Err(Error::ZeroProbability(prob));
        }
        Ok((rho.normalized()?, prob))
    }

    /// Heralding probability alone.
    pub fn success_probability(&self, imp: ImperfectionParams) -> f64 {
        self.weighted_terms(imp).map(|(c, v)| c * v.norm_sqr()).sum()
    }

    /// `<psi| rho_R |psi>` and the heralding probability, without forming `rho_R`.
    pub fn fidelity_with(&self, ideal: &FockVector, imp: ImperfectionParams) -> Result<(f64, f64)> {
        let mut num = 0.0;
        let mut prob = 0.0;
        for (c, v) in self.weighted_terms(imp) {
            num += c * ideal.overlap(v)?.norm_sqr();
            prob += c * v.norm_sqr();
        }
        if !(prob > 1e-300) {
            return Err(Error::ZeroProbability(prob));
        }
        Ok((num / prob, prob))
    }
}

/// Realized mixed output and the heralding probability under imperfections.
pub fn realized_state(cfg: &CMConfig, imp: ImperfectionParams, t: Truncation) -> Result<(DensityMatrix, f64)> {
    HeraldedOutputs::new(cfg, t)?.realized(imp)
}

/// Ideal heralded state expanded in `t`.
pub fn ideal_vector(cfg: &CMConfig, t: Truncation) -> Result<FockVector> {
    let (state, _) = build_dq(cfg)?;
    to_fock(&state, t)
}

/// `Tr(rho_I rho_R)`.
pub fn realized_fidelity(cfg: &CMConfig, imp: ImperfectionParams, t: Truncation) -> Result<f64> {
    let ideal = ideal_vector(cfg, t)?;
    HeraldedOutputs::new(cfg, t)?.fidelity_with(&ideal, imp).map(|(f, _)| f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityCell {
    pub eta_d: f64,
    pub eta_s: f64,
    pub fidelity: f64,
    pub success_prob: f64,
}

fn linspace((lo, hi): (f64, f64), steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![hi];
    }
    (0..steps)
        .map(|i| if i + 1 == steps { hi } else { lo + (hi - lo) * i as f64 / (steps - 1) as f64 })
        .collect()
}

/// Fidelity and success probability over `steps x steps` efficiencies
/// (endpoints included), row-major in `eta_d`.
pub fn fidelity_heatmap(
    cfg: &CMConfig,
    eta_d_range: (f64, f64),
    eta_s_range: (f64, f64),
    steps: usize,
    t: Truncation,
) -> Result<Vec<FidelityCell>> {
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    for (name, (lo, hi)) in [("eta_d", eta_d_range), ("eta_s", eta_s_range)] {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(invalid(name, format!("range [{lo}, {hi}] is not inside [0, 1]")));
        }
    }
    let outputs = HeraldedOutputs::new(cfg, t)?;
    let ideal = ideal_vector(cfg, t)?;
    let ds = linspace(eta_d_range, steps);
    let ss = linspace(eta_s_range, steps);
    let cells: Vec<Result<FidelityCell>> = ds
        .par_iter()
        .flat_map_iter(|&eta_d| {
            let (outputs, ideal) = (&outputs, &ideal);
            ss.iter().map(move |&eta_s| {
                let (fidelity, success_prob) = outputs.fidelity_with(ideal, ImperfectionParams { eta_d, eta_s })?;
                Ok(FidelityCell {
                    eta_d,
                    eta_s,
                    fidelity,
                    success_prob,
                })
            })
        })
        .collect();
    cells.into_iter().collect()
}
