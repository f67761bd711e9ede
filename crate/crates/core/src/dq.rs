//! Displaced qudits produced by conditional photon measurement.
//!
//! A coherent state `|alpha>` and a number state `|n>` meet on a beam splitter
//! of reflectivity `R`; detecting `m` photons in the second output leaves
//!
//! ```text
//! |psi>_nm = D(alpha sqrt(R)) sum_{q=0..n} A_nmq |q>
//! A_nmq ∝ C(n,q) sqrt(q!) ((1-R)/R)^{q/2} H_{n-q,m}(alpha* sqrt(1-R), alpha sqrt(1-R))
//! ```
//!
//! For real `alpha` both Hermite arguments coincide. The conjugate on the
//! first argument is what the two-mode simulation in [`crate::fock`] yields
//! for complex amplitudes.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fock::{displacement_matrix, FockVector, Truncation, TAIL_TOLERANCE};
use crate::polynomials::{binomial, factorial, hermite2, laguerre};

/// One conditional-measurement run: input `|n>`, detection of `m` photons,
/// coherent amplitude `alpha`, reflectivity `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CMConfig {
    pub n: usize,
    pub m: usize,
    #[serde(serialize_with = "serialize_complex")]
    pub alpha: C64,
    pub reflectivity: f64,
}

impl CMConfig {
    pub fn new(n: usize, m: usize, alpha: C64, reflectivity: f64) -> Result<Self> {
        if !(reflectivity > 0.0 && reflectivity < 1.0) {
            return Err(invalid("R", format!("{reflectivity} not in (0, 1)")));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(invalid("alpha", "must be finite"));
        }
        Ok(Self {
            n,
            m,
            alpha,
            reflectivity,
        })
    }

    /// Real, non-negative amplitude `alpha = sqrt(alpha_sq)`.
    pub fn from_alpha_sq(n: usize, m: usize, alpha_sq: f64, reflectivity: f64) -> Result<Self> {
        if !(alpha_sq >= 0.0) {
            return Err(invalid("alpha_sq", format!("{alpha_sq} must be >= 0")));
        }
        Self::new(n, m, C64::new(alpha_sq.sqrt(), 0.0), reflectivity)
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// `chi = |alpha|^2 (1 - R)`.
    pub fn chi(&self) -> f64 {
        self.alpha_sq() * (1.0 - self.reflectivity)
    }

    pub fn displacement(&self) -> C64 {
        self.alpha * self.reflectivity.sqrt()
    }

    pub fn class(&self) -> DQClass {
        classify(self.n, self.m)
    }

    /// `R^n e^{-chi} / (m! n!)`: converts squared unnormalized coefficients
    /// into the detection probability.
    fn probability_prefactor(&self) -> f64 {
        self.reflectivity.powi(self.n as i32) * (-self.chi()).exp()
            / (factorial(self.m as u32) * factorial(self.n as u32))
    }

    fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha: C64::new(alpha, 0.0),
            ..*self
        }
    }
}

pub fn chi(cfg: &CMConfig) -> f64 {
    cfg.chi()
}

/// Photon-added (`m < n`), subtracted (`m > n`) or catalyzed (`m = n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DQClass {
    Added(usize),
    Subtracted(usize),
    Catalyzed,
}

pub fn classify(n: usize, m: usize) -> DQClass {
    use std::cmp::Ordering::*;
    match m.cmp(&n) {
        Less => DQClass::Added(n - m),
        Greater => DQClass::Subtracted(m - n),
        Equal => DQClass::Catalyzed,
    }
}

impl std::fmt::Display for DQClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DQClass::Added(k) => write!(f, "photon-added (+{k})"),
            DQClass::Subtracted(k) => write!(f, "photon-subtracted (-{k})"),
            DQClass::Catalyzed => write!(f, "photon-catalyzed"),
        }
    }
}

/// Unnormalized superposition coefficient of `|q>` (Hermite form).
pub fn coefficient(cfg: &CMConfig, q: usize) -> C64 {
    if q > cfg.n {
        return C64::new(0.0, 0.0);
    }
    let r = cfg.reflectivity;
    let s = (1.0 - r).sqrt();
    let weight = binomial(cfg.n as u32, q as u32)
        * factorial(q as u32).sqrt()
        * ((1.0 - r) / r).powf(q as f64 / 2.0);
    let h = hermite2(
        (cfg.n - q) as u32,
        cfg.m as u32,
        cfg.alpha.conj() * s,
        cfg.alpha * s,
    );
    h * weight
}

/// The same coefficient through associated Laguerre polynomials. Uses the
/// order-`(n-q)` form when `m >= n` and the order-`m` form when `m < n`.
///
/// In the `m < n` branch the power of `alpha` is negative for `q > n - m`,
/// so `alpha = 0` is not supported there.
pub fn coefficient_laguerre(cfg: &CMConfig, q: usize) -> C64 {
    if q > cfg.n {
        return C64::new(0.0, 0.0);
    }
    let (n, m) = (cfg.n as i64, cfg.m as i64);
    let qi = q as i64;
    let r = cfg.reflectivity;
    let s = (1.0 - r).sqrt();
    let chi = C64::new(cfg.chi(), 0.0);
    let weight = binomial(cfg.n as u32, q as u32)
        * factorial(q as u32).sqrt()
        * ((1.0 - r) / r).powf(q as f64 / 2.0);
    if m >= n {
        let order = (n - qi) as u32;
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        let upper = (m - n + qi) as i32;
        (cfg.alpha * s).powi(upper) * laguerre(order, upper, chi) * (sign * factorial(order) * weight)
    } else {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let upper = (n - m - qi) as i32;
        (cfg.alpha.conj() * s).powi(upper)
            * laguerre(cfg.m as u32, upper, chi)
            * (sign * factorial(cfg.m as u32) * weight)
    }
}

/// `D(displacement) sum_q coeffs[q] |q>` with unit-norm `coeffs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DQState {
    #[serde(serialize_with = "serialize_complex")]
    displacement: C64,
    #[serde(serialize_with = "serialize_complex_vec")]
    coeffs: Vec<C64>,
    config: Option<CMConfig>,
}

impl DQState {
    /// Normalizes `coeffs`; fails if they all vanish.
    pub fn new(displacement: C64, coeffs: Vec<C64>) -> Result<Self> {
        Self::build(displacement, coeffs, None)
    }

    fn build(displacement: C64, coeffs: Vec<C64>, config: Option<CMConfig>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("coeffs", "need at least one coefficient"));
        }
        let norm_sqr: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if !(norm_sqr > 1e-300) || !norm_sqr.is_finite() {
            return Err(Error::ZeroProbability(norm_sqr));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        Ok(Self {
            displacement,
            coeffs: coeffs.into_iter().map(|c| c * scale).collect(),
            config,
        })
    }

    pub fn displacement(&self) -> C64 {
        self.displacement
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, q: usize) -> C64 {
        self.coeffs.get(q).copied().unwrap_or_default()
    }

    pub fn config(&self) -> Option<&CMConfig> {
        self.config.as_ref()
    }

    /// Highest number state in the superposition.
    pub fn max_photon(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Same qudit, additionally displaced by `beta`. The result is the
    /// state `D(beta) D(displacement) |phi>` up to a global phase.
    pub fn displaced_by(&self, beta: C64) -> Self {
        Self {
            displacement: self.displacement + beta,
            coeffs: self.coeffs.clone(),
            config: None,
        }
    }

    /// Qudit part without displacement, padded to `t`.
    pub fn qudit_vector(&self, t: Truncation) -> Result<FockVector> {
        if t.dim() < self.coeffs.len() {
            return Err(Error::TruncationTooSmall {
                dim: t.dim(),
                tail: 1.0,
            });
        }
        FockVector::new(self.coeffs.clone()).map(|v| v.resized(t.dim()))
    }

    /// Mean photon number of the displaced state.
    pub fn mean_photon_number(&self) -> f64 {
        let d = self.displacement;
        let mut mean_a = C64::new(0.0, 0.0);
        let mut n = 0.0;
        for (q, c) in self.coeffs.iter().enumerate() {
            n += q as f64 * c.norm_sqr();
            if q > 0 {
                mean_a += self.coeffs[q - 1].conj() * c * (q as f64).sqrt();
            }
        }
        n + 2.0 * (d.conj() * mean_a).re + d.norm_sqr()
    }
}

/// Closed-form displaced qudit and its ideal heralding probability.
pub fn build_dq(cfg: &CMConfig) -> Result<(DQState, f64)> {
    let raw: Vec<C64> = (0..=cfg.n).map(|q| coefficient(cfg, q)).collect();
    let sum: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
    let prob = cfg.probability_prefactor() * sum;
    if !(sum > 1e-300) || !(prob > 0.0) {
        return Err(Error::ZeroProbability(prob));
    }
    let state = DQState::build(cfg.displacement(), raw, Some(*cfg))?;
    Ok((state, prob))
}

/// Ideal heralding probability `1/N_nm^2`.
pub fn success_probability(cfg: &CMConfig) -> f64 {
    let sum: f64 = (0..=cfg.n).map(|q| coefficient(cfg, q).norm_sqr()).sum();
    cfg.probability_prefactor() * sum
}

/// Expand a displaced qudit in the number basis.
pub fn to_fock(state: &DQState, t: Truncation) -> Result<FockVector> {
    // exponentiate on a padded space so the truncated generator's edge error
    // stays outside the returned levels
    let work = t.padded(12);
    let qudit = state.qudit_vector(work)?;
    let full = qudit.apply(&displacement_matrix(state.displacement, work))?;
    let cut = full.resized(t.dim());
    let lost = (full.norm_sqr() - cut.norm_sqr()).abs() + cut.tail_mass(2);
    if lost >= TAIL_TOLERANCE {
        return Err(Error::TruncationTooSmall {
            dim: t.dim(),
            tail: lost,
        });
    }
    Ok(cut)
}

/// Condition sought by [`locus_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocusTarget {
    /// The unnormalized coefficient of `|q>` vanishes.
    CoefficientZero,
    /// `|A_q| = |A_other|`.
    EqualSuperposition { other: usize },
}

/// Upper end of the real-amplitude search interval for [`locus_solve`].
pub const LOCUS_ALPHA_MAX: f64 = 12.0;
const LOCUS_SCAN_STEPS: usize = 12_000;
const LOCUS_TOL: f64 = 1e-10;

/// Real amplitudes `alpha` in `(0, 12]` at fixed `R` meeting `target`
/// for coefficient `q`, located by sign changes and bisection.
pub fn locus_solve(
    n: usize,
    m: usize,
    q: usize,
    target: LocusTarget,
    reflectivity: f64,
) -> Result<Vec<f64>> {
    let base = CMConfig::new(n, m, C64::new(1.0, 0.0), reflectivity)?;
    if q > n {
        return Err(invalid("q", format!("{q} exceeds n = {n}")));
    }
    if let LocusTarget::EqualSuperposition { other } = target {
        if other > n || other == q {
            return Err(invalid("other", format!("{other} is not a distinct level <= {n}")));
        }
    }
    let f = |alpha: f64| -> f64 {
        let cfg = base.with_alpha(alpha);
        match target {
            LocusTarget::CoefficientZero => coefficient(&cfg, q).re,
            LocusTarget::EqualSuperposition { other } => {
                coefficient(&cfg, q).norm() - coefficient(&cfg, other).norm()
            }
        }
    };

    let h = LOCUS_ALPHA_MAX / LOCUS_SCAN_STEPS as f64;
    let mut roots = Vec::new();
    let mut lo = h;
    let mut f_lo = f(lo);
    for i in 2..=LOCUS_SCAN_STEPS {
        let hi = h * i as f64;
        let f_hi = f(hi);
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo.signum() != f_hi.signum() && f_hi != 0.0 {
            roots.push(bisect(&f, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    if f_lo == 0.0 {
        roots.push(lo);
    }
    if roots.is_empty() {
        return Err(Error::NoRootInBracket {
            lo: 0.0,
            hi: LOCUS_ALPHA_MAX,
        });
    }
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > LOCUS_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real amplitude reaching a given `chi` at reflectivity `R`.
pub fn alpha_for_chi(chi: f64, reflectivity: f64) -> f64 {
    (chi / (1.0 - reflectivity)).sqrt()
}

pub(crate) fn serialize_complex<S: serde::Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

fn serialize_complex_vec<S: serde::Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::brute_force_cm;

    fn cfg(n: usize, m: usize, alpha_sq: f64, r: f64) -> CMConfig {
        CMConfig::from_alpha_sq(n, m, alpha_sq, r).unwrap()
    }

    #[test]
    fn classification() {
        assert_eq!(classify(2, 1), DQClass::Added(1));
        assert_eq!(classify(3, 1), DQClass::Added(2));
        assert_eq!(classify(1, 3), DQClass::Subtracted(2));
        assert_eq!(classify(3, 3), DQClass::Catalyzed);
    }

    #[test]
    fn chi_arithmetic() {
        let c = CMConfig::new(1, 0, C64::new(2.0, 0.0), 0.75).unwrap();
        assert!((chi(&c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_reflectivity() {
        assert!(CMConfig::from_alpha_sq(1, 1, 1.0, 0.0).is_err());
        assert!(CMConfig::from_alpha_sq(1, 1, 1.0, 1.0).is_err());
        assert!(CMConfig::from_alpha_sq(1, 1, -1.0, 0.5).is_err());
    }

    #[test]
    fn qubit_ratio_from_vacuum_detection() {
        let c = cfg(1, 0, 2.3, 0.4);
        let ratio = coefficient(&c, 0) / coefficient(&c, 1);
        assert!((ratio - c.displacement()).norm() < 1e-12);
    }

    #[test]
    fn printed_low_order_coefficients() {
        // A_12q and A_21q as explicit polynomials in alpha, R
        let (a, r) = (1.7f64, 0.35f64);
        let c12 = CMConfig::new(1, 2, C64::new(a, 0.0), r).unwrap();
        let x = a * (1.0 - r).sqrt();
        let chi = x * x;
        assert!((coefficient(&c12, 0).re - x * (chi - 2.0)).abs() < 1e-12);
        assert!((coefficient(&c12, 1).re - a * a * ((1.0 - r).powi(3) / r).sqrt()).abs() < 1e-12);

        let c21 = CMConfig::new(2, 1, C64::new(a, 0.0), r).unwrap();
        assert!((coefficient(&c21, 0).re - x * (chi - 2.0)).abs() < 1e-12);
        assert!((coefficient(&c21, 1).re - 2.0 * ((1.0 - r) / r).sqrt() * (chi - 1.0)).abs() < 1e-12);
        assert!((coefficient(&c21, 2).re - 2f64.sqrt() * a * (1.0 - r).powf(1.5) / r).abs() < 1e-12);

        let c23 = CMConfig::new(2, 3, C64::new(a, 0.0), r).unwrap();
        let expect0 = x * (chi * chi - 6.0 * chi + 6.0);
        assert!((coefficient(&c23, 0).re - expect0).abs() < 1e-11);
    }

    #[test]
    fn vanishing_coefficients_at_chi_roots() {
        let r = 0.6;
        let at = |n, m, chi: f64| CMConfig::new(n, m, C64::new(alpha_for_chi(chi, r), 0.0), r).unwrap();
        assert!(coefficient(&at(1, 2, 2.0), 0).norm() < 1e-12);
        assert!(coefficient(&at(2, 1, 1.0), 1).norm() < 1e-12);
        assert!(coefficient(&at(2, 1, 2.0), 0).norm() < 1e-12);
        assert!(coefficient(&at(2, 3, 3.0), 1).norm() < 1e-11);
        for chi in [3.0 - 3f64.sqrt(), 3.0 + 3f64.sqrt()] {
            assert!(coefficient(&at(2, 3, chi), 0).norm() < 1e-11);
        }
    }

    #[test]
    fn laguerre_forms_agree() {
        for (n, m) in [(1, 0), (2, 3), (3, 1), (2, 2), (4, 6), (5, 0)] {
            let c = CMConfig::new(n, m, C64::new(1.3, -0.7), 0.42).unwrap();
            for q in 0..=n {
                let h = coefficient(&c, q);
                let l = coefficient_laguerre(&c, q);
                assert!((h - l).norm() <= 1e-10 * h.norm().max(1e-300), "n={n} m={m} q={q}: {h} vs {l}");
            }
        }
    }

    #[test]
    fn vacuum_input_is_coherent() {
        let c = CMConfig::new(0, 0, C64::new(1.2, 0.5), 0.3).unwrap();
        let (st, p) = build_dq(&c).unwrap();
        assert_eq!(st.coeffs(), &[C64::new(1.0, 0.0)]);
        assert_eq!(st.displacement(), c.displacement());
        assert!((p - (-c.chi()).exp()).abs() < 1e-14);
    }

    #[test]
    fn zero_amplitude_catalysis() {
        let c = CMConfig::new(1, 1, C64::new(0.0, 0.0), 0.55).unwrap();
        let (st, p) = build_dq(&c).unwrap();
        assert!((st.coeff(0).norm() - 1.0).abs() < 1e-15);
        assert_eq!(st.coeff(1).norm(), 0.0);
        assert!((p - 0.55).abs() < 1e-14);
    }

    #[test]
    fn impossible_event_is_zero_probability() {
        // alpha = 0, |1> input cannot yield two detected photons
        let c = CMConfig::new(1, 2, C64::new(0.0, 0.0), 0.5).unwrap();
        assert!(matches!(build_dq(&c), Err(Error::ZeroProbability(_))));
    }

    #[test]
    fn closed_form_matches_simulation() {
        for &(n, m, a, r) in &[(1usize, 0usize, C64::new(1.0, 0.0), 0.5), (2, 3, C64::new(0.8, 1.1), 0.3), (3, 1, C64::new(-1.2, 0.4), 0.8)] {
            let c = CMConfig::new(n, m, a, r).unwrap();
            let t = Truncation::heuristic(n, m, c.alpha_sq());
            let (st, p) = build_dq(&c).unwrap();
            let (bf, pb) = brute_force_cm(n, m, a, r, t).unwrap();
            let ov = to_fock(&st, t).unwrap().overlap(&bf).unwrap().norm();
            assert!((ov - 1.0).abs() < 1e-8, "overlap {ov}");
            assert!((p - pb).abs() < 1e-8);
        }
    }

    #[test]
    fn equal_superposition_from_vacuum_detection() {
        let r = 0.64;
        let roots = locus_solve(1, 0, 0, LocusTarget::EqualSuperposition { other: 1 }, r).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 1.0 / r.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_locus_of_subtracted_qutrit() {
        let r = 0.5;
        let roots = locus_solve(2, 3, 0, LocusTarget::CoefficientZero, r).unwrap();
        let chis: Vec<f64> = roots.iter().map(|a| a * a * (1.0 - r)).collect();
        assert_eq!(chis.len(), 2);
        assert!((chis[0] - (3.0 - 3f64.sqrt())).abs() < 1e-8);
        assert!((chis[1] - (3.0 + 3f64.sqrt())).abs() < 1e-8);
        assert!((roots[0] * (1.0 - r).sqrt() - 1.1260).abs() < 1e-4);
    }

    #[test]
    fn no_root_reports_bracket() {
        // the |1> coefficient of DQ_2^{+1} is a positive constant
        let err = locus_solve(1, 0, 1, LocusTarget::CoefficientZero, 0.5).unwrap_err();
        assert!(matches!(err, Error::NoRootInBracket { .. }));
    }

    #[test]
    fn to_fock_without_displacement_is_padding() {
        let st = DQState::new(C64::new(0.0, 0.0), vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let v = to_fock(&st, Truncation::new(6).unwrap()).unwrap();
        assert_eq!(v.dim(), 6);
        assert!((v.amp(0) - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((v.amp(1) - C64::new(0.0, 0.8)).norm() < 1e-15);
        assert!(v.amp(2).norm() < 1e-15);
    }

    #[test]
    fn mean_photon_number_matches_fock_expansion() {
        let st = DQState::new(C64::new(0.9, -0.4), vec![C64::new(0.5, 0.1), C64::new(-0.3, 0.6), C64::new(0.2, 0.0)]).unwrap();
        let v = to_fock(&st, Truncation::new(40).unwrap()).unwrap();
        assert!((st.mean_photon_number() - v.expect_normal_ordered(1, 1).re).abs() < 1e-10);
    }
}
