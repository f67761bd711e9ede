//! Truncated Fock-space linear algebra.
//!
//! Single-mode states live in `span{|0>, ..., |dim-1>}`. The two-mode
//! beam splitter conserves total photon number, so it is stored as one
//! dense orthogonal block per photon-number sector; every block is the
//! matrix exponential of the generator restricted to that sector and is
//! therefore exact (no edge error from per-mode truncation).

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub type CMatrix = DMatrix<C64>;

/// Discarded probability mass tolerated when a state is cut to a truncation.
pub const TAIL_TOLERANCE: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Number of retained Fock levels (indices `0..dim`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Truncation {
    dim: usize,
}

impl Truncation {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "truncation needs at least one level"));
        }
        Ok(Self { dim })
    }

    /// Default cutoff for a conditional-measurement run with input `|n>`,
    /// detection of `m` photons and coherent intensity `alpha_sq`.
    pub fn heuristic(n: usize, m: usize, alpha_sq: f64) -> Self {
        let spread = alpha_sq + 7.0 * alpha_sq.sqrt();
        let dim = spread.ceil() as usize + n + m + 15;
        Self { dim: dim.max(25) }
    }

    pub fn dim(self) -> usize {
        self.dim
    }

    pub fn padded(self, extra: usize) -> Self {
        Self {
            dim: self.dim + extra,
        }
    }
}

/// Complex amplitude vector over the truncated number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amps: DVector<C64>,
}

impl FockVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(invalid("amplitudes", "empty state vector"));
        }
        Ok(Self {
            amps: DVector::from_vec(amps),
        })
    }

    pub fn from_dvector(amps: DVector<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(invalid("amplitudes", "empty state vector"));
        }
        Ok(Self { amps })
    }

    pub fn basis(k: usize, t: Truncation) -> Result<Self> {
        if k >= t.dim() {
            return Err(Error::TruncationTooSmall {
                dim: t.dim(),
                tail: 1.0,
            });
        }
        let mut amps = DVector::from_element(t.dim(), ZERO);
        amps[k] = ONE;
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amp(&self, k: usize) -> C64 {
        self.amps.get(k).copied().unwrap_or(ZERO)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > 1e-300) {
            return Err(Error::ZeroProbability(n2));
        }
        Ok(Self {
            amps: &self.amps / C64::new(n2.sqrt(), 0.0),
        })
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &FockVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    /// Probability mass carried by the highest `levels` basis states.
    pub fn tail_mass(&self, levels: usize) -> f64 {
        let start = self.dim().saturating_sub(levels);
        self.amps.iter().skip(start).map(|a| a.norm_sqr()).sum()
    }

    /// Copy into a truncation of `dim` levels, zero-padding or cutting.
    pub fn resized(&self, dim: usize) -> FockVector {
        let mut amps = DVector::from_element(dim, ZERO);
        for (k, a) in self.amps.iter().take(dim).enumerate() {
            amps[k] = *a;
        }
        FockVector { amps }
    }

    pub fn apply(&self, op: &CMatrix) -> Result<FockVector> {
        if op.ncols() != self.dim() || op.nrows() != self.dim() {
            return Err(Error::DimensionMismatch(op.ncols(), self.dim()));
        }
        Ok(FockVector {
            amps: op * &self.amps,
        })
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: &self.amps * self.amps.adjoint(),
        }
    }

    /// `<psi| (a^dag)^l a^s |psi>` with the truncated annihilator.
    pub fn expect_normal_ordered(&self, l: usize, s: usize) -> C64 {
        let a = annihilation_matrix(Truncation { dim: self.dim() });
        let mut left = self.amps.clone();
        for _ in 0..l {
            left = &a * left;
        }
        let mut right = self.amps.clone();
        for _ in 0..s {
            right = &a * right;
        }
        left.dotc(&right)
    }
}

/// Hermitian, positive, trace-one (or sub-normalized) operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch(mat.nrows(), mat.ncols()));
        }
        if mat.nrows() == 0 {
            return Err(invalid("density matrix", "empty matrix"));
        }
        Ok(Self { mat })
    }

    pub fn pure(psi: &FockVector) -> Self {
        psi.density()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 1e-300) {
            return Err(Error::ZeroProbability(tr));
        }
        Ok(Self {
            mat: &self.mat / C64::new(tr, 0.0),
        })
    }

    pub fn purity(&self) -> f64 {
        purity(self)
    }

    /// `max |rho - rho^dag|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `Tr(rho op)`.
    pub fn expect(&self, op: &CMatrix) -> Result<C64> {
        if op.nrows() != self.dim() || op.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(op.nrows(), self.dim()));
        }
        Ok(trace_of_product(&self.mat, op))
    }

    /// `U rho U^dag`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        if u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(u.ncols(), self.dim()));
        }
        Ok(Self {
            mat: u * &self.mat * u.adjoint(),
        })
    }

    /// Upper-left `dim x dim` block.
    pub fn cropped(&self, dim: usize) -> Self {
        let d = dim.min(self.dim());
        Self {
            mat: self.mat.view((0, 0), (d, d)).into_owned(),
        }
    }

    /// Zero-padded (or cropped) copy of size `dim`.
    pub fn resized(&self, dim: usize) -> Self {
        let mut mat = CMatrix::from_element(dim, dim, ZERO);
        let d = dim.min(self.dim());
        mat.view_mut((0, 0), (d, d))
            .copy_from(&self.mat.view((0, 0), (d, d)));
        Self { mat }
    }
}

fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn annihilation_matrix(t: Truncation) -> CMatrix {
    let d = t.dim();
    let mut a = CMatrix::from_element(d, d, ZERO);
    for k in 1..d {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

pub fn number_matrix(t: Truncation) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        t.dim(),
        (0..t.dim()).map(|k| C64::new(k as f64, 0.0)),
    ))
}

/// `exp(beta a^dag - beta* a)` on the truncated generator.
pub fn displacement_matrix(beta: C64, t: Truncation) -> CMatrix {
    if beta == ZERO {
        return CMatrix::identity(t.dim(), t.dim());
    }
    let a = annihilation_matrix(t);
    let gen = a.adjoint() * beta - &a * beta.conj();
    gen.exp()
}

/// `exp(1/2 (zeta a^dag^2 - zeta* a^2))` with `zeta = r e^{i phi}`.
pub fn squeeze_matrix(r: f64, phi: f64, t: Truncation) -> CMatrix {
    if r == 0.0 {
        return CMatrix::identity(t.dim(), t.dim());
    }
    let zeta = C64::from_polar(r, phi);
    let a = annihilation_matrix(t);
    let a2 = &a * &a;
    let gen = (a2.adjoint() * zeta - a2 * zeta.conj()) * C64::new(0.5, 0.0);
    gen.exp()
}

/// `exp(G) v` for a generator given by its action, by Taylor series on
/// `s` sub-steps where `bound / s <= 1` bounds the step norm.
fn expm_action<F>(apply: F, bound: f64, v: &DVector<C64>) -> DVector<C64>
where
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let steps = bound.ceil().max(1.0) as usize;
    let scale = 1.0 / steps as f64;
    let mut out = v.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut acc = out.clone();
        for k in 1..60 {
            term = apply(&term) * C64::new(scale / k as f64, 0.0);
            acc += &term;
            if term.norm() <= 1e-17 * acc.norm() {
                break;
            }
        }
        out = acc;
    }
    out
}

/// `D(beta) v` on the truncated generator without forming the matrix.
pub fn displace_vector(beta: C64, v: &FockVector) -> FockVector {
    let d = v.dim();
    if beta == ZERO || d == 1 {
        return v.clone();
    }
    let apply = |x: &DVector<C64>| {
        let mut y = DVector::from_element(d, ZERO);
        for k in 0..d {
            if k + 1 < d {
                // a^dag: |k> -> sqrt(k+1)|k+1>,  a: |k+1> -> sqrt(k+1)|k>
                let s = ((k + 1) as f64).sqrt();
                y[k + 1] += beta * x[k] * s;
                y[k] -= beta.conj() * x[k + 1] * s;
            }
        }
        y
    };
    let bound = 2.0 * beta.norm() * (d as f64).sqrt();
    FockVector {
        amps: expm_action(apply, bound, &v.amps),
    }
}

/// `S(r e^{i phi}) v` on the truncated generator without forming the matrix.
pub fn squeeze_vector(r: f64, phi: f64, v: &FockVector) -> FockVector {
    let d = v.dim();
    if r == 0.0 || d < 3 {
        return v.clone();
    }
    let zeta = C64::from_polar(r, phi) * 0.5;
    let apply = |x: &DVector<C64>| {
        let mut y = DVector::from_element(d, ZERO);
        for k in 0..d - 2 {
            let s = (((k + 1) * (k + 2)) as f64).sqrt();
            y[k + 2] += zeta * x[k] * s;
            y[k] -= zeta.conj() * x[k + 2] * s;
        }
        y
    };
    let bound = r * d as f64;
    FockVector {
        amps: expm_action(apply, bound, &v.amps),
    }
}

/// Thermal state with mean occupation `nbar`, renormalized in the truncation.
pub fn thermal_density(nbar: f64, t: Truncation) -> Result<DensityMatrix> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(invalid("nbar", format!("{nbar} must be finite and >= 0")));
    }
    let ratio = nbar / (1.0 + nbar);
    let tail = ratio.powi(t.dim() as i32);
    if tail >= TAIL_TOLERANCE {
        return Err(Error::TruncationTooSmall { dim: t.dim(), tail });
    }
    let mut weights: Vec<f64> = Vec::with_capacity(t.dim());
    let mut w = 1.0 / (1.0 + nbar);
    for _ in 0..t.dim() {
        weights.push(w);
        w *= ratio;
    }
    let total: f64 = weights.iter().sum();
    let diag = DVector::from_iterator(t.dim(), weights.iter().map(|w| C64::new(w / total, 0.0)));
    Ok(DensityMatrix {
        mat: CMatrix::from_diagonal(&diag),
    })
}

/// Probability mass of a Poisson distribution with mean `lambda` at `k >= dim`.
pub fn poisson_tail(lambda: f64, dim: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    // term_k = e^-lambda lambda^k / k!, accumulated in log space to reach k = dim
    let log_term =
        |k: usize| -lambda + k as f64 * lambda.ln() - (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let mut term = log_term(dim).exp();
    let mut tail = 0.0;
    let mut k = dim;
    while term > 1e-300 {
        tail += term;
        k += 1;
        term *= lambda / k as f64;
        if k > dim + 10_000 {
            break;
        }
    }
    tail
}

/// Coherent state `|alpha>`, renormalized in the truncation.
pub fn coherent(alpha: C64, t: Truncation) -> Result<FockVector> {
    let tail = poisson_tail(alpha.norm_sqr(), t.dim());
    if tail >= TAIL_TOLERANCE {
        return Err(Error::TruncationTooSmall { dim: t.dim(), tail });
    }
    let mut amps = DVector::from_element(t.dim(), ZERO);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = amp;
    for k in 1..t.dim() {
        amp = amp * alpha / (k as f64).sqrt();
        amps[k] = amp;
    }
    FockVector { amps }.normalized()
}

/// Amplitudes of a two-mode state; rows index mode 1, columns mode 2.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    amps: CMatrix,
}

impl TwoModeState {
    pub fn product(first: &FockVector, second: &FockVector) -> Self {
        Self {
            amps: first.amps() * second.amps().transpose(),
        }
    }

    pub fn amps(&self) -> &CMatrix {
        &self.amps
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.amps.nrows(), self.amps.ncols())
    }

    /// Unnormalized mode-1 state after projecting mode 2 onto `|k>`.
    pub fn project_second(&self, k: usize) -> Option<FockVector> {
        (k < self.amps.ncols()).then(|| FockVector {
            amps: self.amps.column(k).into_owned(),
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Beam splitter `exp{theta (a^dag b - a b^dag)}`, `theta = arccos(sqrt(R))`,
/// stored block-diagonally over total photon number.
#[derive(Debug, Clone)]
pub struct BeamSplitter {
    reflectivity: f64,
    theta: f64,
    // block N acts on |j, N-j>, j = 0..=N
    blocks: Vec<DMatrix<f64>>,
}

impl BeamSplitter {
    pub fn new(reflectivity: f64, max_total: usize) -> Result<Self> {
        if !(reflectivity > 0.0 && reflectivity < 1.0) {
            return Err(invalid("R", format!("{reflectivity} not in (0, 1)")));
        }
        let mut bs = Self {
            reflectivity,
            theta: reflectivity.sqrt().acos(),
            blocks: Vec::new(),
        };
        bs.extend_to(max_total);
        Ok(bs)
    }

    fn extend_to(&mut self, max_total: usize) {
        for total in self.blocks.len()..=max_total {
            self.blocks.push(sector_block(self.theta, total));
        }
    }

    pub fn reflectivity(&self) -> f64 {
        self.reflectivity
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, total: usize) -> Option<&DMatrix<f64>> {
        self.blocks.get(total)
    }

    /// `<out1, out2| U |in1, in2>`.
    pub fn element(&self, out: (usize, usize), input: (usize, usize)) -> f64 {
        let total = input.0 + input.1;
        if out.0 + out.1 != total {
            return 0.0;
        }
        self.blocks
            .get(total)
            .map(|b| b[(out.0, input.0)])
            .unwrap_or(0.0)
    }

    pub fn apply(&self, input: &TwoModeState) -> Result<TwoModeState> {
        let (d1, d2) = input.dims();
        let max_total = d1 + d2 - 2;
        if max_total > self.max_total() {
            return Err(Error::DimensionMismatch(max_total, self.max_total()));
        }
        let mut out = CMatrix::from_element(max_total + 1, max_total + 1, ZERO);
        let mut sector: Vec<C64> = Vec::with_capacity(max_total + 1);
        for total in 0..=max_total {
            let lo = total.saturating_sub(d2 - 1);
            let hi = total.min(d1 - 1);
            sector.clear();
            sector.extend((lo..=hi).map(|j| input.amps[(j, total - j)]));
            if sector.iter().all(|a| *a == ZERO) {
                continue;
            }
            let block = &self.blocks[total];
            for i in 0..=total {
                let mut acc = ZERO;
                for (offset, a) in sector.iter().enumerate() {
                    acc += *a * block[(i, lo + offset)];
                }
                out[(i, total - i)] = acc;
            }
        }
        Ok(TwoModeState { amps: out })
    }

    /// Dense `dim^2 x dim^2` matrix on the per-mode truncated space,
    /// index `j1 * dim + j2`.
    pub fn to_dense(&self, t: Truncation) -> CMatrix {
        let d = t.dim();
        let mut u = CMatrix::from_element(d * d, d * d, ZERO);
        for i1 in 0..d {
            for i2 in 0..d {
                let total = i1 + i2;
                if total > self.max_total() {
                    continue;
                }
                for o1 in 0..=total.min(d - 1) {
                    let o2 = total - o1;
                    if o2 < d {
                        u[(o1 * d + o2, i1 * d + i2)] = C64::new(self.element((o1, o2), (i1, i2)), 0.0);
                    }
                }
            }
        }
        u
    }
}

fn sector_block(theta: f64, total: usize) -> DMatrix<f64> {
    let size = total + 1;
    let mut gen = DMatrix::<f64>::zeros(size, size);
    for j in 0..size {
        let rest = (total - j) as f64;
        if j < total {
            // a^dag b |j, N-j> = sqrt(j+1) sqrt(N-j) |j+1, N-j-1>
            gen[(j + 1, j)] += theta * ((j + 1) as f64 * rest).sqrt();
        }
        if j > 0 {
            // a b^dag |j, N-j> = sqrt(j) sqrt(N-j+1) |j-1, N-j+1>
            gen[(j - 1, j)] -= theta * (j as f64 * (rest + 1.0)).sqrt();
        }
    }
    gen.exp()
}

type BsCache = RwLock<HashMap<u64, Arc<BeamSplitter>>>;

fn bs_cache() -> &'static BsCache {
    static CACHE: OnceLock<BsCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Shared beam splitter covering total photon numbers `0..=max_total`.
pub fn beam_splitter(reflectivity: f64, max_total: usize) -> Result<Arc<BeamSplitter>> {
    let key = reflectivity.to_bits();
    if let Some(bs) = bs_cache().read().unwrap().get(&key) {
        if bs.max_total() >= max_total {
            return Ok(Arc::clone(bs));
        }
    }
    let mut cache = bs_cache().write().unwrap();
    let mut bs = match cache.get(&key) {
        Some(existing) if existing.max_total() >= max_total => return Ok(Arc::clone(existing)),
        Some(existing) => (**existing).clone(),
        None => BeamSplitter::new(reflectivity, 0)?,
    };
    bs.extend_to(max_total);
    let bs = Arc::new(bs);
    // bound the cache; scans over many reflectivities would otherwise grow it without limit
    if cache.len() > 256 {
        cache.clear();
    }
    cache.insert(key, Arc::clone(&bs));
    Ok(bs)
}

/// Beam splitter acting on two modes truncated at `t` each.
pub fn bs_unitary(reflectivity: f64, t: Truncation) -> Result<Arc<BeamSplitter>> {
    beam_splitter(reflectivity, 2 * (t.dim() - 1))
}

/// Output of the heralded beam splitter for a coherent state on mode 1 and
/// `|n>` on mode 2: the full two-mode state after `U_BS`.
pub fn evolve_coherent_and_number(
    alpha: C64,
    n: usize,
    reflectivity: f64,
    t: Truncation,
) -> Result<TwoModeState> {
    let coherent_in = coherent(alpha, t)?;
    let number_in = FockVector::basis(n, Truncation { dim: n + 1 })?;
    let input = TwoModeState::product(&coherent_in, &number_in);
    let bs = beam_splitter(reflectivity, t.dim() - 1 + n)?;
    bs.apply(&input)
}

/// Direct simulation of `<m|_2 U_BS |alpha>_1 |n>_2`: returns the normalized
/// mode-1 state (cut to `t`) and the probability of detecting `m`.
pub fn brute_force_cm(
    n: usize,
    m: usize,
    alpha: C64,
    reflectivity: f64,
    t: Truncation,
) -> Result<(FockVector, f64)> {
    let out = evolve_coherent_and_number(alpha, n, reflectivity, t)?;
    let projected = out.project_second(m).ok_or(Error::ZeroProbability(0.0))?;
    let prob = projected.norm_sqr();
    if !(prob >= 1e-300) {
        return Err(Error::ZeroProbability(prob));
    }
    let state = projected.resized(t.dim());
    let kept = state.norm_sqr();
    if prob - kept > TAIL_TOLERANCE * prob.max(1e-300) && prob - kept > 1e-300 {
        return Err(Error::TruncationTooSmall {
            dim: t.dim(),
            tail: (prob - kept) / prob,
        });
    }
    Ok((state.normalized()?, prob))
}

/// `Tr(rho sigma)`.
pub fn fidelity_tr(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(trace_of_product(&rho.mat, &sigma.mat).re)
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.mat.iter().map(|z| z.norm_sqr()).sum()
}

pub fn overlap(v: &FockVector, w: &FockVector) -> Result<C64> {
    v.overlap(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(dim: usize) -> Truncation {
        Truncation::new(dim).unwrap()
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn heuristic_truncation() {
        assert_eq!(Truncation::heuristic(0, 0, 0.0).dim(), 25);
        // 29 + 7 sqrt(29) = 66.69 -> 67 + 4 + 4 + 15
        assert_eq!(Truncation::heuristic(4, 4, 29.0).dim(), 90);
    }

    #[test]
    fn coherent_vacuum_and_ratio() {
        let v = coherent(ZERO, t(30)).unwrap();
        assert_eq!(v.amp(0), ONE);
        assert!(v.tail_mass(29) == 0.0);

        let v = coherent(C64::new(2.0, 0.0), t(40)).unwrap();
        let ratio = (v.amp(4) / v.amp(0)).re;
        assert!((ratio - 16.0 / 24f64.sqrt()).abs() < 1e-12);
        assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_rejects_short_truncation() {
        let err = coherent(C64::new(4.0, 0.0), t(20)).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall { dim: 20, .. }));
    }

    #[test]
    fn displacement_of_zero_is_identity() {
        let d = displacement_matrix(ZERO, t(12));
        assert!(max_abs(&(d - CMatrix::identity(12, 12))) == 0.0);
    }

    #[test]
    fn displacement_matches_coherent_state() {
        let tr = t(60);
        let beta = C64::new(1.3, -0.8);
        let d = displacement_matrix(beta, tr);
        let from_d = FockVector::basis(0, tr).unwrap().apply(&d).unwrap();
        let direct = coherent(beta, tr).unwrap();
        assert!((from_d.overlap(&direct).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn displacement_composition() {
        let tr = t(70);
        let (b1, b2) = (C64::new(0.7, 0.4), C64::new(-1.1, 0.9));
        let vac = FockVector::basis(0, tr).unwrap();
        let two = vac
            .apply(&displacement_matrix(b2, tr))
            .unwrap()
            .apply(&displacement_matrix(b1, tr))
            .unwrap();
        let one = vac.apply(&displacement_matrix(b1 + b2, tr)).unwrap();
        assert!((two.overlap(&one).unwrap().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn squeeze_is_unitary_on_low_subspace() {
        let tr = t(60);
        let s = squeeze_matrix(0.6, 0.9, tr);
        let defect = s.adjoint() * &s - CMatrix::identity(60, 60);
        let low = defect.view((0, 0), (30, 30)).into_owned();
        assert!(max_abs(&low) < 1e-8);
    }

    #[test]
    fn vector_actions_match_matrices() {
        let tr = t(50);
        let amps: Vec<C64> = (0..50)
            .map(|k| if k < 4 { C64::new(0.3 * k as f64 - 0.2, 0.1 * k as f64) } else { ZERO })
            .collect();
        let v = FockVector::new(amps).unwrap().normalized().unwrap();
        let beta = C64::new(0.9, -1.3);
        let dense = v.apply(&displacement_matrix(beta, tr)).unwrap();
        let sparse = displace_vector(beta, &v);
        assert!((dense.amps() - sparse.amps()).norm() < 1e-11);
        let dense = v.apply(&squeeze_matrix(0.7, -0.4, tr)).unwrap();
        let sparse = squeeze_vector(0.7, -0.4, &v);
        assert!((dense.amps() - sparse.amps()).norm() < 1e-11);
    }

    #[test]
    fn squeezed_vacuum_variance() {
        // S(r) with this sign stretches X: var_x = e^{2r}/2
        let tr = t(80);
        let r = 0.5;
        let psi = FockVector::basis(0, tr)
            .unwrap()
            .apply(&squeeze_matrix(r, 0.0, tr))
            .unwrap();
        let a2 = psi.expect_normal_ordered(0, 2).re;
        let n = psi.expect_normal_ordered(1, 1).re;
        let var_x = 0.5 * (2.0 * a2 + 2.0 * n + 1.0);
        assert!((var_x - (2.0 * r).exp() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn thermal_states() {
        let vac = thermal_density(0.0, t(10)).unwrap();
        assert_eq!(vac.matrix()[(0, 0)], ONE);
        assert!((vac.trace() - 1.0).abs() < 1e-15);

        let th = thermal_density(0.5, t(60)).unwrap();
        assert!((th.purity() - 0.5).abs() < 1e-6);

        let th1 = thermal_density(1.0, t(60)).unwrap();
        let v = FockVector::basis(0, t(60)).unwrap().density();
        assert!((fidelity_tr(&v, &th1).unwrap() - 0.5).abs() < 1e-6);

        assert!(thermal_density(5.0, t(20)).is_err());
    }

    #[test]
    fn fidelity_basics() {
        let tr = t(8);
        let v0 = FockVector::basis(0, tr).unwrap().density();
        let v1 = FockVector::basis(1, tr).unwrap().density();
        assert_eq!(fidelity_tr(&v0, &v0).unwrap(), 1.0);
        assert_eq!(fidelity_tr(&v0, &v1).unwrap(), 0.0);
        let v_small = FockVector::basis(0, t(4)).unwrap().density();
        assert!(matches!(
            fidelity_tr(&v0, &v_small),
            Err(Error::DimensionMismatch(8, 4))
        ));
        assert!(overlap(&FockVector::basis(0, tr).unwrap(), &FockVector::basis(0, t(3)).unwrap()).is_err());
    }

    #[test]
    fn beam_splitter_sectors() {
        let bs = BeamSplitter::new(0.5, 6).unwrap();
        // vacuum invariance
        assert_eq!(bs.element((0, 0), (0, 0)), 1.0);
        // 50:50 single photon
        let amp = bs.element((0, 1), (0, 1));
        assert!((amp * amp - 0.5).abs() < 1e-9);
        // each sector is orthogonal
        for total in 0..=6 {
            let b = bs.block(total).unwrap();
            let defect = b.transpose() * b - DMatrix::<f64>::identity(total + 1, total + 1);
            assert!(defect.amax() < 1e-12);
        }
    }

    #[test]
    fn nearly_reflective_splitter_leaves_photon() {
        let bs = BeamSplitter::new(1.0 - 1e-12, 2).unwrap();
        assert!((bs.element((1, 0), (1, 0)).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dense_splitter_is_unitary_below_half_cutoff() {
        let tr = t(10);
        let bs = bs_unitary(0.3, tr).unwrap();
        let u = bs.to_dense(tr);
        let d = tr.dim();
        let defect = u.adjoint() * &u - CMatrix::identity(d * d, d * d);
        for i1 in 0..d {
            for i2 in 0..d {
                if i1 + i2 > d / 2 {
                    continue;
                }
                for j1 in 0..d {
                    for j2 in 0..d {
                        if j1 + j2 <= d / 2 {
                            assert!(defect[(i1 * d + i2, j1 * d + j2)].norm() < 1e-9);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cache_returns_shared_instance() {
        let a = beam_splitter(0.4321, 10).unwrap();
        let b = beam_splitter(0.4321, 5).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let c = beam_splitter(0.4321, 20).unwrap();
        assert!(c.max_total() >= 20);
    }

    #[test]
    fn vacuum_inputs_give_coherent_output() {
        let alpha = C64::new(1.4, 0.3);
        let r = 0.35;
        let tr = Truncation::heuristic(0, 0, alpha.norm_sqr());
        let (state, prob) = brute_force_cm(0, 0, alpha, r, tr).unwrap();
        let target = coherent(alpha * r.sqrt(), tr).unwrap();
        assert!((state.overlap(&target).unwrap().norm() - 1.0).abs() < 1e-9);
        assert!((prob - (-alpha.norm_sqr() * (1.0 - r)).exp()).abs() < 1e-9);
    }

    #[test]
    fn single_photon_reflection() {
        let (state, prob) = brute_force_cm(1, 1, ZERO, 0.7, t(25)).unwrap();
        assert!((state.amp(0).norm() - 1.0).abs() < 1e-12);
        assert!((prob - 0.7).abs() < 1e-12);
    }

    #[test]
    fn detection_probabilities_are_complete() {
        let alpha = C64::new(1.1, 0.0);
        let tr = Truncation::heuristic(2, 0, alpha.norm_sqr());
        let total: f64 = (0..tr.dim())
            .map(|m| brute_force_cm(2, m, alpha, 0.6, tr).map(|(_, p)| p).unwrap_or(0.0))
            .sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn density_matrix_properties() {
        let tr = t(30);
        let psi = coherent(C64::new(0.9, -0.2), tr).unwrap();
        let rho = psi.density();
        assert!(rho.hermiticity_error() < 1e-15);
        assert!(rho.min_eigenvalue() > -1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!(DensityMatrix::from_matrix(CMatrix::zeros(2, 3)).is_err());
    }
}
