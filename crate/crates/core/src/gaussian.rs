//! Closed-form algebra over finite superpositions of one-dimensional complex
//! Gaussians.
//!
//! Every wave function in the simulator is a sum of terms
//!
//! ```text
//!     c · exp(-(q - μ)² / (2V))
//! ```
//!
//! with complex coefficient `c`, complex mean `μ` and complex variance `V`
//! (`Re V > 0`). The unnormalized vacuum is `G(x, 1, 0)`, the momentum
//! representation uses the kernel `e^{-ipx} / √(2π)`, and the GKP lattice
//! spacing is `2√π`.
//!
//! Coefficients are stored as their complex logarithm. Momentum-space images of
//! sharply squeezed position-space peaks carry factors like `e^{-μ²/(2V)}`
//! that underflow `f64` long before the wave function itself becomes small.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `(V, μ)` below which two terms are treated as the
/// same Gaussian and their coefficients summed.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Default relative prune threshold for [`WaveFunction::merge_prune`].
pub const DEFAULT_PRUNE_TOL: f64 = 1e-14;

/// Squared norm, relative to `(Σ‖termᵢ‖)²`, below which a superposition is
/// treated as cancelled. Summing cancelling terms in floating point leaves a
/// residue near machine epsilon rather than an exact zero.
pub const DEGENERATE_NORM: f64 = 1e-13;

/// Quadrature representation a wave function is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Position,
    Momentum,
}

impl Basis {
    pub fn dual(self) -> Basis {
        match self {
            Basis::Position => Basis::Momentum,
            Basis::Momentum => Basis::Position,
        }
    }
}

/// One complex-weighted Gaussian `c · G(q, V, μ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTerm {
    ln_coeff: Complex64,
    variance: Complex64,
    mean: Complex64,
}

impl GaussianTerm {
    pub fn new(coeff: Complex64, variance: Complex64, mean: Complex64) -> Result<Self> {
        if coeff.norm() == 0.0 || !coeff.is_finite() {
            return Err(Error::InvalidTerm(format!("coefficient must be finite and nonzero, got {coeff}")));
        }
        Self::from_ln_coeff(coeff.ln(), variance, mean)
    }

    /// Real coefficient, real variance and real mean.
    pub fn real(coeff: f64, variance: f64, mean: f64) -> Result<Self> {
        Self::new(Complex64::new(coeff, 0.0), Complex64::new(variance, 0.0), Complex64::new(mean, 0.0))
    }

    pub fn from_ln_coeff(ln_coeff: Complex64, variance: Complex64, mean: Complex64) -> Result<Self> {
        if !(variance.re > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidTerm(format!("variance must have positive real part, got {variance}")));
        }
        if !mean.is_finite() {
            return Err(Error::InvalidTerm(format!("mean must be finite, got {mean}")));
        }
        if !ln_coeff.is_finite() {
            return Err(Error::InvalidTerm(format!("log-coefficient must be finite, got {ln_coeff}")));
        }
        Ok(Self { ln_coeff, variance, mean })
    }

    /// Internal constructor for results of closed-form maps whose validity
    /// follows from valid inputs.
    pub(crate) fn raw(ln_coeff: Complex64, variance: Complex64, mean: Complex64) -> Self {
        debug_assert!(variance.re > 0.0, "variance {variance}");
        Self { ln_coeff, variance, mean }
    }

    pub fn coeff(&self) -> Complex64 {
        self.ln_coeff.exp()
    }

    pub fn ln_coeff(&self) -> Complex64 {
        self.ln_coeff
    }

    pub fn variance(&self) -> Complex64 {
        self.variance
    }

    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    pub fn ln_value(&self, q: f64) -> Complex64 {
        let d = q - self.mean;
        self.ln_coeff - d * d / (2.0 * self.variance)
    }

    pub fn value(&self, q: f64) -> Complex64 {
        self.ln_value(q).exp()
    }

    /// Location and log-magnitude of the maximum of `|term(q)|` over real `q`.
    pub fn peak(&self) -> (f64, f64) {
        let w = self.variance.inv();
        let b = self.mean.im;
        let location = self.mean.re - b * w.im / w.re;
        let ln_mag = self.ln_coeff.re + 0.5 * b * b * w.norm_sqr() / w.re;
        (location, ln_mag)
    }

    /// Standard deviation of `|term(q)|` viewed as a Gaussian envelope.
    pub fn envelope_width(&self) -> f64 {
        1.0 / self.variance.inv().re.sqrt()
    }

    /// `ln ∫ conj(self(q)) · other(q) dq`.
    pub fn ln_overlap(&self, other: &GaussianTerm) -> Complex64 {
        let a_var = self.variance.conj();
        let b_var = other.variance;
        let sum = a_var + b_var;
        let d = self.mean.conj() - other.mean;
        let reduced = a_var * b_var / sum;
        self.ln_coeff.conj() + other.ln_coeff + 0.5 * (2.0 * PI * reduced).ln() - d * d / (2.0 * sum)
    }

    /// `ln ∫ |term(q)|² dq`.
    pub fn ln_norm_sqr(&self) -> f64 {
        self.ln_overlap(self).re
    }

    pub(crate) fn with_ln_coeff(self, ln_coeff: Complex64) -> Self {
        Self { ln_coeff, ..self }
    }

    /// Kernel `e^{-ipq}/√(2π)` for `sign = -1`, `e^{+ipq}/√(2π)` for `sign = +1`.
    fn transformed(&self, sign: f64) -> Self {
        let v = self.variance;
        let mu = self.mean;
        let ln_coeff = self.ln_coeff + 0.5 * v.ln() - mu * mu / (2.0 * v);
        let i = Complex64::i();
        Self::raw(ln_coeff, v.inv(), sign * i * mu / v)
    }

    fn shifted(&self, dq: f64) -> Self {
        Self { mean: self.mean + dq, ..*self }
    }

    /// Multiply by `e^{i k q}`.
    pub(crate) fn modulated(&self, k: f64) -> Self {
        let i = Complex64::i();
        let ln_coeff = self.ln_coeff + i * k * self.mean - 0.5 * k * k * self.variance;
        Self::raw(ln_coeff, self.variance, self.mean + i * k * self.variance)
    }

    fn scaled(&self, s: f64) -> Self {
        Self::raw(self.ln_coeff - 0.5 * s.ln(), self.variance * (s * s), self.mean * s)
    }

    fn same_shape(&self, other: &GaussianTerm) -> bool {
        (self.variance.re - other.variance.re).abs() <= MERGE_TOLERANCE
            && (self.variance.im - other.variance.im).abs() <= MERGE_TOLERANCE
            && (self.mean.re - other.mean.re).abs() <= MERGE_TOLERANCE
            && (self.mean.im - other.mean.im).abs() <= MERGE_TOLERANCE
    }

    fn shape_cmp(&self, other: &GaussianTerm) -> Ordering {
        self.mean
            .re
            .total_cmp(&other.mean.re)
            .then(self.mean.im.total_cmp(&other.mean.im))
            .then(self.variance.re.total_cmp(&other.variance.re))
            .then(self.variance.im.total_cmp(&other.variance.im))
    }
}

/// `ln Σ exp(lᵢ)` for complex logs. Returns `None` when the sum cancels to zero.
pub(crate) fn ln_sum_exp(logs: impl IntoIterator<Item = Complex64>) -> Option<Complex64> {
    let logs: Vec<Complex64> = logs.into_iter().collect();
    let shift = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return None;
    }
    let sum: Complex64 = logs.iter().map(|l| (l - shift).exp()).sum();
    if sum.norm() <= 8.0 * f64::EPSILON * logs.len() as f64 {
        None
    } else {
        Some(sum.ln() + shift)
    }
}

/// Summary of what [`WaveFunction::merge_prune`] removed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PruneReport {
    pub terms_in: usize,
    pub terms_out: usize,
    pub merged: usize,
    pub dropped: usize,
    /// Upper bound on `|‖ψ'‖² − ‖ψ‖²| / ‖ψ'‖²` from the dropped terms.
    pub norm_change_bound: f64,
}

/// Finite superposition of Gaussian terms in one quadrature basis.
///
/// Values are immutable; every operation returns a new wave function. The
/// squared norm is computed on first use and cached.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    terms: Vec<GaussianTerm>,
    basis: Basis,
    ln_norm_cache: OnceLock<f64>,
}

impl PartialEq for WaveFunction {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis && self.terms == other.terms
    }
}

impl WaveFunction {
    pub fn new(basis: Basis, terms: Vec<GaussianTerm>) -> Self {
        Self { terms, basis, ln_norm_cache: OnceLock::new() }
    }

    /// Unnormalized vacuum `G(x, 1, 0)`.
    pub fn vacuum() -> Self {
        Self::new(Basis::Position, vec![GaussianTerm::raw(Complex64::new(0.0, 0.0), 1.0.into(), 0.0.into())])
    }

    /// Sum of real-parameter Gaussians `Σ cᵢ G(q, Vᵢ, μᵢ)`.
    pub fn from_real_terms(basis: Basis, terms: &[(f64, f64, f64)]) -> Result<Self> {
        let terms = terms
            .iter()
            .map(|&(c, v, mu)| GaussianTerm::real(c, v, mu))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(basis, terms))
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn evaluate(&self, q: f64) -> Complex64 {
        self.terms.iter().map(|t| t.value(q)).sum()
    }

    /// `evaluate(q) · e^{-shift}`, for states whose raw values leave `f64` range.
    pub fn evaluate_scaled(&self, q: f64, shift: f64) -> Complex64 {
        self.terms.iter().map(|t| (t.ln_value(q) - shift).exp()).sum()
    }

    fn check_basis(&self, other: &WaveFunction) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch { left: self.basis, right: other.basis });
        }
        Ok(())
    }

    /// `⟨self|other⟩ · e^{-shift}` computed in log space.
    pub fn inner_product_scaled(&self, other: &WaveFunction, shift: f64) -> Result<Complex64> {
        self.check_basis(other)?;
        let mut logs = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                logs.push(a.ln_overlap(b));
            }
        }
        let max = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let sum: Complex64 = logs.iter().map(|l| (l - max).exp()).sum();
        Ok(sum * (max - shift).exp())
    }

    /// `∫ conj(self(q)) · other(q) dq`.
    pub fn inner_product(&self, other: &WaveFunction) -> Result<Complex64> {
        self.inner_product_scaled(other, 0.0)
    }

    /// Natural log of the squared norm; `-∞` for an empty or fully cancelling state.
    pub fn ln_norm_sqr(&self) -> f64 {
        *self.ln_norm_cache.get_or_init(|| {
            let shift = self.max_ln_term_norm_sqr();
            if !shift.is_finite() {
                return f64::NEG_INFINITY;
            }
            let n = self
                .inner_product_scaled(self, shift)
                .expect("same basis")
                .re;
            if n > 0.0 {
                n.ln() + shift
            } else {
                f64::NEG_INFINITY
            }
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ln_norm_sqr().exp()
    }

    /// Largest `ln ‖term‖²` over the terms.
    pub fn max_ln_term_norm_sqr(&self) -> f64 {
        self.terms.iter().map(|t| t.ln_norm_sqr()).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `ln (Σᵢ ‖termᵢ‖)²`, the triangle-inequality bound on `ln ‖ψ‖²`.
    fn ln_norm_bound(&self) -> f64 {
        let half: Vec<f64> = self.terms.iter().map(|t| 0.5 * t.ln_norm_sqr()).collect();
        let max = half.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return f64::NEG_INFINITY;
        }
        let sum: f64 = half.iter().map(|h| (h - max).exp()).sum();
        2.0 * (sum.ln() + max)
    }

    /// True when the terms cancel to within [`DEGENERATE_NORM`].
    pub fn is_degenerate(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let relative = self.ln_norm_sqr() - self.ln_norm_bound();
        !relative.is_finite() || relative < DEGENERATE_NORM.ln()
    }

    /// Unit-norm copy. Fails on an empty or cancelling superposition.
    pub fn normalize(&self) -> Result<WaveFunction> {
        if self.is_empty() {
            return Err(Error::Degenerate("cannot normalize an empty superposition".into()));
        }
        if self.is_degenerate() {
            return Err(Error::Degenerate("squared norm vanishes".into()));
        }
        let offset = Complex64::new(0.5 * self.ln_norm_sqr(), 0.0);
        Ok(self.map_terms(|t| t.with_ln_coeff(t.ln_coeff - offset)))
    }

    /// Multiply every coefficient by `factor`.
    pub fn scaled_by(&self, factor: Complex64) -> Result<WaveFunction> {
        if factor.norm() == 0.0 || !factor.is_finite() {
            return Err(Error::InvalidParameter(format!("coefficient factor must be finite and nonzero, got {factor}")));
        }
        let ln = factor.ln();
        Ok(self.map_terms(|t| t.with_ln_coeff(t.ln_coeff + ln)))
    }

    /// Superposition `self + other`.
    pub fn add(&self, other: &WaveFunction) -> Result<WaveFunction> {
        self.check_basis(other)?;
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(WaveFunction::new(self.basis, terms))
    }

    fn map_terms(&self, f: impl Fn(&GaussianTerm) -> GaussianTerm) -> WaveFunction {
        WaveFunction::new(self.basis, self.terms.iter().map(f).collect())
    }

    /// Transform with the kernel `e^{-ipq}/√(2π)` and flip the basis tag.
    /// Applying it twice gives `ψ(−q)`.
    pub fn fourier(&self) -> WaveFunction {
        let mut out = self.map_terms(|t| t.transformed(-1.0));
        out.basis = self.basis.dual();
        out
    }

    /// Representation of the same state in `basis`: the forward kernel for
    /// position→momentum and its inverse for momentum→position.
    pub fn to_basis(&self, basis: Basis) -> WaveFunction {
        if basis == self.basis {
            return self.clone();
        }
        let sign = match self.basis {
            Basis::Position => -1.0,
            Basis::Momentum => 1.0,
        };
        let mut out = self.map_terms(|t| t.transformed(sign));
        out.basis = basis;
        out
    }

    /// `ψ(q) → s^{-1/2} ψ(q/s)`. With `s = e^{-ζ}` this is squeezing by `ζ`.
    pub fn scale(&self, s: f64) -> Result<WaveFunction> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("scale factor must be positive, got {s}")));
        }
        Ok(self.map_terms(|t| t.scaled(s)))
    }

    /// `ψ(q) → ψ(q − dq)` along the basis coordinate.
    pub fn shift(&self, dq: f64) -> WaveFunction {
        self.map_terms(|t| t.shifted(dq))
    }

    /// `ψ(q) → e^{ikq} ψ(q)` along the basis coordinate.
    pub fn modulate(&self, k: f64) -> WaveFunction {
        self.map_terms(|t| t.modulated(k))
    }

    /// Phase-space displacement: position by `dx`, then momentum by `dp`.
    ///
    /// In the position basis this shifts every mean by `dx` and then multiplies
    /// by `e^{i dp x}`. In the momentum basis the equivalent map is applied
    /// (multiply by `e^{-i dx p}`, then shift by `dp`).
    pub fn displace(&self, dx: f64, dp: f64) -> WaveFunction {
        match self.basis {
            Basis::Position => self.shift(dx).modulate(dp),
            Basis::Momentum => self.modulate(-dx).shift(dp),
        }
    }

    /// Sum terms whose `(V, μ)` agree within [`MERGE_TOLERANCE`], then drop
    /// terms whose norm relative to the largest term is below `tol`.
    ///
    /// Output terms are sorted by mean. An input whose terms cancel completely
    /// is reported as [`Error::Degenerate`].
    pub fn merge_prune(&self, tol: f64) -> Result<(WaveFunction, PruneReport)> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("prune tolerance must be non-negative, got {tol}")));
        }
        let mut sorted = self.terms.clone();
        sorted.sort_by(|a, b| a.shape_cmp(b));

        let mut merged: Vec<GaussianTerm> = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            // cluster of terms whose real means lie within tolerance
            let mut j = i + 1;
            while j < sorted.len() && sorted[j].mean.re - sorted[j - 1].mean.re <= MERGE_TOLERANCE {
                j += 1;
            }
            let mut groups: Vec<(GaussianTerm, Vec<Complex64>)> = Vec::new();
            for t in &sorted[i..j] {
                match groups.iter_mut().find(|(head, _)| head.same_shape(t)) {
                    Some((_, logs)) => logs.push(t.ln_coeff),
                    None => groups.push((*t, vec![t.ln_coeff])),
                }
            }
            for (head, logs) in groups {
                if let Some(ln) = ln_sum_exp(logs) {
                    merged.push(head.with_ln_coeff(ln));
                }
            }
            i = j;
        }

        if merged.is_empty() && !self.is_empty() {
            return Err(Error::Degenerate("all terms cancel".into()));
        }

        let merged_count = self.len() - merged.len();
        let norms: Vec<f64> = merged.iter().map(|t| t.ln_norm_sqr()).collect();
        let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut kept = Vec::with_capacity(merged.len());
        let mut dropped_norm = 0.0;
        let mut dropped = 0;
        for (t, ln) in merged.into_iter().zip(norms) {
            // norms compared as amplitudes, not squared
            let rel = (0.5 * (ln - max)).exp();
            if tol > 0.0 && rel < tol {
                dropped += 1;
                dropped_norm += rel;
            } else {
                kept.push(t);
            }
        }
        let out = WaveFunction::new(self.basis, kept);
        let bound = if dropped == 0 {
            0.0
        } else {
            let b = dropped_norm * (0.5 * (max - out.ln_norm_sqr())).exp();
            2.0 * b + b * b
        };
        let report = PruneReport {
            terms_in: self.len(),
            terms_out: out.len(),
            merged: merged_count,
            dropped,
            norm_change_bound: bound,
        };
        Ok((out, report))
    }

    pub fn to_record(&self) -> WaveFunctionRecord {
        WaveFunctionRecord {
            basis: self.basis,
            terms: self.terms.iter().map(TermRecord::from).collect(),
        }
    }

    pub fn from_record(record: &WaveFunctionRecord) -> Result<Self> {
        let terms = record.terms.iter().map(GaussianTerm::try_from).collect::<Result<Vec<_>>>()?;
        Ok(Self::new(record.basis, terms))
    }
}

/// JSON form of one term. `coeff · e^{log_scale}` is the coefficient;
/// `log_scale` is omitted unless the coefficient leaves `f64` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coeff_re: f64,
    pub coeff_im: f64,
    pub var_re: f64,
    pub var_im: f64,
    pub mean_re: f64,
    pub mean_im: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub log_scale: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl From<&GaussianTerm> for TermRecord {
    fn from(t: &GaussianTerm) -> Self {
        let (coeff, log_scale) = if t.ln_coeff.re.abs() < 700.0 {
            (t.coeff(), 0.0)
        } else {
            (Complex64::from_polar(1.0, t.ln_coeff.im), t.ln_coeff.re)
        };
        TermRecord {
            coeff_re: coeff.re,
            coeff_im: coeff.im,
            var_re: t.variance.re,
            var_im: t.variance.im,
            mean_re: t.mean.re,
            mean_im: t.mean.im,
            log_scale,
        }
    }
}

impl TryFrom<&TermRecord> for GaussianTerm {
    type Error = Error;

    fn try_from(r: &TermRecord) -> Result<Self> {
        let coeff = Complex64::new(r.coeff_re, r.coeff_im);
        if coeff.norm() == 0.0 {
            return Err(Error::InvalidTerm("zero coefficient".into()));
        }
        GaussianTerm::from_ln_coeff(
            coeff.ln() + r.log_scale,
            Complex64::new(r.var_re, r.var_im),
            Complex64::new(r.mean_re, r.mean_im),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveFunctionRecord {
    pub basis: Basis,
    pub terms: Vec<TermRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_peak_is_one() {
        assert!((WaveFunction::vacuum().evaluate(0.0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn vacuum_self_overlap_is_sqrt_pi() {
        let v = WaveFunction::vacuum();
        let ip = v.inner_product(&v).unwrap();
        assert!(rel(ip.re, SQRT_PI) < 1e-14);
        assert!(ip.im.abs() < 1e-15);
    }

    #[test]
    fn displaced_vacuum_overlap() {
        let mu = 2.0 * SQRT_PI;
        let a = WaveFunction::vacuum();
        let b = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 1.0, mu)]).unwrap();
        let ip = a.inner_product(&b).unwrap();
        assert!(rel(ip.re, SQRT_PI * (-PI).exp()) < 1e-13);
    }

    #[test]
    fn basis_mismatch_is_an_error() {
        let a = WaveFunction::vacuum();
        let b = a.fourier();
        assert!(matches!(a.inner_product(&b), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn cat_norm_matches_closed_form() {
        for alpha in [0.0, 0.3, 1.0, 1.75, 4.0] {
            let s = 2f64.sqrt() * alpha;
            let cat = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 1.0, -s), (1.0, 1.0, s)]).unwrap();
            let expected = 2.0 * SQRT_PI * (1.0 + (-2.0 * alpha * alpha).exp());
            assert!(rel(cat.norm_sqr(), expected) < 1e-13, "alpha {alpha}");
        }
    }

    #[test]
    fn zero_amplitude_cat_normalizes_to_vacuum() {
        let cat = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 1.0, 0.0), (1.0, 1.0, 0.0)]).unwrap();
        let n = cat.normalize().unwrap();
        let vac = WaveFunction::vacuum().normalize().unwrap();
        for q in [-2.0, -0.5, 0.0, 0.7, 3.0] {
            assert!((n.evaluate(q) - vac.evaluate(q)).norm() < 1e-14);
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.3, -1.0), (2.0, 0.5, 1.2)]).unwrap();
        let once = psi.normalize().unwrap();
        let twice = once.normalize().unwrap();
        assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
        for q in [-1.0, 0.0, 1.0] {
            assert!((once.evaluate(q) - twice.evaluate(q)).norm() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_empty_and_cancelled() {
        let empty = WaveFunction::new(Basis::Position, vec![]);
        assert!(matches!(empty.normalize(), Err(Error::Degenerate(_))));
        let cancel = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 1.0, 0.5), (-1.0, 1.0, 0.5)]).unwrap();
        assert!(matches!(cancel.normalize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fourier_of_vacuum_is_vacuum() {
        let p = WaveFunction::vacuum().fourier();
        assert_eq!(p.basis(), Basis::Momentum);
        let t = p.terms()[0];
        assert!((t.variance() - 1.0).norm() < 1e-15);
        assert!(t.mean().norm() < 1e-15);
        assert!((t.coeff() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn fourier_inverts_squeezing() {
        let zeta: f64 = 1.3;
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, (-2.0 * zeta).exp(), 0.0)]).unwrap();
        let t = psi.fourier().terms()[0];
        assert!(rel(t.variance().re, (2.0 * zeta).exp()) < 1e-14);
    }

    #[test]
    fn fourier_matches_direct_transform_of_displaced_gaussian() {
        // single shifted Gaussian: ψ̃(p) = √V e^{-Vp²/2 - ipμ}
        let (v, mu) = (0.4, 1.3);
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, v, mu)]).unwrap();
        let f = psi.fourier();
        for p in [-2.0, -0.3, 0.0, 0.9, 2.5] {
            let expected = (c(-v * p * p / 2.0, -p * mu)).exp() * v.sqrt();
            assert!((f.evaluate(p) - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn fourier_twice_is_parity() {
        let psi = WaveFunction::new(
            Basis::Position,
            vec![
                GaussianTerm::new(c(1.0, 0.5), c(0.4, 0.1), c(1.1, 0.2)).unwrap(),
                GaussianTerm::new(c(-0.3, 0.2), c(1.5, -0.3), c(-2.0, 0.0)).unwrap(),
            ],
        );
        let ff = psi.fourier().fourier();
        assert_eq!(ff.basis(), Basis::Position);
        for k in 0..50 {
            let q = -4.0 + 8.0 * k as f64 / 49.0;
            let a = ff.evaluate(q);
            let b = psi.evaluate(-q);
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-3), "q {q}: {a} vs {b}");
        }
    }

    #[test]
    fn to_basis_round_trips() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.2, -1.0), (0.5, 0.2, 1.5)]).unwrap();
        let back = psi.to_basis(Basis::Momentum).to_basis(Basis::Position);
        for q in [-1.5, -1.0, 0.0, 1.5] {
            assert!((back.evaluate(q) - psi.evaluate(q)).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_preserves_norm_for_squeezed_comb() {
        // peaks far apart with tiny variance: momentum coefficients underflow
        // without the log representation
        let v = (-3.8f64).exp();
        let terms: Vec<_> = (-8..=8).map(|n| (1.0, v, 2.0 * SQRT_PI * n as f64)).collect();
        let psi = WaveFunction::from_real_terms(Basis::Position, &terms).unwrap();
        let f = psi.fourier();
        assert!(rel(f.norm_sqr(), psi.norm_sqr()) < 1e-11);
    }

    #[test]
    fn scale_maps_cat_to_squeezed_cat() {
        let zeta: f64 = 1.9;
        let alpha = SQRT_PI * zeta.exp();
        let s = 2f64.sqrt() * alpha;
        let cat = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 1.0, -s), (1.0, 1.0, s)]).unwrap();
        let sq = cat.scale((-zeta).exp()).unwrap();
        for (t, sign) in sq.terms().iter().zip([-1.0, 1.0]) {
            assert!(rel(t.variance().re, (-2.0 * zeta).exp()) < 1e-14);
            assert!(rel(t.mean().re, sign * s * (-zeta).exp()) < 1e-14);
        }
        assert!(rel(sq.norm_sqr(), cat.norm_sqr()) < 1e-12);
    }

    #[test]
    fn scale_rejects_non_positive() {
        let v = WaveFunction::vacuum();
        assert!(v.scale(0.0).is_err());
        assert!(v.scale(-1.0).is_err());
        assert_eq!(v.scale(1.0).unwrap(), v);
    }

    #[test]
    fn scale_inverse_restores() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.7, -1.0), (0.5, 0.2, 2.0)]).unwrap();
        let back = psi.scale(3.7).unwrap().scale(1.0 / 3.7).unwrap();
        for q in [-1.0, 0.3, 2.0] {
            assert!((back.evaluate(q) - psi.evaluate(q)).norm() < 1e-12);
        }
    }

    #[test]
    fn momentum_displacement_is_a_phase() {
        let v = WaveFunction::vacuum();
        let d = v.displace(0.0, 1.7);
        for q in [-2.0, -0.4, 0.0, 1.1] {
            assert!((d.evaluate(q).norm_sqr() - v.evaluate(q).norm_sqr()).abs() < 1e-14);
            let phase = c(0.0, 1.7 * q).exp();
            assert!((d.evaluate(q) - phase * v.evaluate(q)).norm() < 1e-14);
        }
        assert!(rel(d.norm_sqr(), v.norm_sqr()) < 1e-13);
    }

    #[test]
    fn zero_displacement_is_identity() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.7, -1.0)]).unwrap();
        let d = psi.displace(0.0, 0.0);
        for q in [-1.0, 0.0, 1.0] {
            assert!((d.evaluate(q) - psi.evaluate(q)).norm() < 1e-15);
        }
    }

    #[test]
    fn displacement_in_momentum_basis_agrees() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.5, 0.3), (0.4, 0.8, -1.0)]).unwrap();
        let (dx, dp) = (0.7, -1.2);
        let via_x = psi.displace(dx, dp).to_basis(Basis::Momentum);
        let via_p = psi.to_basis(Basis::Momentum).displace(dx, dp);
        for p in [-2.0, -0.5, 0.0, 1.0, 2.2] {
            assert!((via_x.evaluate(p) - via_p.evaluate(p)).norm() < 1e-12);
        }
    }

    #[test]
    fn merge_sums_coincident_terms() {
        let psi = WaveFunction::from_real_terms(
            Basis::Position,
            &[(1.0, 0.5, 1.0), (2.0, 0.5, -1.0), (3.0, 0.5, 1.0 + 1e-14)],
        )
        .unwrap();
        let (m, report) = psi.merge_prune(0.0).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(report.merged, 1);
        assert!(rel(m.terms()[1].coeff().re, 4.0) < 1e-14);
        assert!(m.terms()[0].mean().re < m.terms()[1].mean().re);
    }

    #[test]
    fn merge_with_zero_tolerance_keeps_distinct_terms() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1e-30, 0.5, 1.0), (2.0, 0.5, -1.0)]).unwrap();
        let (m, report) = psi.merge_prune(0.0).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(report.dropped, 0);
    }

    #[test]
    fn prune_drops_small_terms_and_bounds_norm_change() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1e-20, 0.5, 1.0), (2.0, 0.5, -1.0)]).unwrap();
        let (m, report) = psi.merge_prune(1e-14).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(report.dropped, 1);
        let change = (m.norm_sqr() - psi.norm_sqr()).abs() / m.norm_sqr();
        assert!(change <= report.norm_change_bound);
    }

    #[test]
    fn exact_cancellation_is_degenerate() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.5, 1.0), (-1.0, 0.5, 1.0)]).unwrap();
        assert!(matches!(psi.merge_prune(0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn invalid_terms_are_rejected() {
        assert!(GaussianTerm::real(0.0, 1.0, 0.0).is_err());
        assert!(GaussianTerm::real(1.0, 0.0, 0.0).is_err());
        assert!(GaussianTerm::new(c(1.0, 0.0), c(-0.1, 1.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn record_round_trip_preserves_extreme_coefficients() {
        let psi = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.02, 14.0)]).unwrap().fourier();
        assert!(psi.terms()[0].ln_coeff().re < -700.0);
        let json = serde_json::to_string(&psi.to_record()).unwrap();
        let back = WaveFunction::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        for p in [-1.0, 0.0, 2.0] {
            let (a, b) = (back.evaluate(p), psi.evaluate(p));
            assert!((a - b).norm() <= 1e-12 * b.norm());
        }
    }

    #[test]
    fn peak_locates_maximum_for_complex_parameters() {
        let t = GaussianTerm::new(c(0.7, 0.1), c(0.5, 0.2), c(0.4, 0.8)).unwrap();
        let (loc, ln_mag) = t.peak();
        assert!((t.value(loc).norm().ln() - ln_mag).abs() < 1e-12);
        for dq in [-1e-3, 1e-3] {
            assert!(t.value(loc + dq).norm() < t.value(loc).norm());
        }
    }
}
