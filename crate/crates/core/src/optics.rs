//! Cat-state constructors and the 50/50 beam splitter followed by a
//! momentum homodyne measurement on the second output port.
//!
//! The beam splitter maps `x₁ → (x₁ + x₂)/√2`, `x₂ → (x₁ − x₂)/√2`, and the
//! measurement projects mode 2 onto `⟨p = r|x⟩ = e^{−irx}/√(2π)`. The two-mode
//! state is never built: each pair of input terms maps to a single output
//! Gaussian in closed form.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{Basis, GaussianTerm, WaveFunction};
use crate::SQRT_PI;

/// Coherent amplitude `alpha` (real, non-negative) and squeezing `zeta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatSpec {
    pub alpha: f64,
    pub zeta: f64,
}

impl CatSpec {
    pub fn new(alpha: f64, zeta: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("cat amplitude must be real and non-negative, got {alpha}")));
        }
        if !zeta.is_finite() {
            return Err(Error::InvalidParameter(format!("squeezing must be finite, got {zeta}")));
        }
        Ok(Self { alpha, zeta })
    }

    /// Amplitude `α = √2^{m−1} √π e^ζ`: after `m` breeding rounds the peaks
    /// sit on the `2√π` lattice.
    pub fn for_order(m: u32, zeta: f64) -> Result<Self> {
        Self::for_final_spacing(m, zeta, 2.0 * SQRT_PI)
    }

    /// Amplitude whose `m`-round breeding product has peak spacing `spacing`.
    pub fn for_final_spacing(m: u32, zeta: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("peak spacing must be positive, got {spacing}")));
        }
        let alpha = 0.5 * spacing * SQRT_2.powi(m as i32 - 1) * zeta.exp();
        Self::new(alpha, zeta)
    }

    /// Distance between the two peaks of the squeezed cat.
    pub fn peak_separation(&self) -> f64 {
        2.0 * SQRT_2 * self.alpha * (-self.zeta).exp()
    }
}

/// Unnormalized squeezed cat `G(x, e^{−2ζ}, −√2αe^{−ζ}) + G(x, e^{−2ζ}, √2αe^{−ζ})`.
pub fn make_cat(spec: CatSpec) -> WaveFunction {
    let variance = (-2.0 * spec.zeta).exp();
    let offset = SQRT_2 * spec.alpha * (-spec.zeta).exp();
    WaveFunction::from_real_terms(Basis::Position, &[(1.0, variance, -offset), (1.0, variance, offset)])
        .expect("valid cat parameters")
}

/// Result of one beam-splitter + homodyne event.
#[derive(Clone, Debug)]
pub struct HomodyneOutcome {
    pub r: f64,
    /// Probability density of measuring `p₂ = r`.
    pub density: f64,
    /// Unnormalized conditional state of mode 1.
    pub conditional: WaveFunction,
}

/// Closed-form image of one term pair under beam splitter + projection.
fn project_terms(a: &GaussianTerm, b: &GaussianTerm, r: f64) -> GaussianTerm {
    let i = Complex64::i();
    let (v1, v2) = (a.variance(), b.variance());
    let (mu1, mu2) = (a.mean(), b.mean());
    let sum = v1 + v2;
    let out_var = 0.5 * sum;
    let centre = (mu1 + mu2) / SQRT_2;
    // residual momentum kick when the input variances differ
    let k = r * (v2 - v1) / sum;
    let phase = i * r * SQRT_2 * (mu2 * v1 - mu1 * v2) / sum - r * r * v1 * v2 / sum;
    let ln_coeff = a.ln_coeff() + b.ln_coeff() + 0.5 * (2.0 * v1 * v2 / sum).ln() + phase + i * k * centre
        - 0.5 * k * k * out_var;
    GaussianTerm::raw(ln_coeff, out_var, centre + i * k * out_var)
}

fn check_inputs(psi1: &WaveFunction, psi2: &WaveFunction) -> Result<()> {
    for psi in [psi1, psi2] {
        if psi.basis() != Basis::Position {
            return Err(Error::BasisMismatch { left: Basis::Position, right: psi.basis() });
        }
        if psi.is_degenerate() {
            return Err(Error::Degenerate("beam-splitter input has vanishing norm".into()));
        }
    }
    Ok(())
}

/// Conditional state of mode 1 before any merging: one term per input pair.
pub fn project_pair(psi1: &WaveFunction, psi2: &WaveFunction, r: f64) -> Result<WaveFunction> {
    check_inputs(psi1, psi2)?;
    let mut terms = Vec::with_capacity(psi1.len() * psi2.len());
    for a in psi1.terms() {
        for b in psi2.terms() {
            terms.push(project_terms(a, b, r));
        }
    }
    Ok(WaveFunction::new(Basis::Position, terms))
}

fn density_of(raw: &WaveFunction, psi1: &WaveFunction, psi2: &WaveFunction) -> f64 {
    // comb inputs project onto few distinct centres; merging first keeps the norm cheap
    let ln_norm = match raw.merge_prune(0.0) {
        Ok((merged, _)) => merged.ln_norm_sqr(),
        Err(_) => f64::NEG_INFINITY,
    };
    let ln = ln_norm - psi1.ln_norm_sqr() - psi2.ln_norm_sqr();
    if ln.is_finite() {
        ln.exp()
    } else {
        0.0
    }
}

/// Interfere `psi1` (mode 1) and `psi2` (mode 2) and condition on `p₂ = r`.
///
/// For equal-variance single Gaussians at `r = 0` this is
/// `G(x₁,V,μ₁)G(x₂,V,μ₂) → √V G(x₁, V, (μ₁+μ₂)/√2)`.
pub fn breed_pair(psi1: &WaveFunction, psi2: &WaveFunction, r: f64) -> Result<HomodyneOutcome> {
    let raw = project_pair(psi1, psi2, r)?;
    let density = density_of(&raw, psi1, psi2);
    let (conditional, _) = raw.merge_prune(0.0)?;
    Ok(HomodyneOutcome { r, density, conditional })
}

/// Probability density of the homodyne outcome `p₂ = r` for normalized inputs.
pub fn outcome_density(psi1: &WaveFunction, psi2: &WaveFunction, r: f64) -> Result<f64> {
    let raw = project_pair(psi1, psi2, r)?;
    Ok(density_of(&raw, psi1, psi2))
}

/// Window `[lo, hi]` containing the outcome distribution: the momentum
/// centres of all input terms combined as `(c₁ − c₂)/√2`, padded by ten
/// standard deviations.
pub fn outcome_window(psi1: &WaveFunction, psi2: &WaveFunction) -> Result<(f64, f64)> {
    check_inputs(psi1, psi2)?;
    let momentum_features = |psi: &WaveFunction| -> Vec<(f64, f64)> {
        psi.to_basis(Basis::Momentum)
            .terms()
            .iter()
            .map(|t| (t.peak().0, t.envelope_width() / SQRT_2))
            .collect()
    };
    let f1 = momentum_features(psi1);
    let f2 = momentum_features(psi2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(c1, s1) in &f1 {
        for &(c2, s2) in &f2 {
            let centre = (c1 - c2) / SQRT_2;
            let sigma = (0.5 * (s1 * s1 + s2 * s2)).sqrt();
            lo = lo.min(centre - 10.0 * sigma);
            hi = hi.max(centre + 10.0 * sigma);
        }
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Grid(format!("invalid outcome window [{lo}, {hi}]")));
    }
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug)]
struct Leaf {
    a: f64,
    h: f64,
    fa: f64,
    fm: f64,
    fb: f64,
}

impl Leaf {
    fn integral(&self) -> f64 {
        self.h * (self.fa + 4.0 * self.fm + self.fb) / 6.0
    }

    /// Integral of the quadratic interpolant over `[a, a + s·h]`.
    fn partial(&self, s: f64) -> f64 {
        let (s2, s3) = (s * s, s * s * s);
        let i0 = 2.0 * s3 / 3.0 - 1.5 * s2 + s;
        let i1 = 2.0 * s2 - 4.0 * s3 / 3.0;
        let i2 = 2.0 * s3 / 3.0 - 0.5 * s2;
        self.h * (self.fa * i0 + self.fm * i1 + self.fb * i2)
    }
}

/// Inverse-CDF sampler for the homodyne outcome of one input pair, built on
/// an adaptive Simpson grid over [`outcome_window`].
#[derive(Clone, Debug)]
pub struct OutcomeSampler {
    leaves: Vec<Leaf>,
    cumulative: Vec<f64>,
    total: f64,
}

/// Target absolute accuracy of the tabulated CDF.
pub const CDF_TOLERANCE: f64 = 1e-6;

const INITIAL_PANELS: usize = 256;
const MAX_DEPTH: u32 = 40;

impl OutcomeSampler {
    pub fn new(psi1: &WaveFunction, psi2: &WaveFunction) -> Result<Self> {
        let (lo, hi) = outcome_window(psi1, psi2)?;
        let psi1 = psi1.normalize()?;
        let psi2 = psi2.normalize()?;
        let density = |r: f64| outcome_density(&psi1, &psi2, r).unwrap_or(0.0);
        Self::from_density(density, lo, hi)
    }

    pub fn from_density<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64) -> Result<Self> {
        Self::tabulate(density, lo, hi, INITIAL_PANELS)
    }

    fn tabulate<F: Fn(f64) -> f64>(density: F, lo: f64, hi: f64, panels: usize) -> Result<Self> {
        let width = (hi - lo) / panels as f64;
        let mut leaves = Vec::new();
        for k in 0..panels {
            let a = lo + k as f64 * width;
            let b = if k + 1 == panels { hi } else { a + width };
            let (fa, fm, fb) = (density(a), density(0.5 * (a + b)), density(b));
            let tol = CDF_TOLERANCE * (b - a) / (hi - lo);
            refine(&density, Leaf { a, h: b - a, fa, fm, fb }, tol, 0, &mut leaves);
        }
        let mut cumulative = Vec::with_capacity(leaves.len());
        let mut total = 0.0;
        for leaf in &leaves {
            cumulative.push(total);
            total += leaf.integral();
        }
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Grid(format!("outcome density integrates to {total}")));
        }
        Ok(Self { leaves, cumulative, total })
    }

    /// Integral of the tabulated density over the window (≈ 1).
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn grid_len(&self) -> usize {
        self.leaves.len()
    }

    pub fn support(&self) -> (f64, f64) {
        let last = self.leaves.last().expect("non-empty grid");
        (self.leaves[0].a, last.a + last.h)
    }

    /// Normalized CDF at `r`.
    pub fn cdf(&self, r: f64) -> f64 {
        let (lo, hi) = self.support();
        if r <= lo {
            return 0.0;
        }
        if r >= hi {
            return 1.0;
        }
        let idx = self.leaves.partition_point(|l| l.a <= r) - 1;
        let leaf = &self.leaves[idx];
        ((self.cumulative[idx] + leaf.partial((r - leaf.a) / leaf.h)) / self.total).clamp(0.0, 1.0)
    }

    /// Outcome with `cdf(r) = u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let target = u.clamp(0.0, 1.0) * self.total;
        let idx = self.cumulative.partition_point(|&c| c <= target).max(1) - 1;
        let leaf = &self.leaves[idx];
        let want = target - self.cumulative[idx];
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if leaf.partial(mid) < want {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        leaf.a + 0.5 * (lo + hi) * leaf.h
    }

    /// Draw one outcome. Consumes exactly one `f64` from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

fn refine<F: Fn(f64) -> f64>(density: &F, leaf: Leaf, tol: f64, depth: u32, out: &mut Vec<Leaf>) {
    let half = 0.5 * leaf.h;
    let left = Leaf { a: leaf.a, h: half, fa: leaf.fa, fm: density(leaf.a + 0.25 * leaf.h), fb: leaf.fm };
    let right = Leaf { a: leaf.a + half, h: half, fa: leaf.fm, fm: density(leaf.a + 0.75 * leaf.h), fb: leaf.fb };
    let coarse = leaf.integral();
    let fine = left.integral() + right.integral();
    if (fine - coarse).abs() <= 15.0 * tol || depth >= MAX_DEPTH {
        out.push(left);
        out.push(right);
    } else {
        refine(density, left, 0.5 * tol, depth + 1, out);
        refine(density, right, 0.5 * tol, depth + 1, out);
    }
}

/// Draw `p₂` under the post-selection window `|p₂| ≤ epsilon`: `Some(r)` when
/// the outcome falls inside, `None` otherwise. Only the window is tabulated,
/// so rejected outcomes carry no value. Consumes exactly one `f64` from `rng`.
pub fn sample_in_window<R: Rng + ?Sized>(psi1: &WaveFunction, psi2: &WaveFunction, epsilon: f64, rng: &mut R) -> Result<Option<f64>> {
    let (lo, hi) = outcome_window(psi1, psi2)?;
    let (lo, hi) = (lo.max(-epsilon), hi.min(epsilon));
    let u = rng.random::<f64>();
    if !(lo < hi) {
        return Ok(None);
    }
    let psi1 = psi1.normalize()?;
    let psi2 = psi2.normalize()?;
    let density = |r: f64| outcome_density(&psi1, &psi2, r).unwrap_or(0.0);
    let inside = match OutcomeSampler::tabulate(density, lo, hi, WINDOW_PANELS) {
        Ok(s) => s,
        Err(_) => return Ok(None),
    };
    let mass = inside.total_mass().min(1.0);
    Ok((u < mass).then(|| inside.quantile(u / mass)))
}

const WINDOW_PANELS: usize = 16;

/// Draw `p₂` from the outcome distribution and return the conditional state.
pub fn sample_outcome<R: Rng + ?Sized>(psi1: &WaveFunction, psi2: &WaveFunction, rng: &mut R) -> Result<HomodyneOutcome> {
    let sampler = OutcomeSampler::new(psi1, psi2)?;
    breed_pair(psi1, psi2, sampler.sample(rng))
}
