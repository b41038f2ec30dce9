//! Brute-force cross-checks of the closed-form algebra against adaptive
//! quadrature, grouped into suites with machine-readable reports.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::breeding::{binomial_state, breed_step, pascal_row_ln, BinomialSpec};
use crate::error::{Error, Result};
use crate::gaussian::{Basis, GaussianTerm, WaveFunction};
use crate::metrics::{fidelity, gkp_target, no_error_probability, window_probability, GkpTarget, Quadrature, ShiftWindows};
use crate::optics::{breed_pair, outcome_density};
use crate::quadrature::Integrator;
use crate::SQRT_PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Overlap,
    Breed,
    Fidelity,
    Windows,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Overlap, Suite::Breed, Suite::Fidelity, Suite::Windows];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Overlap => "overlap",
            Suite::Breed => "breed",
            Suite::Fidelity => "fidelity",
            Suite::Windows => "windows",
        }
    }

    /// Headline tolerance of the suite.
    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Overlap => 1e-10,
            Suite::Breed => 1e-8,
            Suite::Fidelity => 1e-10,
            Suite::Windows => 1e-10,
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown oracle suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub tolerance: f64,
    /// Largest case error.
    pub max_error: f64,
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    fn from_cases(suite: Suite, cases: Vec<CaseReport>) -> Self {
        let passed = cases.iter().all(|c| c.passed);
        let max_error = cases.iter().map(|c| c.error).fold(0.0, f64::max);
        Self { suite, passed, tolerance: suite.tolerance(), max_error, cases }
    }
}

fn case(name: impl Into<String>, error: f64, tolerance: f64) -> CaseReport {
    CaseReport { name: name.into(), error, tolerance, passed: error <= tolerance }
}

/// Run `suite` with random cases drawn from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let cases = match suite {
        Suite::Overlap => overlap_cases(seed, 40)?,
        Suite::Breed => {
            let mut cases = pascal_cases()?;
            cases.extend(equal_variance_cases(seed, 100)?);
            cases.extend(general_outcome_cases(seed, 20)?);
            cases.extend(density_cases()?);
            cases
        }
        Suite::Fidelity => fidelity_cases()?,
        Suite::Windows => window_cases()?,
    };
    Ok(SuiteReport::from_cases(suite, cases))
}

/// Random superposition of up to `max_terms` terms with complex coefficients,
/// variances and means.
pub fn random_superposition<R: Rng>(rng: &mut R, max_terms: usize) -> WaveFunction {
    let n = rng.random_range(1..=max_terms);
    let terms = (0..n)
        .map(|_| {
            let coeff = Complex64::from_polar(rng.random_range(0.2..2.0), rng.random_range(-PI..PI));
            let variance = Complex64::new(rng.random_range(0.15..2.5), rng.random_range(-0.8..0.8));
            let mean = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-0.7..0.7));
            GaussianTerm::new(coeff, variance, mean).expect("positive real variance")
        })
        .collect();
    WaveFunction::new(Basis::Position, terms)
}

fn features(psi: &WaveFunction) -> Vec<(f64, f64)> {
    psi.terms().iter().map(|t| (t.peak().0, t.envelope_width())).collect()
}

fn span(features: &[(f64, f64)]) -> (f64, f64) {
    let lo = features.iter().map(|&(c, w)| c - 14.0 * w).fold(f64::INFINITY, f64::min);
    let hi = features.iter().map(|&(c, w)| c + 14.0 * w).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// `∫ conj(ψ(q)) φ(q) dq` by quadrature, with the `∫|ψ̄φ|` scale.
pub fn overlap_by_quadrature(psi: &WaveFunction, phi: &WaveFunction) -> (Complex64, f64) {
    let mut f = features(psi);
    f.extend(features(phi));
    let (lo, hi) = span(&f);
    let r = Integrator::new(0.0, 1e-14).integrate(
        |q| psi.evaluate(q).conj() * phi.evaluate(q),
        lo,
        hi,
        &Integrator::feature_points(&f, 4),
    );
    (r.value, r.abs_value)
}

/// Conditional mode-1 amplitude at `x1` after the beam splitter and the
/// `p₂ = r` projection, integrating the two-mode wave function along `x₂`.
pub fn projection_by_quadrature(psi1: &WaveFunction, psi2: &WaveFunction, r: f64, x1: f64) -> Complex64 {
    let f = |x2: f64| Complex64::new(0.0, -r * x2).exp() * psi1.evaluate((x1 + x2) / SQRT_2) * psi2.evaluate((x1 - x2) / SQRT_2);
    let mut feats = Vec::new();
    for (c, w) in features(psi1) {
        feats.push((SQRT_2 * c - x1, SQRT_2 * w));
    }
    for (c, w) in features(psi2) {
        feats.push((x1 - SQRT_2 * c, SQRT_2 * w));
    }
    let (lo, hi) = span(&feats);
    Integrator::new(0.0, 1e-14).integrate(f, lo, hi, &Integrator::feature_points(&feats, 6)).value / (2.0 * PI).sqrt()
}

/// Homodyne density at `r` as a two-dimensional integral: the outer
/// integral over `x₁` of `|projection_by_quadrature|²`.
pub fn density_by_quadrature(psi1: &WaveFunction, psi2: &WaveFunction, r: f64) -> f64 {
    let mut feats = Vec::new();
    for (c1, w1) in features(psi1) {
        for (c2, w2) in features(psi2) {
            feats.push(((c1 + c2) / SQRT_2, (0.5 * (w1 * w1 + w2 * w2)).sqrt()));
        }
    }
    let (lo, hi) = span(&feats);
    let outer = Integrator::new(0.0, 1e-11).integrate_real(
        |x1| projection_by_quadrature(psi1, psi2, r, x1).norm_sqr(),
        lo,
        hi,
        &Integrator::feature_points(&feats, 3),
    );
    outer.value.re / (psi1.norm_sqr() * psi2.norm_sqr())
}

fn overlap_cases(seed: u64, n: usize) -> Result<Vec<CaseReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = Suite::Overlap.tolerance();
    let mut out = Vec::with_capacity(2 * n);
    for k in 0..n {
        let psi = random_superposition(&mut rng, 8);
        let phi = random_superposition(&mut rng, 8);
        let closed = psi.inner_product(&phi)?;
        let (quad, _) = overlap_by_quadrature(&psi, &phi);
        let scale = quad.norm().max(1e-3 * (psi.norm_sqr() * phi.norm_sqr()).sqrt());
        out.push(case(format!("overlap[{k}]"), (closed - quad).norm() / scale, tol));

        // Parseval through the momentum representation
        let moved = psi.fourier().inner_product(&phi.fourier())?;
        out.push(case(format!("parseval[{k}]"), (moved - closed).norm() / scale, tol));
    }
    Ok(out)
}

fn pascal_cases() -> Result<Vec<CaseReport>> {
    let mut out = Vec::new();
    for m in 1..=3u32 {
        let beta = binomial_state(BinomialSpec::lattice(m, 1.9))?;
        let bred = breed_step(&beta, &beta, 0.0, 0.0)?;
        out.push(case(format!("pascal[m={m}]"), pascal_error(&bred, m + 1)?, 1e-12));
        out.push(case(format!("spacing[m={m}]"), spacing_error(&bred, SQRT_2 * SQRT_PI), 1e-12));
    }
    Ok(out)
}

/// Largest relative deviation of the coefficient vector from row `2^m` of
/// Pascal's triangle, after fitting the global constant on the first entry.
pub fn pascal_error(psi: &WaveFunction, m: u32) -> Result<f64> {
    let row = pascal_row_ln(m)?;
    if row.len() != psi.len() {
        return Ok(f64::INFINITY);
    }
    let offset = psi.terms()[0].ln_coeff() - row[0];
    Ok(psi
        .terms()
        .iter()
        .zip(&row)
        .map(|(t, &ln)| ((t.ln_coeff() - offset - ln).exp() - 1.0).norm())
        .fold(0.0, f64::max))
}

/// Largest relative deviation of adjacent peak gaps from `spacing`.
pub fn spacing_error(psi: &WaveFunction, spacing: f64) -> f64 {
    psi.terms()
        .windows(2)
        .map(|w| ((w[1].mean() - w[0].mean()).norm() / spacing - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Equal-variance single-Gaussian pairs at `r = 0` against
/// `G(V, μ₁)G(V, μ₂) → √V G(V, (μ₁+μ₂)/√2)`; returns the largest relative
/// error over coefficient, variance and mean.
pub fn equal_variance_error<R: Rng>(rng: &mut R) -> Result<f64> {
    let v = rng.random_range(0.01..5.0);
    let (mu1, mu2) = (rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
    let (c1, c2) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
    let a = WaveFunction::from_real_terms(Basis::Position, &[(c1, v, mu1)])?;
    let b = WaveFunction::from_real_terms(Basis::Position, &[(c2, v, mu2)])?;
    let out = breed_pair(&a, &b, 0.0)?.conditional;
    if out.len() != 1 {
        return Ok(f64::INFINITY);
    }
    let t = out.terms()[0];
    let mean = (mu1 + mu2) / SQRT_2;
    let coeff = c1 * c2 * v.sqrt();
    let errs = [
        (t.coeff() - coeff).norm() / coeff,
        (t.variance() - v).norm() / v,
        (t.mean() - mean).norm() / mean.abs().max(1.0),
    ];
    Ok(errs.into_iter().fold(0.0, f64::max))
}

fn equal_variance_cases(seed: u64, n: usize) -> Result<Vec<CaseReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let worst = (0..n).map(|_| equal_variance_error(&mut rng)).collect::<Result<Vec<_>>>()?;
    Ok(vec![case(format!("equal_variance[{n}]"), worst.into_iter().fold(0.0, f64::max), 1e-12)])
}

/// One random general-outcome case: largest pointwise relative error of the
/// closed-form conditional state against quadrature, over points where the
/// amplitude exceeds `1e-3` of its peak.
pub fn general_outcome_error<R: Rng>(rng: &mut R) -> Result<f64> {
    let a = random_superposition(rng, 3);
    let b = random_superposition(rng, 3);
    let r = rng.random_range(-2.0..2.0);
    let out = breed_pair(&a, &b, r)?.conditional;
    let (lo, hi) = span(&features(&out));
    let (lo, hi) = (lo.max(-12.0), hi.min(12.0));
    let xs: Vec<f64> = (0..=24).map(|j| lo + (hi - lo) * j as f64 / 24.0).collect();
    let values: Vec<Complex64> = xs.iter().map(|&x| out.evaluate(x)).collect();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (&x, &closed) in xs.iter().zip(&values) {
        if closed.norm() < 1e-3 * peak {
            continue;
        }
        let quad = projection_by_quadrature(&a, &b, r, x);
        worst = worst.max((closed - quad).norm() / quad.norm());
    }
    Ok(worst)
}

fn general_outcome_cases(seed: u64, n: usize) -> Result<Vec<CaseReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb4ee);
    (0..n)
        .map(|k| Ok(case(format!("general_r[{k}]"), general_outcome_error(&mut rng)?, 1e-8)))
        .collect()
}

fn density_cases() -> Result<Vec<CaseReport>> {
    let cat = crate::optics::make_cat(crate::optics::CatSpec::for_order(1, 1.0)?);
    let vac = WaveFunction::vacuum();
    let odd = WaveFunction::from_real_terms(Basis::Position, &[(1.0, 0.4, -0.8), (-0.5, 1.1, 0.6)])?;
    let mut out = Vec::new();
    for (name, a, b, r) in [("cat", &cat, &cat, 0.4), ("vacuum", &vac, &vac, 0.9), ("mixed", &odd, &vac, -0.3)] {
        let closed = outcome_density(a, b, r)?;
        let quad = density_by_quadrature(a, b, r);
        out.push(case(format!("density[{name}]"), (closed - quad).abs() / quad, 1e-8));
    }
    Ok(out)
}

/// `|⟨ψ̂|φ̂⟩|²` with every integral done by quadrature.
pub fn fidelity_by_quadrature(psi: &WaveFunction, phi: &WaveFunction) -> f64 {
    let (ab, _) = overlap_by_quadrature(psi, phi);
    let (aa, _) = overlap_by_quadrature(psi, psi);
    let (bb, _) = overlap_by_quadrature(phi, phi);
    ab.norm_sqr() / (aa.re * bb.re)
}

/// Frozen regression value: the order-3 binomial state at `ζ = 1.9` on the
/// `2√π` lattice against the `Δ = k = 0.15` target.
pub const BINOMIAL3_TARGET_FIDELITY: f64 = 0.967_579_715_078_996_3;

fn fidelity_cases() -> Result<Vec<CaseReport>> {
    let tol = Suite::Fidelity.tolerance();
    let target = gkp_target(&GkpTarget::new(0.15, 0.15, 0)?)?;
    let beta = binomial_state(BinomialSpec::lattice(3, 1.9))?;
    let closed = fidelity(&beta, &target)?;
    let mut out = vec![
        case("binomial3_vs_target", (closed - fidelity_by_quadrature(&beta, &target)).abs(), tol),
        case("binomial3_vs_target_frozen", (closed - BINOMIAL3_TARGET_FIDELITY).abs(), 1e-9),
    ];
    let vac = WaveFunction::vacuum();
    for dx in [0.5, 1.5, 3.0] {
        let f = fidelity(&vac, &vac.displace(dx, 0.0))?;
        out.push(case(format!("displaced_vacuum[{dx}]"), (f - (-0.5 * dx * dx).exp()).abs(), tol));
    }
    let one = binomial_state(BinomialSpec::lattice(1, 1.9))?.displace(0.3, -0.2);
    let f = fidelity(&one, &target)?;
    out.push(case("shifted_binomial1_vs_target", (f - fidelity_by_quadrature(&one, &target)).abs(), tol));
    Ok(out)
}

fn window_mass_by_quadrature(psi: &WaveFunction, windows: &ShiftWindows) -> f64 {
    let psi = psi.normalize().expect("normalizable");
    let (lo, hi) = span(&features(&psi));
    let first = ((lo - windows.offset) / windows.period).floor() as i64;
    let last = ((hi - windows.offset) / windows.period).ceil() as i64;
    let integ = Integrator::new(1e-16, 1e-13);
    (first..=last)
        .map(|j| {
            let c = windows.offset + j as f64 * windows.period;
            integ
                .integrate_real(|q| psi.evaluate(q).norm_sqr(), c - windows.half_width, c + windows.half_width, &[c])
                .value
                .re
        })
        .sum()
}

fn window_cases() -> Result<Vec<CaseReport>> {
    let tol = Suite::Windows.tolerance();
    let mut out = Vec::new();
    for (delta, kappa) in [(0.15, 0.15), (0.25, 0.2), (0.4, 0.3)] {
        let psi = gkp_target(&GkpTarget::new(delta, kappa, 0)?)?;
        for quadrature in [Quadrature::X, Quadrature::P] {
            let w = ShiftWindows::for_quadrature(quadrature, 0);
            let series = window_probability(&psi, quadrature, &w)?;
            let rep = match quadrature {
                Quadrature::X => psi.clone(),
                Quadrature::P => psi.to_basis(Basis::Momentum),
            };
            let quad = window_mass_by_quadrature(&rep, &w);
            out.push(case(format!("{quadrature:?}[{delta},{kappa}]").to_lowercase(), (series - quad).abs(), tol));
        }
    }
    let psi = gkp_target(&GkpTarget::new(0.15, 0.15, 0)?)?;
    let product = no_error_probability(&psi, Quadrature::X)? * no_error_probability(&psi, Quadrature::P)?;
    out.push(case("product_at_0.15_at_least_0.98", (0.98 - product).max(0.0), 0.0));
    Ok(out)
}
