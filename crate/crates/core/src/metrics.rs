//! Approximate GKP target states, fidelity, shift-error window probabilities
//! and squeezing in decibels.

use std::f64::consts::{LN_10, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{Basis, GaussianTerm, WaveFunction};
use crate::SQRT_PI;

/// `Σₛ e^{−(2skₙ√π)²/2} G(x, Δ², 2s√π + logical·√π)` for `|s| ≤ s_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GkpTarget {
    pub delta: f64,
    pub kappa: f64,
    pub logical: u8,
    pub s_max: u32,
}

impl GkpTarget {
    /// Target with the default truncation [`GkpTarget::default_s_max`].
    pub fn new(delta: f64, kappa: f64, logical: u8) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Self::with_s_max(delta, kappa, logical, Self::default_s_max(kappa))
    }

    pub fn with_s_max(delta: f64, kappa: f64, logical: u8, s_max: u32) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        if logical > 1 {
            return Err(Error::InvalidParameter(format!("logical must be 0 or 1, got {logical}")));
        }
        Ok(Self { delta, kappa, logical, s_max })
    }

    /// Smallest truncation keeping every dropped envelope weight
    /// `e^{−(2sk√π)²}` below `1e-16`, and at least `ceil(5/(2k√π)) + 2`.
    pub fn default_s_max(kappa: f64) -> u32 {
        let unit = 2.0 * kappa * SQRT_PI;
        let floor = (5.0 / unit).ceil() + 2.0;
        let weight = ((16.0 * LN_10).sqrt() / unit).ceil();
        floor.max(weight).min(u32::MAX as f64) as u32
    }

    /// `ln` of the envelope coefficient of peak `s`.
    pub fn ln_envelope(&self, s: i64) -> f64 {
        let a = 2.0 * s as f64 * self.kappa * SQRT_PI;
        -0.5 * a * a
    }
}

/// Normalized position-basis wave function of `t`.
pub fn gkp_target(t: &GkpTarget) -> Result<WaveFunction> {
    let variance = t.delta * t.delta;
    let offset = t.logical as f64 * SQRT_PI;
    let s_max = t.s_max as i64;
    let terms = (-s_max..=s_max)
        .map(|s| {
            GaussianTerm::from_ln_coeff(
                t.ln_envelope(s).into(),
                variance.into(),
                (2.0 * s as f64 * SQRT_PI + offset).into(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    WaveFunction::new(Basis::Position, terms).normalize()
}

/// `|⟨ψ̂|φ̂⟩|²` of the normalized states, clamped to `[0, 1]`.
pub fn fidelity(psi: &WaveFunction, phi: &WaveFunction) -> Result<f64> {
    if psi.basis() != phi.basis() {
        return Err(Error::BasisMismatch { left: psi.basis(), right: phi.basis() });
    }
    let a = psi.normalize()?;
    let b = phi.normalize()?;
    Ok(a.inner_product(&b)?.norm_sqr().clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn basis(self) -> Basis {
        match self {
            Quadrature::X => Basis::Position,
            Quadrature::P => Basis::Momentum,
        }
    }
}

/// Periodic windows `[offset + jL − h, offset + jL + h]` for all integers `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftWindows {
    pub offset: f64,
    pub period: f64,
    pub half_width: f64,
}

impl ShiftWindows {
    /// Half-width `√π/6`; period `2√π` in x (offset `√π` for logical 1) and
    /// `√π` in p.
    pub fn for_quadrature(quadrature: Quadrature, logical: u8) -> Self {
        let half_width = SQRT_PI / 6.0;
        match quadrature {
            Quadrature::X => Self { offset: logical as f64 * SQRT_PI, period: 2.0 * SQRT_PI, half_width },
            Quadrature::P => Self { offset: 0.0, period: SQRT_PI, half_width },
        }
    }

    /// Whether `q` lies in a window.
    pub fn contains(&self, q: f64) -> bool {
        let d = (q - self.offset).rem_euclid(self.period);
        d <= self.half_width || self.period - d <= self.half_width
    }
}

/// Harmonics beyond which the window series is declared divergent.
pub const MAX_HARMONICS: u64 = 1_000_000;

// pair contributions below this fraction of the total are dropped from the tail
const SERIES_TOLERANCE: f64 = 1e-18;

/// Probability that `quadrature` lands in the logical-0 windows.
pub fn no_error_probability(psi: &WaveFunction, quadrature: Quadrature) -> Result<f64> {
    window_probability(psi, quadrature, &ShiftWindows::for_quadrature(quadrature, 0))
}

/// Probability mass of `|ψ(q)|²` inside `windows`, along `quadrature`.
///
/// The window indicator is expanded in its Fourier series
/// `2h/L + Σₙ 2 sin(nωh)/(πn) cos(nω(q − q₀))`, `ω = 2π/L`, and each harmonic
/// is the closed-form expectation `⟨ψ|e^{inωq}|ψ⟩`. The series is cut where
/// every Gaussian pair contribution has passed its maximum and fallen below
/// `1e-18` of the norm.
pub fn window_probability(psi: &WaveFunction, quadrature: Quadrature, windows: &ShiftWindows) -> Result<f64> {
    if !(windows.period > 0.0) || !(windows.half_width >= 0.0) {
        return Err(Error::InvalidParameter(format!("invalid window geometry {windows:?}")));
    }
    if 2.0 * windows.half_width >= windows.period {
        return Ok(1.0);
    }
    let state = psi.to_basis(quadrature.basis()).normalize()?;
    let omega = 2.0 * PI / windows.period;
    let h = windows.half_width;
    let harmonics = series_length(&state, omega)?;

    let mut total = 2.0 * h / windows.period;
    for n in 1..=harmonics {
        let t = n as f64 * omega;
        let a_n = (t * h).sin() / (PI * n as f64);
        if a_n == 0.0 {
            continue;
        }
        let chi = state.inner_product(&state.modulate(t))?;
        let phase = Complex64::from_polar(1.0, -t * windows.offset);
        total += 2.0 * a_n * (phase * chi).re;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Number of harmonics after which every pair term `|⟨a|e^{itq}|b⟩|` of a
/// normalized state is past its peak and below the series tolerance.
fn series_length(state: &WaveFunction, omega: f64) -> Result<u64> {
    let terms = state.terms();
    let floor = SERIES_TOLERANCE.ln() - 2.0 * (terms.len() as f64).ln();
    let mut t_stop: f64 = 0.0;
    for a in terms {
        for b in terms {
            // Re ln⟨a|e^{itq}|b⟩ is exactly quadratic in t
            let f = |t: f64| a.ln_overlap(&b.modulated(t)).re;
            let (f0, f1, f2) = (f(0.0), f(1.0), f(2.0));
            let beta = -0.5 * (f2 - 2.0 * f1 + f0);
            let gamma = f1 - f0 + beta;
            if f0.is_infinite() && f0 < 0.0 {
                continue;
            }
            if !(beta > 0.0) || !beta.is_finite() {
                return Err(Error::SeriesDivergence(MAX_HARMONICS));
            }
            let vertex = (gamma / (2.0 * beta)).max(0.0);
            // roots of f0 + γt − βt² = floor
            let disc = gamma * gamma + 4.0 * beta * (f0 - floor);
            let root = if disc > 0.0 { (gamma + disc.sqrt()) / (2.0 * beta) } else { 0.0 };
            if disc > 0.0 {
                t_stop = t_stop.max(vertex.max(root));
            }
        }
    }
    let n = (t_stop / omega).ceil();
    if n > MAX_HARMONICS as f64 {
        return Err(Error::SeriesDivergence(MAX_HARMONICS));
    }
    Ok(n as u64)
}

/// `10 log₁₀(e^{−2ζ})`, the quadrature noise-power change in dB.
pub fn zeta_to_db(zeta: f64) -> f64 {
    -20.0 * zeta / LN_10
}

pub fn db_to_zeta(db: f64) -> f64 {
    -db * LN_10 / 20.0
}
