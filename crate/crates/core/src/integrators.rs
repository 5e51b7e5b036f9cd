//! One-step maps for overdamped and kinetic Langevin discretizations.
//!
//! Splitting schemes are built from three exact pieces applied left to
//! right:
//!
//! * `B(τ)`: `v ← v − τ ∇U(x)`
//! * `A(τ)`: `x ← x + τ v`
//! * `O(τ)`: `v ← η v + √(1 − η²) ξ` with `η = exp(−γ τ)`
//!
//! Repeated letters in the symmetric schemes are half steps, so BAOAB is
//! `B(h/2) A(h/2) O(h) A(h/2) B(h/2)` and OBABO is
//! `O(h/2) B(h/2) A(h) B(h/2) O(h/2)`. Nothing is fused: each sub-step is
//! applied as written, which keeps the realized difference dynamics equal to
//! the product of sub-step matrices.
//!
//! The overdamped schemes carry no velocity. Their `v` slot holds the most
//! recent noise draw instead; LM needs it (it averages consecutive draws) and
//! overdamped EM keeps it for symmetry, so both start from a primer draw.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::potentials::Potential;

/// Position/velocity pair `z = (x, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhaseState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        Ok(Self { x, v })
    }

    /// Position `x` with zero velocity.
    pub fn at_rest(x: Vec<f64>) -> Self {
        let v = vec![0.0; x.len()];
        Self { x, v }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            x: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }

    /// `self − other`, coordinate-wise.
    pub fn difference(&self, other: &PhaseState) -> PhaseState {
        PhaseState {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect(),
            v: self.v.iter().zip(&other.v).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Every discretization this crate knows how to step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    OverdampedEM,
    LM,
    KineticEM,
    BAO,
    OAB,
    ABO,
    BOA,
    OBA,
    AOB,
    BAOAB,
    OBABO,
    SES,
}

impl SchemeId {
    pub const ALL: [SchemeId; 12] = [
        SchemeId::OverdampedEM,
        SchemeId::LM,
        SchemeId::KineticEM,
        SchemeId::BAO,
        SchemeId::OAB,
        SchemeId::ABO,
        SchemeId::BOA,
        SchemeId::OBA,
        SchemeId::AOB,
        SchemeId::BAOAB,
        SchemeId::OBABO,
        SchemeId::SES,
    ];

    /// The kinetic schemes (everything except the two overdamped ones).
    pub const KINETIC: [SchemeId; 10] = [
        SchemeId::KineticEM,
        SchemeId::BAO,
        SchemeId::OAB,
        SchemeId::ABO,
        SchemeId::BOA,
        SchemeId::OBA,
        SchemeId::AOB,
        SchemeId::BAOAB,
        SchemeId::OBABO,
        SchemeId::SES,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::OverdampedEM => "OverdampedEM",
            SchemeId::LM => "LM",
            SchemeId::KineticEM => "KineticEM",
            SchemeId::BAO => "BAO",
            SchemeId::OAB => "OAB",
            SchemeId::ABO => "ABO",
            SchemeId::BOA => "BOA",
            SchemeId::OBA => "OBA",
            SchemeId::AOB => "AOB",
            SchemeId::BAOAB => "BAOAB",
            SchemeId::OBABO => "OBABO",
            SchemeId::SES => "SES",
        }
    }

    pub fn is_overdamped(self) -> bool {
        matches!(self, SchemeId::OverdampedEM | SchemeId::LM)
    }

    /// The sub-step sequence of a splitting scheme, `None` otherwise.
    pub fn substeps(self) -> Option<&'static [SubStep]> {
        use SubStep::*;
        const FULL: f64 = 1.0;
        const HALF: f64 = 0.5;
        let seq: &'static [SubStep] = match self {
            SchemeId::BAO => &[Kick(FULL), Drift(FULL), Refresh(FULL, 0)],
            SchemeId::OAB => &[Refresh(FULL, 0), Drift(FULL), Kick(FULL)],
            SchemeId::ABO => &[Drift(FULL), Kick(FULL), Refresh(FULL, 0)],
            SchemeId::BOA => &[Kick(FULL), Refresh(FULL, 0), Drift(FULL)],
            SchemeId::OBA => &[Refresh(FULL, 0), Kick(FULL), Drift(FULL)],
            SchemeId::AOB => &[Drift(FULL), Refresh(FULL, 0), Kick(FULL)],
            SchemeId::BAOAB => &[Kick(HALF), Drift(HALF), Refresh(FULL, 0), Drift(HALF), Kick(HALF)],
            SchemeId::OBABO => &[Refresh(HALF, 0), Kick(HALF), Drift(FULL), Kick(HALF), Refresh(HALF, 1)],
            _ => return None,
        };
        Some(seq)
    }

    /// Duration of each O sub-step as a fraction of `h`.
    pub fn o_fraction(self) -> Option<f64> {
        match self {
            SchemeId::OBABO => Some(0.5),
            s if s.substeps().is_some() => Some(1.0),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-'], "");
        let found = SchemeId::ALL
            .into_iter()
            .find(|id| id.name().to_ascii_lowercase() == key)
            .or(match key.as_str() {
                "em" | "kem" => Some(SchemeId::KineticEM),
                "oem" | "ula" => Some(SchemeId::OverdampedEM),
                _ => None,
            });
        found.ok_or_else(|| invalid(format!("unknown scheme '{s}'")))
    }
}

/// One piece of a splitting scheme. The `f64` is the duration as a fraction
/// of `h`; the `usize` of `Refresh` selects which noise vector it consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubStep {
    Kick(f64),
    Drift(f64),
    Refresh(f64, usize),
}

/// What a scheme draws per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSignature {
    /// Independent standard-normal vectors, one per stochastic sub-step.
    Independent(usize),
    /// One correlated (position, velocity) Gaussian pair per coordinate,
    /// built from two standard-normal vectors.
    CorrelatedPair,
}

impl NoiseSignature {
    /// Number of standard-normal vectors the step consumes.
    pub fn standard_normal_vectors(self) -> usize {
        match self {
            NoiseSignature::Independent(n) => n,
            NoiseSignature::CorrelatedPair => 2,
        }
    }
}

pub fn noise_requirements(scheme: SchemeId) -> NoiseSignature {
    match scheme {
        SchemeId::OBABO => NoiseSignature::Independent(2),
        SchemeId::SES => NoiseSignature::CorrelatedPair,
        _ => NoiseSignature::Independent(1),
    }
}

/// Stepsize and friction. `η` is derived per O sub-step, see [`StepParams::eta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub h: f64,
    pub gamma: f64,
}

impl StepParams {
    pub fn new(h: f64, gamma: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("stepsize must be positive and finite, got {h}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid(format!("friction must be positive and finite, got {gamma}")));
        }
        Ok(Self { h, gamma })
    }

    /// `exp(−γ h)`.
    pub fn eta_full(&self) -> f64 {
        (-self.gamma * self.h).exp()
    }

    /// `η` of the scheme's O sub-step: `exp(−γh/2)` for OBABO, `exp(−γh)`
    /// for the other splittings, SES and the kinetic EM analysis.
    pub fn eta(&self, scheme: SchemeId) -> f64 {
        let frac = scheme.o_fraction().unwrap_or(1.0);
        (-self.gamma * self.h * frac).exp()
    }
}

/// Ornstein–Uhlenbeck coefficients over a duration: `η = e^{−γτ}` and
/// `σ = √(1 − η²)`, with `σ` computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuCoefficients {
    pub eta: f64,
    pub sigma: f64,
}

impl OuCoefficients {
    pub fn over(gamma: f64, tau: f64) -> Self {
        let u = gamma * tau;
        Self {
            eta: (-u).exp(),
            sigma: (-(-2.0 * u).exp_m1()).sqrt(),
        }
    }

    pub fn from_eta(eta: f64) -> Self {
        Self {
            eta,
            sigma: (1.0 - eta * eta).max(0.0).sqrt(),
        }
    }
}

/// Standard-normal vectors consumed by one step.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub vectors: Vec<Vec<f64>>,
}

impl NoiseDraw {
    pub fn new(vectors: Vec<Vec<f64>>) -> Self {
        Self { vectors }
    }

    pub fn single(xi: Vec<f64>) -> Self {
        Self { vectors: vec![xi] }
    }

    pub fn zeros(scheme: SchemeId, dim: usize) -> Self {
        let n = noise_requirements(scheme).standard_normal_vectors();
        Self {
            vectors: vec![vec![0.0; dim]; n],
        }
    }

    fn check(&self, scheme: SchemeId, dim: usize) -> Result<()> {
        let expected = noise_requirements(scheme).standard_normal_vectors();
        if self.vectors.len() != expected {
            return Err(Error::NoiseArity {
                scheme: scheme.name(),
                expected,
                got: self.vectors.len(),
            });
        }
        for v in &self.vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }
}

fn check_state(p: &dyn Potential, z: &PhaseState) -> Result<()> {
    if z.x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: z.x.len(),
        });
    }
    if z.v.len() != z.x.len() {
        return Err(Error::DimensionMismatch {
            expected: z.x.len(),
            got: z.v.len(),
        });
    }
    Ok(())
}

/// `B(τ)`: `v ← v − τ ∇U(x)`.
pub fn kick(z: &PhaseState, tau: f64, p: &dyn Potential) -> Result<PhaseState> {
    check_state(p, z)?;
    let mut out = z.clone();
    let mut grad = vec![0.0; z.dim()];
    kick_in_place(&mut out, tau, p, &mut grad);
    Ok(out)
}

/// `A(τ)`: `x ← x + τ v`.
pub fn drift(z: &PhaseState, tau: f64) -> Result<PhaseState> {
    if z.x.len() != z.v.len() {
        return Err(Error::DimensionMismatch {
            expected: z.x.len(),
            got: z.v.len(),
        });
    }
    let mut out = z.clone();
    drift_in_place(&mut out, tau);
    Ok(out)
}

/// `O`: `v ← η v + √(1 − η²) ξ`.
pub fn refresh(z: &PhaseState, eta: f64, xi: &[f64]) -> Result<PhaseState> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("O step needs 0 < eta < 1, got {eta}")));
    }
    if xi.len() != z.v.len() {
        return Err(Error::DimensionMismatch {
            expected: z.v.len(),
            got: xi.len(),
        });
    }
    let mut out = z.clone();
    refresh_in_place(&mut out, OuCoefficients::from_eta(eta), xi);
    Ok(out)
}

#[inline]
fn kick_in_place(z: &mut PhaseState, tau: f64, p: &dyn Potential, grad: &mut [f64]) {
    p.gradient_into(&z.x, grad);
    for (v, g) in z.v.iter_mut().zip(grad.iter()) {
        *v -= tau * g;
    }
}

#[inline]
fn drift_in_place(z: &mut PhaseState, tau: f64) {
    for (x, v) in z.x.iter_mut().zip(&z.v) {
        *x += tau * v;
    }
}

#[inline]
fn refresh_in_place(z: &mut PhaseState, ou: OuCoefficients, xi: &[f64]) {
    for (v, n) in z.v.iter_mut().zip(xi) {
        *v = ou.eta * *v + ou.sigma * n;
    }
}

/// Advances `z` by one step of `scheme`.
pub fn step(
    scheme: SchemeId,
    p: &dyn Potential,
    z: &PhaseState,
    params: &StepParams,
    noise: &NoiseDraw,
) -> Result<PhaseState> {
    check_state(p, z)?;
    noise.check(scheme, z.dim())?;
    let mut out = z.clone();
    let mut grad = vec![0.0; z.dim()];
    advance(scheme, p, &mut out, params, noise, &mut grad)?;
    if !out.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(out)
}

/// In-place step without the state/noise shape checks of [`step`]; `grad`
/// is scratch of length `dim`. Used by the coupling runner's inner loop.
pub(crate) fn advance(
    scheme: SchemeId,
    p: &dyn Potential,
    z: &mut PhaseState,
    params: &StepParams,
    noise: &NoiseDraw,
    grad: &mut [f64],
) -> Result<()> {
    let h = params.h;
    let gamma = params.gamma;
    match scheme {
        SchemeId::OverdampedEM => {
            let xi = &noise.vectors[0];
            let scale = (2.0 * h).sqrt();
            p.gradient_into(&z.x, grad);
            for i in 0..z.dim() {
                z.x[i] += -h * grad[i] + scale * xi[i];
            }
            z.v.copy_from_slice(xi);
        }
        SchemeId::LM => {
            let xi = &noise.vectors[0];
            let scale = (2.0 * h).sqrt();
            p.gradient_into(&z.x, grad);
            for i in 0..z.dim() {
                z.x[i] += -h * grad[i] + scale * 0.5 * (xi[i] + z.v[i]);
            }
            z.v.copy_from_slice(xi);
        }
        SchemeId::KineticEM => {
            let xi = &noise.vectors[0];
            let scale = (2.0 * gamma * h).sqrt();
            p.gradient_into(&z.x, grad);
            for i in 0..z.dim() {
                let v = z.v[i];
                z.x[i] += h * v;
                z.v[i] = v - h * grad[i] - h * gamma * v + scale * xi[i];
            }
        }
        SchemeId::SES => {
            let cov = SesCovariance::new(params)?;
            let coef = SesCoefficients::new(params);
            p.gradient_into(&z.x, grad);
            let (xi1, xi2) = (&noise.vectors[0], &noise.vectors[1]);
            for i in 0..z.dim() {
                let (zeta, omega) = cov.correlate(xi1[i], xi2[i]);
                let v = z.v[i];
                z.x[i] += coef.drift_v * v - coef.drift_grad * grad[i] + zeta;
                z.v[i] = coef.eta * v - coef.kick_grad * grad[i] + omega;
            }
        }
        splitting => {
            let seq = splitting
                .substeps()
                .expect("every remaining scheme is a splitting");
            for sub in seq {
                match *sub {
                    SubStep::Kick(frac) => kick_in_place(z, frac * h, p, grad),
                    SubStep::Drift(frac) => drift_in_place(z, frac * h),
                    SubStep::Refresh(frac, k) => {
                        refresh_in_place(z, OuCoefficients::over(gamma, frac * h), &noise.vectors[k])
                    }
                }
            }
        }
    }
    Ok(())
}

/// Deterministic coefficients of the SES update
/// `x ← x + drift_v·v − drift_grad·∇U + ζ`, `v ← η v − kick_grad·∇U + ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SesCoefficients {
    pub eta: f64,
    /// `(1 − η)/γ`
    pub drift_v: f64,
    /// `(γh + η − 1)/γ²`
    pub drift_grad: f64,
    /// `(1 − η)/γ`
    pub kick_grad: f64,
}

impl SesCoefficients {
    pub fn new(params: &StepParams) -> Self {
        let u = params.gamma * params.h;
        let g2 = params.gamma * params.gamma;
        let one_minus_eta = -(-u).exp_m1();
        Self {
            eta: (-u).exp(),
            drift_v: one_minus_eta / params.gamma,
            drift_grad: phi2(u) / g2,
            kick_grad: one_minus_eta / params.gamma,
        }
    }
}

/// `u − 1 + e^{−u}` without cancellation at small `u`.
pub(crate) fn phi2(u: f64) -> f64 {
    if u < 0.5 {
        // Σ_{n≥2} (−u)^n / n!
        let mut term = u * u / 2.0;
        let mut sum = 0.0_f64;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) && n < 60.0 {
            sum += term;
            n += 1.0;
            term *= -u / n;
        }
        sum
    } else {
        u + (-u).exp_m1()
    }
}

/// `u − 2(1 − e^{−u}) + (1 − e^{−2u})/2`, which behaves like `u³/3` near 0.
fn position_variance_kernel(u: f64) -> f64 {
    if u < 0.5 {
        // Σ_{n≥3} (−1)^{n+1} (2^{n−1} − 2) u^n / n!
        let mut sum = 0.0;
        let mut u_pow_over_fact = u * u * u / 6.0;
        let mut two_pow = 4.0;
        let mut n = 3.0;
        let mut sign = 1.0;
        while n < 60.0 {
            let term = sign * (two_pow - 2.0) * u_pow_over_fact;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            n += 1.0;
            u_pow_over_fact *= u / n;
            two_pow *= 2.0;
            sign = -sign;
        }
        sum
    } else {
        u + 2.0 * (-u).exp_m1() - 0.5 * (-2.0 * u).exp_m1()
    }
}

/// Covariance of the SES noise pair for one coordinate, from integrating
/// the Ornstein–Uhlenbeck velocity exactly over one step with the force
/// frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SesCovariance {
    /// `Var ζ = (2/γ)(h − 2(1−η)/γ + (1−η²)/(2γ))`
    pub var_position: f64,
    /// `Var ω = 1 − η²`
    pub var_velocity: f64,
    /// `Cov(ζ, ω) = (1−η)²/γ`
    pub covariance: f64,
    l11: f64,
    l21: f64,
    l22: f64,
}

impl SesCovariance {
    pub fn new(params: &StepParams) -> Result<Self> {
        let gamma = params.gamma;
        let u = gamma * params.h;
        let one_minus_eta = -(-u).exp_m1();
        let var_position = 2.0 * position_variance_kernel(u) / (gamma * gamma);
        let var_velocity = -(-2.0 * u).exp_m1();
        let covariance = one_minus_eta * one_minus_eta / gamma;
        if !(var_position.is_finite() && var_velocity.is_finite() && covariance.is_finite()) {
            return Err(Error::NotPositiveSemidefinite(format!(
                "non-finite SES covariance at h={}, gamma={gamma}",
                params.h
            )));
        }
        let (l11, l21, l22) = if var_position > 0.0 {
            let l11 = var_position.sqrt();
            let l21 = covariance / l11;
            let schur = var_velocity - l21 * l21;
            if schur < -1e-12 * var_velocity {
                return Err(Error::NotPositiveSemidefinite(format!(
                    "SES covariance has negative Schur complement {schur:e} at h={}, gamma={gamma}",
                    params.h
                )));
            }
            (l11, l21, schur.max(0.0).sqrt())
        } else if covariance == 0.0 {
            (0.0, 0.0, var_velocity.sqrt())
        } else {
            return Err(Error::NotPositiveSemidefinite(format!(
                "zero position variance with nonzero covariance at h={}, gamma={gamma}",
                params.h
            )));
        };
        Ok(Self {
            var_position,
            var_velocity,
            covariance,
            l11,
            l21,
            l22,
        })
    }

    /// Maps a standard-normal pair to `(ζ, ω)` through the lower-triangular
    /// factor of the covariance.
    #[inline]
    pub fn correlate(&self, xi1: f64, xi2: f64) -> (f64, f64) {
        (self.l11 * xi1, self.l21 * xi1 + self.l22 * xi2)
    }
}

/// The correlated SES pair `(ζ, ω)` for every coordinate.
pub fn ses_noise(params: &StepParams, xi1: &[f64], xi2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if xi1.len() != xi2.len() {
        return Err(Error::DimensionMismatch {
            expected: xi1.len(),
            got: xi2.len(),
        });
    }
    let cov = SesCovariance::new(params)?;
    Ok(xi1.iter().zip(xi2).map(|(&a, &b)| cov.correlate(a, b)).unzip())
}
