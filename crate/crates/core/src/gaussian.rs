//! Exact spectral analysis of the difference dynamics on Gaussian targets.
//!
//! For `U(x) = ½ xᵀQx` with diagonal `Q`, every coordinate evolves through
//! its own 2×2 matrix, so the eigenvalues of that matrix at `λ ∈ {m, M}`
//! decide both stability and the asymptotic contraction rate.

use std::io::Write;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::one_step_matrix;
use crate::error::{invalid, Error, Result};
use crate::format::fmt17;
use crate::integrators::{SchemeId, StepParams};

/// Both eigenvalues of the scheme's one-step matrix at curvature `λ`.
///
/// Kinetic EM and BAO use their closed forms; the rest are computed from
/// the 2×2 matrix. The overdamped schemes report `1 − hλ` and the zero
/// eigenvalue of their noise-cache slot.
pub fn mode_eigenvalues(scheme: SchemeId, lambda: f64, params: &StepParams) -> [Complex64; 2] {
    let h = params.h;
    let gamma = params.gamma;
    match scheme {
        SchemeId::KineticEM => {
            let root = Complex64::new(gamma * gamma - 4.0 * lambda, 0.0).sqrt();
            let base = Complex64::new(2.0 - gamma * h, 0.0);
            [(base + root * h) * 0.5, (base - root * h) * 0.5]
        }
        SchemeId::BAO => {
            // trace is 2 − s and determinant η, with s = 1 − η + h²λ
            let eta = params.eta(scheme);
            let x = h * h * lambda;
            let s = -(-gamma * h).exp_m1() + x;
            let disc = s * s - 4.0 * x;
            if disc >= 0.0 && s < 2.0 {
                // the larger root sits within 2x/(s + √disc) of one
                let big = 1.0 - 2.0 * x / (s + disc.sqrt());
                [Complex64::new(big, 0.0), Complex64::new(eta / big, 0.0)]
            } else {
                let t = 2.0 - s;
                let root = Complex64::new(disc, 0.0).sqrt();
                [(root + t) * 0.5, (-root + t) * 0.5]
            }
        }
        other => eigenvalues_2x2(&one_step_matrix(other, lambda, params)),
    }
}

/// Eigenvalues of a real 2×2 matrix, larger real part first.
pub fn eigenvalues_2x2(p: &Matrix2<f64>) -> [Complex64; 2] {
    let tr = p[(0, 0)] + p[(1, 1)];
    let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        // stable quadratic formula: the larger-magnitude root first
        let s = disc.sqrt();
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (r1, r2) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half, s), Complex64::new(half, -s)]
    }
}

pub fn spectral_radius(eigs: &[Complex64; 2]) -> f64 {
    eigs[0].norm().max(eigs[1].norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub scheme: SchemeId,
    pub lambda: f64,
    pub h: f64,
    pub gamma: f64,
    /// `(re, im)` pairs.
    pub eigenvalues: [(f64, f64); 2],
    pub spectral_radius: f64,
    pub contractive: bool,
}

pub fn spectral_report(scheme: SchemeId, lambda: f64, params: &StepParams) -> SpectralReport {
    let eigs = mode_eigenvalues(scheme, lambda, params);
    let radius = spectral_radius(&eigs);
    SpectralReport {
        scheme,
        lambda,
        h: params.h,
        gamma: params.gamma,
        eigenvalues: [(eigs[0].re, eigs[0].im), (eigs[1].re, eigs[1].im)],
        spectral_radius: radius,
        contractive: radius < 1.0,
    }
}

/// Which eigenvalue region counts as stable in a threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityCriterion {
    /// Every nonzero eigenvalue has positive real part and modulus below
    /// one, so each mode decays without sign flips. This is the notion
    /// behind `h ≤ 2/(γ + √(γ² − 4λ))` for kinetic EM and
    /// `h < √((1 + η)/λ)` for BAO.
    MonotoneDecay,
    /// Spectral radius below one.
    SpectralRadius,
}

fn is_stable(eigs: &[Complex64; 2], criterion: StabilityCriterion) -> bool {
    match criterion {
        StabilityCriterion::SpectralRadius => spectral_radius(eigs) < 1.0,
        StabilityCriterion::MonotoneDecay => eigs
            .iter()
            .filter(|e| e.norm() > 0.0)
            .all(|e| e.re > 0.0 && e.norm() < 1.0),
    }
}

/// Largest `h` such that every `h' ∈ (0, h)` is stable at `(λ, γ)` under
/// [`StabilityCriterion::MonotoneDecay`].
pub fn stability_threshold(scheme: SchemeId, lambda: f64, gamma: f64) -> Result<f64> {
    stability_threshold_with(scheme, lambda, gamma, StabilityCriterion::MonotoneDecay)
}

pub fn stability_threshold_with(
    scheme: SchemeId,
    lambda: f64,
    gamma: f64,
    criterion: StabilityCriterion,
) -> Result<f64> {
    if !(lambda > 0.0 && gamma > 0.0) {
        return Err(invalid(format!("need lambda > 0 and gamma > 0, got {lambda}, {gamma}")));
    }
    let stable = |h: f64| is_stable(&mode_eigenvalues(scheme, lambda, &StepParams { h, gamma }), criterion);
    let scale = 1.0 / (gamma + lambda.sqrt() + lambda);
    let cap = 1e3 * (1.0 / gamma + 1.0 / lambda.sqrt() + 1.0 / lambda);
    let mut h = 1e-6 * scale;
    if !stable(h) {
        return Err(Error::NoStableStep { cap: h });
    }
    let mut last = h;
    loop {
        h *= 1.02;
        if h > cap {
            return Err(Error::NoStableStep { cap });
        }
        if !stable(h) {
            break;
        }
        last = h;
    }
    let (mut lo, mut hi) = (last, h);
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if stable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Closed-form kinetic EM threshold `2/(γ + √(γ² − 4λ))`, for `γ² ≥ 4λ`.
pub fn kinetic_em_threshold(lambda: f64, gamma: f64) -> Option<f64> {
    let d = gamma * gamma - 4.0 * lambda;
    (d >= 0.0).then(|| 2.0 / (gamma + d.sqrt()))
}

/// Exact asymptotic squared-norm rate of BAO on the slowest mode `λ = m`:
/// `c_N = 1 − η + h²m − √((1 − η + h²m)² − 4h²m)`, which is twice the gap
/// between one and the leading eigenvalue. When the eigenvalues are
/// complex the gap to their common modulus `√η` is used instead.
pub fn bao_exact_rate(m: f64, h: f64, gamma: f64) -> f64 {
    let one_minus_eta = -(-gamma * h).exp_m1();
    let x = h * h * m;
    let s = one_minus_eta + x;
    let disc = s * s - 4.0 * x;
    if disc >= 0.0 {
        // s − √(s² − 4x) = 4x / (s + √(s² − 4x)) avoids cancellation
        4.0 * x / (s + disc.sqrt())
    } else {
        2.0 * (1.0 - (-gamma * h * 0.5).exp())
    }
}

/// Compares the BAO theorem rate with the exact Gaussian rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSandwich {
    pub h: f64,
    pub gamma: f64,
    pub c_theorem: f64,
    pub c_exact: f64,
    /// Whether `4 c_theorem > c_exact`.
    pub four_c_exceeds_exact: bool,
    pub real_branch: bool,
}

pub fn bao_rate_sandwich(m: f64, h: f64, gamma: f64) -> RateSandwich {
    let one_minus_eta = -(-gamma * h).exp_m1();
    let c_theorem = h * h * m / (4.0 * one_minus_eta);
    let c_exact = bao_exact_rate(m, h, gamma);
    let s = one_minus_eta + h * h * m;
    RateSandwich {
        h,
        gamma,
        c_theorem,
        c_exact,
        four_c_exceeds_exact: 4.0 * c_theorem > c_exact,
        real_branch: s * s >= 4.0 * h * h * m,
    }
}

/// Spectral reports at one stepsize for both extreme curvatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub h: f64,
    pub modes: Vec<SpectralReport>,
    pub contractive: bool,
    /// `1 − max radius` over the modes.
    pub worst_rate: f64,
}

pub fn gaussian_scan(scheme: SchemeId, m: f64, big_m: f64, gamma: f64, h_grid: &[f64]) -> Result<Vec<ScanEntry>> {
    if h_grid.is_empty() {
        return Err(invalid("stepsize grid is empty"));
    }
    if !(m > 0.0 && m <= big_m) {
        return Err(invalid(format!("need 0 < m <= M, got m={m}, M={big_m}")));
    }
    let lambdas: Vec<f64> = if m == big_m { vec![m] } else { vec![m, big_m] };
    h_grid
        .par_iter()
        .map(|&h| {
            let params = StepParams::new(h, gamma)?;
            let modes: Vec<SpectralReport> = lambdas.iter().map(|&l| spectral_report(scheme, l, &params)).collect();
            let max_radius = modes.iter().map(|r| r.spectral_radius).fold(0.0, f64::max);
            Ok(ScanEntry {
                h,
                contractive: modes.iter().all(|r| r.contractive),
                worst_rate: 1.0 - max_radius,
                modes,
            })
        })
        .collect()
}

/// Writes `scheme, h, gamma, lambda, radius, contractive` rows.
pub fn write_scan_csv<W: Write>(entries: &[ScanEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    w.write_record(["scheme", "h", "gamma", "lambda", "radius", "contractive"])
        .map_err(io)?;
    for e in entries {
        for r in &e.modes {
            w.write_record([
                r.scheme.to_string(),
                fmt17(r.h),
                fmt17(r.gamma),
                fmt17(r.lambda),
                fmt17(r.spectral_radius),
                r.contractive.to_string(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| invalid(format!("csv flush failed: {e}")))?;
    Ok(())
}
