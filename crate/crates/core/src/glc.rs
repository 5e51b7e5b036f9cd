//! High-friction limits of the kinetic schemes.
//!
//! As `γ → ∞` with `h` fixed, `η = e^{−γh} → 0` and every O sub-step
//! replaces the velocity by fresh noise. The position updates then collapse
//! to the maps in [`limit_step`]. BAOAB becomes LM with stepsize `h²/2` and
//! OBABO becomes overdamped EM with stepsize `h²/2`, both consistent
//! overdamped discretizations, so only these two are γ-limit convergent.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupling::{empirical_rate, run_synchronous_coupling, theorem_rate, theorem_step_threshold};
use crate::error::{invalid, Error, Result};
use crate::format::fmt17;
use crate::integrators::{step, NoiseDraw, PhaseState, SchemeId, StepParams};
use crate::noise::NoiseStream;
use crate::potentials::{gradient, Potential, QuadraticPotential};

/// Closed-form description of a scheme's γ → ∞ position update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitMap {
    pub scheme: SchemeId,
    pub update: &'static str,
    /// Noise vectors the limit consumes, in [`limit_step`] order.
    pub noise_vectors: usize,
    pub glc: bool,
}

pub fn limit_map(scheme: SchemeId) -> Result<LimitMap> {
    let (update, noise_vectors) = match scheme {
        SchemeId::BAO => ("x - h^2 grad U(x) + h xi_k", 1),
        SchemeId::OAB => ("x + h xi_{k+1}", 1),
        SchemeId::BAOAB => ("x - (h^2/2) grad U(x) + (h/2)(xi_k + xi_{k+1})", 2),
        SchemeId::OBABO => ("x - (h^2/2) grad U(x) + h xi_{k+1}", 1),
        SchemeId::SES => ("x", 0),
        SchemeId::KineticEM => {
            return Err(Error::Unsupported(
                "KineticEM has no finite limit map: it is unstable for any fixed h as gamma grows".into(),
            ))
        }
        other => return Err(Error::Unsupported(format!("limit of {other} not derived"))),
    };
    Ok(LimitMap {
        scheme,
        update,
        noise_vectors,
        glc: classify_glc(scheme),
    })
}

/// BAOAB and OBABO are γ-limit convergent; nothing else is.
pub fn classify_glc(scheme: SchemeId) -> bool {
    matches!(scheme, SchemeId::BAOAB | SchemeId::OBABO)
}

/// One step of the γ → ∞ limit of `scheme`.
///
/// `noise` follows the scheme's limit: BAO takes the previous step's O
/// noise `ξ_k`; OAB and OBABO take this step's (first) O noise; BAOAB takes
/// `[ξ_k, ξ_{k+1}]`; SES takes nothing.
pub fn limit_step(scheme: SchemeId, p: &dyn Potential, x: &[f64], h: f64, noise: &[Vec<f64>]) -> Result<Vec<f64>> {
    let map = limit_map(scheme)?;
    if noise.len() != map.noise_vectors {
        return Err(Error::NoiseArity {
            scheme: scheme.name(),
            expected: map.noise_vectors,
            got: noise.len(),
        });
    }
    for xi in noise {
        if xi.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: xi.len(),
            });
        }
    }
    let d = x.len();
    let out = match scheme {
        SchemeId::SES => x.to_vec(),
        SchemeId::OAB => (0..d).map(|i| x[i] + h * noise[0][i]).collect(),
        SchemeId::BAO => {
            let g = gradient(p, x)?;
            (0..d).map(|i| x[i] - h * h * g[i] + h * noise[0][i]).collect()
        }
        SchemeId::BAOAB => {
            let g = gradient(p, x)?;
            (0..d)
                .map(|i| x[i] - 0.5 * h * h * g[i] + 0.5 * h * (noise[0][i] + noise[1][i]))
                .collect()
        }
        SchemeId::OBABO => {
            let g = gradient(p, x)?;
            (0..d).map(|i| x[i] - 0.5 * h * h * g[i] + h * noise[0][i]).collect()
        }
        _ => unreachable!("limit_map rejected the scheme"),
    };
    Ok(out)
}

/// Position gap between one scheme step and one limit step on matched noise.
///
/// A primer step (step index 0) is taken first so that the velocity carries
/// the previous O noise, as the BAO and BAOAB limits expect. Step 1 is then
/// compared.
#[allow(clippy::too_many_arguments)]
pub fn glc_deviation(
    scheme: SchemeId,
    p: &dyn Potential,
    x: &[f64],
    v: &[f64],
    h: f64,
    gamma: f64,
    seed: u64,
) -> Result<f64> {
    limit_map(scheme)?;
    let params = StepParams::new(h, gamma)?;
    let stream = NoiseStream::new(seed, 0);
    let d = p.dim();
    let z0 = PhaseState::new(x.to_vec(), v.to_vec())?;
    let primer = stream.draw(scheme, 0, d);
    let z1 = step(scheme, p, &z0, &params, &primer)?;
    let draw = stream.draw(scheme, 1, d);
    let z2 = step(scheme, p, &z1, &params, &draw)?;
    let limit_noise = match scheme {
        SchemeId::BAO => vec![primer.vectors[0].clone()],
        SchemeId::OAB | SchemeId::OBABO => vec![draw.vectors[0].clone()],
        SchemeId::BAOAB => vec![primer.vectors[0].clone(), draw.vectors[0].clone()],
        _ => vec![],
    };
    let x2 = limit_step(scheme, p, &z1.x, h, &limit_noise)?;
    Ok(z2.x.iter().zip(&x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// Runs a kinetic scheme and its overdamped limit side by side on shared
/// noise for `n` steps and returns the largest position gap.
///
/// BAOAB is paired with LM at stepsize `h²/2` whose noise cache starts at
/// `v₀ + (h/2)∇U(x₀)`; OBABO is paired with overdamped EM at `h²/2` driven
/// by OBABO's first O noise.
#[allow(clippy::too_many_arguments)]
pub fn overdamped_equivalence(
    scheme: SchemeId,
    p: &dyn Potential,
    x0: &[f64],
    v0: &[f64],
    h: f64,
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let (partner, delta) = match scheme {
        SchemeId::BAOAB => (SchemeId::LM, 0.5 * h * h),
        SchemeId::OBABO => (SchemeId::OverdampedEM, 0.5 * h * h),
        other => return Err(Error::Unsupported(format!("{other} has no overdamped partner"))),
    };
    let params = StepParams::new(h, gamma)?;
    let partner_params = StepParams::new(delta, 1.0)?;
    let stream = NoiseStream::new(seed, 0);
    let d = p.dim();
    let mut kinetic = PhaseState::new(x0.to_vec(), v0.to_vec())?;
    let g0 = gradient(p, x0)?;
    let cache: Vec<f64> = match scheme {
        SchemeId::BAOAB => (0..d).map(|i| v0[i] + 0.5 * h * g0[i]).collect(),
        _ => vec![0.0; d],
    };
    let mut overdamped = PhaseState::new(x0.to_vec(), cache)?;
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let draw = stream.draw(scheme, k, d);
        kinetic = step(scheme, p, &kinetic, &params, &draw)?;
        let shared = NoiseDraw::single(draw.vectors[0].clone());
        overdamped = step(partner, p, &overdamped, &partner_params, &shared)?;
        let gap = kinetic
            .x
            .iter()
            .zip(&overdamped.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Largest position gap over `n` steps between runs of `scheme` on two
/// different potentials with shared noise and starting point.
#[allow(clippy::too_many_arguments)]
pub fn potential_sensitivity(
    scheme: SchemeId,
    p: &dyn Potential,
    q: &dyn Potential,
    x0: &[f64],
    v0: &[f64],
    h: f64,
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let params = StepParams::new(h, gamma)?;
    let stream = NoiseStream::new(seed, 0);
    let mut a = PhaseState::new(x0.to_vec(), v0.to_vec())?;
    let mut b = a.clone();
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let draw = stream.draw(scheme, k, p.dim());
        a = step(scheme, p, &a, &params, &draw)?;
        b = step(scheme, q, &b, &params, &draw)?;
        let gap = a.x.iter().zip(&b.x).map(|(s, t)| (s - t).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub scheme: SchemeId,
    pub gamma: f64,
    pub h: f64,
    pub deviation: f64,
}

/// [`glc_deviation`] at fixed `(x, v, h, seed)` across a friction grid.
#[allow(clippy::too_many_arguments)]
pub fn deviation_scan(
    scheme: SchemeId,
    p: &dyn Potential,
    x: &[f64],
    v: &[f64],
    h: f64,
    gamma_grid: &[f64],
    seed: u64,
) -> Result<Vec<DeviationRow>> {
    if gamma_grid.is_empty() {
        return Err(invalid("friction grid is empty"));
    }
    gamma_grid
        .iter()
        .map(|&gamma| {
            Ok(DeviationRow {
                scheme,
                gamma,
                h,
                deviation: glc_deviation(scheme, p, x, v, h, gamma, seed)?,
            })
        })
        .collect()
}

/// Writes `scheme, gamma, h, deviation` rows.
pub fn write_deviation_csv<W: Write>(rows: &[DeviationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    w.write_record(["scheme", "gamma", "h", "deviation"]).map_err(io)?;
    for r in rows {
        w.write_record([r.scheme.to_string(), fmt17(r.gamma), fmt17(r.h), fmt17(r.deviation)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| invalid(format!("csv flush failed: {e}")))?;
    Ok(())
}

/// Default friction grid for high-friction sweeps.
pub const DEFAULT_GAMMA_GRID: [f64; 6] = [1e1, 1e2, 1e3, 1e4, 1e6, 1e8];

/// Fraction of the theorem threshold used when no stepsize is given.
pub const THRESHOLD_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseRow {
    pub scheme: SchemeId,
    pub gamma: f64,
    pub h: f64,
    pub c_theoretical: f64,
    /// `None` when the trace diverged or decayed too fast to fit.
    pub c_empirical: Option<f64>,
    pub admissible: bool,
}

/// Options of [`rate_collapse_scan`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseOptions {
    /// Fixed stepsize, or `None` for 80% of the theorem threshold at each γ.
    pub h: Option<f64>,
    pub steps: usize,
    pub seed: u64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        Self {
            h: None,
            steps: 2000,
            seed: 0,
        }
    }
}

/// Theorem and coupling rates of `scheme` across frictions on the 2-D
/// Gaussian with curvatures `(m, M)`, started from `(−1, −1)` and `(1, 1)`.
///
/// Frictions at which the theorem admits no stepsize give a row with `NaN`
/// stepsize and rate, flagged inadmissible.
pub fn rate_collapse_scan(
    scheme: SchemeId,
    m: f64,
    big_m: f64,
    gamma_grid: &[f64],
    opts: CollapseOptions,
) -> Result<Vec<CollapseRow>> {
    if gamma_grid.is_empty() {
        return Err(invalid("friction grid is empty"));
    }
    let p = QuadraticPotential::anisotropic(m, big_m)?;
    let z0 = PhaseState::at_rest(vec![-1.0, -1.0]);
    let z1 = PhaseState::at_rest(vec![1.0, 1.0]);
    gamma_grid
        .par_iter()
        .map(|&gamma| {
            let h = opts
                .h
                .or_else(|| theorem_step_threshold(scheme, m, big_m, gamma).map(|t| THRESHOLD_FRACTION * t));
            let Some(h) = h else {
                // the friction alone violates a hypothesis
                return Ok(CollapseRow {
                    scheme,
                    gamma,
                    h: f64::NAN,
                    c_theoretical: f64::NAN,
                    c_empirical: None,
                    admissible: false,
                });
            };
            let rate = theorem_rate(scheme, m, big_m, gamma, h);
            let params = StepParams::new(h, gamma)?;
            let trace = run_synchronous_coupling(scheme, &p, &z0, &z1, &params, opts.steps, opts.seed)?;
            Ok(CollapseRow {
                scheme,
                gamma,
                h,
                c_theoretical: rate.c,
                c_empirical: empirical_rate(&trace, 0).ok(),
                admissible: rate.admissible,
            })
        })
        .collect()
}

/// Writes `scheme, gamma, h, c_theoretical, c_empirical, admissible` rows;
/// a missing empirical rate is written as `NaN`.
pub fn write_collapse_csv<W: Write>(rows: &[CollapseRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    w.write_record(["scheme", "gamma", "h", "c_theoretical", "c_empirical", "admissible"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.scheme.to_string(),
            fmt17(r.gamma),
            fmt17(r.h),
            fmt17(r.c_theoretical),
            fmt17(r.c_empirical.unwrap_or(f64::NAN)),
            r.admissible.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| invalid(format!("csv flush failed: {e}")))?;
    Ok(())
}
