//! Synchronous coupling and the theorem rates it is checked against.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::fmt17;
use crate::integrators::{advance, PhaseState, SchemeId, StepParams};
use crate::noise::NoiseStream;
use crate::norms::{weighted_distance_sq, weighted_norm_sq, WeightedNorm};
use crate::potentials::Potential;

/// One hypothesis of a theorem, evaluated at concrete parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub description: String,
    pub satisfied: bool,
}

impl Constraint {
    fn new(description: impl Into<String>, satisfied: bool) -> Self {
        Self {
            description: description.into(),
            satisfied,
        }
    }
}

/// Norm weights, rate and prefactor a theorem predicts for a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRate {
    pub scheme: SchemeId,
    pub a: f64,
    pub b: f64,
    /// Per-step contraction of the squared norm.
    pub c: f64,
    /// Prefactor as stated: 1, 7 on the unsquared norm, or 27 on the squared norm.
    pub prefactor: f64,
    /// Constant applied to squared distances: 1, 49 or 27.
    pub prefactor_sq: f64,
    /// Steps not covered by the contraction (1 when boundary operators are peeled off).
    pub offset: u32,
    pub admissible: bool,
    pub constraints: Vec<Constraint>,
}

impl TheoremRate {
    pub fn violated(&self) -> Vec<&str> {
        self.constraints
            .iter()
            .filter(|c| !c.satisfied)
            .map(|c| c.description.as_str())
            .collect()
    }

    /// `prefactor_sq · (1 − c)^{k − s}`.
    pub fn bound_factor(&self, k: usize) -> f64 {
        let e = k as f64 - self.offset as f64;
        self.prefactor_sq * (e * (-self.c).ln_1p()).exp()
    }

    /// The theorem's norm, or the unweighted `(a, 0)` norm when `b² ≥ a`.
    pub fn norm(&self) -> WeightedNorm {
        WeightedNorm::new(self.a, self.b)
            .or_else(|_| WeightedNorm::new(self.a, 0.0))
            .unwrap_or_else(|_| WeightedNorm::new(1.0, 0.0).expect("unit norm"))
    }
}

/// Theorem rate for `scheme` at `(m, M, γ, h)`; inadmissible inputs come
/// back with `admissible = false` and the failing hypotheses marked.
pub fn theorem_rate(scheme: SchemeId, m: f64, big_m: f64, gamma: f64, h: f64) -> TheoremRate {
    let eta = (-gamma * h).exp();
    let one_minus_eta = -(-gamma * h).exp_m1();
    let sqrt_m = big_m.sqrt();
    let bao_bound = one_minus_eta / (6.0 * big_m).sqrt();
    let sym_bound = one_minus_eta / (2.0 * sqrt_m);

    let mut constraints = vec![Constraint::new(
        "0 < m <= M, gamma > 0, h > 0",
        m > 0.0 && m <= big_m && gamma > 0.0 && h > 0.0,
    )];
    let (a, b, c, prefactor, prefactor_sq, offset) = match scheme {
        SchemeId::OverdampedEM | SchemeId::LM => {
            constraints.push(Constraint::new("h < 2/M", h < 2.0 / big_m));
            (1.0, 0.0, h * m * (2.0 - h * big_m), 1.0, 1.0, 0)
        }
        SchemeId::KineticEM => {
            constraints.push(Constraint::new("gamma^2 >= 4M", gamma * gamma >= 4.0 * big_m));
            constraints.push(Constraint::new("h < 1/(2 gamma)", h < 0.5 / gamma));
            (1.0 / big_m, 1.0 / gamma, m * h / (2.0 * gamma), 1.0, 1.0, 0)
        }
        SchemeId::BAO | SchemeId::OBA | SchemeId::AOB => {
            constraints.push(Constraint::new("h < (1 - eta)/sqrt(6M)", h < bao_bound));
            let (p, p2, s) = if scheme == SchemeId::BAO { (1.0, 1.0, 0) } else { (27.0, 27.0, 1) };
            (1.0 / big_m, h / one_minus_eta, h * h * m / (4.0 * one_minus_eta), p, p2, s)
        }
        SchemeId::OAB | SchemeId::ABO | SchemeId::BOA => {
            constraints.push(Constraint::new("h < 1/(4 gamma)", h < 0.25 / gamma));
            constraints.push(Constraint::new("h < (1 - eta)/sqrt(6M)", h < bao_bound));
            let (p, p2, s) = if scheme == SchemeId::OAB { (1.0, 1.0, 0) } else { (27.0, 27.0, 1) };
            (
                1.0 / big_m,
                eta * h / one_minus_eta,
                eta * h * h * m / (4.0 * one_minus_eta),
                p,
                p2,
                s,
            )
        }
        SchemeId::BAOAB => {
            constraints.push(Constraint::new("h <= (1 - eta)/(2 sqrt(M)), eta = exp(-gamma h)", h <= sym_bound));
            (1.0 / big_m, h / one_minus_eta, h * h * m / (4.0 * one_minus_eta), 7.0, 49.0, 1)
        }
        SchemeId::OBABO => {
            constraints.push(Constraint::new("h < (1 - eta)/(2 sqrt(M)), eta = exp(-gamma h)", h < sym_bound));
            (1.0 / big_m, h / one_minus_eta, h * h * m / (4.0 * one_minus_eta), 7.0, 49.0, 1)
        }
        SchemeId::SES => {
            constraints.push(Constraint::new("gamma >= 5 sqrt(M)", gamma >= 5.0 * sqrt_m));
            constraints.push(Constraint::new("h <= 1/(2 gamma)", h <= 0.5 / gamma));
            (1.0 / big_m, 1.0 / gamma, m * h / (4.0 * gamma), 1.0, 1.0, 0)
        }
    };
    constraints.push(Constraint::new("0 < c < 1", c > 0.0 && c < 1.0));
    constraints.push(Constraint::new("b^2 < a", b * b < a));
    let admissible = constraints.iter().all(|c| c.satisfied);
    TheoremRate {
        scheme,
        a,
        b,
        c,
        prefactor,
        prefactor_sq,
        offset,
        admissible,
        constraints,
    }
}

/// Positive root of `1 − e^{−γh} = k h`, which exists iff `γ > k`.
fn eta_root(gamma: f64, k: f64) -> Option<f64> {
    if gamma <= k {
        return None;
    }
    let f = |h: f64| -(-gamma * h).exp_m1() - k * h;
    // f is concave with f(0) = 0 and f(1/k) < 0
    let (mut lo, mut hi) = (0.0_f64, 1.0 / k);
    // pull `lo` off zero so that f(lo) > 0 is established
    let mut probe = hi;
    while f(probe) <= 0.0 {
        probe *= 0.5;
        if probe < 1e-300 {
            return None;
        }
    }
    lo = lo.max(probe);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(lo)
}

/// Supremum of the theorem's admissible stepsizes at fixed `(m, M, γ)`, or
/// `None` when the friction alone violates a hypothesis.
pub fn theorem_step_threshold(scheme: SchemeId, _m: f64, big_m: f64, gamma: f64) -> Option<f64> {
    let sqrt_m = big_m.sqrt();
    match scheme {
        SchemeId::OverdampedEM | SchemeId::LM => Some(2.0 / big_m),
        SchemeId::KineticEM => (gamma * gamma >= 4.0 * big_m).then_some(0.5 / gamma),
        SchemeId::SES => (gamma >= 5.0 * sqrt_m).then_some(0.5 / gamma),
        SchemeId::BAO | SchemeId::OBA | SchemeId::AOB => eta_root(gamma, (6.0 * big_m).sqrt()),
        SchemeId::OAB | SchemeId::ABO | SchemeId::BOA => {
            eta_root(gamma, (6.0 * big_m).sqrt()).map(|h| h.min(0.25 / gamma))
        }
        SchemeId::BAOAB | SchemeId::OBABO => eta_root(gamma, 2.0 * sqrt_m),
    }
}

/// Smallest friction the theorem accepts for `scheme`: `2√M` for kinetic
/// EM, `5√M` for SES, and the value below which no stepsize is admissible
/// for the splittings.
pub fn theorem_min_friction(scheme: SchemeId, big_m: f64) -> f64 {
    let sqrt_m = big_m.sqrt();
    match scheme {
        SchemeId::OverdampedEM | SchemeId::LM => 0.0,
        SchemeId::KineticEM => 2.0 * sqrt_m,
        SchemeId::SES => 5.0 * sqrt_m,
        SchemeId::BAOAB | SchemeId::OBABO => 2.0 * sqrt_m,
        _ => (6.0 * big_m).sqrt(),
    }
}

/// Distances of two synchronously coupled chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTrace {
    pub scheme: SchemeId,
    pub params: StepParams,
    pub norm: WeightedNorm,
    pub seed: u64,
    pub pair: u64,
    /// `‖z_k − z̃_k‖²_{a,b}` for `k = 0..=n` (shorter when the run diverged).
    pub distances: Vec<f64>,
    /// `max(‖z_k‖², ‖z̃_k‖²)` in the same norm; differences far below this
    /// are at floating-point resolution.
    pub scale_sq: Vec<f64>,
    /// Step at which a chain stopped being finite.
    pub diverged_at: Option<usize>,
}

impl CouplingTrace {
    /// A trace with known distances and no resolution information.
    pub fn from_distances(scheme: SchemeId, params: StepParams, norm: WeightedNorm, distances: Vec<f64>) -> Self {
        let scale_sq = vec![0.0; distances.len()];
        Self {
            scheme,
            params,
            norm,
            seed: 0,
            pair: 0,
            distances,
            scale_sq,
            diverged_at: None,
        }
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Steps actually taken.
    pub fn steps(&self) -> usize {
        self.distances.len().saturating_sub(1)
    }
}

/// Runs two chains from `z0` and `z̃0` on shared noise for `n` steps and
/// records their distance in the theorem norm of the scheme.
///
/// The overdamped schemes ignore the supplied velocities: both chains'
/// noise caches start from the same primer draw.
#[allow(clippy::too_many_arguments)]
pub fn run_synchronous_coupling(
    scheme: SchemeId,
    p: &dyn Potential,
    z0: &PhaseState,
    z0_tilde: &PhaseState,
    params: &StepParams,
    n: usize,
    seed: u64,
) -> Result<CouplingTrace> {
    let rate = theorem_rate(scheme, p.convexity(), p.smoothness(), params.gamma, params.h);
    run_coupled_pair(scheme, p, z0, z0_tilde, params, n, seed, 0, rate.norm())
}

/// [`run_synchronous_coupling`] with an explicit chain-pair id and norm.
#[allow(clippy::too_many_arguments)]
pub fn run_coupled_pair(
    scheme: SchemeId,
    p: &dyn Potential,
    z0: &PhaseState,
    z0_tilde: &PhaseState,
    params: &StepParams,
    n: usize,
    seed: u64,
    pair: u64,
    norm: WeightedNorm,
) -> Result<CouplingTrace> {
    let dim = p.dim();
    for z in [z0, z0_tilde] {
        if z.x.len() != dim || z.v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: if z.x.len() != dim { z.x.len() } else { z.v.len() },
            });
        }
    }
    let stream = NoiseStream::new(seed, pair);
    let mut za = z0.clone();
    let mut zb = z0_tilde.clone();
    if scheme.is_overdamped() {
        let primer = stream.primer(dim);
        za.v.clone_from(&primer);
        zb.v = primer;
    }

    let mut distances = Vec::with_capacity(n + 1);
    let mut scale_sq = Vec::with_capacity(n + 1);
    let record = |za: &PhaseState, zb: &PhaseState, d: &mut Vec<f64>, s: &mut Vec<f64>| {
        d.push(weighted_distance_sq(&norm, za, zb));
        s.push(weighted_norm_sq(&norm, za).max(weighted_norm_sq(&norm, zb)));
    };
    record(&za, &zb, &mut distances, &mut scale_sq);

    let mut noise = crate::integrators::NoiseDraw::zeros(scheme, dim);
    let mut grad = vec![0.0; dim];
    let mut diverged_at = None;
    for k in 0..n {
        stream.refill(k as u64, &mut noise);
        advance(scheme, p, &mut za, params, &noise, &mut grad)?;
        advance(scheme, p, &mut zb, params, &noise, &mut grad)?;
        if !(za.is_finite() && zb.is_finite()) {
            diverged_at = Some(k + 1);
            break;
        }
        record(&za, &zb, &mut distances, &mut scale_sq);
        if !distances.last().is_some_and(|d| d.is_finite()) {
            distances.pop();
            scale_sq.pop();
            diverged_at = Some(k + 1);
            break;
        }
    }
    Ok(CouplingTrace {
        scheme,
        params: *params,
        norm,
        seed,
        pair,
        distances,
        scale_sq,
        diverged_at,
    })
}

/// Relative resolution used to discard trace entries dominated by rounding
/// when fitting a rate.
const FIT_RESOLUTION: f64 = 1e-20;

/// Least-squares fit of `log d_k` against `k` for `k ≥ burn_in`, returned
/// as `ĉ` with `d_k ≈ (1 − ĉ)^k`.
///
/// The fit stops at the first entry that is zero or within rounding of the
/// chains' own magnitude.
pub fn empirical_rate(trace: &CouplingTrace, burn_in: usize) -> Result<f64> {
    if trace.diverged_at.is_some() {
        return Err(Error::DegenerateTrace(format!(
            "trace diverged at step {}",
            trace.diverged_at.unwrap_or(0)
        )));
    }
    let mut ks = Vec::new();
    let mut ys = Vec::new();
    for (k, &d) in trace.distances.iter().enumerate().skip(burn_in) {
        let floor = FIT_RESOLUTION * trace.scale_sq.get(k).copied().unwrap_or(0.0);
        if !(d > floor && d > f64::MIN_POSITIVE && d.is_finite()) {
            break;
        }
        ks.push(k as f64);
        ys.push(d.ln());
    }
    if ks.len() < 10 {
        return Err(Error::DegenerateTrace(format!(
            "need at least 10 resolvable entries after burn-in {burn_in}, found {}",
            ks.len()
        )));
    }
    let n = ks.len() as f64;
    let kbar = ks.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in ks.iter().zip(&ys) {
        sxy += (k - kbar) * (y - ybar);
        sxx += (k - kbar) * (k - kbar);
    }
    let slope = sxy / sxx;
    Ok(-slope.exp_m1())
}

/// Default burn-in: none for quadratic targets, 10% of the trace otherwise.
pub fn default_burn_in(p: &dyn Potential, trace: &CouplingTrace) -> usize {
    if p.constant_hessian().is_some() {
        0
    } else {
        trace.len() / 10
    }
}

/// Outcome of [`verify_trace_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub first_violation: Option<usize>,
    pub violations: usize,
}

/// Relative size, in units of `ε/c`, of the rounding floor a coupled
/// difference settles at.
const ROUNDING_FLOOR_ULPS: f64 = 256.0;

/// Squared bound `prefactor²(1 − c)^{k−s} d₀` at step `k`.
pub fn bound_sq(trace: &CouplingTrace, rate: &TheoremRate, k: usize) -> f64 {
    rate.bound_factor(k) * trace.distances.first().copied().unwrap_or(0.0)
}

/// Checks `d_k ≤ prefactor²(1 − c)^{k−s} d₀` for every recorded `k`.
///
/// The difference of two chains cannot be resolved below roughly
/// `ε·|z|/c`, so each bound is widened by
/// `(256 ε / c)² · max_{j ≤ k} scale_sq_j`; traces built with
/// [`CouplingTrace::from_distances`] get no widening.
pub fn verify_trace_bound(trace: &CouplingTrace, rate: &TheoremRate) -> BoundCheck {
    let resolution = ROUNDING_FLOOR_ULPS * f64::EPSILON / rate.c.clamp(f64::EPSILON, 1.0);
    let mut running_scale: f64 = 0.0;
    let mut first = None;
    let mut violations = 0;
    for (k, &d) in trace.distances.iter().enumerate() {
        running_scale = running_scale.max(trace.scale_sq.get(k).copied().unwrap_or(0.0));
        let allowed = bound_sq(trace, rate, k) * (1.0 + 1e-12) + resolution * resolution * running_scale;
        if !(d <= allowed) {
            violations += 1;
            first.get_or_insert(k);
        }
    }
    BoundCheck {
        holds: violations == 0,
        first_violation: first,
        violations,
    }
}

/// Writes `scheme, h, gamma, seed, k, distance_sq, bound_sq` rows.
pub fn write_trace_csv<W: Write>(trace: &CouplingTrace, rate: &TheoremRate, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| invalid(format!("csv write failed: {e}"));
    w.write_record(["scheme", "h", "gamma", "seed", "k", "distance_sq", "bound_sq"])
        .map_err(io)?;
    let (scheme, h, gamma, seed) = (
        trace.scheme.to_string(),
        fmt17(trace.params.h),
        fmt17(trace.params.gamma),
        trace.seed.to_string(),
    );
    for (k, d) in trace.distances.iter().enumerate() {
        w.write_record([
            scheme.as_str(),
            &h,
            &gamma,
            &seed,
            &k.to_string(),
            &fmt17(*d),
            &fmt17(bound_sq(trace, rate, k)),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| invalid(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::QuadraticPotential;
    use approx::assert_relative_eq;

    fn corners() -> (PhaseState, PhaseState) {
        (
            PhaseState::new(vec![-1.0, -1.0], vec![0.0, 0.0]).unwrap(),
            PhaseState::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap(),
        )
    }

    #[test]
    fn theorem_examples() {
        let em = theorem_rate(SchemeId::KineticEM, 1.0, 4.0, 4.0, 0.1);
        assert_relative_eq!(em.c, 0.0125, epsilon = 1e-15);
        assert!(em.admissible);

        let bao = theorem_rate(SchemeId::BAO, 1.0, 1.0, 5.0, 0.1);
        let eta = (-0.5f64).exp();
        assert_relative_eq!(bao.c, 0.01 / (4.0 * (1.0 - eta)), max_relative = 1e-14);
        assert_relative_eq!(bao.c, 6.35e-3, max_relative = 1e-3);
        assert!(bao.admissible);
        assert!(0.1 < (1.0 - eta) / 6f64.sqrt());

        let ses = theorem_rate(SchemeId::SES, 1.0, 4.0, 9.0, 0.05);
        assert_relative_eq!(ses.c, 0.05 / 36.0, max_relative = 1e-14);
        assert!(!ses.admissible);
        assert_eq!(ses.violated(), vec!["gamma >= 5 sqrt(M)"]);

        let sym = theorem_rate(SchemeId::BAOAB, 1.0, 4.0, 10.0, 0.05);
        assert_eq!((sym.prefactor, sym.prefactor_sq, sym.offset), (7.0, 49.0, 1));
        let abo = theorem_rate(SchemeId::ABO, 1.0, 4.0, 10.0, 0.01);
        let oab = theorem_rate(SchemeId::OAB, 1.0, 4.0, 10.0, 0.01);
        assert_eq!((abo.a, abo.b, abo.c), (oab.a, oab.b, oab.c));
        assert_eq!(abo.prefactor_sq, 27.0);
    }

    #[test]
    fn thresholds_are_suprema_of_admissible_sets() {
        for scheme in SchemeId::ALL {
            let (m, big_m, gamma) = (1.0, 4.0, 12.0);
            let h = theorem_step_threshold(scheme, m, big_m, gamma).unwrap();
            assert!(theorem_rate(scheme, m, big_m, gamma, 0.999 * h).admissible, "{scheme}");
            assert!(!theorem_rate(scheme, m, big_m, gamma, 1.001 * h).admissible, "{scheme}");
        }
        assert_eq!(theorem_step_threshold(SchemeId::SES, 1.0, 4.0, 9.0), None);
        assert_eq!(theorem_step_threshold(SchemeId::BAO, 1.0, 4.0, 4.0), None);
    }

    #[test]
    fn identical_starts_stay_coupled() {
        let p = QuadraticPotential::anisotropic(1.0, 4.0).unwrap();
        let z = PhaseState::new(vec![0.3, -0.2], vec![0.1, 0.0]).unwrap();
        for scheme in SchemeId::ALL {
            let params = StepParams::new(0.05, 4.0).unwrap();
            let t = run_synchronous_coupling(scheme, &p, &z, &z, &params, 50, 9).unwrap();
            assert!(t.distances.iter().all(|&d| d == 0.0), "{scheme}");
        }
    }

    #[test]
    fn kinetic_em_example_trace() {
        let p = QuadraticPotential::anisotropic(1.0, 4.0).unwrap();
        let (z0, z1) = corners();
        let params = StepParams::new(0.1, 4.0).unwrap();
        let rate = theorem_rate(SchemeId::KineticEM, 1.0, 4.0, 4.0, 0.1);
        let t = run_synchronous_coupling(SchemeId::KineticEM, &p, &z0, &z1, &params, 2000, 1).unwrap();
        let check = verify_trace_bound(&t, &rate);
        assert!(check.holds, "{check:?}");
        let other = run_synchronous_coupling(SchemeId::KineticEM, &p, &z0, &z1, &params, 2000, 2).unwrap();
        // on a quadratic the difference dynamics is noise-free
        // up to rounding relative to the state size
        for ((a, b), s) in t.distances.iter().zip(&other.distances).zip(&t.scale_sq) {
            assert!((a.sqrt() - b.sqrt()).abs() <= 1e-10 * s.sqrt(), "{a} vs {b}");
        }
        let c_hat = empirical_rate(&t, 0).unwrap();
        assert!(c_hat >= rate.c);
    }

    #[test]
    fn geometric_fit_is_exact() {
        let params = StepParams::new(0.1, 1.0).unwrap();
        let norm = WeightedNorm::new(1.0, 0.0).unwrap();
        let d: Vec<f64> = (0..200).map(|k| 0.99f64.powi(k)).collect();
        let t = CouplingTrace::from_distances(SchemeId::BAO, params, norm, d);
        assert_relative_eq!(empirical_rate(&t, 0).unwrap(), 0.01, epsilon = 1e-12);
        let short = CouplingTrace::from_distances(SchemeId::BAO, params, norm, vec![1.0; 5]);
        assert!(empirical_rate(&short, 0).is_err());
    }

    #[test]
    fn injected_violation_is_located() {
        let params = StepParams::new(0.1, 4.0).unwrap();
        let rate = theorem_rate(SchemeId::KineticEM, 1.0, 4.0, 4.0, 0.1);
        let norm = WeightedNorm::new(rate.a, rate.b).unwrap();
        let mut d: Vec<f64> = (0..20).map(|k| 0.5 * (1.0 - rate.c).powi(k)).collect();
        assert!(verify_trace_bound(&CouplingTrace::from_distances(SchemeId::KineticEM, params, norm, d.clone()), &rate).holds);
        d[5] *= 3.0;
        let check = verify_trace_bound(&CouplingTrace::from_distances(SchemeId::KineticEM, params, norm, d), &rate);
        assert!(!check.holds);
        assert_eq!(check.first_violation, Some(5));
        assert_eq!(check.violations, 1);
    }

    #[test]
    fn divergence_truncates_trace() {
        let p = QuadraticPotential::anisotropic(1.0, 4.0).unwrap();
        let (z0, z1) = corners();
        let params = StepParams::new(0.25, 1000.0).unwrap();
        let t = run_synchronous_coupling(SchemeId::KineticEM, &p, &z0, &z1, &params, 10_000, 0).unwrap();
        let k = t.diverged_at.expect("kinetic EM blows up at gamma h = 250");
        assert_eq!(t.distances.len(), k);
        assert!(empirical_rate(&t, 0).is_err());
    }

    #[test]
    fn zero_steps_gives_single_entry() {
        let p = QuadraticPotential::anisotropic(1.0, 4.0).unwrap();
        let (z0, z1) = corners();
        let params = StepParams::new(0.1, 4.0).unwrap();
        let t = run_synchronous_coupling(SchemeId::BAOAB, &p, &z0, &z1, &params, 0, 0).unwrap();
        assert_eq!(t.distances.len(), 1);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = QuadraticPotential::anisotropic(1.0, 4.0).unwrap();
        let (z0, z1) = corners();
        let params = StepParams::new(0.1, 4.0).unwrap();
        let rate = theorem_rate(SchemeId::KineticEM, 1.0, 4.0, 4.0, 0.1);
        let t = run_synchronous_coupling(SchemeId::KineticEM, &p, &z0, &z1, &params, 3, 0).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, &rate, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "scheme,h,gamma,seed,k,distance_sq,bound_sq");
        assert!(lines[1].starts_with("KineticEM,1.0000000000000001e-1,4.0000000000000000e0,0,0,"));
        assert_eq!(lines.len(), 5);
    }
}
