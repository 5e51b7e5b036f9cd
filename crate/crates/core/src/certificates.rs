//! Contraction certificates for the difference dynamics.
//!
//! For a quadratic target with curvature `λ`, one step of any scheme maps
//! the difference `z̄` to `P z̄`. The step contracts `‖·‖²_{a,b}` by `1 − c`
//! exactly when
//!
//! ```text
//! H = (1 − c) M − Pᵀ M P,    M = [[1, b], [b, a]]
//! ```
//!
//! is positive definite, i.e. when `A > 0` and `AC − B² > 0` for the
//! entries `A = H₁₁`, `B = H₁₂`, `C = H₂₂`. Each entry is a polynomial in
//! `λ`, so the check over `λ ∈ [m, M]` reduces to two univariate positivity
//! problems, which [`check_certificate`] settles on a grid with a derivative
//! bound. An independent 2×2 eigenvalue oracle rides along.

use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::coupling::theorem_rate;
use crate::error::{invalid, Error, Result};
use crate::integrators::{phi2, SchemeId, StepParams, SubStep};
use crate::poly::Poly;

/// Number of grid nodes used by [`check_certificate`].
pub const GRID_POINTS: usize = 2048;

/// Maximum bisection depth when a grid cell needs refining.
const MAX_REFINE_DEPTH: u32 = 40;

/// The one-step block whose contraction a certificate actually proves.
///
/// The symmetric schemes are certified through their conjugates, since
/// `(BAOAB)ⁿ = BAO (ABAO)ⁿ⁻¹ AB` and `(OBABO)ⁿ = OB (ABOB)ⁿ⁻¹ ABO`. The four
/// remaining first-order splittings are conjugate to BAO or OAB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Overdamped,
    KineticEM,
    BAO,
    OAB,
    ABAO,
    ABOB,
    SES,
}

impl Block {
    pub fn of(scheme: SchemeId) -> Block {
        match scheme {
            SchemeId::OverdampedEM | SchemeId::LM => Block::Overdamped,
            SchemeId::KineticEM => Block::KineticEM,
            SchemeId::BAO | SchemeId::OBA | SchemeId::AOB => Block::BAO,
            SchemeId::OAB | SchemeId::ABO | SchemeId::BOA => Block::OAB,
            SchemeId::BAOAB => Block::ABAO,
            SchemeId::OBABO => Block::ABOB,
            SchemeId::SES => Block::SES,
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

fn b_mat(tau: f64, lambda: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, -tau * lambda, 1.0)
}

fn a_mat(tau: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, tau, 0.0, 1.0)
}

fn o_mat(eta: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, eta)
}

/// Composes sub-step matrices left to right: `P = last · … · first`.
fn compose(ops: &[Matrix2<f64>]) -> Matrix2<f64> {
    ops.iter().fold(Matrix2::identity(), |acc, op| op * acc)
}

/// Matrix of the block with every O sub-step using `η = exp(−γh)`.
pub fn block_matrix(block: Block, lambda: f64, params: &StepParams) -> Matrix2<f64> {
    let h = params.h;
    let gamma = params.gamma;
    let eta = params.eta_full();
    match block {
        Block::Overdamped => Matrix2::new(1.0 - h * lambda, 0.0, 0.0, 0.0),
        Block::KineticEM => Matrix2::new(1.0, h, -h * lambda, 1.0 - gamma * h),
        Block::BAO => compose(&[b_mat(h, lambda), a_mat(h), o_mat(eta)]),
        Block::OAB => compose(&[o_mat(eta), a_mat(h), b_mat(h, lambda)]),
        Block::ABAO => compose(&[a_mat(h / 2.0), b_mat(h, lambda), a_mat(h / 2.0), o_mat(eta)]),
        Block::ABOB => compose(&[a_mat(h), b_mat(h / 2.0, lambda), o_mat(eta), b_mat(h / 2.0, lambda)]),
        Block::SES => {
            let u = gamma * h;
            let one_minus_eta = -(-u).exp_m1();
            Matrix2::new(
                1.0 - phi2(u) / (gamma * gamma) * lambda,
                one_minus_eta / gamma,
                -one_minus_eta / gamma * lambda,
                eta,
            )
        }
    }
}

/// The difference-process matrix for `scheme` at curvature `λ`.
///
/// BAOAB and OBABO return their analysed conjugate blocks (ABAO, ABOB);
/// [`one_step_matrix`] gives the literal one-step map instead.
pub fn transition_matrix_p(scheme: SchemeId, lambda: f64, params: &StepParams) -> Matrix2<f64> {
    match scheme {
        SchemeId::BAOAB => block_matrix(Block::ABAO, lambda, params),
        SchemeId::OBABO => block_matrix(Block::ABOB, lambda, params),
        other => one_step_matrix(other, lambda, params),
    }
}

/// The matrix realized by one call of [`crate::integrators::step`] on a
/// one-dimensional quadratic with curvature `λ`, with the overdamped
/// schemes' noise cache in the second slot.
pub fn one_step_matrix(scheme: SchemeId, lambda: f64, params: &StepParams) -> Matrix2<f64> {
    let h = params.h;
    match scheme {
        SchemeId::OverdampedEM => Matrix2::new(1.0 - h * lambda, 0.0, 0.0, 0.0),
        SchemeId::LM => Matrix2::new(1.0 - h * lambda, (0.5 * h).sqrt(), 0.0, 0.0),
        SchemeId::KineticEM => block_matrix(Block::KineticEM, lambda, params),
        SchemeId::SES => block_matrix(Block::SES, lambda, params),
        splitting => {
            let seq = splitting.substeps().expect("splitting scheme");
            let ops: Vec<Matrix2<f64>> = seq
                .iter()
                .map(|s| match *s {
                    SubStep::Kick(f) => b_mat(f * h, lambda),
                    SubStep::Drift(f) => a_mat(f * h),
                    SubStep::Refresh(f, _) => o_mat((-params.gamma * f * h).exp()),
                })
                .collect();
            compose(&ops)
        }
    }
}

/// `H = (1 − c) M − Pᵀ M P`.
pub fn contraction_matrix(p: &Matrix2<f64>, a: f64, b: f64, c: f64) -> Matrix2<f64> {
    let m = Matrix2::new(1.0, b, b, a);
    m * (1.0 - c) - p.transpose() * m * p
}

/// Entries of `H` as polynomials in `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcPolynomials {
    pub scheme: SchemeId,
    pub block: Block,
    pub h: f64,
    pub gamma: f64,
    /// `exp(−γh)`, the convention of every analysed block.
    pub eta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub poly_a: Poly,
    pub poly_b: Poly,
    pub poly_c: Poly,
}

impl AbcPolynomials {
    /// `AC − B²`, formed by coefficient convolution.
    pub fn det_poly(&self) -> Poly {
        &(&self.poly_a * &self.poly_c) - &(&self.poly_b * &self.poly_b)
    }
}

fn block_abc(block: Block, h: f64, gamma: f64, a: f64, b: f64, c: f64) -> (Poly, Poly, Poly) {
    let e = (-gamma * h).exp();
    let h2 = h * h;
    let h3 = h2 * h;
    let p = |v: Vec<f64>| Poly::new(v);
    match block {
        Block::Overdamped => (
            p(vec![-c, 2.0 * h, -h2]),
            p(vec![0.0]),
            p(vec![1.0 - c]),
        ),
        Block::KineticEM => (
            p(vec![-c, 2.0 * b * h, -h2 * a]),
            p(vec![-c * b + h * (b * gamma - 1.0), h * (a + h * (b - a * gamma))]),
            p(vec![-c * a + h * (2.0 * a * gamma - 2.0 * b - h * (1.0 - 2.0 * b * gamma + a * gamma * gamma))]),
        ),
        Block::BAO => {
            let k = a * e * e + 2.0 * b * e * h + h2;
            (
                p(vec![-c, 2.0 * (b * e + h) * h, -k * h2]),
                p(vec![b * (1.0 - e) - h - b * c, k * h]),
                p(vec![a * (1.0 - e * e) - 2.0 * b * e * h - h2 - a * c]),
            )
        }
        Block::OAB => (
            p(vec![-c, 2.0 * b * h, -a * h2]),
            p(vec![
                b * (1.0 - e) - e * h - b * c,
                a * e * h + 2.0 * b * e * h2,
                -a * e * h3,
            ]),
            p(vec![
                a * (1.0 - e * e) - 2.0 * b * e * e * h - e * e * h2 - a * c,
                2.0 * a * e * e * h2 + 2.0 * b * e * e * h3,
                -a * e * e * h2 * h2,
            ]),
        ),
        Block::ABAO => {
            let h4 = h2 * h2;
            (
                p(vec![
                    -c,
                    2.0 * b * e * h + h2,
                    -a * e * e * h2 - b * e * h3 - h4 / 4.0,
                ]),
                p(vec![
                    b * (1.0 - e) - h - b * c,
                    a * e * e * h + 2.0 * b * e * h2 + 0.75 * h3,
                    -a * e * e * h3 / 2.0 - b * e * h4 / 2.0 - h4 * h / 8.0,
                ]),
                p(vec![
                    a * (1.0 - e * e) - 2.0 * b * e * h - h2 - a * c,
                    a * e * e * h2 + 1.5 * b * e * h3 + h4 / 2.0,
                    -a * e * e * h4 / 4.0 - b * e * h4 * h / 4.0 - h4 * h2 / 16.0,
                ]),
            )
        }
        Block::ABOB => {
            let s = 1.0 + e;
            (
                p(vec![-c, b * h * s, -s * s * a * h2 / 4.0]),
                p(vec![
                    b * (1.0 - e) - h - b * c,
                    (0.5 * a * e + b * h) * s * h,
                    -s * s * a * h3 / 4.0,
                ]),
                p(vec![
                    a * (1.0 - e * e) - 2.0 * b * e * h - h2 - a * c,
                    (a * e + b * h) * s * h2,
                    -a * s * s * h2 * h2 / 4.0,
                ]),
            )
        }
        Block::SES => {
            let g = gamma;
            let ome = -(-g * h).exp_m1();
            // γh + η − 1, kept accurate for small γh
            let q = phi2(g * h);
            (
                p(vec![
                    -c,
                    2.0 * (b * ome / g + q / (g * g)),
                    -(a * ome * ome / (g * g) + 2.0 * b * ome * q / g.powi(3) + q * q / g.powi(4)),
                ]),
                p(vec![
                    b * ome - ome / g - b * c,
                    a * e * ome / g + b * ome * ome / (g * g) + b * e * q / (g * g) + ome * q / g.powi(3),
                ]),
                p(vec![
                    a * (1.0 - e * e) - a * c - 2.0 * b * e * ome / g - ome * ome / (g * g),
                ]),
            )
        }
    }
}

/// `A(λ)`, `B(λ)`, `C(λ)` for `scheme` with weights `(a, b)` and rate `c`.
///
/// ABO, BOA, OBA and AOB have no polynomials of their own; certify them
/// through [`check_certificate`], which routes them to OAB or BAO.
pub fn build_abc(scheme: SchemeId, params: &StepParams, a: f64, b: f64, c: f64) -> Result<AbcPolynomials> {
    if matches!(scheme, SchemeId::ABO | SchemeId::BOA | SchemeId::OBA | SchemeId::AOB) {
        return Err(Error::Unsupported(format!(
            "{scheme} is certified through its conjugate block {}",
            Block::of(scheme)
        )));
    }
    Ok(abc_for_block(scheme, params, a, b, c))
}

fn abc_for_block(scheme: SchemeId, params: &StepParams, a: f64, b: f64, c: f64) -> AbcPolynomials {
    let block = Block::of(scheme);
    let (poly_a, poly_b, poly_c) = block_abc(block, params.h, params.gamma, a, b, c);
    AbcPolynomials {
        scheme,
        block,
        h: params.h,
        gamma: params.gamma,
        eta: params.eta_full(),
        a,
        b,
        c,
        poly_a,
        poly_b,
        poly_c,
    }
}

/// Certified lower bound of a polynomial over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PositivityBound {
    /// A value `≤ min f` on the interval when `certified`; otherwise the
    /// smallest grid value (which is `≤ 0`).
    lower: f64,
    certified: bool,
    argmin: f64,
}

fn rounding_allowance(p: &Poly, x: f64) -> f64 {
    let magnitude = p.coeffs().iter().rev().fold(0.0, |acc: f64, &c| acc * x.abs() + c.abs());
    4.0 * (p.degree() as f64 + 2.0) * f64::EPSILON * magnitude
}

/// Lower bound of `f` on `[l, r]` given its endpoint values, or `None`
/// when refinement ran out of depth.
fn cell_lower_bound(f: &Poly, df: &Poly, l: f64, r: f64, fl: f64, fr: f64, depth: u32) -> Option<f64> {
    if fl <= 0.0 || fr <= 0.0 {
        return None;
    }
    let lip = df.abs_bound_centered(l, r);
    let bound = 0.5 * (fl + fr) - 0.5 * lip * (r - l);
    if bound > 0.0 {
        return Some(bound);
    }
    if depth == 0 {
        return None;
    }
    let mid = 0.5 * (l + r);
    let fm = f.eval(mid) - rounding_allowance(f, mid);
    let left = cell_lower_bound(f, df, l, mid, fl, fm, depth - 1)?;
    let right = cell_lower_bound(f, df, mid, r, fm, fr, depth - 1)?;
    Some(left.min(right))
}

fn certify_positive(f: &Poly, grid: &[f64]) -> PositivityBound {
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x) - rounding_allowance(f, x)).collect();
    let (imin, &vmin) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let argmin = grid[imin];
    if vmin <= 0.0 {
        return PositivityBound {
            lower: vmin,
            certified: false,
            argmin,
        };
    }
    if grid.len() == 1 {
        return PositivityBound {
            lower: vmin,
            certified: true,
            argmin,
        };
    }
    let df = f.derivative();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let step = (hi - lo) / (grid.len() - 1) as f64;
    let global = vmin - 0.5 * df.abs_bound_centered(lo, hi) * step;
    if global > 0.0 {
        return PositivityBound {
            lower: global,
            certified: true,
            argmin,
        };
    }
    let mut lower = f64::INFINITY;
    for i in 0..grid.len() - 1 {
        match cell_lower_bound(f, &df, grid[i], grid[i + 1], values[i], values[i + 1], MAX_REFINE_DEPTH) {
            Some(b) => lower = lower.min(b),
            None => {
                return PositivityBound {
                    lower: 0.0,
                    certified: false,
                    argmin: grid[i],
                }
            }
        }
    }
    PositivityBound {
        lower,
        certified: true,
        argmin,
    }
}

fn lambda_grid(m: f64, big_m: f64) -> Vec<f64> {
    if m == big_m {
        return vec![m];
    }
    let n = GRID_POINTS;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                big_m
            } else {
                m + (big_m - m) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn min_eig_sym2(h: &Matrix2<f64>) -> f64 {
    let (p, q, r) = (h[(0, 0)], 0.5 * (h[(0, 1)] + h[(1, 0)]), h[(1, 1)]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let lo = mean - rad;
    let hi = mean + rad;
    // the product form avoids cancellation when the smaller eigenvalue is tiny
    if hi > 0.0 && lo.abs() < 1e-3 * hi {
        (p * r - q * q) / hi
    } else {
        lo
    }
}

/// Inputs of a certificate check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateParams {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub gamma: f64,
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `exp(−γh)`, used by every analysed block.
    pub eta_certificate: f64,
    /// `η` of the integrator's own O sub-steps (differs only for OBABO).
    pub eta_integrator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub scheme: SchemeId,
    pub block: Block,
    pub params: CertificateParams,
    pub pass: bool,
    /// Certified lower bound of `A(λ)` on `[m, M]` (a grid value `≤ 0` on failure).
    pub min_margin_a: f64,
    /// Certified lower bound of `(AC − B²)(λ)` on `[m, M]`.
    pub min_margin_acb2: f64,
    /// Grid point with the smallest oracle eigenvalue.
    pub worst_lambda: f64,
    /// Smallest eigenvalue of the numerically assembled `H` over the grid.
    pub oracle_min_eig: f64,
    /// Whether polynomial and oracle routes agree in sign at every grid point.
    pub oracle_agrees: bool,
}

fn validate(m: f64, big_m: f64, gamma: f64, h: f64) -> Result<StepParams> {
    if !(m > 0.0 && m <= big_m && big_m.is_finite()) {
        return Err(invalid(format!("need 0 < m <= M, got m={m}, M={big_m}")));
    }
    StepParams::new(h, gamma)
}

struct PolyVerdict {
    a: PositivityBound,
    det: PositivityBound,
}

fn polynomial_route(abc: &AbcPolynomials, grid: &[f64]) -> PolyVerdict {
    let a = certify_positive(&abc.poly_a, grid);
    let det = certify_positive(&abc.det_poly(), grid);
    PolyVerdict { a, det }
}

impl PolyVerdict {
    fn pass(&self) -> bool {
        self.a.certified && self.det.certified && self.a.lower > 0.0 && self.det.lower > 0.0
    }
}

/// Checks `H ≻ 0` for all `λ ∈ [m, M]`.
#[allow(clippy::too_many_arguments)]
pub fn check_certificate(
    scheme: SchemeId,
    m: f64,
    big_m: f64,
    gamma: f64,
    h: f64,
    a: f64,
    b: f64,
    c: f64,
) -> Result<CertificateReport> {
    let params = validate(m, big_m, gamma, h)?;
    let abc = abc_for_block(scheme, &params, a, b, c);
    let grid = lambda_grid(m, big_m);
    let verdict = polynomial_route(&abc, &grid);

    let det = abc.det_poly();
    let block = abc.block;
    let mut oracle_min = f64::INFINITY;
    let mut worst = m;
    let mut agrees = true;
    for &lambda in &grid {
        let p = block_matrix(block, lambda, &params);
        let hm = contraction_matrix(&p, a, b, c);
        let eig = min_eig_sym2(&hm);
        if eig < oracle_min {
            oracle_min = eig;
            worst = lambda;
        }
        let pa = abc.poly_a.eval(lambda);
        let pd = det.eval(lambda);
        let poly_positive = pa > 0.0 && pd > 0.0;
        // signs are only compared where both routes are above rounding level
        let scale = (1.0 + a.abs() + b.abs()) * (1.0 + (p.transpose() * p).abs().max());
        let floor = 1e-12 * scale;
        let decided = eig.abs() > floor && pa.abs().min(pd.abs() / scale) > floor;
        if decided && (eig > 0.0) != poly_positive {
            agrees = false;
        }
    }

    Ok(CertificateReport {
        scheme,
        block,
        params: CertificateParams {
            m,
            big_m,
            gamma,
            h,
            a,
            b,
            c,
            eta_certificate: params.eta_full(),
            eta_integrator: params.eta(scheme),
        },
        pass: verdict.pass(),
        min_margin_a: verdict.a.lower,
        min_margin_acb2: verdict.det.lower,
        worst_lambda: worst,
        oracle_min_eig: oracle_min,
        oracle_agrees: agrees,
    })
}

/// [`check_certificate`] with the theorem's `(a, b, c)`.
pub fn certify_theorem(scheme: SchemeId, m: f64, big_m: f64, gamma: f64, h: f64) -> Result<CertificateReport> {
    let t = theorem_rate(scheme, m, big_m, gamma, h);
    check_certificate(scheme, m, big_m, gamma, h, t.a, t.b, t.c)
}

fn passes(scheme: SchemeId, params: &StepParams, grid: &[f64], a: f64, b: f64, c: f64) -> bool {
    polynomial_route(&abc_for_block(scheme, params, a, b, c), grid).pass()
}

/// Largest `c` the certificate accepts with the theorem's `(a, b)`, to
/// `1e−10` absolute.
pub fn max_certified_rate(scheme: SchemeId, m: f64, big_m: f64, gamma: f64, h: f64) -> Result<f64> {
    let params = validate(m, big_m, gamma, h)?;
    let t = theorem_rate(scheme, m, big_m, gamma, h);
    if !(t.b * t.b < t.a) {
        return Err(Error::NoContraction(format!(
            "theorem weights a={}, b={} do not define a norm",
            t.a, t.b
        )));
    }
    let grid = lambda_grid(m, big_m);
    if !passes(scheme, &params, &grid, t.a, t.b, 0.0) {
        return Err(Error::NoContraction(format!(
            "{scheme} fails the certificate at c=0 (h={h}, gamma={gamma})"
        )));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if passes(scheme, &params, &grid, t.a, t.b, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// One row of the certified stepsize table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRestriction {
    pub scheme: SchemeId,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub gamma: f64,
    /// Largest `h` at which the certificate passes with the theorem's
    /// `(a, b, c)`, searched from small `h` upward.
    pub h_certified: f64,
    /// Supremum of the theorem's admissible stepsizes (`None` when the
    /// friction alone violates a hypothesis).
    pub h_theorem: Option<f64>,
    /// Theorem rate at `h_certified`.
    pub c_at_h_certified: f64,
    /// `c_at_h_certified · M / m`, which stays bounded when the best rate
    /// scales like `m/M`.
    pub rate_times_condition: f64,
    pub h_times_gamma: f64,
    pub h_times_sqrt_m: f64,
}

/// Searches the largest certified stepsize for `scheme` at fixed `(m, M, γ)`.
pub fn max_certified_step(scheme: SchemeId, m: f64, big_m: f64, gamma: f64) -> Result<StepRestriction> {
    validate(m, big_m, gamma, 1.0)?;
    let grid = lambda_grid(m, big_m);
    let ok = |h: f64| -> bool {
        let Ok(params) = StepParams::new(h, gamma) else {
            return false;
        };
        let t = theorem_rate(scheme, m, big_m, gamma, h);
        t.b * t.b < t.a && t.c > 0.0 && t.c < 1.0 && passes(scheme, &params, &grid, t.a, t.b, t.c)
    };
    let scale = 1.0 / (gamma + big_m.sqrt());
    let mut h = 1e-6 * scale;
    let cap = 100.0 * (1.0 / big_m.sqrt()).max(1.0 / gamma).max(2.0 / big_m);
    while !ok(h) {
        h *= 1.5;
        if h > cap {
            return Err(Error::NoContraction(format!(
                "{scheme}: no certified stepsize at gamma={gamma}"
            )));
        }
    }
    let mut last_ok = h;
    let mut first_bad = None;
    while h < cap {
        h *= 1.05;
        if ok(h) {
            last_ok = h;
        } else {
            first_bad = Some(h);
            break;
        }
    }
    let h_cert = match first_bad {
        None => last_ok,
        Some(mut hi) => {
            let mut lo = last_ok;
            while hi - lo > 1e-10 * hi {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    let c = theorem_rate(scheme, m, big_m, gamma, h_cert).c;
    Ok(StepRestriction {
        scheme,
        m,
        big_m,
        gamma,
        h_certified: h_cert,
        h_theorem: crate::coupling::theorem_step_threshold(scheme, m, big_m, gamma),
        c_at_h_certified: c,
        rate_times_condition: c * big_m / m,
        h_times_gamma: h_cert * gamma,
        h_times_sqrt_m: h_cert * big_m.sqrt(),
    })
}

/// Boundary operators of the composition arguments.
///
/// `AB`, `BA`, `A`, `B`, `O` are first-order pieces with full steps. `AB/2`
/// is BAOAB's trailing `A(h/2)B(h/2)`, `BAO` its leading
/// `B(h/2)A(h/2)O(h)`; `ABO` and `OB` are OBABO's `A(h)B(h/2)O(h/2)` and
/// `O(h/2)B(h/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryOp {
    A,
    B,
    O,
    AB,
    BA,
    HalfAB,
    OB,
    BAO,
    ABO,
}

impl std::str::FromStr for BoundaryOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "A" => BoundaryOp::A,
            "B" => BoundaryOp::B,
            "O" => BoundaryOp::O,
            "AB" => BoundaryOp::AB,
            "BA" => BoundaryOp::BA,
            "AB/2" => BoundaryOp::HalfAB,
            "OB" => BoundaryOp::OB,
            "BAO" => BoundaryOp::BAO,
            "ABO" => BoundaryOp::ABO,
            other => return Err(Error::Unsupported(format!("boundary operator '{other}'"))),
        })
    }
}

impl BoundaryOp {
    /// Squared-norm amplification in `‖·‖_{a,b}` for any `b` with `2b ≤ √a`.
    ///
    /// Each difference map satisfies `‖Φz̄‖²_{a,0} ≤ 2(α‖x̄‖² + β‖v̄‖²)`;
    /// equivalence costs `3⁄2` on the way out and `2` on the way back, so
    /// the constant is `6·max(α, β/a)`. O is non-expansive in `‖·‖_{a,0}`
    /// and costs only the equivalence factor 3.
    pub fn constant(self, a: f64, h: f64, big_m: f64) -> f64 {
        let h2 = h * h;
        let h4 = h2 * h2;
        let m2 = big_m * big_m;
        let (alpha, beta) = match self {
            BoundaryOp::O => return 3.0,
            BoundaryOp::A => (1.0, h2 + a / 2.0),
            BoundaryOp::B => (0.5 + a * h2 * m2, a),
            BoundaryOp::AB => (1.0 + 2.0 * h2 * m2 * a, h2 + a + 2.0 * h4 * m2 * a),
            BoundaryOp::BA => (1.0 + a * h2 * m2, h2 + a),
            BoundaryOp::HalfAB => (1.0 + a * h2 * m2 / 2.0, a + h2 / 4.0 + a * h4 * m2 / 8.0),
            BoundaryOp::BAO => (1.0 + a * h2 * m2 / 4.0 + h4 * m2 / 8.0, h2 / 2.0 + a),
            BoundaryOp::ABO => (1.0 + a * h2 * m2 / 2.0, a + h2 + a * h4 * m2 / 2.0),
            BoundaryOp::OB => (0.5 + a * h2 * m2 / 4.0, a),
        };
        6.0 * alpha.max(beta / a)
    }
}

/// Product of the boundary constants of `ops`.
pub fn composition_bound(ops: &[&str], a: f64, h: f64, big_m: f64) -> Result<f64> {
    if !(a > 0.0 && h >= 0.0 && big_m > 0.0) {
        return Err(invalid("composition bound needs a > 0, h >= 0, M > 0"));
    }
    ops.iter()
        .map(|s| s.parse::<BoundaryOp>().map(|op| op.constant(a, h, big_m)))
        .product()
}
