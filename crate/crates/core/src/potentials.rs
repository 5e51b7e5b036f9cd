//! Target potentials with gradient/Hessian oracles and certified `(m, M)`.
//!
//! Every potential here is `m`-strongly convex and has an `M`-Lipschitz
//! gradient. The constants are part of the type: integrators, theorem rates
//! and certificates all read them from the same place.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

/// Oracle access to a smooth strongly convex potential `U`.
///
/// Implementations are immutable after construction and may be shared
/// between worker threads.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    /// Strong-convexity constant `m`.
    fn convexity(&self) -> f64;

    /// Gradient-Lipschitz constant `M`.
    fn smoothness(&self) -> f64;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇U(x)` into `out`. Lengths are not checked; see [`gradient`].
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    /// `∇²U(x)`, if the potential exposes a Hessian oracle.
    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// The Hessian when it does not depend on `x` (quadratics).
    fn constant_hessian(&self) -> Option<DMatrix<f64>> {
        None
    }

    fn name(&self) -> &'static str;
}

/// `∇U(x)` with a dimension check.
pub fn gradient(p: &dyn Potential, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(p.dim(), x.len())?;
    let mut out = vec![0.0; x.len()];
    p.gradient_into(x, &mut out);
    Ok(out)
}

/// The averaged Hessian `Q = ∫₀¹ ∇²U(x + t(y − x)) dt` along the segment.
///
/// `Q (y − x) = ∇U(y) − ∇U(x)` and the spectrum of `Q` lies in `[m, M]`.
/// Quadratics return their constant Hessian; other potentials use a
/// 16-point Gauss–Legendre rule in `t`.
pub fn mean_value_hessian(p: &dyn Potential, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
    check_dim(p.dim(), x.len())?;
    check_dim(p.dim(), y.len())?;
    if let Some(q) = p.constant_hessian() {
        return Ok(q);
    }
    if x == y {
        return p.hessian(x).ok_or(Error::NoHessian);
    }
    let d = p.dim();
    let mut acc = DMatrix::<f64>::zeros(d, d);
    let mut point = vec![0.0; d];
    for (t, w) in gauss_legendre_unit() {
        for i in 0..d {
            point[i] = x[i] + t * (y[i] - x[i]);
        }
        let hess = p.hessian(&point).ok_or(Error::NoHessian)?;
        acc += hess * *w;
    }
    // symmetrize away quadrature round-off
    let sym = (&acc + acc.transpose()) * 0.5;
    Ok(sym)
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

const QUADRATURE_POINTS: usize = 16;

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
fn gauss_legendre_unit() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        gauss_legendre(QUADRATURE_POINTS)
            .into_iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect()
    })
}

/// Nodes/weights on `[-1, 1]` by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            deriv = dp;
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        if dp != 0.0 {
            deriv = dp;
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        rule.push((x, w));
    }
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Debug, Clone, PartialEq)]
enum Curvature {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

/// `U(x) = ½ xᵀQx` for a symmetric positive-definite `Q`.
///
/// `m` and `M` are the extreme eigenvalues of `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPotential {
    curvature: Curvature,
    m: f64,
    big_m: f64,
}

impl QuadraticPotential {
    /// Diagonal `Q`; the fast path used by all Gaussian experiments.
    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(invalid("quadratic potential needs dim >= 1"));
        }
        if diag.iter().any(|&q| !(q.is_finite() && q > 0.0)) {
            return Err(invalid("diagonal curvatures must be finite and positive"));
        }
        let m = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let big_m = diag.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            curvature: Curvature::Diagonal(diag),
            m,
            big_m,
        })
    }

    /// The 2-D anisotropic Gaussian `½ m x² + ½ M y²`.
    pub fn anisotropic(m: f64, big_m: f64) -> Result<Self> {
        if m > big_m {
            return Err(invalid(format!("need m <= M, got m={m}, M={big_m}")));
        }
        Self::diagonal(vec![m, big_m])
    }

    /// `λ I` in `dim` dimensions.
    pub fn isotropic(dim: usize, lambda: f64) -> Result<Self> {
        Self::diagonal(vec![lambda; dim])
    }

    /// Arbitrary symmetric positive-definite `Q`.
    pub fn dense(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(invalid("Q must be a non-empty square matrix"));
        }
        let scale = q.amax().max(1.0);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(invalid("Q must be symmetric"));
        }
        let eig = SymmetricEigen::new(q.clone());
        let m = eig.eigenvalues.min();
        let big_m = eig.eigenvalues.max();
        if !(m > 0.0) {
            return Err(invalid(format!("Q must be positive definite (min eigenvalue {m})")));
        }
        Ok(Self {
            curvature: Curvature::Dense(q),
            m,
            big_m,
        })
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.curvature {
            Curvature::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
            Curvature::Dense(q) => q.clone(),
        }
    }

    /// Diagonal entries when `Q` is stored diagonally.
    pub fn diagonal_entries(&self) -> Option<&[f64]> {
        match &self.curvature {
            Curvature::Diagonal(d) => Some(d),
            Curvature::Dense(_) => None,
        }
    }
}

impl Potential for QuadraticPotential {
    fn dim(&self) -> usize {
        match &self.curvature {
            Curvature::Diagonal(d) => d.len(),
            Curvature::Dense(q) => q.nrows(),
        }
    }

    fn convexity(&self) -> f64 {
        self.m
    }

    fn smoothness(&self) -> f64 {
        self.big_m
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        0.5 * x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.curvature {
            Curvature::Diagonal(d) => {
                for ((o, &q), &xi) in out.iter_mut().zip(d).zip(x) {
                    *o = q * xi;
                }
            }
            Curvature::Dense(q) => {
                let n = q.nrows();
                for (i, o) in out.iter_mut().enumerate().take(n) {
                    *o = (0..n).map(|j| q[(i, j)] * x[j]).sum();
                }
            }
        }
    }

    fn hessian(&self, _x: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.matrix())
    }

    fn constant_hessian(&self) -> Option<DMatrix<f64>> {
        Some(self.matrix())
    }

    fn name(&self) -> &'static str {
        "quadratic"
    }
}

/// `U(x) = ½ xᵀQx + ε Σᵢ cos(xᵢ)` with certified constants `m − ε`, `M + ε`.
///
/// The cosine term has Hessian `−ε diag(cos xᵢ)`, whose spectrum lies in
/// `[−ε, ε]`, so `0 ≤ ε < m` keeps the target strongly convex.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedQuadratic {
    base: QuadraticPotential,
    epsilon: f64,
}

impl PerturbedQuadratic {
    pub fn new(base: QuadraticPotential, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon < base.convexity()) {
            return Err(invalid(format!(
                "perturbation needs 0 <= eps < m; got eps={epsilon}, m={}",
                base.convexity()
            )));
        }
        Ok(Self { base, epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn base(&self) -> &QuadraticPotential {
        &self.base
    }
}

impl Potential for PerturbedQuadratic {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn convexity(&self) -> f64 {
        self.base.convexity() - self.epsilon
    }

    fn smoothness(&self) -> f64 {
        self.base.smoothness() + self.epsilon
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x) + self.epsilon * x.iter().map(|xi| xi.cos()).sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.base.gradient_into(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o -= self.epsilon * xi.sin();
        }
    }

    fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let mut h = self.base.matrix();
        for (i, xi) in x.iter().enumerate() {
            h[(i, i)] -= self.epsilon * xi.cos();
        }
        Some(h)
    }

    fn name(&self) -> &'static str {
        "perturbed_quadratic"
    }
}

/// Extreme ratios observed over random pairs `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledConstants {
    /// `min ⟨∇U(x)−∇U(y), x−y⟩ / ‖x−y‖²`
    pub min_convexity: f64,
    /// `max ‖∇U(x)−∇U(y)‖ / ‖x−y‖`
    pub max_lipschitz: f64,
}

/// Samples `pairs` Gaussian pairs with standard deviation `scale` and returns
/// the observed convexity/Lipschitz ratios. For a correct potential
/// `min_convexity >= m` and `max_lipschitz <= M` up to round-off.
pub fn sample_constants(p: &dyn Potential, pairs: usize, scale: f64, seed: u64) -> SampledConstants {
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut gx = vec![0.0; d];
    let mut gy = vec![0.0; d];
    let mut out = SampledConstants {
        min_convexity: f64::INFINITY,
        max_lipschitz: 0.0,
    };
    for _ in 0..pairs {
        for i in 0..d {
            x[i] = scale * rng.sample::<f64, _>(StandardNormal);
            y[i] = scale * rng.sample::<f64, _>(StandardNormal);
        }
        p.gradient_into(&x, &mut gx);
        p.gradient_into(&y, &mut gy);
        let mut dist2 = 0.0;
        let mut inner = 0.0;
        let mut gdist2 = 0.0;
        for i in 0..d {
            let dx = x[i] - y[i];
            let dg = gx[i] - gy[i];
            dist2 += dx * dx;
            inner += dx * dg;
            gdist2 += dg * dg;
        }
        if dist2 == 0.0 {
            continue;
        }
        out.min_convexity = out.min_convexity.min(inner / dist2);
        out.max_lipschitz = out.max_lipschitz.max((gdist2 / dist2).sqrt());
    }
    out
}
