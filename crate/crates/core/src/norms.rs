//! Weighted Euclidean norms on phase space and Wasserstein bookkeeping.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrators::PhaseState;

/// `‖z‖²_{a,b} = ‖x‖² + 2b⟨x,v⟩ + a‖v‖²`, a norm whenever `b² < a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    a: f64,
    b: f64,
}

impl WeightedNorm {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid(format!("norm weight a must be positive, got {a}")));
        }
        if !(b.is_finite() && b >= 0.0) {
            return Err(invalid(format!("norm weight b must be non-negative, got {b}")));
        }
        if b * b >= a {
            return Err(invalid(format!("b^2 < a is required, got a={a}, b={b}")));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// The per-coordinate structure matrix `[[1, b], [b, a]]`.
    pub fn structure_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(1.0, self.b, self.b, self.a)
    }

    /// The same norm with the cross term dropped.
    pub fn unweighted(&self) -> WeightedNorm {
        WeightedNorm { a: self.a, b: 0.0 }
    }
}

/// `‖z‖²_{a,b}`.
pub fn weighted_norm_sq(n: &WeightedNorm, z: &PhaseState) -> f64 {
    let mut xx = 0.0;
    let mut xv = 0.0;
    let mut vv = 0.0;
    for (x, v) in z.x.iter().zip(&z.v) {
        xx += x * x;
        xv += x * v;
        vv += v * v;
    }
    xx + 2.0 * n.b * xv + n.a * vv
}

/// Squared distance `‖z − w‖²_{a,b}` without allocating the difference.
pub fn weighted_distance_sq(n: &WeightedNorm, z: &PhaseState, w: &PhaseState) -> f64 {
    let mut xx = 0.0;
    let mut xv = 0.0;
    let mut vv = 0.0;
    for i in 0..z.x.len() {
        let dx = z.x[i] - w.x[i];
        let dv = z.v[i] - w.v[i];
        xx += dx * dx;
        xv += dx * dv;
        vv += dv * dv;
    }
    xx + 2.0 * n.b * xv + n.a * vv
}

/// `(½‖z‖²_{a,0}, ‖z‖²_{a,b}, 3⁄2‖z‖²_{a,0})`.
///
/// The ½ and 3⁄2 constants follow from `2|b⟨x,v⟩| ≤ (b/√a)(‖x‖² + a‖v‖²)`,
/// so they need `2b ≤ √a`, which is stricter than `b² < a`.
pub fn equivalence_bounds(n: &WeightedNorm, z: &PhaseState) -> Result<(f64, f64, f64)> {
    if 2.0 * n.b > n.a.sqrt() {
        return Err(invalid(format!(
            "equivalence constants need 2b <= sqrt(a), got a={}, b={}",
            n.a, n.b
        )));
    }
    let base = weighted_norm_sq(&n.unweighted(), z);
    Ok((0.5 * base, weighted_norm_sq(n, z), 1.5 * base))
}

/// Squared 2-Wasserstein decay factor `3·C·max{a, 1/a}·(1 − c)ⁿ` obtained
/// by converting a weighted-norm contraction back to the Euclidean metric.
pub fn wasserstein_report(big_c: f64, a: f64, c: f64, n_steps: u64) -> f64 {
    let n = n_steps.min(i32::MAX as u64) as i32;
    3.0 * big_c * a.max(1.0 / a) * (1.0 - c).powi(n)
}

/// Closed-form 2-Wasserstein distance between two Gaussians.
pub fn gaussian_w2(
    mean1: &DVector<f64>,
    cov1: &DMatrix<f64>,
    mean2: &DVector<f64>,
    cov2: &DMatrix<f64>,
) -> Result<f64> {
    let d = mean1.len();
    for len in [mean2.len(), cov1.nrows(), cov1.ncols(), cov2.nrows(), cov2.ncols()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    let root2 = psd_sqrt(cov2, "cov2")?;
    psd_sqrt(cov1, "cov1")?;
    let inner = &root2 * cov1 * &root2;
    let cross = psd_sqrt(&inner, "cross term")?;
    let mean_term = (mean1 - mean2).norm_squared();
    let trace_term = cov1.trace() + cov2.trace() - 2.0 * cross.trace();
    Ok((mean_term + trace_term.max(0.0)).sqrt())
}

fn psd_sqrt(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let scale = sym.amax().max(1.0);
    if (m - &sym).amax() > 1e-10 * scale {
        return Err(Error::NotPositiveSemidefinite(format!("{what} is not symmetric")));
    }
    let eig = SymmetricEigen::new(sym);
    let tol = 1e-12 * scale * m.nrows() as f64;
    let mut roots = eig.eigenvalues.clone();
    for l in roots.iter_mut() {
        if *l < -tol || !l.is_finite() {
            return Err(Error::NotPositiveSemidefinite(format!(
                "{what} has eigenvalue {l:e}"
            )));
        }
        *l = l.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_d(x: f64, v: f64) -> PhaseState {
        PhaseState::new(vec![x], vec![v]).unwrap()
    }

    #[test]
    fn direct_evaluation() {
        let n = WeightedNorm::new(1.0, 0.5).unwrap();
        assert_eq!(weighted_norm_sq(&n, &one_d(1.0, 1.0)), 3.0);
        assert_eq!(weighted_norm_sq(&n, &PhaseState::zeros(3)), 0.0);

        let em = WeightedNorm::new(1.0 / 4.0, 1.0 / 4.0).unwrap();
        let z = PhaseState::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_relative_eq!(weighted_norm_sq(&em, &z), 1.25, epsilon = 1e-15);
    }

    #[test]
    fn construction_rejects_degenerate_weights() {
        assert!(WeightedNorm::new(1.0, 1.0).is_err());
        assert!(WeightedNorm::new(0.0, 0.0).is_err());
        assert!(WeightedNorm::new(1.0, -0.1).is_err());
        assert!(WeightedNorm::new(1.0, 0.99).is_ok());
    }

    #[test]
    fn equivalence_boundary_case() {
        let n = WeightedNorm::new(1.0, 0.5).unwrap();
        assert_eq!(equivalence_bounds(&n, &one_d(1.0, 1.0)).unwrap(), (1.0, 3.0, 3.0));
        let loose = WeightedNorm::new(1.0, 0.6).unwrap();
        assert!(equivalence_bounds(&loose, &one_d(1.0, 1.0)).is_err());
        let plain = WeightedNorm::new(2.0, 0.0).unwrap();
        let (lo, val, hi) = equivalence_bounds(&plain, &one_d(0.3, -0.7)).unwrap();
        assert!(lo < val && val < hi);
    }

    #[test]
    fn wasserstein_factor() {
        assert_eq!(wasserstein_report(1.0, 1.0, 0.5, 1), 1.5);
        assert_relative_eq!(wasserstein_report(1.0, 0.25, 0.0125, 0), 12.0, epsilon = 1e-12);
        let a = wasserstein_report(2.0, 3.0, 0.1, 7);
        let b = wasserstein_report(2.0, 3.0, 0.1, 8);
        assert_relative_eq!(b, a * 0.9, max_relative = 1e-14);
    }

    #[test]
    fn gaussian_w2_cases() {
        let m = DVector::from_vec(vec![0.3, -1.0]);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert_relative_eq!(gaussian_w2(&m, &s, &m, &s).unwrap(), 0.0, epsilon = 1e-7);

        let zero = DMatrix::zeros(2, 2);
        let m2 = DVector::from_vec(vec![3.3, 3.0]);
        assert_relative_eq!(gaussian_w2(&m, &zero, &m2, &zero).unwrap(), 5.0, epsilon = 1e-12);

        let o = DVector::from_vec(vec![0.0]);
        let w = gaussian_w2(&o, &DMatrix::from_element(1, 1, 1.0), &o, &DMatrix::from_element(1, 1, 4.0)).unwrap();
        assert_relative_eq!(w, 1.0, epsilon = 1e-12);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(gaussian_w2(&m, &bad, &m, &s), Err(Error::NotPositiveSemidefinite(_))));
    }
}
