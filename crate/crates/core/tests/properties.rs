use langevin_contract::certificates::one_step_matrix;
use langevin_contract::gaussian::{eigenvalues_2x2, mode_eigenvalues};
use langevin_contract::integrators::{ses_noise, SesCovariance};
use langevin_contract::norms::{equivalence_bounds, weighted_norm_sq};
use langevin_contract::potentials::{gradient, mean_value_hessian};
use langevin_contract::{step, NoiseDraw, NoiseStream, PerturbedQuadratic, PhaseState, QuadraticPotential, SchemeId, StepParams, WeightedNorm};
use proptest::prelude::*;

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 2)
}

fn scheme() -> impl Strategy<Value = SchemeId> {
    prop::sample::select(SchemeId::ALL.to_vec())
}

fn noise_for(scheme: SchemeId, seed: u64, step_index: u64) -> NoiseDraw {
    NoiseStream::new(seed, 0).draw(scheme, step_index, 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn weighted_norm_is_positive(a in 1e-3..1e3f64, t in 0.0..0.999f64, x in vec2(), v in vec2()) {
        let b = t * a.sqrt();
        let n = WeightedNorm::new(a, b).unwrap();
        let z = PhaseState::new(x, v).unwrap();
        let val = weighted_norm_sq(&n, &z);
        let zero = z.x.iter().chain(&z.v).all(|c| *c == 0.0);
        prop_assert!(val > 0.0 || zero);
    }

    #[test]
    fn equivalence_sandwich(a in 1e-3..1e3f64, t in 0.0..=0.5f64, x in vec2(), v in vec2()) {
        let n = WeightedNorm::new(a, t * a.sqrt()).unwrap();
        let z = PhaseState::new(x, v).unwrap();
        let (lo, val, hi) = equivalence_bounds(&n, &z).unwrap();
        let slack = 1e-12 * hi;
        prop_assert!(lo <= val + slack && val <= hi + slack);
    }

    /// On a 1-D quadratic the coupled difference evolves by the one-step
    /// matrix, whatever the shared noise.
    #[test]
    fn integrator_matches_transition_matrix(
        scheme in scheme(),
        lambda in 0.05..5.0f64,
        h in 0.001..0.5f64,
        gamma in 0.1..20.0f64,
        xa in -3.0..3.0f64, va in -3.0..3.0f64,
        xb in -3.0..3.0f64, vb in -3.0..3.0f64,
        seed in 0u64..1000,
    ) {
        let p = QuadraticPotential::isotropic(1, lambda).unwrap();
        let params = StepParams::new(h, gamma).unwrap();
        let noise = noise_for(scheme, seed, 3);
        let za = PhaseState::new(vec![xa], vec![va]).unwrap();
        let zb = PhaseState::new(vec![xb], vec![vb]).unwrap();
        let na = step(scheme, &p, &za, &params, &noise).unwrap();
        let nb = step(scheme, &p, &zb, &params, &noise).unwrap();
        let m = one_step_matrix(scheme, lambda, &params);
        let (dx, dv) = (xa - xb, va - vb);
        let (ex, ev) = (m[(0, 0)] * dx + m[(0, 1)] * dv, m[(1, 0)] * dx + m[(1, 1)] * dv);
        let scale = 1.0 + xa.abs() + xb.abs() + va.abs() + vb.abs();
        prop_assert!((na.x[0] - nb.x[0] - ex).abs() <= 1e-12 * scale, "{scheme}: x {} vs {ex}", na.x[0] - nb.x[0]);
        prop_assert!((na.v[0] - nb.v[0] - ev).abs() <= 1e-12 * scale, "{scheme}: v {} vs {ev}", na.v[0] - nb.v[0]);
    }

    /// The difference after a step does not depend on which noise was shared.
    #[test]
    fn shared_noise_cancels(scheme in scheme(), seed1 in 0u64..1000, seed2 in 1000u64..2000, dx in -2.0..2.0f64) {
        let p = QuadraticPotential::anisotropic(0.5, 3.0).unwrap();
        let params = StepParams::new(0.05, 4.0).unwrap();
        let za = PhaseState::new(vec![dx, 0.3], vec![0.1, -0.2]).unwrap();
        let zb = PhaseState::new(vec![0.0, -0.4], vec![0.5, 0.2]).unwrap();
        let diff = |seed: u64| {
            let noise = NoiseStream::new(seed, 0).draw(scheme, 0, 2);
            let a = step(scheme, &p, &za, &params, &noise).unwrap();
            let b = step(scheme, &p, &zb, &params, &noise).unwrap();
            a.difference(&b)
        };
        let (d1, d2) = (diff(seed1), diff(seed2));
        for (u, w) in d1.x.iter().zip(&d2.x).chain(d1.v.iter().zip(&d2.v)) {
            prop_assert!((u - w).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn closed_form_eigenvalues(lambda in 0.01..100.0f64, h in 1e-4..2.0f64, gamma in 0.01..1e3f64) {
        let params = StepParams::new(h, gamma).unwrap();
        for scheme in [SchemeId::KineticEM, SchemeId::BAO] {
            let closed = mode_eigenvalues(scheme, lambda, &params);
            let numeric = eigenvalues_2x2(&one_step_matrix(scheme, lambda, &params));
            let scale = 1.0 + closed[0].norm().max(closed[1].norm());
            // compare as unordered pairs through the symmetric functions
            let (s1, s2) = (closed[0] + closed[1], numeric[0] + numeric[1]);
            let (p1, p2) = (closed[0] * closed[1], numeric[0] * numeric[1]);
            prop_assert!((s1 - s2).norm() <= 1e-12 * scale, "{scheme}: {closed:?} vs {numeric:?}");
            prop_assert!((p1 - p2).norm() <= 1e-12 * scale * scale, "{scheme}: {closed:?} vs {numeric:?}");
        }
    }

    #[test]
    fn perturbed_quadratic_constants(x in vec2(), y in vec2(), eps in 0.0..0.9f64) {
        let p = PerturbedQuadratic::new(QuadraticPotential::anisotropic(1.0, 4.0).unwrap(), eps).unwrap();
        let (gx, gy) = (gradient(&p, &x).unwrap(), gradient(&p, &y).unwrap());
        let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
        let dd: f64 = d.iter().map(|t| t * t).sum();
        let inner: f64 = d.iter().zip(&dg).map(|(a, b)| a * b).sum();
        let dgn: f64 = dg.iter().map(|t| t * t).sum::<f64>().sqrt();
        let (m, big_m) = (1.0 - eps, 4.0 + eps);
        prop_assert!(inner >= m * dd - 1e-9 * (1.0 + dd));
        prop_assert!(dgn <= big_m * dd.sqrt() + 1e-9);

        let q = mean_value_hessian(&p, &x, &y).unwrap();
        prop_assert!((q[(0, 1)] - q[(1, 0)]).abs() <= 1e-12);
        let rq = |u: [f64; 2]| {
            let qu = [q[(0, 0)] * u[0] + q[(0, 1)] * u[1], q[(1, 0)] * u[0] + q[(1, 1)] * u[1]];
            (u[0] * qu[0] + u[1] * qu[1]) / (u[0] * u[0] + u[1] * u[1])
        };
        for u in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8], [x[0] + 0.1, y[1] - 0.2]] {
            let r = rq(u);
            prop_assert!(r >= m - 1e-9 && r <= big_m + 1e-9, "{r}");
        }
    }
}

#[test]
fn ses_noise_covariance_by_monte_carlo() {
    let n = 200_000;
    for (h, gamma) in [(0.1, 1.0), (0.05, 20.0), (1e-3, 0.5)] {
        let params = StepParams::new(h, gamma).unwrap();
        let cov = SesCovariance::new(&params).unwrap();
        let stream = NoiseStream::new(17, 0);
        let (mut szz, mut sww, mut szw) = (0.0, 0.0, 0.0);
        for k in 0..n as u64 {
            let xi1 = stream.gaussian(k, 0, 1);
            let xi2 = stream.gaussian(k, 1, 1);
            let (zeta, omega) = ses_noise(&params, &xi1, &xi2).unwrap();
            szz += zeta[0] * zeta[0];
            sww += omega[0] * omega[0];
            szw += zeta[0] * omega[0];
        }
        let nf = n as f64;
        let (vz, vw, c) = (szz / nf, sww / nf, szw / nf);
        // ~5 standard errors of a sample second moment
        let tol = |var: f64| 5.0 * var * (2.0 / nf).sqrt();
        assert!((vz - cov.var_position).abs() <= tol(cov.var_position), "{vz} vs {}", cov.var_position);
        assert!((vw - cov.var_velocity).abs() <= tol(cov.var_velocity), "{vw} vs {}", cov.var_velocity);
        let cov_tol = 5.0 * (cov.var_position * cov.var_velocity / nf).sqrt() * 1.5;
        assert!((c - cov.covariance).abs() <= cov_tol, "{c} vs {}", cov.covariance);
    }
}
