//! Positive-definiteness certificates for the theorem constants, with the
//! dense 2x2 oracle alongside.

use langevin_contract::certificates::certify_theorem;
use langevin_contract::coupling::theorem_step_threshold;
use langevin_contract::SchemeId;

fn main() -> langevin_contract::Result<()> {
    let (m, big_m, gamma) = (0.5, 4.0, 12.0);
    for scheme in [SchemeId::KineticEM, SchemeId::BAO, SchemeId::OAB, SchemeId::BAOAB, SchemeId::OBABO, SchemeId::SES] {
        let Some(h_max) = theorem_step_threshold(scheme, m, big_m, gamma) else { continue };
        let r = certify_theorem(scheme, m, big_m, gamma, 0.5 * h_max)?;
        println!(
            "{:<10} h={:.4e} c={:.4e} pass={} margin_a={:.3e} worst_lambda={:.3} oracle_min_eig={:.3e} agrees={}",
            scheme.to_string(), r.params.h, r.params.c, r.pass, r.min_margin_a, r.worst_lambda, r.oracle_min_eig, r.oracle_agrees
        );
    }
    Ok(())
}
