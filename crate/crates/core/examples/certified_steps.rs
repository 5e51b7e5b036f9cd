//! Largest certified stepsize per scheme across frictions, next to the
//! stepsize the theorem hypotheses allow.

use langevin_contract::certificates::max_certified_step;
use langevin_contract::SchemeId;

fn main() -> langevin_contract::Result<()> {
    let (m, big_m) = (1.0, 4.0);
    println!("{:<10} {:>8} {:>12} {:>12} {:>10}", "scheme", "gamma", "h certified", "h theorem", "h*gamma");
    for gamma in [10.0, 100.0, 1000.0] {
        for scheme in [SchemeId::KineticEM, SchemeId::BAO, SchemeId::OAB, SchemeId::BAOAB, SchemeId::OBABO] {
            let row = max_certified_step(scheme, m, big_m, gamma)?;
            println!(
                "{:<10} {:>8} {:>12.4e} {:>12.4e} {:>10.3}",
                scheme.to_string(), gamma, row.h_certified, row.h_theorem.unwrap_or(f64::NAN), row.h_times_gamma
            );
        }
    }
    Ok(())
}
