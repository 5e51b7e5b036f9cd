//! Spectral radii of the one-step maps on a Gaussian and the largest
//! stable stepsize, with the KineticEM closed form for comparison.

use langevin_contract::gaussian::{bao_rate_sandwich, gaussian_scan, kinetic_em_threshold, stability_threshold};
use langevin_contract::SchemeId;

fn main() -> langevin_contract::Result<()> {
    let gamma = 4.0;
    for scheme in [SchemeId::KineticEM, SchemeId::BAO, SchemeId::BAOAB, SchemeId::OBABO, SchemeId::SES] {
        let scan = gaussian_scan(scheme, 1.0, 1.0, gamma, &[0.1, 0.25, 0.5, 1.0])?;
        let radii: Vec<String> = scan.iter().map(|e| format!("h={}: {:.3}", e.h, e.modes[0].spectral_radius)).collect();
        println!("{:<10} threshold {:.5}  {}", scheme.to_string(), stability_threshold(scheme, 1.0, gamma)?, radii.join("  "));
    }
    println!("KineticEM closed form {:.5}", kinetic_em_threshold(1.0, gamma).unwrap_or(f64::NAN));
    let s = bao_rate_sandwich(1.0, 0.1, 5.0);
    println!("BAO at h=0.1, gamma=5: theorem rate {:.4e}, exact rate {:.4e}", s.c_theorem, s.c_exact);
    Ok(())
}
