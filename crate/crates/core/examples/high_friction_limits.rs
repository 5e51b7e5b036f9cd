//! Behaviour as friction grows: limit maps, deviation from them, and the
//! collapse of the contraction rate.

use langevin_contract::glc::{classify_glc, deviation_scan, overdamped_equivalence, rate_collapse_scan, CollapseOptions, DEFAULT_GAMMA_GRID};
use langevin_contract::{PerturbedQuadratic, QuadraticPotential, SchemeId};

fn main() -> langevin_contract::Result<()> {
    let p = PerturbedQuadratic::new(QuadraticPotential::anisotropic(1.0, 4.0)?, 0.5)?;
    let (x, v) = ([0.7, -0.3], [0.4, 1.1]);
    for scheme in [SchemeId::BAO, SchemeId::OAB, SchemeId::BAOAB, SchemeId::OBABO] {
        let rows = deviation_scan(scheme, &p, &x, &v, 0.1, &DEFAULT_GAMMA_GRID, 0)?;
        let devs: Vec<String> = rows.iter().map(|r| format!("{:.1e}", r.deviation)).collect();
        println!("{:<6} glc={:<5} deviation along gamma grid: {}", scheme.to_string(), classify_glc(scheme), devs.join(" "));
    }
    let gap = overdamped_equivalence(SchemeId::BAOAB, &p, &x, &v, 0.1, 1e8, 1000, 0)?;
    println!("BAOAB vs LM(h^2/2) at gamma=1e8 over 1000 steps: {gap:.2e}");

    let opts = CollapseOptions { steps: 500, ..Default::default() };
    for scheme in [SchemeId::BAOAB, SchemeId::SES] {
        for row in rate_collapse_scan(scheme, 1.0, 4.0, &[10.0, 100.0, 1000.0], opts)? {
            println!("{:<6} gamma={:<6} h={:.3e} c theorem={:.3e} measured={:?}", scheme.to_string(), row.gamma, row.h, row.c_theoretical, row.c_empirical);
        }
    }
    Ok(())
}
