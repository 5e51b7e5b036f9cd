//! Long BAOAB run on a 1-D standard Gaussian using counter-based noise.

use langevin_contract::{step, NoiseStream, PhaseState, QuadraticPotential, SchemeId, StepParams};

fn main() -> langevin_contract::Result<()> {
    let p = QuadraticPotential::isotropic(1, 1.0)?;
    let params = StepParams::new(0.05, 2.0)?;
    let noise = NoiseStream::new(42, 0);
    let mut z = PhaseState::at_rest(vec![0.0]);
    let n = 1_000_000u64;
    let (mut sx, mut sxx, mut svv) = (0.0, 0.0, 0.0);
    for k in 0..n {
        z = step(SchemeId::BAOAB, &p, &z, &params, &noise.draw(SchemeId::BAOAB, k, 1))?;
        sx += z.x[0];
        sxx += z.x[0] * z.x[0];
        svv += z.v[0] * z.v[0];
    }
    let nf = n as f64;
    println!("mean {:.4}, position variance {:.4}, velocity variance {:.4}", sx / nf, sxx / nf - (sx / nf).powi(2), svv / nf);
    Ok(())
}
