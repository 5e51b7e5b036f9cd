//! Exact Ornstein-Uhlenbeck noise covariance used by the SES scheme and a
//! sample estimate from the correlated draws.

use langevin_contract::integrators::{ses_noise, SesCovariance};
use langevin_contract::{NoiseStream, StepParams};

fn main() -> langevin_contract::Result<()> {
    let params = StepParams::new(0.1, 2.0)?;
    let cov = SesCovariance::new(&params)?;
    let stream = NoiseStream::new(3, 0);
    let n = 100_000u64;
    let (mut zz, mut ww, mut zw) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (z, w) = ses_noise(&params, &stream.gaussian(k, 0, 1), &stream.gaussian(k, 1, 1))?;
        zz += z[0] * z[0];
        ww += w[0] * w[0];
        zw += z[0] * w[0];
    }
    let nf = n as f64;
    println!("position variance {:.5e} (exact {:.5e})", zz / nf, cov.var_position);
    println!("velocity variance {:.5e} (exact {:.5e})", ww / nf, cov.var_velocity);
    println!("covariance        {:.5e} (exact {:.5e})", zw / nf, cov.covariance);
    Ok(())
}
