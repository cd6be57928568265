//! Configuration average of the crossed angular factor: Monte Carlo over
//! isotropic orientations and a spread of distances, against the small-angle
//! closed form.

use cbs_spectrum::average::{angular_factor, fit_theta_quadratic, mc_average_many, AverageSpec, DEFAULT_WIDTH_FRAC};

fn main() -> cbs_spectrum::Result<()> {
    let k_ell = 100.0;
    let spec = AverageSpec::new(1_000_000, 7, k_ell, DEFAULT_WIDTH_FRAC)?;
    let thetas: Vec<f64> = (0..=5).map(|k| k as f64 * 1e-3).collect();
    println!("{:>8} {:>14} {:>12} {:>14}", "theta", "Monte Carlo", "std error", "closed form");
    for e in mc_average_many(&spec, &thetas)? {
        let (c, _) = angular_factor(e.theta, k_ell)?;
        println!("{:8.4} {:14.8} {:12.2e} {:14.8}", e.theta, e.mean, e.std_error, c);
    }
    let (a, b) = fit_theta_quadratic(&spec, 0.5 / k_ell, 11)?;
    println!("fit: {a:.6} + ({b:.2}) theta^2; closed-form coefficient {:.2}", -k_ell * k_ell / 35.0);
    println!("distance spread w = {} predicts {:.2}", spec.width_frac, -k_ell * k_ell / 35.0 * spec.second_moment_ratio());
    Ok(())
}
