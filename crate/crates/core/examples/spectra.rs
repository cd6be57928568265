//! Inelastic ladder and crossed spectra at Omega = 0.1, 1, 10 and 100 gamma,
//! normalized so that the ladder integrates to one, with the closure of the
//! integrated spectrum against the algebraic intensities.

use cbs_spectrum::model::{Configuration, PhysParams};
use cbs_spectrum::spectrum::{cbs_spectrum, frequency_grid, integrate_spectrum};
use cbs_spectrum::steady::DoubleScattering;

fn main() -> cbs_spectrum::Result<()> {
    for omega in [0.1, 1.0, 10.0, 100.0] {
        let p = PhysParams::resonant(omega)?;
        let cfg = Configuration::backscattering();
        let spec = cbs_spectrum(p, cfg, &frequency_grid(&p, 2000)?)?;
        let (l, c) = integrate_spectrum(&spec)?;
        let exact = DoubleScattering::new(p, cfg)?.intensity_terms()?.normalized()?;
        println!(
            "Omega = {omega:>5}: closure ladder {:.1e}, crossed {:.1e}; mirror asymmetry {:.1e}",
            (l / exact.ladder_total - 1.0).abs(),
            (c / exact.crossed_total - 1.0).abs(),
            spec.asymmetry.0.max(spec.asymmetry.1)
        );
        let unit = spec.to_unit_ladder()?;
        let step = (2.0 * omega + 10.0) / 12.0;
        println!("  {:>10} {:>14} {:>14}", "nu/gamma", "ladder", "crossed");
        for k in 0..=12 {
            let nu = k as f64 * step;
            let grid = [nu];
            let one = cbs_spectrum(p, cfg, &grid)?;
            let scale = unit.ladder_el_weight / spec.ladder_el_weight;
            println!("  {nu:10.3} {:14.6e} {:14.6e}", one.ladder_inel[0] * scale, one.crossed_inel[0] * scale);
        }
    }
    Ok(())
}
