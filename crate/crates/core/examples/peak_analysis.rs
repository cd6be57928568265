//! Strong driving (Omega = 100 gamma): the seven resonances of the ladder and
//! crossed spectra, their line shapes, and the enhancement seen through a
//! 25 gamma filter centred on each of them.

use cbs_spectrum::analysis::{default_window, Channel, SpectrumAnalyzer};
use cbs_spectrum::model::{Configuration, PhysParams};
use cbs_spectrum::oracle;
use cbs_spectrum::spectrum::cbs_spectrum;

fn main() -> cbs_spectrum::Result<()> {
    let omega: f64 = 100.0;
    let spec = cbs_spectrum(PhysParams::resonant(omega)?, Configuration::backscattering(), &[0.0])?;
    let a = SpectrumAnalyzer::new(&spec)?;
    let w = default_window(omega, 1.0);
    let r2 = (1.0 / omega).powi(2);
    println!("window +-{w} gamma; weights in units of (gamma/Omega)^2");
    println!("{:>8} {:>9} {:>9} {:>9} {:>9} {:>22} {:>9}", "nu", "L", "L exact", "C", "C exact", "C shape", "alpha_f");
    for res in oracle::strong_field_resonances() {
        let c = res.center * omega;
        let l = a.peak_report(Channel::Ladder, c, w)?;
        let x = a.window_integrals(Channel::Crossed, c, w)?;
        let shape = a
            .classify_lineshape(Channel::Crossed, c, w)
            .map(|s| format!("{s:?}"))
            .unwrap_or_else(|e| e.to_string());
        println!(
            "{c:8.1} {:9.4} {:9.4} {:9.4} {:9.4} {shape:>22} {:9.4}",
            l.weight / r2,
            res.ladder,
            x.weight / r2,
            res.crossed,
            a.filtered_enhancement(c, 25.0)?
        );
    }
    Ok(())
}
