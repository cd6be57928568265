//! Ladder and crossed intensities split into elastic and inelastic parts,
//! for one saturation parameter given on the command line (default 1).

use cbs_spectrum::model::{Configuration, PhysParams};
use cbs_spectrum::oracle::OracleTerms;
use cbs_spectrum::steady::DoubleScattering;

fn main() -> cbs_spectrum::Result<()> {
    let s: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let t = DoubleScattering::new(PhysParams::from_saturation(s)?, Configuration::backscattering())?
        .intensity_terms()?
        .normalized()?;
    let o = OracleTerms::at(s)?;
    println!("s = {s}");
    println!("{:<10} {:>16} {:>16} {:>16}", "", "total", "elastic", "inelastic");
    println!("{:<10} {:>16.10e} {:>16.10e} {:>16.10e}", "ladder", t.ladder_total, t.ladder_elastic, t.ladder_inelastic);
    println!("{:<10} {:>16.10e} {:>16.10e} {:>16.10e}", "crossed", t.crossed_total, t.crossed_elastic, t.crossed_inelastic);
    println!("{:<10} {:>16.10e} {:>16.10e} {:>16.10e}", "exact L", o.ladder_total, o.ladder_el, o.ladder_inel);
    println!("{:<10} {:>16.10e} {:>16.10e} {:>16.10e}", "exact C", o.crossed_total, o.crossed_el, o.crossed_inel);
    println!("alpha = {:.12} (exact {:.12})", t.enhancement(), o.alpha);
    Ok(())
}
