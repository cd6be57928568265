//! Enhancement factor versus saturation: master-equation result next to the
//! closed form.

use cbs_spectrum::model::{Configuration, PhysParams};
use cbs_spectrum::oracle;
use cbs_spectrum::steady::DoubleScattering;

fn main() -> cbs_spectrum::Result<()> {
    println!("{:>12} {:>18} {:>18} {:>10}", "s", "alpha (numeric)", "alpha (exact)", "rel diff");
    for k in 0..=24 {
        let s = 10f64.powf(-3.0 + 0.25 * k as f64);
        let numeric = DoubleScattering::new(PhysParams::from_saturation(s)?, Configuration::backscattering())?
            .intensity_terms()?
            .enhancement();
        let exact = oracle::enhancement_factor(s)?;
        println!("{s:12.4e} {numeric:18.12} {exact:18.12} {:10.2e}", (numeric / exact - 1.0).abs());
    }
    println!("limit 23/21 = {:.12}", oracle::ENHANCEMENT_LIMIT);
    Ok(())
}
