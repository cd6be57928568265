//! The order-|g|^2 intensities from the formal expansion against a direct
//! solve of the full two-atom generator at small |g|, averaged over the
//! phase of g.

use cbs_spectrum::model::{Configuration, PhysParams};
use cbs_spectrum::steady::{nonperturbative_intensities, DoubleScattering};

fn main() -> cbs_spectrum::Result<()> {
    println!("{:>6} {:>8} {:>16} {:>16} {:>10}", "s", "|g|", "ladder", "crossed", "max rel");
    for s in [0.1, 1.0, 10.0] {
        let ds = DoubleScattering::new(PhysParams::from_saturation(s)?, Configuration::backscattering())?;
        let t = ds.intensity_terms()?;
        println!("{s:6} {:>8} {:16.10e} {:16.10e}", "series", t.ladder_total, t.crossed_total);
        for g in [1e-2, 1e-3] {
            let (l, c) = nonperturbative_intensities(&ds, g, 8)?;
            let dev = (l / t.ladder_total - 1.0).abs().max((c / t.crossed_total - 1.0).abs());
            println!("{s:6} {g:8.0e} {l:16.10e} {c:16.10e} {dev:10.2e}");
        }
    }
    Ok(())
}
