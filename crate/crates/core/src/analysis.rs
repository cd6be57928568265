//! Peak weights, line-shape classes and the spectrally filtered enhancement
//! factor of a computed spectrum.
//!
//! Windowed integrals re-evaluate the densities through the spectrum engine
//! with adaptive quadrature instead of interpolating the stored grid, and are
//! reported in the units of the [`SpectrumResult`] they were derived from.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, Segment, Tolerance};
use crate::spectrum::{Normalization, SpectrumEngine, SpectrumResult};
use crate::steady::DoubleScattering;

/// Minimum share of the squared density carried by the even (or odd) part
/// about the center for a definite classification.
pub const DOMINANCE: f64 = 0.9;

/// Peaks whose `|weight|` is below this fraction of the windowed `|density|`
/// integral carry no net weight.
pub const NULL_FRACTION: f64 = 0.05;

/// Smallest ladder weight for which a filtered enhancement is defined.
pub const MIN_LADDER_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Ladder,
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    LorentzianPositive,
    LorentzianNegative,
    Dispersive,
}

/// Integrals of one channel over `[center - window, center + window]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowIntegrals {
    pub weight: f64,
    pub abs_integral: f64,
    /// `int even^2 / int f^2` with `even(x) = (f(c + x) + f(c - x))/2`.
    pub even_fraction: f64,
    pub odd_fraction: f64,
}

impl WindowIntegrals {
    /// `|weight| / int |f|`, zero for an empty window.
    pub fn weight_fraction(&self) -> f64 {
        if self.abs_integral == 0.0 {
            0.0
        } else {
            self.weight.abs() / self.abs_integral
        }
    }

    fn classify(&self) -> Result<LineShape> {
        let thr = NULL_FRACTION * self.abs_integral;
        if self.odd_fraction >= DOMINANCE {
            return Ok(LineShape::Dispersive);
        }
        if self.even_fraction >= DOMINANCE {
            if self.weight > thr {
                return Ok(LineShape::LorentzianPositive);
            }
            if self.weight < -thr {
                return Ok(LineShape::LorentzianNegative);
            }
        }
        Err(Error::Classification {
            even_fraction: self.even_fraction,
            odd_fraction: self.odd_fraction,
        })
    }
}

/// One analyzed resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakReport {
    pub channel: Channel,
    pub center: f64,
    pub window: f64,
    pub weight: f64,
    pub shape: LineShape,
    pub even_fraction: f64,
    pub weight_fraction: f64,
}

/// Default half-width `min(Omega/4, 25 gamma)` of a peak window.
pub fn default_window(omega: f64, gamma: f64) -> f64 {
    (0.25 * omega).min(25.0 * gamma)
}

/// Windowed analysis of the spectrum behind a [`SpectrumResult`].
#[derive(Debug, Clone)]
pub struct SpectrumAnalyzer {
    engine: SpectrumEngine,
    scale: f64,
    tol: Tolerance,
}

impl SpectrumAnalyzer {
    pub fn new(spec: &SpectrumResult) -> Result<Self> {
        let scattering = DoubleScattering::new(spec.params, spec.cfg)?;
        let terms = scattering.intensity_terms()?;
        let geom = terms.geometric_factor;
        if geom < 1e-14 {
            return domain("geometric factor vanishes for this orientation");
        }
        let mut scale = 1.0 / geom;
        if spec.normalization == Normalization::UnitLadder {
            scale /= terms.ladder_inelastic;
        }
        Ok(Self {
            engine: SpectrumEngine::from_scattering(scattering)?,
            scale,
            tol: Tolerance {
                abs: 0.0,
                rel: 1e-9,
                max_intervals: 4000,
            },
        })
    }

    fn gamma_omega(&self) -> (f64, f64) {
        let p = self.engine.params();
        (p.gamma, p.omega)
    }

    fn check_window(&self, window: f64) -> Result<()> {
        let (gamma, omega) = self.gamma_omega();
        if !(window >= 10.0 * gamma && window <= 0.25 * omega) {
            return domain(format!(
                "window {window} must lie in [10 gamma, Omega/4] = [{}, {}]",
                10.0 * gamma,
                0.25 * omega
            ));
        }
        Ok(())
    }

    /// Density of `channel` at `nu`, in the units of the source spectrum.
    pub fn density(&self, channel: Channel, nu: f64) -> Result<f64> {
        let (l, c) = self.engine.densities(nu)?;
        Ok(self.scale
            * match channel {
                Channel::Ladder => l,
                Channel::Crossed => c,
            })
    }

    /// Integrals over `[center - window, center + window]` without the
    /// separation check on `window`.
    pub fn window_integrals(&self, channel: Channel, center: f64, window: f64) -> Result<WindowIntegrals> {
        if !(window > 0.0 && window.is_finite() && center.is_finite()) {
            return domain("window must be positive and finite");
        }
        let mut cuts = vec![0.0, window];
        for b in self.engine.breakpoints() {
            let d = (b - center).abs();
            if d > 1e-9 * window && d < window {
                cuts.push(d);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let segs: Vec<Segment> = cuts.windows(2).map(|w| Segment::Finite(w[0], w[1])).collect();
        let r = integrate(
            |x| {
                let p = self.density(channel, center + x)?;
                let m = self.density(channel, center - x)?;
                let even = 0.5 * (p + m);
                let odd = 0.5 * (p - m);
                Ok([p + m, p.abs() + m.abs(), even * even, odd * odd])
            },
            &segs,
            self.tol,
        )?;
        let [weight, abs_integral, e2, o2] = r.value;
        let total = e2 + o2;
        let (even_fraction, odd_fraction) = if total > 0.0 { (e2 / total, o2 / total) } else { (0.0, 0.0) };
        Ok(WindowIntegrals {
            weight,
            abs_integral,
            even_fraction,
            odd_fraction,
        })
    }

    pub fn peak_weight(&self, channel: Channel, center: f64, window: f64) -> Result<f64> {
        self.check_window(window)?;
        Ok(self.window_integrals(channel, center, window)?.weight)
    }

    pub fn classify_lineshape(&self, channel: Channel, center: f64, window: f64) -> Result<LineShape> {
        self.check_window(window)?;
        self.window_integrals(channel, center, window)?.classify()
    }

    pub fn peak_report(&self, channel: Channel, center: f64, window: f64) -> Result<PeakReport> {
        self.check_window(window)?;
        let w = self.window_integrals(channel, center, window)?;
        Ok(PeakReport {
            channel,
            center,
            window,
            weight: w.weight,
            shape: w.classify()?,
            even_fraction: w.even_fraction,
            weight_fraction: w.weight_fraction(),
        })
    }

    /// `1 + C/L` with both weights taken over `[nu_center - passband, nu_center + passband]`.
    pub fn filtered_enhancement(&self, nu_center: f64, passband: f64) -> Result<f64> {
        self.check_window(passband)?;
        let l = self.window_integrals(Channel::Ladder, nu_center, passband)?.weight;
        if l.abs() < MIN_LADDER_WEIGHT {
            return Err(Error::UndefinedEnhancement(l));
        }
        let c = self.window_integrals(Channel::Crossed, nu_center, passband)?.weight;
        Ok(1.0 + c / l)
    }

    /// Resonance frequencies `-2 Omega, -Omega, -Omega/2, 0, Omega/2, Omega, 2 Omega`.
    pub fn resonance_centers(&self) -> [f64; 7] {
        let (_, o) = self.gamma_omega();
        [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0].map(|k| k * o)
    }

    /// Weights of the seven resonances over windows that tile `[lo, hi]`,
    /// split halfway between neighbouring centers.
    pub fn tiled_weights(&self, channel: Channel, lo: f64, hi: f64) -> Result<[f64; 7]> {
        let c = self.resonance_centers();
        if !(lo < c[0] && hi > c[6]) {
            return domain("tiling range must enclose all resonances");
        }
        let mut edges = vec![lo];
        edges.extend(c.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        edges.push(hi);
        let mut out = [0.0; 7];
        for (k, w) in out.iter_mut().enumerate() {
            let (a, b) = (edges[k], edges[k + 1]);
            let mut cuts = vec![a, b];
            cuts.extend(self.engine.breakpoints().into_iter().filter(|x| *x > a && *x < b));
            cuts.sort_by(f64::total_cmp);
            let segs: Vec<Segment> = cuts.windows(2).map(|p| Segment::Finite(p[0], p[1])).collect();
            *w = integrate(|x| Ok([self.density(channel, x)?]), &segs, self.tol)?.value[0];
        }
        Ok(out)
    }
}

/// Weight of the `which` density over `[center - window, center + window]`.
pub fn peak_weight(spec: &SpectrumResult, which: Channel, center: f64, window: f64) -> Result<f64> {
    SpectrumAnalyzer::new(spec)?.peak_weight(which, center, window)
}

pub fn classify_lineshape(spec: &SpectrumResult, which: Channel, center: f64, window: f64) -> Result<LineShape> {
    SpectrumAnalyzer::new(spec)?.classify_lineshape(which, center, window)
}

pub fn filtered_enhancement(spec: &SpectrumResult, nu_center: f64, passband: f64) -> Result<f64> {
    SpectrumAnalyzer::new(spec)?.filtered_enhancement(nu_center, passband)
}
