//! The validation suite: every numeric result checked against the closed
//! forms, grouped into thirteen numbered criteria.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::analysis::{default_window, Channel, SpectrumAnalyzer};
use crate::average::{mc_average, AverageSpec, DEFAULT_WIDTH_FRAC};
use crate::error::Result;
use crate::model::{Configuration, PhysParams};
use crate::oracle;
use crate::spectrum::{cbs_spectrum, frequency_grid, integrate_spectrum, SpectrumResult};
use crate::steady::{nonperturbative_intensities, DoubleScattering, IntensityTerms};

/// Number of criteria in the suite.
pub const CRITERIA: u8 = 13;

/// Grid size of the closure and coverage spectra.
pub const CLOSURE_POINTS: usize = 2000;

/// How a check compares `actual` with `expected` and `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `|actual - expected| <= tol |expected|`
    Relative,
    /// `|actual - expected| <= tol`
    Absolute,
    /// `actual <= expected`
    AtMost,
    /// `actual < expected`
    Below,
    /// `actual >= expected`
    AtLeast,
}

/// One row of the validation report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub check: String,
    pub expected: f64,
    pub actual: f64,
    pub tol: f64,
    pub metric: Metric,
    pub pass: bool,
}

impl Check {
    pub fn new(criterion: u8, check: impl Into<String>, metric: Metric, expected: f64, actual: f64, tol: f64) -> Self {
        let pass = match metric {
            Metric::Relative => (actual - expected).abs() <= tol * expected.abs(),
            Metric::Absolute => (actual - expected).abs() <= tol,
            Metric::AtMost => actual <= expected,
            Metric::Below => actual < expected,
            Metric::AtLeast => actual >= expected,
        };
        Self {
            criterion,
            check: check.into(),
            expected,
            actual,
            tol,
            metric,
            pass,
        }
    }

    fn failed(criterion: u8, check: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            criterion,
            check: format!("{}: {err}", check.into()),
            expected: f64::NAN,
            actual: f64::NAN,
            tol: 0.0,
            metric: Metric::Absolute,
            pass: false,
        }
    }

    /// Relative deviation `(actual - expected)/expected` for relative checks.
    pub fn deviation(&self) -> f64 {
        (self.actual - self.expected) / self.expected
    }
}

/// Which parameter sets the suite covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Every criterion at every listed drive strength.
    Default,
    /// Drops the `Omega = 100 gamma` spectra and the strong-field criteria.
    Quick,
}

impl std::str::FromStr for Profile {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Self::Default),
            "quick" => Ok(Self::Quick),
            other => crate::error::domain(format!("unknown tolerance profile '{other}'")),
        }
    }
}

/// The suite with the spectra shared between criteria.
pub struct Suite {
    pub profile: Profile,
    spectra: Mutex<BTreeMap<u64, Arc<SpectrumResult>>>,
    strong: Mutex<Option<Arc<SpectrumAnalyzer>>>,
}

fn terms(s: f64) -> Result<IntensityTerms> {
    DoubleScattering::new(PhysParams::from_saturation(s)?, Configuration::backscattering())?
        .intensity_terms()?
        .normalized()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

impl Suite {
    pub fn new(profile: Profile) -> Self {
        Self {
            profile,
            spectra: Mutex::new(BTreeMap::new()),
            strong: Mutex::new(None),
        }
    }

    /// Drive strengths of the spectral criteria.
    pub fn omegas(&self) -> Vec<f64> {
        match self.profile {
            Profile::Default => vec![0.1, 1.0, 10.0, 100.0],
            Profile::Quick => vec![0.1, 1.0, 10.0],
        }
    }

    /// Backscattering spectrum at `omega` on [`CLOSURE_POINTS`] points of
    /// [`frequency_grid`], computed once.
    pub fn spectrum(&self, omega: f64) -> Result<Arc<SpectrumResult>> {
        let key = omega.to_bits();
        if let Some(s) = self.spectra.lock().expect("cache lock").get(&key) {
            return Ok(s.clone());
        }
        let p = PhysParams::resonant(omega)?;
        let s = Arc::new(cbs_spectrum(p, Configuration::backscattering(), &frequency_grid(&p, CLOSURE_POINTS)?)?);
        self.spectra.lock().expect("cache lock").insert(key, s.clone());
        Ok(s)
    }

    fn strong(&self) -> Result<Arc<SpectrumAnalyzer>> {
        let mut slot = self.strong.lock().expect("cache lock");
        if let Some(a) = slot.as_ref() {
            return Ok(a.clone());
        }
        let spec = cbs_spectrum(PhysParams::resonant(100.0)?, Configuration::backscattering(), &[0.0])?;
        let a = Arc::new(SpectrumAnalyzer::new(&spec)?);
        *slot = Some(a.clone());
        Ok(a)
    }

    /// Checks of one criterion (1 to [`CRITERIA`]). Errors inside a
    /// criterion become failing checks.
    pub fn criterion(&self, n: u8) -> Vec<Check> {
        let r = match n {
            1 => self.c1(),
            2 => self.c2(),
            3 => self.c3(),
            4 => self.c4(),
            5 => self.c5(),
            6 => self.c6(),
            7 => self.c7(),
            8 => self.c8(),
            9 => self.c9(),
            10 => self.c10(),
            11 => self.c11(),
            12 => self.c12(),
            13 => self.c13(),
            _ => Ok(vec![]),
        };
        r.unwrap_or_else(|e| vec![Check::failed(n, format!("criterion {n}"), &e)])
    }

    /// All criteria in order.
    pub fn run(&self) -> Vec<Check> {
        (1..=CRITERIA).flat_map(|n| self.criterion(n)).collect()
    }

    fn c1(&self) -> Result<Vec<Check>> {
        let mut out = vec![Check::new(
            1,
            "alpha oracle at s=1",
            Metric::Absolute,
            1.759758,
            oracle::enhancement_factor(1.0)?,
            5e-7,
        )];
        for s in [1e-2, 1e-1, 1.0, 10.0, 100.0] {
            out.push(Check::new(
                1,
                format!("alpha numeric vs closed form at s={s}"),
                Metric::Relative,
                oracle::enhancement_factor(s)?,
                terms(s)?.enhancement(),
                1e-8,
            ));
        }
        Ok(out)
    }

    fn c2(&self) -> Result<Vec<Check>> {
        let s = 1e-3;
        let slope = (2.0 - terms(s)?.enhancement()) / s;
        Ok(vec![Check::new(2, "weak-field slope (2 - alpha)/s at s=1e-3", Metric::Absolute, 0.25, slope, 0.0025)])
    }

    fn c3(&self) -> Result<Vec<Check>> {
        Ok(vec![Check::new(
            3,
            "alpha at s=1e6",
            Metric::Absolute,
            oracle::ENHANCEMENT_LIMIT,
            terms(1e6)?.enhancement(),
            1e-3,
        )])
    }

    fn c4(&self) -> Result<Vec<Check>> {
        let mut out = vec![];
        for s in [0.1, 1.0, 10.0] {
            let t = terms(s)?;
            let exact = s / (1.0 + s).powi(4);
            out.push(Check::new(4, format!("elastic ladder at s={s}"), Metric::Relative, exact, t.ladder_elastic, 1e-8));
            out.push(Check::new(4, format!("elastic crossed at s={s}"), Metric::Relative, exact, t.crossed_elastic, 1e-8));
        }
        Ok(out)
    }

    fn c5(&self) -> Result<Vec<Check>> {
        let mut out = vec![];
        for omega in self.omegas() {
            let spec = self.spectrum(omega)?;
            let (l, c) = integrate_spectrum(&spec)?;
            let t = terms(spec.params.saturation())?;
            out.push(Check::new(5, format!("ladder closure at Omega={omega}"), Metric::Relative, t.ladder_total, l, 1e-6));
            out.push(Check::new(5, format!("crossed closure at Omega={omega}"), Metric::Relative, t.crossed_total, c, 1e-6));
        }
        Ok(out)
    }

    fn c6(&self) -> Result<Vec<Check>> {
        let omega = 0.1;
        let p = PhysParams::resonant(omega)?;
        let grid: Vec<f64> = (0..=40).map(|k| -5.0 + 0.25 * k as f64).collect();
        let spec = cbs_spectrum(p, Configuration::backscattering(), &grid)?;
        let (mut dl, mut dc) = (0.0f64, 0.0f64);
        for (i, &nu) in grid.iter().enumerate() {
            let (ol, oc) = oracle::weak_field_spectra(nu, omega, p.gamma);
            dl = dl.max((spec.ladder_inel[i] / ol - 1.0).abs());
            dc = dc.max((spec.crossed_inel[i] / oc - 1.0).abs());
        }
        let full = self.spectrum(omega)?;
        let (l, c) = integrate_spectrum(&full)?;
        let (il, ic) = oracle::weak_field_integrals(omega, p.gamma);
        Ok(vec![
            Check::new(6, "weak-field ladder density, max rel. deviation on |nu|<=5", Metric::AtMost, 0.02, dl, 0.0),
            Check::new(6, "weak-field crossed density, max rel. deviation on |nu|<=5", Metric::AtMost, 0.02, dc, 0.0),
            Check::new(6, "weak-field integrated ladder", Metric::Relative, il, l - full.ladder_el_weight, 0.02),
            Check::new(6, "weak-field integrated crossed", Metric::Relative, ic, c - full.crossed_el_weight, 0.02),
        ])
    }

    fn c7(&self) -> Result<Vec<Check>> {
        if self.profile == Profile::Quick {
            return Ok(vec![]);
        }
        let omega: f64 = 100.0;
        let a = self.strong()?;
        let r2 = (1.0 / omega).powi(2);
        let window = default_window(omega, 1.0);
        let mut out = vec![];
        for res in oracle::strong_field_resonances() {
            let c = res.center * omega;
            let l = a.window_integrals(Channel::Ladder, c, window)?;
            out.push(Check::new(7, format!("ladder weight at nu={c}"), Metric::Relative, res.ladder * r2, l.weight, 0.03));
            let x = a.window_integrals(Channel::Crossed, c, window)?;
            if res.crossed == 0.0 {
                out.push(Check::new(
                    7,
                    format!("crossed null weight at nu={c}, |weight|/int|density|"),
                    Metric::Below,
                    0.05,
                    x.weight_fraction(),
                    0.0,
                ));
            } else {
                out.push(Check::new(7, format!("crossed weight at nu={c}"), Metric::Relative, res.crossed * r2, x.weight, 0.03));
            }
        }
        let spec = self.spectrum(omega)?;
        let (l, c) = integrate_spectrum(&spec)?;
        let (il, ic) = oracle::strong_field_integrals(omega, 1.0);
        out.push(Check::new(7, "strong-field integrated ladder", Metric::Relative, il, l - spec.ladder_el_weight, 0.01));
        out.push(Check::new(7, "strong-field integrated crossed", Metric::Relative, ic, c - spec.crossed_el_weight, 0.01));
        Ok(out)
    }

    fn c8(&self) -> Result<Vec<Check>> {
        let mut out = vec![];
        for omega in self.omegas() {
            let spec = self.spectrum(omega)?;
            let lmin = spec.ladder_inel.iter().fold(f64::INFINITY, |m, v| m.min(*v));
            out.push(Check::new(
                8,
                format!("min ladder / max ladder at Omega={omega}"),
                Metric::AtLeast,
                -1e-12,
                lmin / max_abs(&spec.ladder_inel),
                0.0,
            ));
            if omega < 10.0 {
                continue;
            }
            let p = spec.params;
            for sign in [1.0, -1.0] {
                let mut grid: Vec<f64> = (0..=200).map(|k| sign * omega * (0.75 + 0.5 * k as f64 / 200.0)).collect();
                grid.sort_by(f64::total_cmp);
                let near = cbs_spectrum(p, spec.cfg, &grid)?;
                let cmin = near.crossed_inel.iter().fold(f64::INFINITY, |m, v| m.min(*v));
                out.push(Check::new(
                    8,
                    format!("min crossed near nu={}, relative to max |crossed|", sign * omega),
                    Metric::Below,
                    0.0,
                    cmin / max_abs(&spec.crossed_inel),
                    0.0,
                ));
            }
        }
        Ok(out)
    }

    fn c9(&self) -> Result<Vec<Check>> {
        if self.profile == Profile::Quick {
            return Ok(vec![]);
        }
        let omega: f64 = 100.0;
        let a = self.strong()?;
        let targets = [(0.0, 2.0, 0.06), (2.0, 2.0, 0.1), (-2.0, 2.0, 0.1), (1.0, 4.0 / 7.0, 0.03), (-1.0, 4.0 / 7.0, 0.03), (0.5, 1.0, 0.05), (-0.5, 1.0, 0.05)];
        targets
            .iter()
            .map(|&(k, expected, tol)| {
                Ok(Check::new(
                    9,
                    format!("filtered enhancement at nu={}", k * omega),
                    Metric::Absolute,
                    expected,
                    a.filtered_enhancement(k * omega, 25.0)?,
                    tol,
                ))
            })
            .collect()
    }

    fn c10(&self) -> Result<Vec<Check>> {
        let mut out = vec![];
        for omega in self.omegas() {
            let spec = self.spectrum(omega)?;
            out.push(Check::new(10, format!("ladder mirror asymmetry at Omega={omega}"), Metric::AtMost, 1e-9, spec.asymmetry.0, 0.0));
            out.push(Check::new(10, format!("crossed mirror asymmetry at Omega={omega}"), Metric::AtMost, 1e-9, spec.asymmetry.1, 0.0));
        }
        Ok(out)
    }

    fn c11(&self) -> Result<Vec<Check>> {
        let p = PhysParams::from_saturation(1.0)?;
        let grid = [-7.0, -1.3, 0.0, 0.4, 1.0, 2.5];
        let at = |phi: f64| -> Result<(IntensityTerms, SpectrumResult)> {
            let cfg = Configuration::backscattering().with_phi_l(phi);
            let t = DoubleScattering::new(p, cfg)?.intensity_terms()?.normalized()?;
            Ok((t, cbs_spectrum(p, cfg, &grid)?))
        };
        let (t0, s0) = at(0.0)?;
        let mut out = vec![];
        for phi in [PI / 3.0, 1.7, PI] {
            let (t, s) = at(phi)?;
            out.push(Check::new(11, format!("ladder total at phi={phi:.6}"), Metric::Relative, t0.ladder_total, t.ladder_total, 1e-9));
            out.push(Check::new(11, format!("crossed total at phi={phi:.6}"), Metric::Relative, t0.crossed_total, t.crossed_total, 1e-9));
            let dev = |a: &[f64], b: &[f64]| {
                a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / max_abs(a)
            };
            out.push(Check::new(
                11,
                format!("ladder spectrum at phi={phi:.6}, max deviation / max"),
                Metric::AtMost,
                1e-9,
                dev(&s0.ladder_inel, &s.ladder_inel),
                0.0,
            ));
            out.push(Check::new(
                11,
                format!("crossed spectrum at phi={phi:.6}, max deviation / max"),
                Metric::AtMost,
                1e-9,
                dev(&s0.crossed_inel, &s.crossed_inel),
                0.0,
            ));
        }
        Ok(out)
    }

    fn c12(&self) -> Result<Vec<Check>> {
        let mut out = vec![];
        for s in [0.1, 1.0, 10.0] {
            let ds = DoubleScattering::new(PhysParams::from_saturation(s)?, Configuration::backscattering())?;
            let t = ds.intensity_terms()?;
            let (l, c) = nonperturbative_intensities(&ds, 1e-3, 8)?;
            out.push(Check::new(12, format!("ladder vs nonperturbative at s={s}"), Metric::Relative, t.ladder_total, l, 1e-2));
            out.push(Check::new(12, format!("crossed vs nonperturbative at s={s}"), Metric::Relative, t.crossed_total, c, 1e-2));
        }
        Ok(out)
    }

    fn c13(&self) -> Result<Vec<Check>> {
        let spec = AverageSpec::new(100_000, 2024, 100.0, DEFAULT_WIDTH_FRAC)?;
        let a = mc_average(&spec, 0.0)?;
        let b = mc_average(&spec, 0.0)?;
        Ok(vec![
            Check::new(13, "Monte Carlo angular factor at theta=0", Metric::Absolute, 2.0 / 15.0, a.mean, 3.0 * a.std_error),
            Check::new(13, "Monte Carlo rerun with the same seed, |difference|", Metric::AtMost, 0.0, (a.mean - b.mean).abs(), 0.0),
        ])
    }
}

/// Runs the suite for `profile`.
pub fn run_validation(profile: Profile) -> Vec<Check> {
    Suite::new(profile).run()
}
