//! Inelastic backscattering spectrum at order `|g|^2` from the quantum
//! regression theorem.
//!
//! For a source atom `a` and a detected atom `b`, the connected correlator
//! `<sigma_21^a(0) sigma_12^b(tau)> - <sigma_21^a><sigma_12^b>` is propagated
//! with the full generator `L0 + g V+ + g* V-`. Expanding both the stationary
//! state and the propagator to order `(1,1)` and Laplace transforming gives
//! nested resolvent solves
//!
//! ```text
//! a = R x00,  u = R (x01 + V- a),  w = R (x10 + V+ a),
//! y = R (x11 + V+ u + V- w),       R = (z - L0)^{-1},
//! ```
//!
//! with `x_mn` the connected sources, and `G~_ab(z) = Tr(sigma_12^b y)`.
//! Densities are `(1/pi) Re G~(-i nu)`; the elastic part is kept as delta
//! weights at `nu = 0`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::liouvillian::{dipole_component_operator, DipoleKind, Operator, TwoAtomState};
use crate::model::{Configuration, PhysParams};
use crate::quadrature::{integrate, real_line, Tolerance};
use crate::resolvent::KroneckerResolvent;
use crate::steady::{DoubleScattering, IntensityTerms, Order, PerturbativeState};

/// Orders entering the `(1,1)` correlator.
const SOURCE_ORDERS: [Order; 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// Regression initial conditions for one source atom.
#[derive(Debug, Clone)]
pub struct QrtSources {
    pub atom: usize,
    /// `rho^(m,n) sigma_21^atom`
    pub raw: BTreeMap<Order, TwoAtomState>,
    /// `raw` minus the factorized mean-dipole part, order by order.
    pub connected: BTreeMap<Order, TwoAtomState>,
}

/// Builds the order-resolved sources for atom `atom` (1 or 2).
pub fn qrt_sources(pert: &PerturbativeState, atom: usize) -> Result<QrtSources> {
    if atom != 1 && atom != 2 {
        return domain(format!("atom index must be 1 or 2, got {atom}"));
    }
    let raising = dipole_component_operator(atom, 2, DipoleKind::Raising)?;
    let mean = pert.expectation(&raising);
    let mut raw = BTreeMap::new();
    let mut connected = BTreeMap::new();
    for &(m, n) in &SOURCE_ORDERS {
        let rho = pert
            .order(m, n)
            .ok_or_else(|| Error::Domain(format!("order ({m},{n}) missing")))?;
        let x = rho.right_mul(&raising);
        let mut c = x.clone();
        for i in 0..=m {
            for j in 0..=n {
                let d = mean.get(&(i, j)).copied().unwrap_or_default();
                if d != Complex64::from(0.0) {
                    let r = pert.order(m - i, n - j).expect("lower orders present");
                    c = c.minus(&r.scaled(d));
                }
            }
        }
        raw.insert((m, n), x);
        connected.insert((m, n), c);
    }
    Ok(QrtSources { atom, raw, connected })
}

/// Integrated spectrum in units of `|g|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumTotals {
    pub ladder_inel: f64,
    pub crossed_inel: f64,
    pub ladder_el: f64,
    pub crossed_el: f64,
    pub ladder_total: f64,
    pub crossed_total: f64,
    pub quadrature_error: f64,
    pub evaluations: usize,
}

/// Evaluates the order-`|g|^2` correlator transforms for one parameter set.
#[derive(Debug, Clone)]
pub struct SpectrumEngine {
    scattering: DoubleScattering,
    resolvent: KroneckerResolvent,
    sources: [QrtSources; 2],
    lowering: [Operator; 2],
    elastic: (f64, f64),
}

impl SpectrumEngine {
    pub fn new(params: PhysParams, cfg: Configuration) -> Result<Self> {
        Self::from_scattering(DoubleScattering::new(params, cfg)?)
    }

    pub fn from_scattering(scattering: DoubleScattering) -> Result<Self> {
        let resolvent = KroneckerResolvent::new(&scattering.params, scattering.cfg.phi_l)?;
        let sources = [qrt_sources(&scattering.state, 1)?, qrt_sources(&scattering.state, 2)?];
        let lowering = [
            dipole_component_operator(1, 2, DipoleKind::Lowering)?,
            dipole_component_operator(2, 2, DipoleKind::Lowering)?,
        ];
        let terms = scattering.intensity_terms()?;
        Ok(Self {
            elastic: (terms.ladder_elastic, terms.crossed_elastic),
            scattering,
            resolvent,
            sources,
            lowering,
        })
    }

    pub fn params(&self) -> &PhysParams {
        &self.scattering.params
    }

    pub fn configuration(&self) -> &Configuration {
        &self.scattering.cfg
    }

    pub fn intensity_terms(&self) -> Result<IntensityTerms> {
        self.scattering.intensity_terms()
    }

    /// `(ladder, crossed)` elastic delta weights in units of `|g|^2`.
    pub fn elastic_weights(&self) -> (f64, f64) {
        self.elastic
    }

    /// `G~[a][b](z)` for source atom `a+1` and detected atom `b+1`.
    pub fn correlator_transform(&self, z: Complex64) -> Result<[[Complex64; 2]; 2]> {
        let vp = &self.scattering.v_plus;
        let vm = &self.scattering.v_minus;
        let mut out = [[Complex64::from(0.0); 2]; 2];
        for (a, src) in self.sources.iter().enumerate() {
            let x = |o: Order| &src.connected[&o];
            let r = |v: &TwoAtomState| self.resolvent.apply_deflated(z, v);
            let a0 = r(x((0, 0)))?;
            let u = r(&x((0, 1)).plus(&vm.apply(&a0)))?;
            let w = r(&x((1, 0)).plus(&vp.apply(&a0)))?;
            let y = r(&x((1, 1)).plus(&vp.apply(&u)).plus(&vm.apply(&w)))?;
            for (b, low) in self.lowering.iter().enumerate() {
                out[a][b] = y.expectation(low);
            }
        }
        Ok(out)
    }

    /// Raw `(ladder, crossed)` inelastic densities at `nu`, units of `|g|^2`
    /// per unit frequency.
    pub fn densities(&self, nu: f64) -> Result<(f64, f64)> {
        let g = self.correlator_transform(Complex64::new(0.0, -nu))?;
        let detect = Complex64::from_polar(1.0, self.scattering.cfg.phi_l);
        let ladder = (g[0][0] + g[1][1]).re / std::f64::consts::PI;
        let crossed = (g[0][1] * detect + g[1][0] * detect.conj()).re / std::f64::consts::PI;
        Ok((ladder, crossed))
    }

    /// Frequencies of the possible resonances: `0, +-Omega/2, +-Omega, +-2 Omega`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let o = self.scattering.params.omega;
        [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0].iter().map(|k| k * o).collect()
    }

    /// Adaptive quadrature of the densities over the whole line plus the
    /// elastic weights.
    pub fn integrate(&self, rel_tol: f64) -> Result<SpectrumTotals> {
        let gamma = self.scattering.params.gamma;
        let tol = Tolerance {
            abs: 0.0,
            rel: rel_tol,
            ..Tolerance::default()
        };
        let r = integrate(
            |nu| {
                let (l, c) = self.densities(nu)?;
                Ok([l, c])
            },
            &real_line(&self.breakpoints(), 10.0 * gamma),
            tol,
        )?;
        let (le, ce) = self.elastic;
        Ok(SpectrumTotals {
            ladder_inel: r.value[0],
            crossed_inel: r.value[1],
            ladder_el: le,
            crossed_el: ce,
            ladder_total: r.value[0] + le,
            crossed_total: r.value[1] + ce,
            quadrature_error: r.error,
            evaluations: r.evaluations,
        })
    }
}

/// How the stored intensities are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Units of `2|g~|^2/15`, the configuration-averaged prefactor.
    Averaged,
    /// Divided by the total inelastic ladder intensity, so the ladder
    /// density integrates to one.
    UnitLadder,
}

/// Spectrum sampled on a frequency grid (`nu = omega - omega_L`, units of gamma).
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub params: PhysParams,
    pub cfg: Configuration,
    pub nu_grid: Vec<f64>,
    pub ladder_inel: Vec<f64>,
    pub crossed_inel: Vec<f64>,
    pub ladder_el_weight: f64,
    pub crossed_el_weight: f64,
    pub normalization: Normalization,
    /// `max |S(nu) - S(-nu)| / max |S|` before symmetrization, `(ladder, crossed)`.
    pub asymmetry: (f64, f64),
    /// Whether `(S(nu) + S(-nu))/2` was stored.
    pub symmetrized: bool,
}

impl SpectrumResult {
    /// The same spectrum divided by the total inelastic ladder intensity.
    pub fn to_unit_ladder(&self) -> Result<Self> {
        if self.normalization == Normalization::UnitLadder {
            return Ok(self.clone());
        }
        let (ladder_inel, _) = inelastic_totals(&self.params, &self.cfg)?;
        if ladder_inel <= 0.0 {
            return domain("no inelastic ladder intensity to normalize by");
        }
        let k = 1.0 / ladder_inel;
        Ok(Self {
            ladder_inel: self.ladder_inel.iter().map(|v| v * k).collect(),
            crossed_inel: self.crossed_inel.iter().map(|v| v * k).collect(),
            ladder_el_weight: self.ladder_el_weight * k,
            crossed_el_weight: self.crossed_el_weight * k,
            normalization: Normalization::UnitLadder,
            ..self.clone()
        })
    }

    pub fn len(&self) -> usize {
        self.nu_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu_grid.is_empty()
    }
}

/// Algebraic `(ladder, crossed)` inelastic totals in averaged units.
fn inelastic_totals(params: &PhysParams, cfg: &Configuration) -> Result<(f64, f64)> {
    let t = DoubleScattering::new(*params, *cfg)?.intensity_terms()?.normalized()?;
    Ok((t.ladder_inelastic, t.crossed_inelastic))
}

fn check_grid(nu_grid: &[f64]) -> Result<()> {
    if nu_grid.is_empty() {
        return domain("empty frequency grid");
    }
    if nu_grid.iter().any(|v| !v.is_finite()) {
        return domain("frequency grid contains non-finite values");
    }
    if nu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("frequency grid must be strictly increasing");
    }
    Ok(())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Samples the spectrum on `nu_grid`, in units of `2|g~|^2/15`.
///
/// At zero detuning the stored densities are `(S(nu) + S(-nu))/2` and the
/// raw asymmetry is reported.
pub fn cbs_spectrum(params: PhysParams, cfg: Configuration, nu_grid: &[f64]) -> Result<SpectrumResult> {
    check_grid(nu_grid)?;
    let engine = SpectrumEngine::new(params, cfg)?;
    let geom = cfg.geometric_factor();
    if geom < 1e-14 {
        return domain("geometric factor vanishes for this orientation");
    }
    let symmetrize = params.delta == 0.0;
    if !symmetrize {
        log::warn!("spectrum at nonzero detuning: only the integral closure is checked");
    }
    let eval = |nus: &[f64]| -> Result<Vec<(f64, f64)>> { nus.par_iter().map(|&nu| engine.densities(nu)).collect() };
    let plus = eval(nu_grid)?;
    let minus_grid: Vec<f64> = nu_grid.iter().map(|v| -v).collect();
    let minus = eval(&minus_grid)?;

    let (lp, cp): (Vec<f64>, Vec<f64>) = plus.into_iter().unzip();
    let (lm, cm): (Vec<f64>, Vec<f64>) = minus.into_iter().unzip();
    let asym = |p: &[f64], m: &[f64]| {
        let d = p.iter().zip(m).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let s = max_abs(p).max(max_abs(m));
        if s == 0.0 {
            0.0
        } else {
            d / s
        }
    };
    let asymmetry = (asym(&lp, &lm), asym(&cp, &cm));
    let combine = |p: Vec<f64>, m: Vec<f64>| -> Vec<f64> {
        p.iter()
            .zip(&m)
            .map(|(x, y)| if symmetrize { 0.5 * (x + y) / geom } else { x / geom })
            .collect()
    };
    let (le, ce) = engine.elastic_weights();
    Ok(SpectrumResult {
        params,
        cfg,
        nu_grid: nu_grid.to_vec(),
        ladder_inel: combine(lp, lm),
        crossed_inel: combine(cp, cm),
        ladder_el_weight: le / geom,
        crossed_el_weight: ce / geom,
        normalization: Normalization::Averaged,
        asymmetry,
        symmetrized: symmetrize,
    })
}

/// Density at the grid edges relative to the peak, `(ladder, crossed)`.
pub fn boundary_ratio(spec: &SpectrumResult) -> (f64, f64) {
    let ratio = |v: &[f64]| {
        let peak = max_abs(v);
        let edge = v[0].abs().max(v[v.len() - 1].abs());
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    };
    (ratio(&spec.ladder_inel), ratio(&spec.crossed_inel))
}

/// Largest tolerated density at the grid edges relative to the peak.
pub const COVERAGE_THRESHOLD: f64 = 1e-6;

/// Total `(ladder, crossed)` intensities: adaptive quadrature of the
/// inelastic densities plus the elastic weights, in the units of `spec`.
///
/// The sampled grid must cover the spectrum: it has to reach beyond
/// `+-(2 Omega + 20 gamma)` and the density at its edges may not exceed
/// [`COVERAGE_THRESHOLD`] times its peak.
pub fn integrate_spectrum(spec: &SpectrumResult) -> Result<(f64, f64)> {
    check_grid(&spec.nu_grid)?;
    let p = &spec.params;
    let reach = 2.0 * p.omega + 20.0 * p.gamma;
    let (lo, hi) = (spec.nu_grid[0], spec.nu_grid[spec.len() - 1]);
    let peak = max_abs(&spec.ladder_inel).max(max_abs(&spec.crossed_inel));
    if lo > -reach || hi < reach {
        let edge = |v: &[f64]| v[0].abs().max(v[v.len() - 1].abs());
        return Err(Error::GridCoverage {
            boundary: edge(&spec.ladder_inel).max(edge(&spec.crossed_inel)),
            peak,
        });
    }
    let (bl, bc) = boundary_ratio(spec);
    if bl > COVERAGE_THRESHOLD || bc > COVERAGE_THRESHOLD {
        let edge = |v: &[f64]| v[0].abs().max(v[v.len() - 1].abs());
        return Err(Error::GridCoverage {
            boundary: edge(&spec.ladder_inel).max(edge(&spec.crossed_inel)),
            peak,
        });
    }
    let engine = SpectrumEngine::new(spec.params, spec.cfg)?;
    let totals = engine.integrate(1e-10)?;
    let mut k = 1.0 / spec.cfg.geometric_factor();
    if spec.normalization == Normalization::UnitLadder {
        k /= inelastic_totals(&spec.params, &spec.cfg)?.0;
    }
    Ok((totals.ladder_total * k, totals.crossed_total * k))
}

/// Symmetric grid of `points` frequencies: uniform over `+-(2 Omega + 20 gamma)`
/// with geometrically spaced wings out to a hundred times that reach, far
/// enough for the edge densities to satisfy the coverage check.
pub fn frequency_grid(params: &PhysParams, points: usize) -> Result<Vec<f64>> {
    if points < 20 {
        return domain("need at least 20 grid points");
    }
    let reach = 2.0 * params.omega + 20.0 * params.gamma;
    let wing = points / 10;
    let core = points - 2 * wing;
    let mut grid = Vec::with_capacity(points);
    let outer = 100.0 * reach;
    let ratio = (outer / reach).powf(1.0 / wing as f64);
    for k in (1..=wing).rev() {
        grid.push(-reach * ratio.powi(k as i32));
    }
    for k in 0..core {
        grid.push(-reach + 2.0 * reach * k as f64 / (core - 1) as f64);
    }
    for k in 1..=wing {
        grid.push(reach * ratio.powi(k as i32));
    }
    Ok(grid)
}
