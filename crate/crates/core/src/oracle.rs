//! Closed-form double-scattering results for resonant driving.
//!
//! Intensities are expressed in units of `2|g~|^2/15`, the configuration
//! average of `|g|^2 |Delta_{+1,+1}|^2`. Spectral densities use the same
//! units per unit frequency.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{domain, Error, Result};

fn check_saturation(s: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return domain(format!("saturation parameter must be finite and >= 0, got {s}"));
    }
    Ok(())
}

// R1(s)/s and R2(s)/s; both polynomials vanish at s = 0.
fn r1_reduced(s: f64) -> f64 {
    2.0 / 9.0 * (6912.0 + s * (3168.0 + s * (264.0 + s * (20.0 + s))))
}

fn r2_reduced(s: f64) -> f64 {
    (1152.0 + s * (528.0 + s * (132.0 + s * 7.0))) / 3.0
}

fn p_poly(s: f64) -> f64 {
    (1.0 + s).powi(2) * (12.0 + s) * (32.0 + s * (20.0 + s))
}

/// The saturation polynomials `(R1, R2, P)`.
pub fn saturation_polynomials(s: f64) -> Result<(f64, f64, f64)> {
    check_saturation(s)?;
    Ok((s * r1_reduced(s), s * r2_reduced(s), p_poly(s)))
}

/// Enhancement factor `1 + C/L` of the averaged intensities; equals 2 at `s = 0`.
pub fn enhancement_factor(s: f64) -> Result<f64> {
    check_saturation(s)?;
    Ok(1.0 + r1_reduced(s) / ((4.0 + s) * r2_reduced(s)))
}

/// Large-saturation limit of the enhancement factor.
pub const ENHANCEMENT_LIMIT: f64 = 23.0 / 21.0;

/// `(crossed, ladder)` total intensities at exact backscattering.
pub fn total_terms(s: f64) -> Result<(f64, f64)> {
    let (r1, r2, p) = saturation_polynomials(s)?;
    Ok((r1 / ((4.0 + s) * p), r2 / p))
}

/// `(crossed, ladder)` elastic intensities; both `s/(1+s)^4`.
pub fn elastic_terms(s: f64) -> Result<(f64, f64)> {
    check_saturation(s)?;
    let v = s / (1.0 + s).powi(4);
    Ok((v, v))
}

/// `(crossed, ladder)` inelastic intensities from their own rational forms.
pub fn inelastic_terms(s: f64) -> Result<(f64, f64)> {
    check_saturation(s)?;
    let s2 = s * s;
    let crossed_num = s2 * (20736.0 + s * (23424.0 + s * (7108.0 + s * (601.0 + s * (44.0 + s * 2.0)))));
    let ladder_num = s2 * (2016.0 + s * (2244.0 + s * (796.0 + s * (146.0 + s * 7.0))));
    let pre = (1.0 + s).powi(2) * p_poly(s);
    Ok((crossed_num / (9.0 * (4.0 + s) * pre), ladder_num / (3.0 * pre)))
}

/// All closed-form intensities at one saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleTerms {
    pub s: f64,
    pub ladder_total: f64,
    pub crossed_total: f64,
    pub ladder_el: f64,
    pub crossed_el: f64,
    pub ladder_inel: f64,
    pub crossed_inel: f64,
    pub alpha: f64,
}

impl OracleTerms {
    pub fn at(s: f64) -> Result<Self> {
        let (crossed_total, ladder_total) = total_terms(s)?;
        let (crossed_el, ladder_el) = elastic_terms(s)?;
        let (crossed_inel, ladder_inel) = inelastic_terms(s)?;
        Ok(Self {
            s,
            ladder_total,
            crossed_total,
            ladder_el,
            crossed_el,
            ladder_inel,
            crossed_inel,
            alpha: enhancement_factor(s)?,
        })
    }
}

/// `x1 / (pi (x1^2 + x2^2))`: a unit-area Lorentzian in `x2` for fixed
/// `x1 > 0`, a dispersive profile in `x1` for fixed `x2`.
pub fn lineshape(x1: f64, x2: f64) -> Result<f64> {
    if x1 == 0.0 && x2 == 0.0 {
        return domain("line shape is singular at the origin");
    }
    Ok(x1 / (PI * (x1 * x1 + x2 * x2)))
}

fn ls(x1: f64, x2: f64) -> f64 {
    x1 / (PI * (x1 * x1 + x2 * x2))
}

/// Leading-order `(ladder, crossed)` inelastic densities for `Omega << gamma`.
pub fn weak_field_spectra(nu: f64, omega: f64, gamma: f64) -> (f64, f64) {
    let pre = (omega / gamma).powi(4) / PI;
    let d = gamma * gamma + nu * nu;
    let ladder = pre * gamma.powi(3) * (2.0 * gamma * gamma + nu * nu) / (2.0 * d.powi(3));
    let crossed = pre * gamma.powi(5) / d.powi(3);
    (ladder, crossed)
}

/// Leading-order `(ladder, crossed)` inelastic densities for `Omega >> gamma`.
///
/// The dispersive crossed terms carry the frequency in the first slot of the
/// line shape and are of relative order `gamma/Omega`.
pub fn strong_field_spectra(nu: f64, omega: f64, gamma: f64) -> (f64, f64) {
    let g = gamma;
    let pair = |w: f64, c: f64| ls(w, nu - c) + ls(w, nu + c);
    let r2 = (g / omega).powi(2);
    let ladder = r2
        * (0.5 * ls(g, nu)
            + 0.25 * ls(3.0 * g, nu)
            + pair(3.0 * g, 2.0 * omega) / 72.0
            + pair(1.5 * g, omega) / 9.0
            + 5.0 / 18.0 * pair(2.5 * g, omega)
            + 14.0 / 9.0 * pair(1.5 * g, omega / 2.0));
    let crossed = r2
        * (0.5 * ls(2.0 * g, nu) + 0.25 * ls(3.0 * g, nu) - pair(2.5 * g, omega) / 6.0
            + pair(3.0 * g, 2.0 * omega) / 72.0)
        + (g / omega).powi(3)
            * (208.0 / 45.0)
            * (ls(nu + omega / 2.0, 1.5 * g) - ls(nu - omega / 2.0, 1.5 * g));
    (ladder, crossed)
}

/// Leading-order integrated inelastic `(ladder, crossed)` intensities.
pub fn weak_field_integrals(omega: f64, gamma: f64) -> (f64, f64) {
    let r4 = (omega / gamma).powi(4);
    (7.0 / 16.0 * r4, 3.0 / 8.0 * r4)
}

/// Leading-order integrated inelastic `(ladder, crossed)` intensities.
pub fn strong_field_integrals(omega: f64, gamma: f64) -> (f64, f64) {
    let r2 = (gamma / omega).powi(2);
    (14.0 / 3.0 * r2, 4.0 / 9.0 * r2)
}

/// Resonance shape of an asymptotic strong-field peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleShape {
    Lorentzian,
    Dispersive,
}

/// Integrated weight of one of the seven strong-field resonances, in units
/// of `(gamma/Omega)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceWeights {
    /// Center in units of `Omega`.
    pub center: f64,
    pub ladder: f64,
    pub crossed: f64,
    pub crossed_shape: OracleShape,
}

/// The seven strong-field resonances, ordered by center.
pub fn strong_field_resonances() -> [ResonanceWeights; 7] {
    let r = |center: f64, ladder: f64, crossed: f64, crossed_shape| ResonanceWeights {
        center,
        ladder,
        crossed,
        crossed_shape,
    };
    use OracleShape::*;
    let side = 1.0 / 9.0 + 5.0 / 18.0;
    [
        r(-2.0, 1.0 / 72.0, 1.0 / 72.0, Lorentzian),
        r(-1.0, side, -1.0 / 6.0, Lorentzian),
        r(-0.5, 14.0 / 9.0, 0.0, Dispersive),
        r(0.0, 0.75, 0.75, Lorentzian),
        r(0.5, 14.0 / 9.0, 0.0, Dispersive),
        r(1.0, side, -1.0 / 6.0, Lorentzian),
        r(2.0, 1.0 / 72.0, 1.0 / 72.0, Lorentzian),
    ]
}

/// Converts a dimensionless intensity into raw units of `|g~|^2`.
pub fn to_raw_units(normalized: f64) -> f64 {
    normalized * 2.0 / 15.0
}

/// Returns an error unless `omega` lies inside the asymptotic range of the
/// requested closed form.
pub fn check_validity(method: &str, omega: f64, gamma: f64) -> Result<()> {
    let x = omega / gamma;
    match method {
        "weak" if x <= 0.3 => Ok(()),
        "strong" if x >= 10.0 => Ok(()),
        "weak" | "strong" => Err(Error::Domain(format!(
            "Omega/gamma = {x} outside the {method}-field range"
        ))),
        other => Err(Error::Domain(format!("unknown closed form '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Integral over the real line via nu = scale * tan(t), midpoint rule in t.
    fn integrate_line(f: impl Fn(f64) -> f64, scale: f64, n: usize) -> f64 {
        let h = PI / n as f64;
        (0..n)
            .map(|k| {
                let t = -PI / 2.0 + (k as f64 + 0.5) * h;
                let c = t.cos();
                f(scale * t.tan()) * scale / (c * c)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn polynomials_at_reference_points() {
        let (r1, r2, p) = saturation_polynomials(0.0).unwrap();
        assert_eq!((r1, r2, p), (0.0, 0.0, 384.0));
        let (r1, r2, p) = saturation_polynomials(1.0).unwrap();
        assert!(rel(r1, 20730.0 / 9.0) < 1e-15);
        assert!(rel(r2, 1819.0 / 3.0) < 1e-15);
        assert_eq!(p, 2756.0);
        let s = 1e8;
        let (r1, r2, p) = saturation_polynomials(s).unwrap();
        assert!(rel(r1, 2.0 / 9.0 * s.powi(5)) < 1e-6);
        assert!(rel(r2, 7.0 / 3.0 * s.powi(4)) < 1e-6);
        assert!(rel(p, s.powi(5)) < 1e-6);
        assert!(saturation_polynomials(-1e-3).is_err());
        assert!(saturation_polynomials(f64::NAN).is_err());
    }

    #[test]
    fn enhancement_reference_values() {
        assert_eq!(enhancement_factor(0.0).unwrap(), 2.0);
        assert!((enhancement_factor(1.0).unwrap() - 1.759758).abs() < 1e-6);
        assert!((enhancement_factor(1e12).unwrap() - ENHANCEMENT_LIMIT).abs() < 1e-9);
        assert!((ENHANCEMENT_LIMIT - 1.095238).abs() < 1e-6);
    }

    #[test]
    fn enhancement_has_a_single_minimum_below_its_limit() {
        // stationary point: positive root of
        // 5s^6 - 396s^5 - 19464s^4 - 264576s^3 - 1381248s^2 - 3041280s - 1990656
        let s_min = 116.640957358967;
        let pts: Vec<(f64, f64)> = (0..1000)
            .map(|k| {
                let s = 10f64.powf(-3.0 + 6.0 * k as f64 / 999.0);
                (s, enhancement_factor(s).unwrap())
            })
            .collect();
        for w in pts.windows(2) {
            let ((s0, a0), (s1, a1)) = (w[0], w[1]);
            if s1 < s_min {
                assert!(a1 < a0, "s = {s1}");
            } else if s0 > s_min {
                assert!(a1 > a0, "s = {s1}");
            }
        }
        let a_min = enhancement_factor(s_min).unwrap();
        assert!(a_min < ENHANCEMENT_LIMIT);
        for ds in [-1e-3, 1e-3] {
            assert!(enhancement_factor(s_min + ds).unwrap() > a_min);
        }
    }

    #[test]
    fn weak_field_slope() {
        let s = 1e-3;
        let slope = (2.0 - enhancement_factor(s).unwrap()) / s;
        assert!((slope / 0.25 - 1.0).abs() < 5e-3, "{slope}");
        // same slope from the weak-field integrals and elastic s
        let omega = (2.0 * s).sqrt();
        let (li, ci) = weak_field_integrals(omega, 1.0);
        let alpha = 1.0 + (s + ci) / (s + li);
        assert!(((2.0 - alpha) / s / 0.25 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn totals_and_elastic() {
        let (_, l) = total_terms(1.0).unwrap();
        assert!((l - 0.220005).abs() < 1e-6);
        let s = 1e-6;
        assert!(rel(total_terms(s).unwrap().1, s) < 1e-4);
        for s in [0.1, 1.0, 10.0] {
            let (c, l) = total_terms(s).unwrap();
            assert!(rel(1.0 + c / l, enhancement_factor(s).unwrap()) < 1e-14);
        }
        assert_eq!(elastic_terms(0.0).unwrap(), (0.0, 0.0));
        assert_eq!(elastic_terms(1.0).unwrap(), (0.0625, 0.0625));
        let (e1, _) = elastic_terms(1e6).unwrap();
        let (e2, _) = elastic_terms(2e6).unwrap();
        assert!((e1 / e2 - 8.0).abs() < 1e-4);
    }

    #[test]
    fn inelastic_equals_total_minus_elastic() {
        for s in [0.01, 1.0, 100.0] {
            let t = OracleTerms::at(s).unwrap();
            assert!(rel(t.ladder_inel, t.ladder_total - t.ladder_el) < 1e-12);
            assert!(rel(t.crossed_inel, t.crossed_total - t.crossed_el) < 1e-12);
            assert!(rel(t.alpha, 1.0 + t.crossed_total / t.ladder_total) < 1e-12);
        }
        let (c, l) = inelastic_terms(1e9).unwrap();
        assert!(rel(c / l, 2.0 / 21.0) < 1e-6);
        let s = 1e-5;
        let (c, l) = inelastic_terms(s).unwrap();
        assert!(rel(l, 1.75 * s * s) < 1e-3);
        assert!(rel(c, 1.5 * s * s) < 1e-3);
        // and in Rabi units: (Omega/gamma)^4 = 4 s^2
        let (lw, cw) = weak_field_integrals((2.0 * s).sqrt(), 1.0);
        assert!(rel(l, lw) < 1e-3 && rel(c, cw) < 1e-3);
    }

    #[test]
    fn lineshape_properties() {
        assert!((lineshape(1.0, 0.0).unwrap() - 1.0 / PI).abs() < 1e-16);
        assert!(lineshape(0.0, 0.0).is_err());
        assert_eq!(lineshape(0.0, 2.0).unwrap(), 0.0);
        let area = integrate_line(|x| ls(1.7, x), 1.7, 200_000);
        assert!((area - 1.0).abs() < 1e-9, "{area}");
    }

    proptest! {
        #[test]
        fn lineshape_is_odd_in_its_first_argument(a in 1e-3f64..1e3, c in 1e-3f64..1e3) {
            prop_assert_eq!(lineshape(-a, c).unwrap(), -lineshape(a, c).unwrap());
        }

        #[test]
        fn weak_field_crossed_never_exceeds_ladder(nu in -50.0f64..50.0, omega in 1e-3f64..0.3) {
            let (l, c) = weak_field_spectra(nu, omega, 1.0);
            prop_assert!(c <= l);
            let want = 2.0 / (2.0 + nu * nu);
            prop_assert!(((c / l) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn weak_field_peak_and_integrals() {
        let omega = 0.1;
        let (l, c) = weak_field_spectra(0.0, omega, 1.0);
        let peak = omega.powi(4) / PI;
        assert!(rel(l, peak) < 1e-14 && rel(c, peak) < 1e-14);
        let li = integrate_line(|x| weak_field_spectra(x, omega, 1.0).0, 1.0, 200_000);
        let ci = integrate_line(|x| weak_field_spectra(x, omega, 1.0).1, 1.0, 200_000);
        let (lw, cw) = weak_field_integrals(omega, 1.0);
        assert!(rel(li, lw) < 1e-8, "{li} {lw}");
        assert!(rel(ci, cw) < 1e-8, "{ci} {cw}");
    }

    #[test]
    fn strong_field_integrals_and_weights() {
        let omega = 100.0;
        let li = integrate_line(|x| strong_field_spectra(x, omega, 1.0).0, 50.0, 2_000_000);
        let ci = integrate_line(|x| strong_field_spectra(x, omega, 1.0).1, 50.0, 2_000_000);
        let (lw, cw) = strong_field_integrals(omega, 1.0);
        assert!(rel(li, lw) < 1e-8, "{li} {lw}");
        assert!(rel(ci, cw) < 1e-8, "{ci} {cw}");

        let peaks = strong_field_resonances();
        let lsum: f64 = peaks.iter().map(|p| p.ladder).sum();
        let csum: f64 = peaks.iter().map(|p| p.crossed).sum();
        assert!((lsum - 14.0 / 3.0).abs() < 1e-14);
        assert!((csum - 4.0 / 9.0).abs() < 1e-14);
        assert_eq!(peaks[3].ladder, peaks[3].crossed);
        assert!(peaks[1].crossed < 0.0 && peaks[5].crossed < 0.0);
        assert!(rel(1.0 + peaks[5].crossed / peaks[5].ladder, 4.0 / 7.0) < 1e-14);
        assert!(rel(li, lsum * (1.0 / omega).powi(2)) < 1e-8);
    }

    #[test]
    fn strong_field_dispersive_terms_are_odd_about_their_centers() {
        let omega = 100.0;
        let (_, c0) = strong_field_spectra(omega / 2.0 + 1.0, omega, 1.0);
        let (_, c1) = strong_field_spectra(omega / 2.0 - 1.0, omega, 1.0);
        // the Lorentzian background is nearly even there; the difference is the dispersive part
        let disp = |x: f64| (1.0 / omega).powi(3) * 208.0 / 45.0 * -ls(x, 1.5);
        assert!(((c0 - c1) - (disp(1.0) - disp(-1.0))).abs() < 1e-2 * (c0 - c1).abs());
    }

    #[test]
    fn validity_ranges() {
        assert!(check_validity("weak", 0.1, 1.0).is_ok());
        assert!(check_validity("weak", 1.0, 1.0).is_err());
        assert!(check_validity("strong", 100.0, 1.0).is_ok());
        assert!(check_validity("strong", 5.0, 1.0).is_err());
        assert!(check_validity("medium", 5.0, 1.0).is_err());
    }
}
