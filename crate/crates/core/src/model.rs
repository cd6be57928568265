//! Physical parameters, two-atom geometry and polarization algebra.
//!
//! All frequencies are measured in units of the amplitude decay rate `gamma`
//! (population decays at `2 gamma`). Vectors are Cartesian; the helicity basis
//! only enters through [`helicity_to_cartesian`].

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Drive and decay parameters of a single atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    /// Amplitude decay rate; the radiative linewidth is `2 gamma`.
    pub gamma: f64,
    /// Rabi frequency of the laser on the `|1> <-> |4>` transition.
    pub omega: f64,
    /// Laser detuning `omega_L - omega_0`.
    pub delta: f64,
}

impl PhysParams {
    pub fn new(gamma: f64, omega: f64, delta: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return domain(format!("gamma must be positive, got {gamma}"));
        }
        if !(omega.is_finite() && omega >= 0.0) {
            return domain(format!("Rabi frequency must be non-negative, got {omega}"));
        }
        if !delta.is_finite() {
            return domain("detuning must be finite");
        }
        Ok(Self {
            gamma,
            omega,
            delta,
        })
    }

    /// Resonant drive with `gamma = 1`.
    pub fn resonant(omega: f64) -> Result<Self> {
        Self::new(1.0, omega, 0.0)
    }

    /// Resonant drive with `gamma = 1` and the Rabi frequency chosen so that the
    /// saturation parameter equals `s`.
    pub fn from_saturation(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return domain(format!("saturation must be non-negative, got {s}"));
        }
        Self::new(1.0, (2.0 * s).sqrt(), 0.0)
    }

    /// `s = Omega^2 / (2 (gamma^2 + delta^2))`.
    pub fn saturation(&self) -> f64 {
        self.omega * self.omega / (2.0 * (self.gamma * self.gamma + self.delta * self.delta))
    }
}

/// Geometry of the two-atom configuration and of the detection direction.
///
/// The laser propagates along `+z` with polarization `e_{+1}`; detection is in
/// the x-z plane at angle `theta` from the exact backward direction. Atom 1
/// sits at the origin and `n_hat` points from atom 2 to atom 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub n_hat: [f64; 3],
    /// Interatomic distance in units of `1/k0`.
    pub k0_r: f64,
    /// Mean free path in units of `1/k0`.
    pub ell_k0: f64,
    /// Detection angle from the backscattering direction (radians).
    pub theta: f64,
    /// Drive phase of atom 2 relative to atom 1, `k_L . r_2`.
    pub phi_l: f64,
}

/// Smallest `k0 r` accepted; below 50 a warning is logged.
pub const MIN_K0R: f64 = 10.0;

impl Configuration {
    pub fn new(n_hat: [f64; 3], k0_r: f64, ell_k0: f64, theta: f64, phi_l: f64) -> Result<Self> {
        check_unit(&Vector3::from(n_hat), 1e-12)?;
        if !(k0_r.is_finite() && k0_r >= MIN_K0R) {
            return domain(format!("k0 r = {k0_r} violates the far-field bound k0 r >= {MIN_K0R}"));
        }
        if k0_r < 50.0 {
            log::warn!("k0 r = {k0_r} is small; far-field coupling is only approximate");
        }
        if !(ell_k0.is_finite() && ell_k0 > 0.0) {
            return domain(format!("k0 l must be positive, got {ell_k0}"));
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return domain(format!("detection angle must be non-negative, got {theta}"));
        }
        if !phi_l.is_finite() {
            return domain("drive phase must be finite");
        }
        Ok(Self {
            n_hat,
            k0_r,
            ell_k0,
            theta,
            phi_l,
        })
    }

    /// Exact backscattering with `n_hat = x` (|Delta_{+1,+1}|^2 = 1/4) at
    /// `k0 r = k0 l = 100`.
    pub fn backscattering() -> Self {
        Self {
            n_hat: [1.0, 0.0, 0.0],
            k0_r: 100.0,
            ell_k0: 100.0,
            theta: 0.0,
            phi_l: 0.0,
        }
    }

    pub fn with_n_hat(mut self, n_hat: [f64; 3]) -> Result<Self> {
        check_unit(&Vector3::from(n_hat), 1e-12)?;
        self.n_hat = n_hat;
        Ok(self)
    }

    pub fn with_phi_l(mut self, phi_l: f64) -> Self {
        self.phi_l = phi_l;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return domain(format!("detection angle must be non-negative, got {theta}"));
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn n_hat(&self) -> Vector3<f64> {
        Vector3::from(self.n_hat)
    }

    /// `|Delta_{+1,+1}(n_hat)|^2`.
    pub fn geometric_factor(&self) -> f64 {
        let n = self.n_hat();
        let rho2 = n.x * n.x + n.y * n.y;
        rho2 * rho2 / 4.0
    }

    /// `(k + k_L) . r_12` in units where `|k| = |k_L| = k0`.
    pub fn detection_phase(&self) -> f64 {
        let q = Vector3::new(self.theta.sin(), 0.0, 1.0 - self.theta.cos());
        self.k0_r * self.n_hat().dot(&q)
    }
}

/// Complex far-field dipole-dipole coupling constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexCoupling {
    pub g: Complex64,
}

/// `g = 3i/(2 k0 r) exp(i k0 r)`.
pub fn coupling_g(k0_r: f64) -> Result<ComplexCoupling> {
    if !(k0_r.is_finite() && k0_r > 0.0) {
        return domain(format!("k0 r must be positive, got {k0_r}"));
    }
    let g = Complex64::new(0.0, 1.5 / k0_r) * Complex64::from_polar(1.0, k0_r);
    Ok(ComplexCoupling { g })
}

/// Spherical basis vector `e_q` (Condon-Shortley phases):
/// `e_{+1} = -(x + i y)/sqrt 2`, `e_0 = z`, `e_{-1} = (x - i y)/sqrt 2`.
pub fn helicity_to_cartesian(q: i32) -> Result<Vector3<Complex64>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match q {
        1 => Ok(Vector3::new(c(-h, 0.0), c(0.0, -h), c(0.0, 0.0))),
        0 => Ok(Vector3::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))),
        -1 => Ok(Vector3::new(c(h, 0.0), c(0.0, -h), c(0.0, 0.0))),
        _ => domain(format!("helicity index must be -1, 0 or +1, got {q}")),
    }
}

/// Transverse projector `1 - n n` for a unit vector `n`.
pub fn transverse_projector(n_hat: &Vector3<f64>) -> Result<Matrix3<Complex64>> {
    check_unit(n_hat, 1e-9)?;
    let real = Matrix3::identity() - n_hat * n_hat.transpose();
    Ok(real.map(|x| Complex64::new(x, 0.0)))
}

/// `Delta_{+1,+1} = e_{+1} . (1 - n n) . e_{+1}` (no complex conjugation).
pub fn delta_pp(n_hat: &Vector3<f64>) -> Result<Complex64> {
    let proj = transverse_projector(n_hat)?;
    let e = helicity_to_cartesian(1)?;
    Ok(e.dot(&(proj * e)))
}

fn check_unit(n: &Vector3<f64>, tol: f64) -> Result<()> {
    let norm = n.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > tol {
        return domain(format!("direction must be a unit vector, |n| = {norm}"));
    }
    Ok(())
}
