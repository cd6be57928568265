//! Averages over the orientation and length of the interatomic vector.
//!
//! The orientation is isotropic and `k0 r` is uniform on
//! `[k0 l (1 - w), k0 l (1 + w)]`. The `1/r^2` magnitude of the coupling is
//! factored out at `r = l`; only the angular and phase weight
//! `|Delta_{+1,+1}(n)|^2 cos((k + k_L) . r)` is averaged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::model::delta_pp;

/// Default half-width of the distance distribution relative to `l`.
pub const DEFAULT_WIDTH_FRAC: f64 = 0.25;

const BATCH: usize = 4096;

/// Sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageSpec {
    pub samples: usize,
    pub seed: u64,
    pub ell_k0: f64,
    pub width_frac: f64,
}

impl AverageSpec {
    pub fn new(samples: usize, seed: u64, ell_k0: f64, width_frac: f64) -> Result<Self> {
        if samples < 1 {
            return domain("need at least one sample");
        }
        if !(ell_k0.is_finite() && ell_k0 > 0.0) {
            return domain(format!("k0 l must be positive, got {ell_k0}"));
        }
        if !(0.0..1.0).contains(&width_frac) {
            return domain(format!("width fraction must lie in [0, 1), got {width_frac}"));
        }
        Ok(Self {
            samples,
            seed,
            ell_k0,
            width_frac,
        })
    }

    /// `<(k0 r)^2> / (k0 l)^2` for the uniform distance distribution.
    pub fn second_moment_ratio(&self) -> f64 {
        1.0 + self.width_frac * self.width_frac / 3.0
    }
}

/// Small-angle `(crossed, ladder)` angular factors:
/// `2/15 - (k l theta)^2 / 35` and `2/15`.
pub fn angular_factor(theta: f64, k_ell: f64) -> Result<(f64, f64)> {
    if !(theta.is_finite() && theta >= 0.0) {
        return domain(format!("detection angle must be non-negative, got {theta}"));
    }
    let x = k_ell * theta;
    if x > 0.5 {
        log::warn!("k l theta = {x} is outside the small-angle range");
    }
    Ok((2.0 / 15.0 - x * x / 35.0, 2.0 / 15.0))
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub theta: f64,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

struct Sample {
    n: [f64; 3],
    k0_r: f64,
}

fn draw(rng: &mut ChaCha8Rng, spec: &AverageSpec) -> Sample {
    let cz: f64 = rng.random_range(-1.0..1.0);
    let az: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let sz = (1.0 - cz * cz).max(0.0).sqrt();
    let u: f64 = rng.random_range(-1.0..1.0);
    Sample {
        n: [sz * az.cos(), sz * az.sin(), cz],
        k0_r: spec.ell_k0 * (1.0 + spec.width_frac * u),
    }
}

fn geometric_weight(n: &[f64; 3]) -> f64 {
    let v = nalgebra::Vector3::from(*n);
    delta_pp(&v.normalize()).map(|d| d.norm_sqr()).unwrap_or(0.0)
}

/// Sums `(sum w, sum w^2)` per angle for one batch; the same draws are used
/// for every angle.
fn batch_sums(spec: &AverageSpec, index: usize, count: usize, thetas: &[f64], phase: bool) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let q: Vec<[f64; 2]> = thetas.iter().map(|t| [t.sin(), 1.0 - t.cos()]).collect();
    let mut acc = vec![(0.0, 0.0); thetas.len()];
    for _ in 0..count {
        let s = draw(&mut rng, spec);
        let g = geometric_weight(&s.n);
        for (a, qq) in acc.iter_mut().zip(&q) {
            let w = if phase {
                g * (s.k0_r * (s.n[0] * qq[0] + s.n[2] * qq[1])).cos()
            } else {
                g
            };
            a.0 += w;
            a.1 += w * w;
        }
    }
    acc
}

fn run(spec: &AverageSpec, thetas: &[f64], phase: bool) -> Result<Vec<McEstimate>> {
    if spec.samples < 10 {
        return domain(format!("Monte Carlo average needs at least 10 samples, got {}", spec.samples));
    }
    for &t in thetas {
        if !(t.is_finite() && t >= 0.0) {
            return domain(format!("detection angle must be non-negative, got {t}"));
        }
    }
    let batches = spec.samples.div_ceil(BATCH);
    let partial: Vec<Vec<(f64, f64)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let count = BATCH.min(spec.samples - b * BATCH);
            batch_sums(spec, b, count, thetas, phase)
        })
        .collect();
    let n = spec.samples as f64;
    Ok(thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let (s, s2) = partial.iter().fold((0.0, 0.0), |(a, b), p| (a + p[i].0, b + p[i].1));
            let mean = s / n;
            let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
            McEstimate {
                theta,
                mean,
                std_error: (var / n).sqrt(),
                samples: spec.samples,
            }
        })
        .collect())
}

/// Monte Carlo estimate of `<|Delta_{+1,+1}|^2 cos((k + k_L) . r)>` at
/// detection angle `theta`; deterministic for a fixed seed.
pub fn mc_average(spec: &AverageSpec, theta: f64) -> Result<McEstimate> {
    Ok(run(spec, &[theta], true)?.remove(0))
}

/// [`mc_average`] at several angles with common random numbers.
pub fn mc_average_many(spec: &AverageSpec, thetas: &[f64]) -> Result<Vec<McEstimate>> {
    run(spec, thetas, true)
}

/// Monte Carlo estimate of `<|Delta_{+1,+1}|^2>` alone.
pub fn mc_geometric_average(spec: &AverageSpec) -> Result<McEstimate> {
    Ok(run(spec, &[0.0], false)?.remove(0))
}

/// Least-squares fit `f(theta) = a + b theta^2 + c theta^4` to common-random-number
/// estimates on `points` angles in `[0, theta_max]`. Returns `(a, b)`.
pub fn fit_theta_quadratic(spec: &AverageSpec, theta_max: f64, points: usize) -> Result<(f64, f64)> {
    if points < 4 {
        return domain("need at least four angles for the fit");
    }
    if !(theta_max.is_finite() && theta_max > 0.0) {
        return domain("maximum angle must be positive");
    }
    let thetas: Vec<f64> = (0..points).map(|k| theta_max * k as f64 / (points - 1) as f64).collect();
    let est = mc_average_many(spec, &thetas)?;
    let design = nalgebra::DMatrix::from_fn(points, 3, |i, j| thetas[i].powi(2 * j as i32));
    let y = nalgebra::DVector::from_iterator(points, est.iter().map(|e| e.mean));
    let coef = design
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| crate::Error::Domain(e.to_string()))?;
    Ok((coef[0], coef[1]))
}
