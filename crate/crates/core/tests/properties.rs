use cbs_spectrum::average::{mc_average, AverageSpec};
use cbs_spectrum::liouvillian::{build_exchange_generators, build_free_generator, TwoAtomState, HILBERT_DIM};
use cbs_spectrum::model::{Configuration, PhysParams};
use cbs_spectrum::oracle;
use cbs_spectrum::quadrature::{integrate, Segment, Tolerance};
use cbs_spectrum::spectrum::SpectrumEngine;
use cbs_spectrum::steady::DoubleScattering;
use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hermitian(seed: u64) -> TwoAtomState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(HILBERT_DIM, HILBERT_DIM, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    TwoAtomState::from_operator(&(&a + a.adjoint()))
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generators_conserve_probability(
        omega in 0.0f64..50.0,
        delta in -5.0f64..5.0,
        phi in 0.0f64..6.3,
        theta in 0.0f64..std::f64::consts::PI,
        az in 0.0f64..6.3,
        seed in any::<u64>(),
    ) {
        let p = PhysParams::new(1.0, omega, delta).unwrap();
        let l0 = build_free_generator(&p, phi);
        let n = unit(theta, az);
        let (vp, vm) = build_exchange_generators(1.0, &Vector3::from(n)).unwrap();
        let rho = hermitian(seed);
        for g in [&l0, &vp, &vm] {
            prop_assert!(g.apply(&rho).trace().norm() < 1e-10);
        }
    }

    #[test]
    fn numeric_enhancement_follows_the_closed_form(log_s in -3.0f64..3.0) {
        let s = 10f64.powf(log_s);
        let t = DoubleScattering::new(PhysParams::from_saturation(s).unwrap(), Configuration::backscattering())
            .unwrap()
            .intensity_terms()
            .unwrap();
        let alpha = t.enhancement();
        prop_assert!(alpha > 1.0 && alpha < 2.0);
        let exact = oracle::enhancement_factor(s).unwrap();
        prop_assert!((alpha / exact - 1.0).abs() < 1e-8);
        let (r1, r2, _) = oracle::saturation_polynomials(s).unwrap();
        prop_assert!((t.crossed_total / t.ladder_total / (r1 / ((4.0 + s) * r2)) - 1.0).abs() < 1e-8);
        prop_assert!((t.ladder_elastic / t.crossed_elastic - 1.0).abs() < 1e-8);
    }

    #[test]
    fn backscattered_intensities_are_gauge_invariant(s in 0.01f64..100.0, phi in 0.0f64..6.3) {
        let p = PhysParams::from_saturation(s).unwrap();
        let a = DoubleScattering::new(p, Configuration::backscattering()).unwrap().intensity_terms().unwrap();
        let b = DoubleScattering::new(p, Configuration::backscattering().with_phi_l(phi))
            .unwrap()
            .intensity_terms()
            .unwrap();
        prop_assert!((a.ladder_total / b.ladder_total - 1.0).abs() < 1e-9);
        prop_assert!((a.crossed_total / b.crossed_total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectra_are_mirror_symmetric(omega in 0.05f64..30.0, nu in 0.0f64..60.0) {
        let e = SpectrumEngine::new(PhysParams::resonant(omega).unwrap(), Configuration::backscattering()).unwrap();
        let (lp, cp) = e.densities(nu).unwrap();
        let (lm, cm) = e.densities(-nu).unwrap();
        let (l0, c0) = e.densities(0.0).unwrap();
        prop_assert!((lp - lm).abs() <= 1e-9 * l0.abs().max(lp.abs()));
        prop_assert!((cp - cm).abs() <= 1e-9 * c0.abs().max(cp.abs()));
        prop_assert!(lp >= -1e-12 * l0);
    }

    #[test]
    fn weak_drive_crossed_to_ladder_ratio(nu in -5.0f64..5.0) {
        let e = SpectrumEngine::new(PhysParams::resonant(0.1).unwrap(), Configuration::backscattering()).unwrap();
        let (l, c) = e.densities(nu).unwrap();
        let want = 2.0 / (2.0 + nu * nu);
        prop_assert!((c / l / want - 1.0).abs() < 0.02);
    }

    #[test]
    fn monte_carlo_is_reproducible(seed in any::<u64>(), theta in 0.0f64..0.01) {
        let spec = AverageSpec::new(5_000, seed, 100.0, 0.25).unwrap();
        let a = mc_average(&spec, theta).unwrap();
        let b = mc_average(&spec, theta).unwrap();
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert!(a.std_error > 0.0);
    }

    #[test]
    fn quadrature_is_exact_on_cubics(c in prop::array::uniform4(-3.0f64..3.0), a in -5.0f64..0.0, b in 0.1f64..5.0) {
        let r = integrate(
            |x| Ok([c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x]),
            &[Segment::Finite(a, b)],
            Tolerance::default(),
        )
        .unwrap();
        let prim = |x: f64| c[0] * x + c[1] * x * x / 2.0 + c[2] * x.powi(3) / 3.0 + c[3] * x.powi(4) / 4.0;
        prop_assert!((r.value[0] - (prim(b) - prim(a))).abs() < 1e-10 * (1.0 + prim(b).abs() + prim(a).abs()));
    }
}
