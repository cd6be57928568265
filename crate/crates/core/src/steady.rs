//! Stationary state of the two-atom master equation, expanded in formal
//! orders of the coupling: `rho = sum g^m (g*)^n rho^(m,n)`, `m + n <= 2`.
//!
//! Double-scattering intensities are the `|g|^2` (order `(1,1)`) parts of the
//! relevant expectation values. Orders `(2,0)` and `(0,2)` oscillate as
//! `exp(+-2 i k0 r)` and drop out of any configuration average; they are
//! computed but never enter an observable.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouvillian::{
    build_exchange_generators, build_free_generator, dipole_component_operator, DipoleKind, Generator,
    Operator, TwoAtomState, HILBERT_DIM, STATE_DIM,
};
use crate::model::{Configuration, PhysParams};

/// Formal order `(m, n)` in `(g, g*)`.
pub type Order = (u8, u8);

/// The orders carried by [`PerturbativeState`].
pub const ORDERS: [Order; 6] = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)];

/// Orders whose contributions average out over configurations.
pub fn drops_under_averaging(order: Order) -> bool {
    order.0 != order.1 && order.0 + order.1 == 2
}

/// Family of stationary-state corrections indexed by formal order.
#[derive(Debug, Clone)]
pub struct PerturbativeState {
    orders: BTreeMap<Order, TwoAtomState>,
    /// Drive phase of atom 2 used when the generators were built.
    pub phi_l: f64,
}

impl PerturbativeState {
    pub fn order(&self, m: u8, n: u8) -> Option<&TwoAtomState> {
        self.orders.get(&(m, n))
    }

    pub fn orders(&self) -> impl Iterator<Item = (&Order, &TwoAtomState)> {
        self.orders.iter()
    }

    /// Resummed state `sum g^m (g*)^n rho^(m,n)` including the oscillating orders.
    pub fn evaluate(&self, g: Complex64) -> TwoAtomState {
        let mut acc = TwoAtomState::zeros();
        for (&(m, n), rho) in &self.orders {
            let w = g.powu(m as u32) * g.conj().powu(n as u32);
            acc = acc.plus(&rho.scaled(w));
        }
        acc
    }

    /// `Tr(op rho^(m,n))` for every stored order.
    pub fn expectation(&self, op: &Operator) -> BTreeMap<Order, Complex64> {
        self.orders.iter().map(|(&o, rho)| (o, rho.expectation(op))).collect()
    }
}

/// Coefficient of order `target` in the product of two order-resolved series.
pub(crate) fn series_product(
    a: &BTreeMap<Order, Complex64>,
    b: &BTreeMap<Order, Complex64>,
    target: Order,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (&(m, n), &x) in a {
        if m > target.0 || n > target.1 {
            continue;
        }
        if let Some(&y) = b.get(&(target.0 - m, target.1 - n)) {
            acc += x * y;
        }
    }
    acc
}

/// Row vector of the trace functional, `Tr(x) = one . x`.
fn trace_functional() -> DVector<Complex64> {
    let mut one = DVector::zeros(STATE_DIM);
    for i in 0..HILBERT_DIM {
        one[i * HILBERT_DIM + i] = Complex64::from(1.0);
    }
    one
}

fn pivot_ratio(lu: &LU<Complex64, Dyn, Dyn>) -> f64 {
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

const PIVOT_FLOOR: f64 = 1e-13;

/// Stationary state of an arbitrary trace-preserving generator, normalized to
/// unit trace. Solved with the bordered system `(G - c w 1^T) x = -c w`,
/// which is nonsingular exactly when the null space of `G` is one-dimensional.
pub fn stationary_state(gen: &Generator) -> Result<TwoAtomState> {
    let scale = gen.matrix.camax();
    if scale == 0.0 {
        return Err(Error::Degenerate("generator is identically zero".into()));
    }
    let one = trace_functional();
    let w = &one / Complex64::from(HILBERT_DIM as f64);
    let border = &w * one.transpose() * Complex64::from(scale);
    let lu = (&gen.matrix - border).lu();
    if pivot_ratio(&lu) < PIVOT_FLOOR {
        return Err(Error::Degenerate("stationary state is not unique".into()));
    }
    let rhs = &w * Complex64::from(-scale);
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("stationary state is not unique".into()))?;
    let state = TwoAtomState { coeffs: x };
    let residual = gen.apply(&state).norm();
    if residual > 1e-10 * scale.max(1.0) {
        return Err(Error::Degenerate(format!("stationary residual {residual:e}")));
    }
    Ok(state)
}

/// Stationary state of the uncoupled atoms, checked for uniqueness, unit
/// trace, Hermiticity and positivity.
pub fn zeroth_steady_state(l0: &Generator) -> Result<TwoAtomState> {
    let rho = stationary_state(l0)?;
    let herm = rho.hermiticity_defect();
    if herm > 1e-10 {
        return Err(Error::Degenerate(format!("stationary state not Hermitian ({herm:e})")));
    }
    let op = rho.to_operator();
    let hermitian = (&op + op.adjoint()) * Complex64::from(0.5);
    let min_eig = hermitian.symmetric_eigenvalues().min();
    if min_eig < -1e-10 {
        return Err(Error::Degenerate(format!("stationary state not positive ({min_eig:e})")));
    }
    Ok(rho)
}

/// Solver for `L0 x = y` on the traceless subspace, where `L0` is invertible.
/// Uses `(-L0 + c rho0 1^T) x = -y`; for traceless `y` the solution is the
/// unique traceless one.
pub(crate) struct TracelessSolver {
    lu: LU<Complex64, Dyn, Dyn>,
}

impl TracelessSolver {
    pub(crate) fn new(l0: &Generator, rho0: &TwoAtomState) -> Result<Self> {
        let scale = l0.matrix.camax().max(f64::MIN_POSITIVE);
        let one = trace_functional();
        let m: DMatrix<Complex64> = -&l0.matrix + &rho0.coeffs * one.transpose() * Complex64::from(scale);
        let lu = m.lu();
        if pivot_ratio(&lu) < PIVOT_FLOOR {
            return Err(Error::Degenerate("L0 is singular on the traceless subspace".into()));
        }
        Ok(Self { lu })
    }

    pub(crate) fn solve(&self, rhs: &TwoAtomState) -> Result<TwoAtomState> {
        let tr = rhs.trace().norm();
        if tr > 1e-10 * rhs.norm().max(1e-300) {
            return Err(Error::Domain(format!("right-hand side is not traceless ({tr:e})")));
        }
        let x = self
            .lu
            .solve(&(-&rhs.coeffs))
            .ok_or_else(|| Error::Degenerate("traceless solve failed".into()))?;
        Ok(TwoAtomState { coeffs: x })
    }
}

/// Corrections to the stationary state up to total order two:
/// `L0 rho^(1,0) = -V+ rho0`, `L0 rho^(0,1) = -V- rho0`,
/// `L0 rho^(1,1) = -V+ rho^(0,1) - V- rho^(1,0)`,
/// `L0 rho^(2,0) = -V+ rho^(1,0)`, `L0 rho^(0,2) = -V- rho^(0,1)`.
pub fn perturbative_corrections(
    l0: &Generator,
    v_plus: &Generator,
    v_minus: &Generator,
    rho0: &TwoAtomState,
    phi_l: f64,
) -> Result<PerturbativeState> {
    let solver = TracelessSolver::new(l0, rho0)?;
    let neg = Complex64::from(-1.0);
    let r10 = solver.solve(&v_plus.apply(rho0).scaled(neg))?;
    let r01 = solver.solve(&v_minus.apply(rho0).scaled(neg))?;
    let r11 = solver.solve(&v_plus.apply(&r01).plus(&v_minus.apply(&r10)).scaled(neg))?;
    let r20 = solver.solve(&v_plus.apply(&r10).scaled(neg))?;
    let r02 = solver.solve(&v_minus.apply(&r01).scaled(neg))?;
    let orders = BTreeMap::from([
        ((0, 0), rho0.clone()),
        ((1, 0), r10),
        ((0, 1), r01),
        ((1, 1), r11),
        ((2, 0), r20),
        ((0, 2), r02),
    ]);
    Ok(PerturbativeState { orders, phi_l })
}

/// Double-scattering intensities at order `|g|^2`, with `|g|^2` divided out.
///
/// The crossed values are those of the exact backscattering direction; the
/// detection-angle phase is recorded separately in `phase_cos`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityTerms {
    pub ladder_total: f64,
    pub crossed_total: f64,
    pub ladder_elastic: f64,
    pub crossed_elastic: f64,
    pub ladder_inelastic: f64,
    pub crossed_inelastic: f64,
    /// `|Delta_{+1,+1}(n_hat)|^2`
    pub geometric_factor: f64,
    /// `cos((k + k_L) . r_12)`
    pub phase_cos: f64,
}

impl IntensityTerms {
    /// `1 + C/L`.
    pub fn enhancement(&self) -> f64 {
        1.0 + self.crossed_total / self.ladder_total
    }

    /// Crossed intensity at the configured detection angle.
    pub fn crossed_at_detection(&self) -> f64 {
        self.crossed_total * self.phase_cos
    }

    /// All intensities divided by the geometric factor: the units in which
    /// the configuration-averaged results carry the prefactor `2|g~|^2/15`.
    pub fn normalized(&self) -> Result<Self> {
        let f = self.geometric_factor;
        if f < 1e-14 {
            return Err(Error::Domain("geometric factor vanishes for this orientation".into()));
        }
        Ok(Self {
            ladder_total: self.ladder_total / f,
            crossed_total: self.crossed_total / f,
            ladder_elastic: self.ladder_elastic / f,
            crossed_elastic: self.crossed_elastic / f,
            ladder_inelastic: self.ladder_inelastic / f,
            crossed_inelastic: self.crossed_inelastic / f,
            geometric_factor: 1.0,
            phase_cos: self.phase_cos,
        })
    }
}

pub(crate) fn op(atom: usize, kind: DipoleKind) -> Operator {
    dipole_component_operator(atom, 2, kind).expect("valid indices")
}

/// `sigma_21^1 sigma_12^2`, whose expectation forms the crossed term.
pub(crate) fn crossed_operator() -> Operator {
    op(1, DipoleKind::Raising) * op(2, DipoleKind::Lowering)
}

/// Ladder, crossed and elastic parts of the `(1,1)` intensities.
pub fn intensity_terms(pert: &PerturbativeState, cfg: &Configuration) -> Result<IntensityTerms> {
    if (pert.phi_l - cfg.phi_l).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "state was built with drive phase {} but configuration has {}",
            pert.phi_l, cfg.phi_l
        )));
    }
    let r11 = pert
        .order(1, 1)
        .ok_or_else(|| Error::Domain("order (1,1) missing".into()))?;
    let detect = Complex64::from_polar(1.0, cfg.phi_l);

    let ladder_total: f64 = [1, 2]
        .iter()
        .map(|&a| r11.expectation(&op(a, DipoleKind::Projector)).re)
        .sum();
    let crossed_total = 2.0 * (r11.expectation(&crossed_operator()) * detect).re;

    // <sigma_12^b>^(m,n) = conj(<sigma_21^b>^(n,m)); take it straight from the state.
    let raise: Vec<_> = [1, 2].iter().map(|&a| pert.expectation(&op(a, DipoleKind::Raising))).collect();
    let lower: Vec<_> = [1, 2].iter().map(|&a| pert.expectation(&op(a, DipoleKind::Lowering))).collect();
    let ladder_elastic: f64 = (0..2).map(|a| series_product(&raise[a], &lower[a], (1, 1)).re).sum();
    let crossed_elastic = 2.0 * (series_product(&raise[0], &lower[1], (1, 1)) * detect).re;

    Ok(IntensityTerms {
        ladder_total,
        crossed_total,
        ladder_elastic,
        crossed_elastic,
        ladder_inelastic: ladder_total - ladder_elastic,
        crossed_inelastic: crossed_total - crossed_elastic,
        geometric_factor: cfg.geometric_factor(),
        phase_cos: cfg.detection_phase().cos(),
    })
}

/// Generators and perturbative stationary state for one parameter set.
#[derive(Debug, Clone)]
pub struct DoubleScattering {
    pub params: PhysParams,
    pub cfg: Configuration,
    pub l0: Generator,
    pub v_plus: Generator,
    pub v_minus: Generator,
    pub state: PerturbativeState,
}

impl DoubleScattering {
    pub fn new(params: PhysParams, cfg: Configuration) -> Result<Self> {
        let l0 = build_free_generator(&params, cfg.phi_l);
        let (v_plus, v_minus) = build_exchange_generators(params.gamma, &cfg.n_hat())?;
        let rho0 = zeroth_steady_state(&l0)?;
        let state = perturbative_corrections(&l0, &v_plus, &v_minus, &rho0, cfg.phi_l)?;
        Ok(Self {
            params,
            cfg,
            l0,
            v_plus,
            v_minus,
            state,
        })
    }

    pub fn intensity_terms(&self) -> Result<IntensityTerms> {
        intensity_terms(&self.state, &self.cfg)
    }
}

/// Independent route to the `|g|^2` intensities: solve the full generator
/// `L0 + g V+ + g* V-` without expansion at `|g| = g_abs` for `phases`
/// equally spaced phases of `g`, and average. The average keeps only the
/// `m = n` orders, so `(avg - value at g = 0) / |g|^2` equals the `(1,1)`
/// coefficient up to `O(|g|^2)`.
///
/// Returns `(ladder, crossed)` in units of `|g|^2`.
pub fn nonperturbative_intensities(
    scattering: &DoubleScattering,
    g_abs: f64,
    phases: usize,
) -> Result<(f64, f64)> {
    if phases < 3 {
        return Err(Error::Domain("need at least three phases of g".into()));
    }
    let detect = Complex64::from_polar(1.0, scattering.cfg.phi_l);
    let crossed_op = crossed_operator();
    let populations = [op(1, DipoleKind::Projector), op(2, DipoleKind::Projector)];
    let observe = |rho: &TwoAtomState| {
        let ladder: f64 = populations.iter().map(|p| rho.expectation(p).re).sum();
        let crossed = 2.0 * (rho.expectation(&crossed_op) * detect).re;
        (ladder, crossed)
    };
    let rho0 = scattering
        .state
        .order(0, 0)
        .ok_or_else(|| Error::Domain("order (0,0) missing".into()))?;
    let (l_ref, c_ref) = observe(rho0);
    let (mut l_avg, mut c_avg) = (0.0, 0.0);
    for k in 0..phases {
        let g = Complex64::from_polar(g_abs, 2.0 * std::f64::consts::PI * k as f64 / phases as f64);
        let gen = Generator::combined(&scattering.l0, &scattering.v_plus, &scattering.v_minus, g);
        let (l, c) = observe(&stationary_state(&gen)?);
        l_avg += l / phases as f64;
        c_avg += c / phases as f64;
    }
    let g2 = g_abs * g_abs;
    Ok(((l_avg - l_ref) / g2, (c_avg - c_ref) / g2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::{single_atom_generator, LEVELS};
    use crate::oracle;
    use nalgebra::DMatrix;

    fn scattering(s: f64, cfg: Configuration) -> DoubleScattering {
        DoubleScattering::new(PhysParams::from_saturation(s).unwrap(), cfg).unwrap()
    }

    #[test]
    fn undriven_atoms_sit_in_the_ground_state() {
        let l0 = build_free_generator(&PhysParams::resonant(0.0).unwrap(), 0.0);
        let rho = zeroth_steady_state(&l0).unwrap();
        let op = rho.to_operator();
        assert!((op[(0, 0)] - Complex64::from(1.0)).norm() < 1e-12);
        assert!((op.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeroth_state_is_a_product_of_mollow_states() {
        let p = PhysParams::from_saturation(1.0).unwrap();
        let phi = 0.8;
        let l0 = build_free_generator(&p, phi);
        let rho = zeroth_steady_state(&l0).unwrap();
        assert!((l0.apply(&rho).norm()) < 1e-10);
        assert!((rho.trace() - Complex64::from(1.0)).norm() < 1e-12);

        let single = |phase: f64| {
            let g = Generator {
                matrix: {
                    // embed the 16x16 generator as a trivially padded check
                    single_atom_generator(&p, phase)
                },
                label: crate::liouvillian::GeneratorLabel::Combined,
            };
            // null vector of the 16x16 generator via SVD
            let svd = g.matrix.clone().svd(false, true);
            let (imin, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let v = svd.v_t.unwrap().row(imin).adjoint();
            let m = DMatrix::from_row_slice(LEVELS, LEVELS, v.as_slice());
            &m / m.trace()
        };
        let r1 = single(0.0);
        let r2 = single(phi);
        // excited population of |4> for s = 1 is s/(2(1+s)) = 1/4
        assert!((r1[(3, 3)].re - 0.25).abs() < 1e-12);
        assert!(r1[(1, 1)].norm() < 1e-14 && r1[(2, 2)].norm() < 1e-14);
        let prod = TwoAtomState::product(&r1, &r2);
        assert!(prod.minus(&rho).norm() < 1e-10);
    }

    #[test]
    fn degenerate_generator_is_rejected() {
        let g = Generator {
            matrix: DMatrix::zeros(STATE_DIM, STATE_DIM),
            label: crate::liouvillian::GeneratorLabel::L0,
        };
        assert!(matches!(zeroth_steady_state(&g), Err(Error::Degenerate(_))));
        // Pure decay with level |3> decoupled from decay: two stationary states.
        let p = PhysParams::resonant(1.0).unwrap();
        let mut l0 = build_free_generator(&p, 0.0);
        // remove all decay out of |3> on atom 1 by zeroing its population dynamics
        let k = |a1: usize, a2: usize, b1: usize, b2: usize| (a1 * 4 + a2) * 16 + b1 * 4 + b2;
        for a2 in 0..4 {
            let col = k(2, a2, 2, a2);
            for r in 0..STATE_DIM {
                l0.matrix[(r, col)] = Complex64::from(0.0);
            }
        }
        assert!(zeroth_steady_state(&l0).is_err());
    }

    #[test]
    fn corrections_are_traceless_and_conjugate_symmetric() {
        let ds = scattering(1.0, Configuration::backscattering().with_phi_l(0.4));
        for (&(m, n), rho) in ds.state.orders() {
            if (m, n) != (0, 0) {
                assert!(rho.trace().norm() < 1e-12, "({m},{n})");
            }
        }
        for (m, n) in [(1, 0), (2, 0), (1, 1)] {
            let a = ds.state.order(m, n).unwrap();
            let b = ds.state.order(n, m).unwrap();
            assert!(a.adjoint().minus(b).norm() < 1e-10, "({m},{n})");
        }
        assert!(drops_under_averaging((2, 0)) && !drops_under_averaging((1, 1)));
    }

    #[test]
    fn level_two_dipole_appears_only_at_first_order() {
        let ds = scattering(1.0, Configuration::backscattering());
        for atom in [1, 2] {
            let d = ds.state.expectation(&op(atom, DipoleKind::Raising));
            assert!(d[&(0, 0)].norm() < 1e-14);
            assert!(d[&(1, 0)].norm() + d[&(0, 1)].norm() > 1e-3);
        }
    }

    #[test]
    fn intensities_match_closed_forms_at_unit_saturation() {
        let ds = scattering(1.0, Configuration::backscattering());
        let t = ds.intensity_terms().unwrap();
        assert!((t.crossed_total - 0.0417876149).abs() < 1e-9, "{}", t.crossed_total);
        assert!((t.ladder_total - 0.0550012095).abs() < 1e-9, "{}", t.ladder_total);
        assert!((t.ladder_elastic - 0.25 / 16.0).abs() < 1e-12);
        assert!((t.ladder_total - t.ladder_elastic - t.ladder_inelastic).abs() < 1e-15);
    }

    #[test]
    fn no_drive_no_scattering() {
        let ds = scattering(0.0, Configuration::backscattering());
        let t = ds.intensity_terms().unwrap();
        for v in [t.ladder_total, t.crossed_total, t.ladder_elastic, t.crossed_elastic] {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn crossed_to_ladder_ratio_and_elastic_equality() {
        let cfg = Configuration::backscattering()
            .with_n_hat([0.48, -0.6, 0.64])
            .unwrap();
        for s in [0.1, 1.0, 10.0] {
            let t = scattering(s, cfg).intensity_terms().unwrap();
            let (r1, r2, _) = oracle::saturation_polynomials(s).unwrap();
            let ratio = r1 / ((4.0 + s) * r2);
            assert!((t.crossed_total / t.ladder_total / ratio - 1.0).abs() < 1e-8);
            assert!((t.ladder_elastic / t.crossed_elastic - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn intensities_are_gauge_invariant() {
        let base = scattering(2.0, Configuration::backscattering()).intensity_terms().unwrap();
        for phi in [std::f64::consts::FRAC_PI_3, 1.7, std::f64::consts::PI] {
            let t = scattering(2.0, Configuration::backscattering().with_phi_l(phi))
                .intensity_terms()
                .unwrap();
            assert!((t.crossed_total / base.crossed_total - 1.0).abs() < 1e-9);
            assert!((t.ladder_total / base.ladder_total - 1.0).abs() < 1e-9);
            assert!((t.crossed_elastic / base.crossed_elastic - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_phase_is_rejected() {
        let ds = scattering(1.0, Configuration::backscattering());
        assert!(intensity_terms(&ds.state, &ds.cfg.with_phi_l(0.3)).is_err());
    }

    #[test]
    fn expansion_agrees_with_nonperturbative_solve() {
        let ds = scattering(1.0, Configuration::backscattering().with_phi_l(0.3));
        let t = ds.intensity_terms().unwrap();
        let (l, c) = nonperturbative_intensities(&ds, 1e-3, 8).unwrap();
        assert!((l / t.ladder_total - 1.0).abs() < 1e-2, "{l} {}", t.ladder_total);
        assert!((c / t.crossed_total - 1.0).abs() < 1e-2, "{c} {}", t.crossed_total);
    }
}
