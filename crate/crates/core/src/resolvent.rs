//! Resolvent `(z - L0)^{-1}` of the uncoupled two-atom generator.
//!
//! Two routes are provided. [`resolvent_apply`] factorizes the full
//! 256x256 system for every `z`. [`KroneckerResolvent`] uses the fact that
//! `L0 = A (+) B` is a Kronecker sum of single-atom generators: after
//! splitting off the stationary directions, the remaining part is a Sylvester
//! equation `(A - z) X + X B^T = -V` on 16x16 matrices, solved in the Schur
//! bases of `A` and `B`, which are computed once.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::liouvillian::{single_atom_generator, Generator, TwoAtomState, HILBERT_DIM, LEVELS, STATE_DIM};
use crate::model::PhysParams;

const POLE_PIVOT: f64 = 1e-13;

fn trace_functional(dim: usize) -> DVector<Complex64> {
    let n = (dim as f64).sqrt() as usize;
    let mut one = DVector::zeros(dim);
    for i in 0..n {
        one[i * n + i] = Complex64::from(1.0);
    }
    one
}

fn pivot_ratio(m: &DMatrix<Complex64>) -> (nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, f64) {
    let lu = m.clone().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let ratio = if hi == 0.0 { 0.0 } else { lo / hi };
    (lu, ratio)
}

fn check_residual(
    m: &DMatrix<Complex64>,
    x: &DVector<Complex64>,
    v: &DVector<Complex64>,
    z: Complex64,
) -> Result<()> {
    let r = (m * x - v).norm();
    if r > 1e-10 * v.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::ResolventPole { z });
    }
    Ok(())
}

/// Solves `(z - L0) x = v` with a dense LU factorization.
pub fn resolvent_apply(l0: &Generator, z: Complex64, v: &TwoAtomState) -> Result<TwoAtomState> {
    let m = DMatrix::<Complex64>::identity(STATE_DIM, STATE_DIM) * z - &l0.matrix;
    let (lu, ratio) = pivot_ratio(&m);
    if ratio < POLE_PIVOT {
        return Err(Error::ResolventPole { z });
    }
    let x = lu.solve(&v.coeffs).ok_or(Error::ResolventPole { z })?;
    check_residual(&m, &x, &v.coeffs, z)?;
    Ok(TwoAtomState { coeffs: x })
}

/// Solves `(z - L0) x = v` for traceless `v`, including `z = 0`, where `rho0`
/// is the stationary state of `L0`. The result is traceless.
pub fn resolvent_apply_deflated(
    l0: &Generator,
    rho0: &TwoAtomState,
    z: Complex64,
    v: &TwoAtomState,
) -> Result<TwoAtomState> {
    require_traceless(v)?;
    let scale = l0.matrix.camax().max(1.0);
    let one = trace_functional(STATE_DIM);
    let m = DMatrix::<Complex64>::identity(STATE_DIM, STATE_DIM) * z - &l0.matrix
        + &rho0.coeffs * one.transpose() * Complex64::from(scale);
    let (lu, ratio) = pivot_ratio(&m);
    if ratio < POLE_PIVOT {
        return Err(Error::ResolventPole { z });
    }
    let x = lu.solve(&v.coeffs).ok_or(Error::ResolventPole { z })?;
    check_residual(&m, &x, &v.coeffs, z)?;
    Ok(TwoAtomState { coeffs: x })
}

fn require_traceless(v: &TwoAtomState) -> Result<()> {
    let tr = v.trace().norm();
    if tr > 1e-12 * v.norm().max(1.0) {
        return Err(Error::Domain(format!("deflated resolvent needs a traceless input (trace {tr:e})")));
    }
    Ok(())
}

/// Two-atom vector (row-major `rho[(a1 a2),(b1 b2)]`) as a 16x16 matrix with
/// rows indexed by atom 1 `(a1 b1)` and columns by atom 2 `(a2 b2)`.
pub(crate) fn to_kron(v: &DVector<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(HILBERT_DIM, HILBERT_DIM, |i, j| {
        let (a1, b1, a2, b2) = (i / LEVELS, i % LEVELS, j / LEVELS, j % LEVELS);
        v[(a1 * LEVELS + a2) * HILBERT_DIM + b1 * LEVELS + b2]
    })
}

pub(crate) fn from_kron(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_fn(STATE_DIM, |k, _| {
        let (row, col) = (k / HILBERT_DIM, k % HILBERT_DIM);
        let (a1, a2, b1, b2) = (row / LEVELS, row % LEVELS, col / LEVELS, col % LEVELS);
        m[(a1 * LEVELS + b1, a2 * LEVELS + b2)]
    })
}

/// Stationary state of a single-atom generator, unit trace.
fn single_atom_stationary(gen: &DMatrix<Complex64>) -> Result<DVector<Complex64>> {
    let one = trace_functional(HILBERT_DIM);
    let scale = gen.camax().max(1.0);
    let w = &one / Complex64::from(LEVELS as f64);
    let m = gen - &w * one.transpose() * Complex64::from(scale);
    let (lu, ratio) = pivot_ratio(&m);
    if ratio < POLE_PIVOT {
        return Err(Error::Degenerate("single-atom stationary state is not unique".into()));
    }
    lu.solve(&(&w * Complex64::from(-scale)))
        .ok_or_else(|| Error::Degenerate("single-atom stationary state is not unique".into()))
}

/// Complex Schur form `m = q t q^*`. The QR iteration can stall on the exact
/// block structure of a single-atom generator, so the matrix is first rotated
/// by a seeded random unitary.
fn robust_schur(m: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    for seed in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let u = g.qr().q();
        let rotated = u.adjoint() * m * &u;
        if let Some(schur) = Schur::try_new(rotated, f64::EPSILON, 10_000) {
            let (q, t) = schur.unpack();
            return Ok((u * q, t));
        }
    }
    Err(Error::Degenerate("Schur iteration did not converge".into()))
}

#[derive(Debug, Clone)]
struct AtomFactor {
    gen: DMatrix<Complex64>,
    stationary: DVector<Complex64>,
    // gen - c * stationary * 1^T
    shifted: DMatrix<Complex64>,
    // Schur form shifted = q t q^*
    q: DMatrix<Complex64>,
    t: DMatrix<Complex64>,
}

impl AtomFactor {
    fn new(gen: DMatrix<Complex64>, transpose: bool) -> Result<Self> {
        let stationary = single_atom_stationary(&gen)?;
        let c = gen.camax().max(1.0);
        let one = trace_functional(HILBERT_DIM);
        let shifted = &gen - &stationary * one.transpose() * Complex64::from(c);
        let target = if transpose { shifted.transpose() } else { shifted.clone() };
        let (q, t) = robust_schur(&target)?;
        Ok(Self {
            gen,
            stationary,
            shifted,
            q,
            t,
        })
    }

    /// `(z - gen)^{-1} b` for traceless `b`.
    fn traceless_solve(&self, z: Complex64, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        let m = DMatrix::<Complex64>::identity(HILBERT_DIM, HILBERT_DIM) * z - &self.shifted;
        let (lu, ratio) = pivot_ratio(&m);
        if ratio < POLE_PIVOT {
            return Err(Error::ResolventPole { z });
        }
        lu.solve(b).ok_or(Error::ResolventPole { z })
    }
}

/// Resolvent of `L0` built from the single-atom Schur factorizations.
#[derive(Debug, Clone)]
pub struct KroneckerResolvent {
    atom1: AtomFactor,
    atom2: AtomFactor,
}

/// Pieces of a two-atom vector relative to the stationary product state.
struct Split {
    stationary: Complex64,
    atom1_traceless: DVector<Complex64>,
    atom2_traceless: DVector<Complex64>,
    connected: DMatrix<Complex64>,
}

impl KroneckerResolvent {
    pub fn new(params: &PhysParams, phi_l: f64) -> Result<Self> {
        Ok(Self {
            atom1: AtomFactor::new(single_atom_generator(params, 0.0), false)?,
            atom2: AtomFactor::new(single_atom_generator(params, phi_l), true)?,
        })
    }

    /// Stationary product state `rho_A (x) rho_B`.
    pub fn stationary_state(&self) -> TwoAtomState {
        let m = &self.atom1.stationary * self.atom2.stationary.transpose();
        TwoAtomState { coeffs: from_kron(&m) }
    }

    fn split(&self, v: &TwoAtomState) -> Split {
        let m = to_kron(&v.coeffs);
        let one = trace_functional(HILBERT_DIM);
        let (ra, rb) = (&self.atom1.stationary, &self.atom2.stationary);
        let tr1 = (one.transpose() * &m).transpose();
        let tr2 = &m * &one;
        let c = one.dot(&tr2);
        let b = tr1 - rb * c;
        let a = tr2 - ra * c;
        let connected = &m - ra * rb.transpose() * c - ra * b.transpose() - &a * rb.transpose();
        Split {
            stationary: c,
            atom1_traceless: a,
            atom2_traceless: b,
            connected,
        }
    }

    /// `Y` with `(A_s - z) Y + Y B_s^T = -W`.
    fn sylvester(&self, z: Complex64, w: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let (qa, ta) = (&self.atom1.q, &self.atom1.t);
        let (qb, tb) = (&self.atom2.q, &self.atom2.t);
        let c = -(qa.adjoint() * w * qb);
        let n = HILBERT_DIM;
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            let mut rhs = c.column(j).into_owned();
            for k in 0..j {
                let f = tb[(k, j)];
                if f != Complex64::from(0.0) {
                    rhs -= y.column(k) * f;
                }
            }
            let shift = tb[(j, j)] - z;
            for i in (0..n).rev() {
                let mut acc = rhs[i];
                for l in i + 1..n {
                    acc -= ta[(i, l)] * y[(l, j)];
                }
                let d = ta[(i, i)] + shift;
                if d.norm() < 1e-13 {
                    return Err(Error::ResolventPole { z });
                }
                y[(i, j)] = acc / d;
            }
        }
        Ok(qa * y * qb.adjoint())
    }

    fn assemble(&self, z: Complex64, parts: &Split) -> Result<DMatrix<Complex64>> {
        let (ra, rb) = (&self.atom1.stationary, &self.atom2.stationary);
        let x1 = self.atom1.traceless_solve(z, &parts.atom1_traceless)?;
        let x2 = self.atom2.traceless_solve(z, &parts.atom2_traceless)?;
        let y = self.sylvester(z, &parts.connected)?;
        Ok(ra * x2.transpose() + &x1 * rb.transpose() + y)
    }

    /// `(z - L0)^{-1} v`.
    pub fn apply(&self, z: Complex64, v: &TwoAtomState) -> Result<TwoAtomState> {
        let parts = self.split(v);
        let mut m = self.assemble(z, &parts)?;
        if parts.stationary.norm() > 1e-14 * v.norm() {
            if z.norm() < 1e-13 {
                return Err(Error::ResolventPole { z });
            }
            m += &self.atom1.stationary * self.atom2.stationary.transpose() * (parts.stationary / z);
        }
        Ok(TwoAtomState { coeffs: from_kron(&m) })
    }

    /// `(z - L0)^{-1} v` for traceless `v`; finite at `z = 0`.
    pub fn apply_deflated(&self, z: Complex64, v: &TwoAtomState) -> Result<TwoAtomState> {
        require_traceless(v)?;
        let parts = self.split(v);
        Ok(TwoAtomState {
            coeffs: from_kron(&self.assemble(z, &parts)?),
        })
    }

    /// Single-atom generators `(A, B)` for atoms 1 and 2.
    pub fn factors(&self) -> (&DMatrix<Complex64>, &DMatrix<Complex64>) {
        (&self.atom1.gen, &self.atom2.gen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::build_free_generator;
    use crate::liouvillian::tests::random_operator;
    use crate::steady::zeroth_steady_state;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(seed: u64) -> TwoAtomState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TwoAtomState::from_operator(&random_operator(&mut rng, HILBERT_DIM))
    }

    fn traceless(v: &TwoAtomState) -> TwoAtomState {
        let id = TwoAtomState::from_operator(&DMatrix::identity(HILBERT_DIM, HILBERT_DIM));
        v.minus(&id.scaled(v.trace() / HILBERT_DIM as f64))
    }

    fn setup(s: f64, phi: f64) -> (Generator, KroneckerResolvent) {
        let p = PhysParams::from_saturation(s).unwrap();
        (build_free_generator(&p, phi), KroneckerResolvent::new(&p, phi).unwrap())
    }

    #[test]
    fn kronecker_layout_round_trip() {
        let v = random_state(1);
        assert_eq!(from_kron(&to_kron(&v.coeffs)), v.coeffs);
    }

    #[test]
    fn schur_factors_are_triangular_and_reconstruct() {
        let (_, r) = setup(2.0, 0.4);
        for (f, tr) in [(&r.atom1, false), (&r.atom2, true)] {
            for i in 0..HILBERT_DIM {
                for j in 0..i {
                    assert!(f.t[(i, j)].norm() < 1e-12);
                }
            }
            let rebuilt = &f.q * &f.t * f.q.adjoint();
            let target = if tr { f.shifted.transpose() } else { f.shifted.clone() };
            assert!((rebuilt - target).camax() < 1e-11);
        }
    }

    #[test]
    fn schur_converges_across_parameters() {
        for s in [0.0, 1e-4, 0.5, 2.0, 1e4] {
            for phi in [0.0, 1.0, std::f64::consts::PI] {
                let p = PhysParams::from_saturation(s).unwrap();
                assert!(KroneckerResolvent::new(&p, phi).is_ok(), "s = {s}, phi = {phi}");
            }
        }
    }

    #[test]
    fn residual_at_generic_point() {
        let (l0, r) = setup(1.0, 0.7);
        let v = random_state(2);
        let z = c(1.0, -1.0);
        let x = resolvent_apply(&l0, z, &v).unwrap();
        let resid = (x.scaled(z).minus(&l0.apply(&x))).minus(&v).norm();
        assert!(resid < 1e-10 * v.norm());
        let xk = r.apply(z, &v).unwrap();
        assert!(xk.minus(&x).norm() < 1e-10 * x.norm());
    }

    #[test]
    fn large_argument_asymptotics() {
        let (l0, r) = setup(1.0, 0.0);
        let v = random_state(3);
        let z = c(0.0, 1e6);
        let want = v.scaled(z.inv());
        for x in [resolvent_apply(&l0, z, &v).unwrap(), r.apply(z, &v).unwrap()] {
            assert!(x.minus(&want).norm() < 1e-4 * want.norm());
        }
    }

    #[test]
    fn pole_at_zero_without_deflation() {
        let (l0, r) = setup(1.0, 0.0);
        let v = random_state(4);
        assert!(matches!(resolvent_apply(&l0, c(0.0, 0.0), &v), Err(Error::ResolventPole { .. })));
        assert!(matches!(r.apply(c(0.0, 0.0), &v), Err(Error::ResolventPole { .. })));
    }

    #[test]
    fn deflated_routes_agree_on_the_imaginary_axis() {
        let (l0, r) = setup(1.0, 1.3);
        let rho0 = zeroth_steady_state(&l0).unwrap();
        assert!(r.stationary_state().minus(&rho0).norm() < 1e-10);
        let v = traceless(&random_state(5));
        for k in 0..=20 {
            let nu = -5.0 + 0.5 * k as f64;
            let z = c(0.0, -nu);
            let dense = resolvent_apply_deflated(&l0, &rho0, z, &v).unwrap();
            let fast = r.apply_deflated(z, &v).unwrap();
            assert!(dense.coeffs.iter().all(|x| x.is_finite()));
            assert!(fast.minus(&dense).norm() < 1e-9 * dense.norm(), "nu = {nu}");
            assert!(fast.trace().norm() < 1e-11);
            if nu != 0.0 {
                let full = resolvent_apply(&l0, z, &v).unwrap();
                assert!(full.minus(&fast).norm() < 1e-9 * full.norm());
            }
        }
    }

    #[test]
    fn deflated_solve_requires_traceless_input() {
        let (l0, r) = setup(1.0, 0.0);
        let rho0 = zeroth_steady_state(&l0).unwrap();
        let v = random_state(6);
        assert!(resolvent_apply_deflated(&l0, &rho0, c(0.0, -1.0), &v).is_err());
        assert!(r.apply_deflated(c(0.0, -1.0), &v).is_err());
    }

    #[test]
    fn stationary_component_carries_the_pole() {
        let (_, r) = setup(0.5, 0.0);
        let rho = r.stationary_state();
        let z = c(0.0, -0.3);
        let x = r.apply(z, &rho).unwrap();
        assert!(x.minus(&rho.scaled(z.inv())).norm() < 1e-12);
    }

    #[test]
    fn strong_drive_is_stable() {
        let (l0, r) = setup(5000.0, 0.2);
        let v = traceless(&random_state(7));
        let rho0 = zeroth_steady_state(&l0).unwrap();
        for nu in [0.0, 50.0, 100.0, 200.0] {
            let z = c(0.0, -nu);
            let dense = resolvent_apply_deflated(&l0, &rho0, z, &v).unwrap();
            let fast = r.apply_deflated(z, &v).unwrap();
            assert!(fast.minus(&dense).norm() < 1e-8 * dense.norm(), "nu = {nu}");
        }
    }
}
