//! Generators of the two-atom master equation on the 256-dimensional
//! operator space.
//!
//! States are 16x16 two-atom density matrices flattened row-major; the row
//! index of the matrix is `4 a1 + a2` with atom 1 outermost. The superoperator
//! for `rho -> A rho B` in this layout is `kron(A, B^T)`.
//!
//! The master equation is written in the Schrödinger picture. Its Heisenberg
//! form (acting on observables) is the adjoint with respect to
//! `<Q, rho> = Tr(Q rho)`; the tests check this duality term by term.

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::{helicity_to_cartesian, transverse_projector, PhysParams};

/// Internal levels per atom: |1> ground (m=0), |2> (m=-1), |3> (m=0), |4> (m=+1).
pub const LEVELS: usize = 4;
/// Two-atom Hilbert space dimension.
pub const HILBERT_DIM: usize = LEVELS * LEVELS;
/// Dimension of the two-atom operator (Liouville) space.
pub const STATE_DIM: usize = HILBERT_DIM * HILBERT_DIM;

/// Dense operator on either a one-atom (4x4) or two-atom (16x16) Hilbert space.
pub type Operator = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Two-atom operator stored as a flattened 16x16 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAtomState {
    pub coeffs: DVector<Complex64>,
}

impl TwoAtomState {
    pub fn zeros() -> Self {
        Self {
            coeffs: DVector::zeros(STATE_DIM),
        }
    }

    pub fn from_coeffs(coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.len() != STATE_DIM {
            return domain(format!("state needs {STATE_DIM} components, got {}", coeffs.len()));
        }
        Ok(Self { coeffs })
    }

    pub fn from_operator(op: &Operator) -> Self {
        assert_eq!(op.shape(), (HILBERT_DIM, HILBERT_DIM));
        // nalgebra is column-major; the flattening here is row-major.
        let coeffs = DVector::from_iterator(STATE_DIM, op.transpose().iter().copied());
        Self { coeffs }
    }

    pub fn to_operator(&self) -> Operator {
        DMatrix::from_row_slice(HILBERT_DIM, HILBERT_DIM, self.coeffs.as_slice())
    }

    /// Product state `rho_1 (x) rho_2` of two single-atom density matrices.
    pub fn product(atom1: &Operator, atom2: &Operator) -> Self {
        Self::from_operator(&atom1.kronecker(atom2))
    }

    pub fn trace(&self) -> Complex64 {
        (0..HILBERT_DIM)
            .map(|i| self.coeffs[i * HILBERT_DIM + i])
            .sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_operator(&self.to_operator().adjoint())
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let op = self.to_operator();
        (&op - op.adjoint()).camax()
    }

    /// `Tr(op rho)`.
    pub fn expectation(&self, op: &Operator) -> Complex64 {
        let mut acc = ZERO;
        for r in 0..HILBERT_DIM {
            for c in 0..HILBERT_DIM {
                acc += op[(c, r)] * self.coeffs[r * HILBERT_DIM + c];
            }
        }
        acc
    }

    /// `rho op`.
    pub fn right_mul(&self, op: &Operator) -> Self {
        Self::from_operator(&(self.to_operator() * op))
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            coeffs: &self.coeffs * factor,
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self {
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    pub fn minus(&self, other: &Self) -> Self {
        Self {
            coeffs: &self.coeffs - &other.coeffs,
        }
    }
}

/// Which part of the master equation a generator represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorLabel {
    /// Two independently driven atoms.
    L0,
    /// Exchange terms proportional to `g`.
    VPlus,
    /// Exchange terms proportional to `g*`.
    VMinus,
    /// Any other combination, e.g. `L0 + g V+ + g* V-`.
    Combined,
}

/// Linear map on [`TwoAtomState`].
#[derive(Debug, Clone)]
pub struct Generator {
    pub matrix: DMatrix<Complex64>,
    pub label: GeneratorLabel,
}

impl Generator {
    pub fn apply(&self, rho: &TwoAtomState) -> TwoAtomState {
        TwoAtomState {
            coeffs: &self.matrix * &rho.coeffs,
        }
    }

    /// `L0 + g V+ + g* V-`.
    pub fn combined(l0: &Generator, v_plus: &Generator, v_minus: &Generator, g: Complex64) -> Self {
        let matrix = &l0.matrix + &v_plus.matrix * g + &v_minus.matrix * g.conj();
        Self {
            matrix,
            label: GeneratorLabel::Combined,
        }
    }
}

/// Which single-atom operator [`dipole_component_operator`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipoleKind {
    /// `sigma_{1e}`
    Lowering,
    /// `sigma_{e1}`
    Raising,
    /// `sigma_{ee}`
    Projector,
}

/// Single-atom transition operator `|k><l|` (levels numbered from 1).
pub fn sigma(k: usize, l: usize) -> Operator {
    assert!((1..=LEVELS).contains(&k) && (1..=LEVELS).contains(&l));
    let mut m = DMatrix::zeros(LEVELS, LEVELS);
    m[(k - 1, l - 1)] = ONE;
    m
}

/// Embed a single-atom operator into the two-atom space (identity on the
/// other atom). `atom` is 1 or 2.
pub fn embed(op: &Operator, atom: usize) -> Operator {
    let id = DMatrix::<Complex64>::identity(LEVELS, LEVELS);
    match atom {
        1 => op.kronecker(&id),
        2 => id.kronecker(op),
        _ => panic!("atom index must be 1 or 2"),
    }
}

/// `sigma_{1e}`, `sigma_{e1}` or `sigma_{ee}` of atom `atom` embedded in the
/// two-atom space.
pub fn dipole_component_operator(atom: usize, transition: usize, kind: DipoleKind) -> Result<Operator> {
    if !(atom == 1 || atom == 2) {
        return domain(format!("atom index must be 1 or 2, got {atom}"));
    }
    if !(2..=4).contains(&transition) {
        return domain(format!("excited level must be 2, 3 or 4, got {transition}"));
    }
    let op = match kind {
        DipoleKind::Lowering => sigma(1, transition),
        DipoleKind::Raising => sigma(transition, 1),
        DipoleKind::Projector => sigma(transition, transition),
    };
    Ok(embed(&op, atom))
}

/// Cartesian components of the single-atom dipole lowering operator
/// `D = -e_{-1} sigma_12 + e_0 sigma_13 - e_{+1} sigma_14` (4x4).
pub fn single_atom_dipole() -> [Operator; 3] {
    let em = helicity_to_cartesian(-1).unwrap();
    let e0 = helicity_to_cartesian(0).unwrap();
    let ep = helicity_to_cartesian(1).unwrap();
    let (s12, s13, s14) = (sigma(1, 2), sigma(1, 3), sigma(1, 4));
    std::array::from_fn(|i| &s12 * (-em[i]) + &s13 * e0[i] - &s14 * ep[i])
}

/// Cartesian components of `D_alpha` in the two-atom space.
pub fn dipole_vector(atom: usize) -> [Operator; 3] {
    single_atom_dipole().map(|d| embed(&d, atom))
}

/// Superoperator of `rho -> a rho b` in the row-major layout.
pub(crate) fn sandwich(a: &Operator, b: &Operator) -> DMatrix<Complex64> {
    a.kronecker(&b.transpose())
}

fn left(a: &Operator) -> DMatrix<Complex64> {
    sandwich(a, &DMatrix::identity(a.nrows(), a.nrows()))
}

fn right(b: &Operator) -> DMatrix<Complex64> {
    sandwich(&DMatrix::identity(b.nrows(), b.nrows()), b)
}

/// Hamiltonian of one driven atom, read off the coherent part of the
/// Heisenberg generator `-i delta [D^+ . D, Q] - i/2 [Omega D^+ . eps + Omega* D . eps*, Q]`,
/// i.e. `H = -delta D^+ . D - (Omega D^+ . eps + Omega* D . eps*)/2`.
pub(crate) fn atom_hamiltonian(dipole: &[Operator; 3], params: &PhysParams, rabi: Complex64) -> Operator {
    let eps = helicity_to_cartesian(1).unwrap();
    let n = dipole[0].nrows();
    let mut number = DMatrix::zeros(n, n);
    let mut drive = DMatrix::zeros(n, n);
    for (i, d) in dipole.iter().enumerate() {
        let dd = d.adjoint();
        number += &dd * d;
        drive += &dd * (rabi * eps[i]) + d * (rabi.conj() * eps[i].conj());
    }
    number * Complex64::from(-params.delta) - drive * Complex64::from(0.5)
}

/// Schrödinger-picture generator of one driven, decaying atom whose dipole
/// components are `dipole` (of any dimension).
pub(crate) fn atom_liouvillian(dipole: &[Operator; 3], params: &PhysParams, rabi: Complex64) -> DMatrix<Complex64> {
    let h = atom_hamiltonian(dipole, params, rabi);
    let mut gen = (left(&h) - right(&h)) * (-I);
    let gamma = Complex64::from(params.gamma);
    for d in dipole {
        let dd = d.adjoint();
        let ddd = &dd * d;
        gen += (sandwich(d, &dd) * Complex64::from(2.0) - left(&ddd) - right(&ddd)) * gamma;
    }
    gen
}

/// Drive amplitude of atom 2 given the relative drive phase.
pub(crate) fn rabi_of(params: &PhysParams, atom: usize, phi_l: f64) -> Complex64 {
    match atom {
        1 => Complex64::from(params.omega),
        _ => Complex64::from_polar(params.omega, phi_l),
    }
}

/// 16x16 generator of a single atom driven with phase `drive_phase`.
pub fn single_atom_generator(params: &PhysParams, drive_phase: f64) -> DMatrix<Complex64> {
    let rabi = Complex64::from_polar(params.omega, drive_phase);
    atom_liouvillian(&single_atom_dipole(), params, rabi)
}

/// Free generator `L0 = L_1 + L_2` of two independent atoms; atom 1 is driven
/// with `Omega`, atom 2 with `Omega e^{i phi_l}`.
pub fn build_free_generator(params: &PhysParams, phi_l: f64) -> Generator {
    let mut matrix = DMatrix::zeros(STATE_DIM, STATE_DIM);
    for atom in [1, 2] {
        matrix += atom_liouvillian(&dipole_vector(atom), params, rabi_of(params, atom, phi_l));
    }
    Generator {
        matrix,
        label: GeneratorLabel::L0,
    }
}

/// Exchange generators `(V+, V-)` such that the interaction part of the
/// master equation is `g V+ + g* V-`, with the dipole-dipole tensor
/// `T = gamma g (1 - n n)`.
///
/// In Schrödinger form, summed over `alpha != beta`:
/// `V+ rho = gamma Delta_ij (D_bj rho D_ai^+ - rho D_ai^+ D_bj)` and
/// `V- rho = gamma Delta*_ij (D_aj rho D_bi^+ - D_bi^+ D_aj rho)`.
pub fn build_exchange_generators(gamma: f64, n_hat: &Vector3<f64>) -> Result<(Generator, Generator)> {
    let delta = transverse_projector(n_hat)?;
    let mut v_plus = DMatrix::zeros(STATE_DIM, STATE_DIM);
    let mut v_minus = DMatrix::zeros(STATE_DIM, STATE_DIM);
    let gamma = Complex64::from(gamma);
    for (a, b) in [(1, 2), (2, 1)] {
        let da = dipole_vector(a);
        let db = dipole_vector(b);
        for i in 0..3 {
            for j in 0..3 {
                let t = delta[(i, j)];
                if t == ZERO {
                    continue;
                }
                let dai = da[i].adjoint();
                let dbi = db[i].adjoint();
                v_plus += (sandwich(&db[j], &dai) - right(&(&dai * &db[j]))) * (gamma * t);
                v_minus += (sandwich(&da[j], &dbi) - left(&(&dbi * &da[j]))) * (gamma * t.conj());
            }
        }
    }
    Ok((
        Generator {
            matrix: v_plus,
            label: GeneratorLabel::VPlus,
        },
        Generator {
            matrix: v_minus,
            label: GeneratorLabel::VMinus,
        },
    ))
}
