//! Dense operators on the three-site Hilbert space E1 ⊗ E2 ⊗ M.
//!
//! Every site is a two-level system with basis {|g⟩, |e⟩} (index 0, 1). The
//! composite basis index is `4·e1 + 2·e2 + m`, i.e. the first factor of the
//! tensor product is the most significant bit.

use nalgebra::{DMatrix, Matrix2, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dimension of the composite Hilbert space.
pub const DIM: usize = 8;

/// Operator on the composite space.
pub type Operator = SMatrix<C64, DIM, DIM>;

/// State vector on the composite space.
pub type Ket = SVector<C64, DIM>;

/// General dense complex matrix.
pub type ComplexMatrix = DMatrix<C64>;

/// Element-wise tolerance used for Hermiticity checks on operators.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Emitter1,
    Emitter2,
    Memory,
}

impl Site {
    pub const ALL: [Site; 3] = [Site::Emitter1, Site::Emitter2, Site::Memory];

    /// Position in the tensor product.
    pub fn index(self) -> usize {
        match self {
            Site::Emitter1 => 0,
            Site::Emitter2 => 1,
            Site::Memory => 2,
        }
    }
}

/// A 2×2 operator acting on one site.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteOperator {
    pub site: Site,
    pub local: Matrix2<C64>,
}

impl SiteOperator {
    pub fn new(site: Site, local: Matrix2<C64>) -> Self {
        Self { site, local }
    }

    pub fn lowering(site: Site) -> Self {
        Self::new(site, lowering())
    }

    pub fn raising(site: Site) -> Self {
        Self::new(site, lowering().adjoint())
    }

    pub fn number(site: Site) -> Self {
        Self::new(site, number())
    }
}

/// σ₋ = |g⟩⟨e|.
pub fn lowering() -> Matrix2<C64> {
    Matrix2::new(ZERO, ONE, ZERO, ZERO)
}

/// σ₊σ₋ = |e⟩⟨e|.
pub fn number() -> Matrix2<C64> {
    Matrix2::new(ZERO, ZERO, ZERO, ONE)
}

pub fn identity2() -> Matrix2<C64> {
    Matrix2::identity()
}

fn to_dynamic(m: &Matrix2<C64>) -> ComplexMatrix {
    DMatrix::from_fn(2, 2, |r, c| m[(r, c)])
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Lift a single-site operator to the composite space.
pub fn embed(op: &SiteOperator) -> Operator {
    let factors: Vec<ComplexMatrix> = Site::ALL
        .iter()
        .map(|&s| {
            if s == op.site {
                to_dynamic(&op.local)
            } else {
                to_dynamic(&identity2())
            }
        })
        .collect();
    let full = kron(&kron(&factors[0], &factors[1]), &factors[2]);
    Operator::from_fn(|r, c| full[(r, c)])
}

/// Basis index of the product state with the given excitations.
pub fn basis_index(e1: bool, e2: bool, m: bool) -> usize {
    4 * e1 as usize + 2 * e2 as usize + m as usize
}

pub fn basis_ket(e1: bool, e2: bool, m: bool) -> Ket {
    let mut k = Ket::zeros();
    k[basis_index(e1, e2, m)] = ONE;
    k
}

/// Largest element-wise deviation `max|A − A†|`.
pub fn hermiticity_error(a: &Operator) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..DIM {
        for c in r..DIM {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &Operator) -> bool {
    hermiticity_error(a) <= HERMITIAN_TOL
}

/// Max-abs entry.
pub fn max_abs(a: &Operator) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// `Tr(op·ρ)` for a dynamically sized operator.
pub fn expect_dyn(op: &ComplexMatrix, rho: &DensityMatrix) -> Result<C64> {
    if op.nrows() != DIM || op.ncols() != DIM {
        return Err(Error::DimensionMismatch {
            expected: (DIM, DIM),
            found: (op.nrows(), op.ncols()),
        });
    }
    let op = Operator::from_fn(|r, c| op[(r, c)]);
    Ok(expect(&op, rho))
}

/// `Tr(op·ρ)`.
pub fn expect(op: &Operator, rho: &DensityMatrix) -> C64 {
    trace_product(op, rho.as_operator())
}

/// `Tr(a·b)` without forming the product.
pub fn trace_product(a: &Operator, b: &Operator) -> C64 {
    let mut acc = ZERO;
    for r in 0..DIM {
        for k in 0..DIM {
            acc += a[(r, k)] * b[(k, r)];
        }
    }
    acc
}

/// Tolerances for a physical density matrix.
pub const RHO_HERMITIAN_TOL: f64 = 1e-10;
pub const RHO_TRACE_TOL: f64 = 1e-8;
pub const RHO_EIGEN_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive semidefinite state of the composite space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Operator);

/// Diagnostics of how far a matrix is from a valid density matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDiagnostics {
    pub hermiticity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.hermiticity <= RHO_HERMITIAN_TOL
            && self.trace_error <= RHO_TRACE_TOL
            && self.min_eigenvalue >= -RHO_EIGEN_TOL
    }
}

impl DensityMatrix {
    /// |ggg⟩⟨ggg|.
    pub fn ground() -> Self {
        Self::from_pure(&basis_ket(false, false, false))
    }

    /// |ψ⟩⟨ψ| for a normalized copy of `psi`.
    pub fn from_pure(psi: &Ket) -> Self {
        let psi = psi / C64::from(psi.norm());
        Self(psi * psi.adjoint())
    }

    /// Validate and wrap an operator.
    pub fn new(op: Operator) -> Result<Self> {
        let d = diagnose(&op);
        if d.is_valid() {
            Ok(Self(op))
        } else {
            Err(Error::InvalidState(d))
        }
    }

    /// Wrap without validation; for integrator internals and tests.
    pub fn new_unchecked(op: Operator) -> Self {
        Self(op)
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        diagnose(&self.0)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.0[(index, index)].re
    }
}

pub fn min_eigenvalue(op: &Operator) -> f64 {
    let herm = (op + op.adjoint()) * C64::from(0.5);
    herm.symmetric_eigenvalues().min()
}

fn diagnose(op: &Operator) -> StateDiagnostics {
    StateDiagnostics {
        hermiticity: hermiticity_error(op),
        trace_error: (op.trace() - ONE).norm(),
        min_eigenvalue: min_eigenvalue(op),
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn op_strategy() -> impl Strategy<Value = Operator> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), DIM * DIM)
            .prop_map(|v| Operator::from_iterator(v.into_iter().map(|(re, im)| C64::new(re, im))))
    }

    fn state_strategy() -> impl Strategy<Value = DensityMatrix> {
        op_strategy().prop_map(|a| {
            let p = a * a.adjoint();
            let tr = p.trace();
            DensityMatrix::new_unchecked(p / tr)
        })
    }

    proptest! {
        #[test]
        fn adjoint_expectation_is_conjugate(a in op_strategy(), rho in state_strategy()) {
            let lhs = expect(&a.adjoint(), &rho);
            let rhs = expect(&a, &rho).conj();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
