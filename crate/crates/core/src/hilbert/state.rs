//! State storage and reduction.
//!
//! Pure states are kept as amplitude vectors for closed evolution; the
//! master equation promotes to a dense density matrix. Construction checks
//! normalization, hermiticity and positivity up front so downstream code
//! can assume a physical state.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::{Basis, Slot};
use crate::linalg;
use crate::{Error, Result};

/// Norm / trace tolerance for state constructors.
pub const STATE_NORM_TOL: f64 = 1e-10;
/// Eigenvalue floor below which a density matrix is rejected.
pub const STATE_EIG_FLOOR: f64 = -1e-8;

#[derive(Clone, Debug)]
pub enum StatePayload {
    Pure(Array1<C64>),
    Density(Array2<C64>),
}

#[derive(Clone, Debug)]
pub struct QuantumState {
    basis: Basis,
    payload: StatePayload,
}

impl QuantumState {
    pub fn pure(basis: Basis, amps: Array1<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::BasisMismatch(format!(
                "amplitude vector length {} does not match basis dim {}",
                amps.len(),
                basis.dim()
            )));
        }
        let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::InvalidState(format!(
                "pure state norm {norm} deviates from 1 beyond {STATE_NORM_TOL:e}"
            )));
        }
        Ok(QuantumState {
            basis,
            payload: StatePayload::Pure(amps),
        })
    }

    pub fn density(basis: Basis, rho: Array2<C64>) -> Result<Self> {
        let n = basis.dim();
        if rho.shape() != [n, n] {
            return Err(Error::BasisMismatch(format!(
                "density matrix shape {:?} does not match basis dim {}",
                rho.shape(),
                n
            )));
        }
        let mut herm_dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                herm_dev = herm_dev.max((rho[[i, j]] - rho[[j, i]].conj()).norm());
            }
        }
        if herm_dev > STATE_NORM_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix hermiticity deviation {herm_dev:e}"
            )));
        }
        let trace: C64 = (0..n).map(|i| rho[[i, i]]).sum();
        if (trace.re - 1.0).abs() > STATE_NORM_TOL || trace.im.abs() > STATE_NORM_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace {trace} deviates from 1"
            )));
        }
        let min_eig = linalg::min_eigval(&rho);
        if min_eig < STATE_EIG_FLOOR {
            return Err(Error::InvalidState(format!(
                "density matrix has eigenvalue {min_eig:e} below floor {STATE_EIG_FLOOR:e}"
            )));
        }
        Ok(QuantumState {
            basis,
            payload: StatePayload::Density(rho),
        })
    }

    /// Density payload from internal plumbing that already guarantees the
    /// physical invariants (integrator outputs are trace-normalized,
    /// symmetrized and positivity-monitored separately).
    pub(crate) fn density_unchecked(basis: Basis, rho: Array2<C64>) -> Self {
        debug_assert_eq!(rho.nrows(), basis.dim());
        QuantumState {
            basis,
            payload: StatePayload::Density(rho),
        }
    }

    /// Unit vector on the given basis index.
    pub fn basis_state(basis: Basis, index: usize) -> Result<Self> {
        let n = basis.dim();
        if index >= n {
            return Err(Error::InvalidState(format!(
                "basis index {index} out of range for dim {n}"
            )));
        }
        let mut amps = Array1::zeros(n);
        amps[index] = C64::ONE;
        QuantumState::pure(basis, amps)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn payload(&self) -> &StatePayload {
        &self.payload
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.payload, StatePayload::Pure(_))
    }

    pub fn as_pure(&self) -> Option<&Array1<C64>> {
        match &self.payload {
            StatePayload::Pure(a) => Some(a),
            StatePayload::Density(_) => None,
        }
    }

    /// Dense density matrix view of the state (outer product for pure).
    pub fn density_matrix(&self) -> Array2<C64> {
        match &self.payload {
            StatePayload::Pure(psi) => {
                let n = psi.len();
                Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj())
            }
            StatePayload::Density(rho) => rho.clone(),
        }
    }

    /// Promote a pure state to density form in place.
    pub fn promote(self) -> Self {
        match self.payload {
            StatePayload::Pure(_) => {
                let rho = self.density_matrix();
                QuantumState {
                    basis: self.basis,
                    payload: StatePayload::Density(rho),
                }
            }
            StatePayload::Density(_) => self,
        }
    }

    /// Diagonal populations in the declared enumeration order.
    pub fn populations(&self) -> Vec<f64> {
        match &self.payload {
            StatePayload::Pure(psi) => psi.iter().map(|c| c.norm_sqr()).collect(),
            StatePayload::Density(rho) => (0..rho.nrows()).map(|i| rho[[i, i]].re).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.populations().iter().sum()
    }
}

/// Trace out one tensor axis of a density matrix whose row index factors
/// into `dims` (row-major, leftmost slowest).
pub fn trace_axis(rho: &Array2<C64>, dims: &[usize], axis: usize) -> Array2<C64> {
    assert!(axis < dims.len());
    let d_t = dims[axis];
    let s_t: usize = dims[axis + 1..].iter().product();
    let p_t: usize = dims[..axis].iter().product();
    debug_assert_eq!(rho.nrows(), p_t * d_t * s_t);
    let dr = p_t * s_t;
    let mut out = Array2::zeros((dr, dr));
    for a in 0..p_t {
        for b in 0..s_t {
            let i_red = a * s_t + b;
            for a2 in 0..p_t {
                for b2 in 0..s_t {
                    let j_red = a2 * s_t + b2;
                    let mut acc = C64::ZERO;
                    for s in 0..d_t {
                        let i = (a * d_t + s) * s_t + b;
                        let j = (a2 * d_t + s) * s_t + b2;
                        acc += rho[[i, j]];
                    }
                    out[[i_red, j_red]] = acc;
                }
            }
        }
    }
    out
}

/// Reduced state of one slot of a product-basis state; the other two slots
/// are traced out. The result lives on a bare mode basis.
pub fn partial_trace(state: &QuantumState, keep: Slot) -> Result<QuantumState> {
    let product = match state.basis() {
        Basis::Product(p) => *p,
        other => {
            return Err(Error::BasisMismatch(format!(
                "partial trace needs a product basis, got {}",
                other.descriptor()
            )))
        }
    };
    let dims = product.dims();
    let keep_axis = match keep {
        Slot::Mw => 0,
        Slot::Atom => 1,
        Slot::Opt => 2,
    };
    let mut rho = state.density_matrix();
    let mut cur: Vec<usize> = dims.to_vec();
    // trace higher axes first so the kept axis index stays valid
    for axis in (0..3).rev() {
        if axis == keep_axis {
            continue;
        }
        rho = trace_axis(&rho, &cur, axis);
        cur.remove(axis);
    }
    let trace: C64 = (0..rho.nrows()).map(|i| rho[[i, i]]).sum();
    debug_assert!(
        (trace.re - state.trace()).abs() < 1e-10 && trace.im.abs() < 1e-10,
        "partial trace changed the trace: {trace}"
    );
    Ok(QuantumState::density_unchecked(
        Basis::Mode(dims[keep_axis]),
        rho,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{AtomLevel, ProductBasis, SiteLabel};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pure_constructor_enforces_norm() {
        let basis = Basis::Mode(2);
        assert!(QuantumState::pure(basis.clone(), array![C64::ONE, C64::ONE]).is_err());
        let s = 0.5_f64.sqrt();
        assert!(QuantumState::pure(basis, array![c(s, 0.0), c(0.0, s)]).is_ok());
    }

    #[test]
    fn density_constructor_rejects_unphysical() {
        let basis = Basis::Mode(2);
        // trace 2
        let rho = array![[C64::ONE, C64::ZERO], [C64::ZERO, C64::ONE]];
        assert!(QuantumState::density(basis.clone(), rho).is_err());
        // non-hermitian
        let rho = array![[C64::ONE, c(0.1, 0.0)], [C64::ZERO, C64::ZERO]];
        assert!(QuantumState::density(basis.clone(), rho).is_err());
        // negative eigenvalue: diag(1.5, -0.5)
        let rho = array![[c(1.5, 0.0), C64::ZERO], [C64::ZERO, c(-0.5, 0.0)]];
        assert!(QuantumState::density(basis.clone(), rho).is_err());
        let rho = array![[C64::ONE, C64::ZERO], [C64::ZERO, C64::ZERO]];
        assert!(QuantumState::density(basis, rho).is_ok());
    }

    #[test]
    fn bell_pair_reduces_to_maximally_mixed() {
        // (|0_m,G,0_o> + |1_m,R,0_o>)/sqrt(2), entangled across MW and atom
        let product = ProductBasis::new(1, 1).unwrap();
        let basis = Basis::Product(product);
        let i0 = product
            .index_of(&SiteLabel {
                n_mw: 0,
                atom: AtomLevel::G,
                n_opt: 0,
            })
            .unwrap();
        let i1 = product
            .index_of(&SiteLabel {
                n_mw: 1,
                atom: AtomLevel::R,
                n_opt: 0,
            })
            .unwrap();
        let mut amps = Array1::zeros(basis.dim());
        let s = 0.5_f64.sqrt();
        amps[i0] = c(s, 0.0);
        amps[i1] = c(s, 0.0);
        let state = QuantumState::pure(basis, amps).unwrap();
        for keep in [Slot::Mw, Slot::Atom] {
            let red = partial_trace(&state, keep).unwrap();
            let rho = red.density_matrix();
            assert_eq!(rho.nrows(), 2);
            assert_abs_diff_eq!(rho[[0, 0]].re, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(rho[[1, 1]].re, 0.5, epsilon = 1e-12);
            assert!(rho[[0, 1]].norm() < 1e-12);
        }
        // the optical slot is unentangled vacuum
        let red = partial_trace(&state, Slot::Opt).unwrap();
        assert_abs_diff_eq!(red.density_matrix()[[0, 0]].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_reduces_to_factor() {
        let product = ProductBasis::new(2, 2).unwrap();
        let idx = product
            .index_of(&SiteLabel {
                n_mw: 1,
                atom: AtomLevel::G,
                n_opt: 2,
            })
            .unwrap();
        let state = QuantumState::basis_state(Basis::Product(product), idx).unwrap();
        let mw = partial_trace(&state, Slot::Mw).unwrap();
        assert_abs_diff_eq!(mw.populations()[1], 1.0, epsilon = 1e-12);
        let opt = partial_trace(&state, Slot::Opt).unwrap();
        assert_abs_diff_eq!(opt.populations()[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn random_reduced_state_is_physical() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let product = ProductBasis::new(2, 1).unwrap();
        let n = product.dim();
        // rho = A A† / tr(A A†) is Hermitian positive by construction
        let a = Array2::from_shape_fn((n, n), |_| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut rho = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::ZERO;
                for k in 0..n {
                    acc += a[[i, k]] * a[[j, k]].conj();
                }
                rho[[i, j]] = acc;
            }
        }
        let tr: f64 = (0..n).map(|i| rho[[i, i]].re).sum();
        rho.mapv_inplace(|v| v / tr);
        let state = QuantumState::density(Basis::Product(product), rho).unwrap();
        for keep in [Slot::Mw, Slot::Atom, Slot::Opt] {
            let red = partial_trace(&state, keep).unwrap();
            let eigs = crate::linalg::eigvalsh(&red.density_matrix());
            let sum: f64 = eigs.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
            for e in eigs {
                assert!((-1e-10..=1.0 + 1e-10).contains(&e), "eigenvalue {e}");
            }
        }
    }

    #[test]
    fn trace_axis_order_does_not_matter() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let dims = [3usize, 2, 2];
        let n: usize = dims.iter().product();
        let a = Array2::from_shape_fn((n, n), |_| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        // keep axis 1: trace 2 then 0, or 0 then 2
        let path_a = {
            let r = trace_axis(&a, &dims, 2);
            trace_axis(&r, &[3, 2], 0)
        };
        let path_b = {
            let r = trace_axis(&a, &dims, 0);
            trace_axis(&r, &[2, 2], 1)
        };
        for i in 0..2 {
            for j in 0..2 {
                assert!((path_a[[i, j]] - path_b[[i, j]]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn promote_preserves_populations() {
        let basis = Basis::Mode(3);
        let s = (1.0_f64 / 3.0).sqrt();
        let amps = array![c(s, 0.0), c(0.0, s), c(-s, 0.0)];
        let pure = QuantumState::pure(basis, amps).unwrap();
        let pops = pure.populations();
        let rho = pure.promote();
        assert!(!rho.is_pure());
        for (p, q) in pops.iter().zip(rho.populations()) {
            assert_abs_diff_eq!(*p, q, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
    }
}
