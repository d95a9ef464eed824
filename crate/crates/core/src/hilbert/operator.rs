//! Sparse operators over a declared basis.
//!
//! Hamiltonians here are tridiagonal per excitation block and the jump
//! operators carry one entry per column, so compressed sparse rows beat
//! dense storage by orders of magnitude in the master-equation right-hand
//! side. Density matrices stay dense (`ndarray::Array2`).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::{Basis, ProductBasis, Slot};
use crate::{Error, Result};

/// Hermiticity tolerance for operators declared as Hamiltonians.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Compressed-sparse-row storage; rows and columns share the dimension.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<C64>,
}

impl Csr {
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.retain(|&(_, _, v)| v != C64::ZERO);
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut iter = triplets.into_iter().peekable();
        for r in 0..n {
            while let Some(&(tr, c, v)) = iter.peek() {
                if tr != r {
                    break;
                }
                iter.next();
                // merge duplicates: last entry is in this row and same column
                if cols.len() > row_ptr[r] && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.cols[lo..hi]
            .iter()
            .zip(&self.vals[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// y += alpha * A x
    pub fn acc_vec(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = C64::ZERO;
            for (c, v) in self.row(r) {
                acc += v * x[c];
            }
            *yr += alpha * acc;
        }
    }

    /// out += alpha * A B, with B and out flat row-major n x n.
    pub fn acc_mul_left(&self, alpha: C64, b: &[C64], out: &mut [C64]) {
        let n = self.n;
        for r in 0..n {
            let orow = &mut out[r * n..(r + 1) * n];
            for (k, v) in self.row(r) {
                let av = alpha * v;
                let brow = &b[k * n..(k + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }
    }

    /// out += alpha * B A, with B and out flat row-major n x n.
    pub fn acc_mul_right(&self, alpha: C64, b: &[C64], out: &mut [C64]) {
        let n = self.n;
        for i in 0..n {
            let brow = &b[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (k, &bv) in brow.iter().enumerate() {
                if bv == C64::ZERO {
                    continue;
                }
                let abv = alpha * bv;
                for (j, v) in self.row(k) {
                    orow[j] += abv * v;
                }
            }
        }
    }

    pub fn dagger(&self) -> Csr {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v.conj()));
            }
        }
        Csr::from_triplets(self.n, triplets)
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.n, self.n));
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[[r, c]] += v;
            }
        }
        m
    }

    /// max |A - A†| over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dagger();
        let mut dev: f64 = 0.0;
        for r in 0..self.n {
            let mut a: Vec<(usize, C64)> = self.row(r).collect();
            let b: Vec<(usize, C64)> = d.row(r).collect();
            for (c, v) in b {
                if let Some(slot) = a.iter_mut().find(|(ac, _)| *ac == c) {
                    slot.1 -= v;
                } else {
                    a.push((c, -v));
                }
            }
            for (_, v) in a {
                dev = dev.max(v.norm());
            }
        }
        dev
    }
}

/// Sparse complex matrix tagged with the basis it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    basis: Basis,
    csr: Csr,
}

impl Operator {
    pub fn from_triplets(basis: Basis, triplets: Vec<(usize, usize, C64)>) -> Self {
        let n = basis.dim();
        debug_assert!(triplets.iter().all(|&(r, c, _)| r < n && c < n));
        Operator {
            csr: Csr::from_triplets(n, triplets),
            basis,
        }
    }

    /// Zero operator.
    pub fn zero(basis: Basis) -> Self {
        Operator {
            csr: Csr::from_triplets(basis.dim(), Vec::new()),
            basis,
        }
    }

    pub fn identity(basis: Basis) -> Self {
        let n = basis.dim();
        let triplets = (0..n).map(|i| (i, i, C64::ONE)).collect();
        Operator::from_triplets(basis, triplets)
    }

    /// Bosonic annihilation operator on a single mode: <n-1|a|n> = sqrt(n).
    pub fn annihilation(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(format!(
                "annihilation operator needs dim >= 2, got {dim}"
            )));
        }
        let triplets = (1..dim)
            .map(|n| (n - 1, n, C64::from((n as f64).sqrt())))
            .collect();
        Ok(Operator::from_triplets(Basis::Mode(dim), triplets))
    }

    pub fn creation(dim: usize) -> Result<Self> {
        Ok(Self::annihilation(dim)?.dagger())
    }

    /// Number operator a†a.
    pub fn number(dim: usize) -> Self {
        let triplets = (0..dim).map(|n| (n, n, C64::from(n as f64))).collect();
        Operator::from_triplets(Basis::Mode(dim), triplets)
    }

    /// Atom lowering operator |G><R| on the two-level slot (G = 0, R = 1).
    pub fn atom_lowering() -> Self {
        Operator::from_triplets(Basis::Mode(2), vec![(0, 1, C64::ONE)])
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.csr.n
    }

    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    pub(crate) fn csr(&self) -> &Csr {
        &self.csr
    }

    /// Lift a single-slot operator to the full product space, identity on
    /// the other slots.
    pub fn embed(&self, slot: Slot, basis: &ProductBasis) -> Result<Operator> {
        let sd = basis.slot_dim(slot);
        if self.dim() != sd {
            return Err(Error::InvalidDimension(format!(
                "operator dim {} does not match {:?} slot dim {}",
                self.dim(),
                slot,
                sd
            )));
        }
        let [dm, da, do_] = basis.dims();
        let mut triplets = Vec::new();
        let idx = |m: usize, a: usize, o: usize| (m * da + a) * do_ + o;
        for r in 0..sd {
            for (c, v) in self.csr.row(r) {
                match slot {
                    Slot::Mw => {
                        for a in 0..da {
                            for o in 0..do_ {
                                triplets.push((idx(r, a, o), idx(c, a, o), v));
                            }
                        }
                    }
                    Slot::Atom => {
                        for m in 0..dm {
                            for o in 0..do_ {
                                triplets.push((idx(m, r, o), idx(m, c, o), v));
                            }
                        }
                    }
                    Slot::Opt => {
                        for m in 0..dm {
                            for a in 0..da {
                                triplets.push((idx(m, a, r), idx(m, a, c), v));
                            }
                        }
                    }
                }
            }
        }
        Ok(Operator::from_triplets(Basis::Product(*basis), triplets))
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            basis: self.basis.clone(),
            csr: self.csr.dagger(),
        }
    }

    pub fn scaled(&self, c: C64) -> Operator {
        let mut out = self.clone();
        for v in &mut out.csr.vals {
            *v *= c;
        }
        out
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(
                "cannot add operators on different bases".into(),
            ));
        }
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for op in [self, other] {
            for r in 0..op.dim() {
                for (c, v) in op.csr.row(r) {
                    triplets.push((r, c, v));
                }
            }
        }
        Ok(Operator::from_triplets(self.basis.clone(), triplets))
    }

    /// A·B as a sparse product.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch(
                "cannot multiply operators on different bases".into(),
            ));
        }
        let mut triplets = Vec::new();
        for r in 0..self.dim() {
            for (k, v) in self.csr.row(r) {
                for (c, w) in other.csr.row(k) {
                    triplets.push((r, c, v * w));
                }
            }
        }
        Ok(Operator::from_triplets(self.basis.clone(), triplets))
    }

    /// y = A x.
    pub fn apply_vec(&self, x: &Array1<C64>) -> Array1<C64> {
        let mut y = Array1::zeros(self.dim());
        self.csr.acc_vec(
            C64::ONE,
            x.as_slice().expect("contiguous"),
            y.as_slice_mut().expect("contiguous"),
        );
        y
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.csr.to_dense()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.csr.hermiticity_deviation()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() < tol
    }

    /// Check the Hamiltonian contract max |H - H†| < 1e-12.
    pub fn ensure_hermitian(&self) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev < HERMITICITY_TOL {
            Ok(())
        } else {
            Err(Error::NotHermitian { deviation: dev })
        }
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.csr
            .row(r)
            .find(|&(cc, _)| cc == c)
            .map(|(_, v)| v)
            .unwrap_or(C64::ZERO)
    }
}
