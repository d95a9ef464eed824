//! Time evolution and observable recording.
//!
//! Closed-system runs integrate the Schrodinger equation on pure state
//! vectors (chain or product basis). Open-system runs integrate the
//! Lindblad master equation on dense density matrices over the product
//! basis, where the jump operators live.

mod rk;

pub use rk::{integrate, StepStats, StepperOptions};

use ndarray::{Array1, ArrayView2};
use num_complex::Complex64 as C64;

use crate::hamiltonians::DrivenHamiltonian;
use crate::hilbert::{
    chain_to_product_embedding, Basis, FockChain, Operator, ProductBasis, QuantumState, Slot,
    StatePayload,
};
use crate::linalg;
use crate::{Error, Result};

/// Open-system rates, rad/us. Zero-temperature dissipators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRates {
    pub gamma0: f64,
    pub kappa_m: f64,
    pub kappa_o: f64,
}

impl DecayRates {
    pub fn new(gamma0: f64, kappa_m: f64, kappa_o: f64) -> Result<Self> {
        for (name, r) in [
            ("gamma0", gamma0),
            ("kappa_m", kappa_m),
            ("kappa_o", kappa_o),
        ] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "decay rate {name} must be finite and non-negative, got {r}"
                )));
            }
        }
        Ok(DecayRates {
            gamma0,
            kappa_m,
            kappa_o,
        })
    }

    pub fn zero() -> Self {
        DecayRates {
            gamma0: 0.0,
            kappa_m: 0.0,
            kappa_o: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gamma0 == 0.0 && self.kappa_m == 0.0 && self.kappa_o == 0.0
    }
}

/// Jump operators sqrt(G0)|G><R|, sqrt(km) b, sqrt(ko) a on the product
/// basis; zero-rate channels are dropped.
pub fn jump_operators(basis: &ProductBasis, rates: &DecayRates) -> Result<Vec<Operator>> {
    let mut jumps = Vec::new();
    if rates.gamma0 > 0.0 {
        let low = Operator::atom_lowering().embed(Slot::Atom, basis)?;
        jumps.push(low.scaled(C64::from(rates.gamma0.sqrt())));
    }
    if rates.kappa_m > 0.0 {
        let b = Operator::annihilation(basis.slot_dim(Slot::Mw))?.embed(Slot::Mw, basis)?;
        jumps.push(b.scaled(C64::from(rates.kappa_m.sqrt())));
    }
    if rates.kappa_o > 0.0 {
        let a = Operator::annihilation(basis.slot_dim(Slot::Opt))?.embed(Slot::Opt, basis)?;
        jumps.push(a.scaled(C64::from(rates.kappa_o.sqrt())));
    }
    Ok(jumps)
}

/// tr(op * state), with the Hermiticity of `op` and the reality of the
/// result both checked.
pub fn expectation(op: &Operator, state: &QuantumState) -> Result<f64> {
    op.ensure_hermitian()?;
    if op.basis() != state.basis() {
        return Err(Error::BasisMismatch(
            "observable and state bases differ".into(),
        ));
    }
    let val = match state.payload() {
        StatePayload::Pure(psi) => {
            let opsi = op.apply_vec(psi);
            psi.iter()
                .zip(opsi.iter())
                .map(|(p, o)| p.conj() * o)
                .sum::<C64>()
        }
        StatePayload::Density(rho) => {
            let mut acc = C64::ZERO;
            for r in 0..op.dim() {
                for (k, v) in op.csr().row(r) {
                    acc += v * rho[[k, r]];
                }
            }
            acc
        }
    };
    if val.im.abs() > 1e-10 {
        return Err(Error::InvalidState(format!(
            "expectation value has imaginary residue {:e}",
            val.im
        )));
    }
    Ok(val.re)
}

/// Populations on the 2N+1 chain sites, for states on the chain basis
/// itself or on a product basis containing the chain's excitation block.
pub fn site_populations(state: &QuantumState, chain: &FockChain) -> Result<Vec<f64>> {
    match state.basis() {
        Basis::Chain(c) => {
            if c != chain {
                return Err(Error::BasisMismatch(
                    "state lives on a different chain".into(),
                ));
            }
            Ok(state.populations())
        }
        Basis::Product(p) => {
            let map = chain_to_product_embedding(chain, p)?;
            let pops = state.populations();
            Ok(map.into_iter().map(|i| pops[i]).collect())
        }
        Basis::Mode(_) => Err(Error::BasisMismatch(
            "single-mode states carry no chain sites".into(),
        )),
    }
}

/// Observables evaluated at every output point, each yielding one column.
enum ObsKind {
    /// sum_i w_i * p_i over basis populations.
    Diagonal(Vec<f64>),
    /// tr(O rho) for sparse Hermitian O.
    Operator(Operator),
    /// <phi| rho |phi> against a fixed pure vector.
    Projector(Array1<C64>),
    /// Norm (pure) or trace (density).
    Weight,
}

pub struct ObservableSet {
    dim: usize,
    items: Vec<(String, ObsKind)>,
}

impl ObservableSet {
    pub fn new(dim: usize) -> Self {
        ObservableSet {
            dim,
            items: Vec::new(),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.items.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn push_diagonal(&mut self, name: impl Into<String>, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.dim {
            return Err(Error::InvalidDimension(format!(
                "diagonal weights length {} does not match dim {}",
                weights.len(),
                self.dim
            )));
        }
        self.items.push((name.into(), ObsKind::Diagonal(weights)));
        Ok(())
    }

    pub fn push_operator(&mut self, name: impl Into<String>, op: Operator) -> Result<()> {
        op.ensure_hermitian()?;
        if op.dim() != self.dim {
            return Err(Error::InvalidDimension(format!(
                "operator dim {} does not match dim {}",
                op.dim(),
                self.dim
            )));
        }
        self.items.push((name.into(), ObsKind::Operator(op)));
        Ok(())
    }

    pub fn push_projector(&mut self, name: impl Into<String>, target: &QuantumState) -> Result<()> {
        let phi = target.as_pure().ok_or_else(|| {
            Error::InvalidState("projector observable needs a pure target".into())
        })?;
        if phi.len() != self.dim {
            return Err(Error::InvalidDimension(format!(
                "projector length {} does not match dim {}",
                phi.len(),
                self.dim
            )));
        }
        self.items
            .push((name.into(), ObsKind::Projector(phi.clone())));
        Ok(())
    }

    pub fn push_weight(&mut self, name: impl Into<String>) {
        self.items.push((name.into(), ObsKind::Weight));
    }

    fn eval_pure(&self, psi: &[C64], out: &mut Vec<f64>) {
        for (_, kind) in &self.items {
            let v = match kind {
                ObsKind::Diagonal(w) => psi
                    .iter()
                    .zip(w)
                    .map(|(c, w)| w * c.norm_sqr())
                    .sum::<f64>(),
                ObsKind::Operator(op) => {
                    let mut acc = C64::ZERO;
                    for r in 0..psi.len() {
                        let mut row = C64::ZERO;
                        for (k, v) in op.csr().row(r) {
                            row += v * psi[k];
                        }
                        acc += psi[r].conj() * row;
                    }
                    acc.re
                }
                ObsKind::Projector(phi) => phi
                    .iter()
                    .zip(psi)
                    .map(|(a, b)| a.conj() * b)
                    .sum::<C64>()
                    .norm_sqr(),
                ObsKind::Weight => psi.iter().map(|c| c.norm_sqr()).sum(),
            };
            out.push(v);
        }
    }

    fn eval_density(&self, rho: &ArrayView2<C64>, out: &mut Vec<f64>) {
        let n = rho.nrows();
        for (_, kind) in &self.items {
            let v = match kind {
                ObsKind::Diagonal(w) => (0..n).map(|i| w[i] * rho[[i, i]].re).sum::<f64>(),
                ObsKind::Operator(op) => {
                    let mut acc = C64::ZERO;
                    for r in 0..n {
                        for (k, v) in op.csr().row(r) {
                            acc += v * rho[[k, r]];
                        }
                    }
                    acc.re
                }
                ObsKind::Projector(phi) => {
                    let mut acc = C64::ZERO;
                    for i in 0..n {
                        let mut row = C64::ZERO;
                        for j in 0..n {
                            row += rho[[i, j]] * phi[j];
                        }
                        acc += phi[i].conj() * row;
                    }
                    acc.re
                }
                ObsKind::Weight => (0..n).map(|i| rho[[i, i]].re).sum::<f64>(),
            };
            out.push(v);
        }
    }
}

/// One recorded run: times, named observable columns, optional snapshots.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub snapshots: Vec<(usize, QuantumState)>,
    pub stats: StepStats,
    /// Most negative density eigenvalue seen at positivity probes.
    pub min_eig_observed: Option<f64>,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub stepper: StepperOptions,
    /// Record a state snapshot every this many grid points (always
    /// includes the final point when set).
    pub snapshot_stride: Option<usize>,
    /// Number of evenly spaced eigenvalue checks on the density matrix.
    pub positivity_checks: usize,
    /// Allowed drift of the norm (pure) or trace (density) at outputs.
    pub weight_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            stepper: StepperOptions::default(),
            snapshot_stride: None,
            positivity_checks: 16,
            weight_tol: 1e-6,
        }
    }
}

/// Density eigenvalues below this are only recorded, not fatal.
pub const POSITIVITY_WARN: f64 = -1e-6;
/// Density eigenvalues below this abort the run.
pub const POSITIVITY_ABORT: f64 = -1e-4;

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(Error::InvalidParameter(
            "output grid must start at t = 0 and hold at least two points".into(),
        ));
    }
    if !grid.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(
            "output grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Evenly spaced grid over [0, t_end] with exact endpoints.
pub fn time_grid(t_end: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end > 0.0) || points < 2 {
        return Err(Error::InvalidParameter(format!(
            "time grid needs t_end > 0 and >= 2 points, got ({t_end}, {points})"
        )));
    }
    let mut g: Vec<f64> = (0..points)
        .map(|k| t_end * k as f64 / (points - 1) as f64)
        .collect();
    g[points - 1] = t_end;
    Ok(g)
}

fn want_snapshot(idx: usize, last: usize, stride: Option<usize>) -> bool {
    match stride {
        None => false,
        Some(s) => idx.is_multiple_of(s.max(1)) || idx == last,
    }
}

/// Integrate i d|psi>/dt = H(t)|psi> and record observables on `grid`.
pub fn evolve_schrodinger(
    h: &DrivenHamiltonian,
    psi0: &QuantumState,
    grid: &[f64],
    obs: &ObservableSet,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    validate_grid(grid)?;
    if psi0.basis() != h.basis() {
        return Err(Error::BasisMismatch(
            "initial state and Hamiltonian bases differ".into(),
        ));
    }
    let psi = psi0
        .as_pure()
        .ok_or_else(|| Error::InvalidState("Schrodinger evolution needs a pure state".into()))?;
    if obs.dim != h.dim() {
        return Err(Error::BasisMismatch(
            "observable set sized for a different basis".into(),
        ));
    }

    let mut y: Vec<C64> = psi.to_vec();
    let mut times = Vec::with_capacity(grid.len());
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    let mut snapshots = Vec::new();
    let last = grid.len() - 1;
    let minus_i = C64::new(0.0, -1.0);

    let stats = integrate(
        |t, y, dy| {
            dy.fill(C64::ZERO);
            h.acc_apply(t, minus_i, y, dy);
        },
        |_| {},
        &mut y,
        grid,
        &opts.stepper,
        |idx, t, y| {
            let norm: f64 = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > opts.weight_tol {
                return Err(Error::WeightDrift {
                    t,
                    weight: norm,
                    tol: opts.weight_tol,
                });
            }
            times.push(t);
            let mut row = Vec::with_capacity(obs.items.len());
            obs.eval_pure(y, &mut row);
            rows.push(row);
            if want_snapshot(idx, last, opts.snapshot_stride) {
                let arr = Array1::from_vec(y.to_vec());
                let renorm = arr.mapv(|c| c / norm);
                snapshots.push((idx, QuantumState::pure(h.basis().clone(), renorm)?));
            }
            Ok(())
        },
    )?;

    Ok(Trajectory {
        times,
        columns: assemble_columns(obs, rows),
        snapshots,
        stats,
        min_eig_observed: None,
    })
}

/// Integrate the Lindblad master equation
/// d rho/dt = -i[H, rho] + sum_k (L rho L† - {L†L, rho}/2)
/// on the product basis and record observables on `grid`.
pub fn evolve_lindblad(
    h: &DrivenHamiltonian,
    rho0: &QuantumState,
    rates: &DecayRates,
    grid: &[f64],
    obs: &ObservableSet,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    validate_grid(grid)?;
    if rho0.basis() != h.basis() {
        return Err(Error::BasisMismatch(
            "initial state and Hamiltonian bases differ".into(),
        ));
    }
    let product = match h.basis() {
        Basis::Product(p) => *p,
        other => {
            return Err(Error::BasisMismatch(format!(
                "master equation runs on the product basis, got {}",
                other.descriptor()
            )))
        }
    };
    if obs.dim != h.dim() {
        return Err(Error::BasisMismatch(
            "observable set sized for a different basis".into(),
        ));
    }

    let n = h.dim();
    let jumps = jump_operators(&product, rates)?;
    // precompute L† and K = L†L per channel
    let channels: Vec<(Operator, Operator, Operator)> = jumps
        .into_iter()
        .map(|l| {
            let ld = l.dagger();
            let k = ld.matmul(&l).expect("same basis");
            (l, ld, k)
        })
        .collect();

    let rho_start = rho0.density_matrix();
    let mut y: Vec<C64> = rho_start.iter().copied().collect();
    let mut tmp = vec![C64::ZERO; n * n];

    let mut times = Vec::with_capacity(grid.len());
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    let mut snapshots = Vec::new();
    let last = grid.len() - 1;
    let check_stride = (grid.len() / opts.positivity_checks.max(1)).max(1);
    let mut min_eig: Option<f64> = None;
    let minus_i = C64::new(0.0, -1.0);
    let half = C64::from(0.5);

    let stats = integrate(
        |t, y, dy| {
            dy.fill(C64::ZERO);
            h.acc_commutator(t, minus_i, y, dy);
            for (l, ld, k) in &channels {
                // L rho L† through one scratch product
                tmp.fill(C64::ZERO);
                l.csr().acc_mul_left(C64::ONE, y, &mut tmp);
                ld.csr().acc_mul_right(C64::ONE, &tmp, dy);
                k.csr().acc_mul_left(-half, y, dy);
                k.csr().acc_mul_right(-half, y, dy);
            }
        },
        |y| {
            // restore Hermiticity lost to roundoff
            for i in 0..n {
                for j in (i + 1)..n {
                    let a = y[i * n + j];
                    let b = y[j * n + i];
                    let sym = half * (a + b.conj());
                    y[i * n + j] = sym;
                    y[j * n + i] = sym.conj();
                }
                y[i * n + i] = C64::from(y[i * n + i].re);
            }
        },
        &mut y,
        grid,
        &opts.stepper,
        |idx, t, y| {
            let rho = ArrayView2::from_shape((n, n), y).expect("square payload");
            let trace: f64 = (0..n).map(|i| rho[[i, i]].re).sum();
            if (trace - 1.0).abs() > opts.weight_tol {
                return Err(Error::WeightDrift {
                    t,
                    weight: trace,
                    tol: opts.weight_tol,
                });
            }
            if idx % check_stride == 0 || idx == last {
                let lowest = linalg::min_eigval(&rho.to_owned());
                if lowest < POSITIVITY_ABORT {
                    return Err(Error::PositivityViolation { t, min_eig: lowest });
                }
                min_eig = Some(min_eig.map_or(lowest, |m: f64| m.min(lowest)));
            }
            times.push(t);
            let mut row = Vec::with_capacity(obs.items.len());
            obs.eval_density(&rho, &mut row);
            rows.push(row);
            if want_snapshot(idx, last, opts.snapshot_stride) {
                let mut owned = rho.to_owned();
                owned.mapv_inplace(|v| v / trace);
                snapshots.push((
                    idx,
                    QuantumState::density_unchecked(Basis::Product(product), owned),
                ));
            }
            Ok(())
        },
    )?;

    Ok(Trajectory {
        times,
        columns: assemble_columns(obs, rows),
        snapshots,
        stats,
        min_eig_observed: min_eig,
    })
}

fn assemble_columns(obs: &ObservableSet, rows: Vec<Vec<f64>>) -> Vec<(String, Vec<f64>)> {
    let mut columns: Vec<(String, Vec<f64>)> = obs
        .items
        .iter()
        .map(|(n, _)| (n.clone(), Vec::with_capacity(rows.len())))
        .collect();
    for row in rows {
        for (col, v) in columns.iter_mut().zip(row) {
            col.1.push(v);
        }
    }
    columns
}
