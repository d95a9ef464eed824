//! Hamiltonian builders.
//!
//! Everything time dependent is expressed through the two-term split
//! H(t) = G_m(t) h_m + G_o(t) h_o, which covers both the photon-number
//! chain and the full product-space model. Coupling disorder is a pair of
//! static multipliers on G_m and G_o, so it lives in the schedule and the
//! split survives.
//!
//! Units: couplings and rates in rad/us, time in us.

use std::f64::consts::FRAC_PI_2;
pub use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::hilbert::{Basis, FockChain, Operator, ProductBasis, Slot};
use crate::{Error, Result};

/// Instantaneous coupling pair (microwave, optical), rad/us.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Couplings {
    pub g_m: f64,
    pub g_o: f64,
}

impl Couplings {
    pub fn new(g_m: f64, g_o: f64) -> Result<Self> {
        if !g_m.is_finite() || !g_o.is_finite() || g_m < 0.0 || g_o < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "couplings must be finite and non-negative, got ({g_m}, {g_o})"
            )));
        }
        Ok(Couplings { g_m, g_o })
    }

    /// Couplings with overall scale `g` and ratio r = g_m / g_o.
    pub fn from_ratio(g: f64, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling ratio must be finite and non-negative, got {ratio}"
            )));
        }
        let scale = g / (1.0 + ratio * ratio).sqrt();
        Couplings::new(scale * ratio, scale)
    }

    /// Overall coupling scale sqrt(g_m^2 + g_o^2).
    pub fn norm(&self) -> f64 {
        self.g_m.hypot(self.g_o)
    }
}

/// Half-period sine pump with optional quenched disorder:
/// G_m(t) = g sin(pi t / 2T) (1 + eps_m), G_o(t) = g cos(pi t / 2T) (1 + eps_o).
///
/// The undisordered schedule keeps G_m^2 + G_o^2 = g^2 at every instant and
/// runs from (0, g) at t = 0 to (g, 0) at t = T.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSchedule {
    g: f64,
    duration: f64,
    eps_m: f64,
    eps_o: f64,
}

impl CouplingSchedule {
    pub fn new(g: f64, duration: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling scale must be positive, got {g}"
            )));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pump duration must be positive, got {duration}"
            )));
        }
        Ok(CouplingSchedule {
            g,
            duration,
            eps_m: 0.0,
            eps_o: 0.0,
        })
    }

    /// Attach one static disorder draw (mode multipliers 1 + eps).
    pub fn with_disorder(self, eps_m: f64, eps_o: f64) -> Result<Self> {
        for (name, eps) in [("eps_m", eps_m), ("eps_o", eps_o)] {
            if !(eps.is_finite() && eps.abs() <= 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "disorder multiplier {name} must lie in [-0.5, 0.5], got {eps}"
                )));
            }
        }
        Ok(CouplingSchedule {
            eps_m,
            eps_o,
            ..self
        })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn disorder(&self) -> (f64, f64) {
        (self.eps_m, self.eps_o)
    }

    /// Couplings at time t; rejects t outside [0, T] (tiny rounding slack).
    pub fn at(&self, t: f64) -> Result<Couplings> {
        let tol = 1e-9 * self.duration;
        if !(-tol..=self.duration + tol).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "schedule evaluated at t = {t} outside [0, {}]",
                self.duration
            )));
        }
        Ok(self.at_clamped(t))
    }

    /// Hot-path variant for integrator stage times, which stay inside
    /// [0, T] up to rounding by construction.
    pub fn at_clamped(&self, t: f64) -> Couplings {
        let t = t.clamp(0.0, self.duration);
        let phase = FRAC_PI_2 * t / self.duration;
        Couplings {
            g_m: self.g * phase.sin() * (1.0 + self.eps_m),
            g_o: self.g * phase.cos() * (1.0 + self.eps_o),
        }
    }
}

/// One quenched disorder draw: eps uniform on [-eta, eta], per mode.
pub fn sample_disorder(eta_m: f64, eta_o: f64, rng: &mut impl Rng) -> Result<(f64, f64)> {
    for (name, eta) in [("eta_m", eta_m), ("eta_o", eta_o)] {
        if !(0.0..=0.5).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "disorder strength {name} must lie in [0, 0.5], got {eta}"
            )));
        }
    }
    let mut draw = |eta: f64| {
        if eta == 0.0 {
            0.0
        } else {
            rng.random_range(-eta..=eta)
        }
    };
    Ok((draw(eta_m), draw(eta_o)))
}

/// Hopping-amplitude rule along the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    /// Photon-number chain: u_j = G_m sqrt(N-j+1), v_j = G_o sqrt(j).
    Fsl,
    /// Uniform reference chain: u_j = G_m, v_j = G_o.
    Ssh,
}

/// A chain Hamiltonian family: hopping rule plus excitation number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainModel {
    pub kind: ChainKind,
    pub excitation: usize,
}

impl ChainModel {
    pub fn new(kind: ChainKind, excitation: usize) -> Result<Self> {
        if excitation == 0 {
            return Err(Error::InvalidParameter(
                "chain excitation number must be >= 1".into(),
            ));
        }
        Ok(ChainModel { kind, excitation })
    }

    pub fn chain(&self) -> FockChain {
        FockChain::new(self.excitation).expect("excitation checked at construction")
    }

    /// Coupling-stripped hopping pair for bond j in 1..=N.
    fn bond_weights(&self, j: usize) -> (f64, f64) {
        match self.kind {
            ChainKind::Fsl => (((self.excitation - j + 1) as f64).sqrt(), (j as f64).sqrt()),
            ChainKind::Ssh => (1.0, 1.0),
        }
    }
}

/// The two coupling-linear pieces of the chain Hamiltonian, so that
/// H(t) = G_m(t) * h_m + G_o(t) * h_o.
pub fn chain_hamiltonian_parts(model: &ChainModel) -> (Operator, Operator) {
    let n = model.excitation;
    let mut tm = Vec::with_capacity(2 * n);
    let mut to = Vec::with_capacity(2 * n);
    for j in 1..=n {
        let (wu, wv) = model.bond_weights(j);
        // sites 2j-1 <-> 2j carry u_j, sites 2j <-> 2j+1 carry v_j (1-based)
        let u = C64::from(wu);
        let v = C64::from(wv);
        tm.push((2 * j - 2, 2 * j - 1, u));
        tm.push((2 * j - 1, 2 * j - 2, u));
        to.push((2 * j - 1, 2 * j, v));
        to.push((2 * j, 2 * j - 1, v));
    }
    let basis = Basis::Chain(model.chain());
    (
        Operator::from_triplets(basis.clone(), tm),
        Operator::from_triplets(basis, to),
    )
}

/// Chain Hamiltonian at fixed couplings.
pub fn chain_hamiltonian(model: &ChainModel, couplings: Couplings) -> Operator {
    let (h_m, h_o) = chain_hamiltonian_parts(model);
    h_m.scaled(C64::from(couplings.g_m))
        .add(&h_o.scaled(C64::from(couplings.g_o)))
        .expect("parts share a basis")
}

/// Coupling-linear pieces of the product-space model:
/// h_m = |R><G| b + h.c., h_o = |R><G| a + h.c.
pub fn dual_mode_jc_parts(basis: &ProductBasis) -> Result<(Operator, Operator)> {
    let raise = Operator::atom_lowering()
        .dagger()
        .embed(Slot::Atom, basis)?;
    let b = Operator::annihilation(basis.slot_dim(Slot::Mw))?.embed(Slot::Mw, basis)?;
    let a = Operator::annihilation(basis.slot_dim(Slot::Opt))?.embed(Slot::Opt, basis)?;
    let m_term = raise.matmul(&b)?;
    let o_term = raise.matmul(&a)?;
    Ok((m_term.add(&m_term.dagger())?, o_term.add(&o_term.dagger())?))
}

/// Product-space model at fixed couplings.
pub fn dual_mode_jc_hamiltonian(basis: &ProductBasis, couplings: Couplings) -> Result<Operator> {
    let (h_m, h_o) = dual_mode_jc_parts(basis)?;
    let h = h_m
        .scaled(C64::from(couplings.g_m))
        .add(&h_o.scaled(C64::from(couplings.g_o)))?;
    h.ensure_hermitian()?;
    Ok(h)
}

/// Total excitation number operator b†b + |R><R| + a†a on the product space.
pub fn excitation_number_operator(basis: &ProductBasis) -> Result<Operator> {
    let n_m = Operator::number(basis.slot_dim(Slot::Mw)).embed(Slot::Mw, basis)?;
    let n_a = Operator::number(2).embed(Slot::Atom, basis)?;
    let n_o = Operator::number(basis.slot_dim(Slot::Opt)).embed(Slot::Opt, basis)?;
    n_m.add(&n_a)?.add(&n_o)
}

/// Time-dependence wrapper the integrators evaluate.
#[derive(Clone, Debug)]
pub enum Drive {
    Static(Couplings),
    Pump(CouplingSchedule),
}

impl Drive {
    pub fn couplings_at(&self, t: f64) -> Couplings {
        match self {
            Drive::Static(c) => *c,
            Drive::Pump(s) => s.at_clamped(t),
        }
    }
}

/// H(t) = G_m(t) h_m + G_o(t) h_o with preassembled sparse parts.
#[derive(Clone, Debug)]
pub struct DrivenHamiltonian {
    h_m: Operator,
    h_o: Operator,
    drive: Drive,
}

impl DrivenHamiltonian {
    pub fn new(h_m: Operator, h_o: Operator, drive: Drive) -> Result<Self> {
        if h_m.basis() != h_o.basis() {
            return Err(Error::BasisMismatch(
                "driven Hamiltonian parts live on different bases".into(),
            ));
        }
        h_m.ensure_hermitian()?;
        h_o.ensure_hermitian()?;
        Ok(DrivenHamiltonian { h_m, h_o, drive })
    }

    pub fn for_chain(model: &ChainModel, drive: Drive) -> Result<Self> {
        let (h_m, h_o) = chain_hamiltonian_parts(model);
        DrivenHamiltonian::new(h_m, h_o, drive)
    }

    pub fn for_product(basis: &ProductBasis, drive: Drive) -> Result<Self> {
        let (h_m, h_o) = dual_mode_jc_parts(basis)?;
        DrivenHamiltonian::new(h_m, h_o, drive)
    }

    pub fn basis(&self) -> &Basis {
        self.h_m.basis()
    }

    pub fn dim(&self) -> usize {
        self.h_m.dim()
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    pub fn couplings_at(&self, t: f64) -> Couplings {
        self.drive.couplings_at(t)
    }

    /// Sparse snapshot H(t); used for spectra and checks, not inner loops.
    pub fn operator_at(&self, t: f64) -> Operator {
        let c = self.couplings_at(t);
        self.h_m
            .scaled(C64::from(c.g_m))
            .add(&self.h_o.scaled(C64::from(c.g_o)))
            .expect("parts share a basis")
    }

    /// y += alpha * H(t) x without allocating.
    pub fn acc_apply(&self, t: f64, alpha: C64, x: &[C64], y: &mut [C64]) {
        let c = self.couplings_at(t);
        self.h_m.csr().acc_vec(alpha * c.g_m, x, y);
        self.h_o.csr().acc_vec(alpha * c.g_o, x, y);
    }

    /// out += alpha * (H(t) rho - rho H(t)), flat row-major dim x dim.
    pub fn acc_commutator(&self, t: f64, alpha: C64, rho: &[C64], out: &mut [C64]) {
        let c = self.couplings_at(t);
        self.h_m.csr().acc_mul_left(alpha * c.g_m, rho, out);
        self.h_m.csr().acc_mul_right(-alpha * c.g_m, rho, out);
        self.h_o.csr().acc_mul_left(alpha * c.g_o, rho, out);
        self.h_o.csr().acc_mul_right(-alpha * c.g_o, rho, out);
    }
}

/// Convert a lab-frame frequency quoted as f/2pi (in MHz) to rad/us.
pub fn mhz_to_angular(f_over_2pi_mhz: f64) -> f64 {
    TAU * f_over_2pi_mhz
}

/// Convert a lab-frame rate quoted as k/2pi (in kHz) to rad/us.
pub fn khz_to_angular(k_over_2pi_khz: f64) -> f64 {
    TAU * k_over_2pi_khz * 1e-3
}
