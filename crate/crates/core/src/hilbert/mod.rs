//! Bases and states for the hybrid MW-atom-optical system.
//!
//! Two bases are in play. A [`FockChain`] is the excitation-number-N block
//! of the dual-mode Jaynes-Cummings model: 2N+1 product states arranged as
//! a one-dimensional lattice. A [`ProductBasis`] is the full truncated
//! MW ⊗ atom ⊗ optical space, needed once dissipation or multi-block input
//! states (coherent, squeezed) enter.
//!
//! Enumeration order of the product basis is fixed: the MW photon number is
//! the slowest index, the atom level is in the middle (G = 0, R = 1), and
//! the optical photon number is the fastest. All serialization relies on
//! this order.

mod operator;
mod state;

pub use operator::Operator;
pub use state::{partial_trace, trace_axis, QuantumState, StatePayload};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Atom level of the two-level superatom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomLevel {
    G,
    R,
}

impl AtomLevel {
    pub fn index(self) -> usize {
        match self {
            AtomLevel::G => 0,
            AtomLevel::R => 1,
        }
    }
}

/// Joint MW-photon / atom / optical-photon label of one lattice site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SiteLabel {
    pub n_mw: usize,
    pub atom: AtomLevel,
    pub n_opt: usize,
}

impl SiteLabel {
    /// Total excitation number n_m + n_o + (1 if atom is R).
    pub fn excitation(&self) -> usize {
        self.n_mw + self.n_opt + self.atom.index()
    }
}

impl std::fmt::Display for SiteLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{}_m,{:?},{}_o>", self.n_mw, self.atom, self.n_opt)
    }
}

/// The excitation-number-N block of the dual-mode JC model, viewed as a
/// chain of 2N+1 sites. One-based site s holds
///
/// - s = 2j-1: |(N-j+1)_m, G, (j-1)_o>
/// - s = 2j:   |(N-j)_m,   R, (j-1)_o>
///
/// so site 1 is the all-MW edge |N_m,G,0_o> and site 2N+1 the all-optical
/// edge |0_m,G,N_o>.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockChain {
    excitation: usize,
    sites: Vec<SiteLabel>,
}

impl FockChain {
    /// Build the chain basis for excitation number `n >= 1`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "chain excitation number must be >= 1 (N = 0 is a single site)".into(),
            ));
        }
        let mut sites = Vec::with_capacity(2 * n + 1);
        for s in 1..=(2 * n + 1) {
            sites.push(Self::label_for(n, s));
        }
        Ok(FockChain {
            excitation: n,
            sites,
        })
    }

    fn label_for(n: usize, s: usize) -> SiteLabel {
        if s % 2 == 1 {
            let j = s.div_ceil(2); // 1..=N+1
            SiteLabel {
                n_mw: n + 1 - j,
                atom: AtomLevel::G,
                n_opt: j - 1,
            }
        } else {
            let j = s / 2; // 1..=N
            SiteLabel {
                n_mw: n - j,
                atom: AtomLevel::R,
                n_opt: j - 1,
            }
        }
    }

    pub fn excitation_number(&self) -> usize {
        self.excitation
    }

    /// Number of sites, 2N+1.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> &[SiteLabel] {
        &self.sites
    }

    /// Label of the one-based site index.
    pub fn site(&self, s: usize) -> &SiteLabel {
        &self.sites[s - 1]
    }
}

/// Slots of the three-part product space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    Mw,
    Atom,
    Opt,
}

/// Truncated MW ⊗ atom ⊗ optical product basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductBasis {
    pub n_max_mw: usize,
    pub n_max_opt: usize,
}

impl ProductBasis {
    pub fn new(n_max_mw: usize, n_max_opt: usize) -> Result<Self> {
        if n_max_mw < 1 || n_max_opt < 1 {
            return Err(Error::InvalidDimension(
                "product basis needs n_max >= 1 in both modes".into(),
            ));
        }
        Ok(ProductBasis {
            n_max_mw,
            n_max_opt,
        })
    }

    pub fn dim(&self) -> usize {
        (self.n_max_mw + 1) * 2 * (self.n_max_opt + 1)
    }

    pub fn slot_dim(&self, slot: Slot) -> usize {
        match slot {
            Slot::Mw => self.n_max_mw + 1,
            Slot::Atom => 2,
            Slot::Opt => self.n_max_opt + 1,
        }
    }

    /// Subsystem dimensions in enumeration order (MW, atom, optical).
    pub fn dims(&self) -> [usize; 3] {
        [self.n_max_mw + 1, 2, self.n_max_opt + 1]
    }

    /// Flat index of a product state; MW slowest, optical fastest.
    pub fn index_of(&self, label: &SiteLabel) -> Result<usize> {
        if label.n_mw > self.n_max_mw || label.n_opt > self.n_max_opt {
            return Err(Error::TruncationExceeded(format!(
                "{label} does not fit in (n_max_mw = {}, n_max_opt = {})",
                self.n_max_mw, self.n_max_opt
            )));
        }
        Ok((label.n_mw * 2 + label.atom.index()) * (self.n_max_opt + 1) + label.n_opt)
    }

    /// Inverse of [`Self::index_of`].
    pub fn label_of(&self, index: usize) -> SiteLabel {
        let d_o = self.n_max_opt + 1;
        let n_opt = index % d_o;
        let rest = index / d_o;
        let atom = if rest.is_multiple_of(2) {
            AtomLevel::G
        } else {
            AtomLevel::R
        };
        let n_mw = rest / 2;
        SiteLabel { n_mw, atom, n_opt }
    }
}

/// Basis handle attached to every operator and state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Basis {
    Chain(FockChain),
    Product(ProductBasis),
    /// A single subsystem (one bosonic mode, or the atom) of dimension
    /// `dim`, as produced by a partial trace or used for pre-embedding
    /// operators.
    Mode(usize),
}

impl Basis {
    pub fn dim(&self) -> usize {
        match self {
            Basis::Chain(c) => c.len(),
            Basis::Product(p) => p.dim(),
            Basis::Mode(d) => *d,
        }
    }

    /// Short descriptor used in serialized output headers.
    pub fn descriptor(&self) -> String {
        match self {
            Basis::Chain(c) => format!(
                "chain excitation={} sites={} order=index_1..{}",
                c.excitation_number(),
                c.len(),
                c.len()
            ),
            Basis::Product(p) => format!(
                "product n_max_mw={} atom_dim=2 n_max_opt={} order=mw_slowest_opt_fastest",
                p.n_max_mw, p.n_max_opt
            ),
            Basis::Mode(d) => format!("mode dim={d}"),
        }
    }
}

/// Map each chain site to its flat index in the product basis.
///
/// Fails if any site label exceeds the truncation; the map is injective
/// and preserves labels component-wise.
pub fn chain_to_product_embedding(chain: &FockChain, basis: &ProductBasis) -> Result<Vec<usize>> {
    chain.sites().iter().map(|s| basis.index_of(s)).collect()
}
