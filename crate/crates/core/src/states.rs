//! Input-state preparation (Fock, coherent, squeezed vacuum), ideal
//! transduction targets, fidelity, and Wigner-function evaluation.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::hilbert::{AtomLevel, Basis, ProductBasis, QuantumState, SiteLabel, StatePayload};
use crate::{Error, Result};

/// Minimum probability the truncated mode basis must retain.
pub const RETAINED_NORM_MIN: f64 = 1.0 - 1e-6;

/// Microwave input state of the transducer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InputStateSpec {
    Fock(usize),
    Coherent(C64),
    SqueezedVacuum { r: f64, theta: f64 },
}

impl InputStateSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InputStateSpec::Fock(_) => Ok(()),
            InputStateSpec::Coherent(alpha) => {
                if alpha.re.is_finite() && alpha.im.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(
                        "coherent amplitude must be finite".into(),
                    ))
                }
            }
            InputStateSpec::SqueezedVacuum { r, theta } => {
                if r.is_finite() && r >= 0.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "squeezing parameters must be finite with r >= 0, got r={r}, theta={theta}"
                    )))
                }
            }
        }
    }

    /// Default Fock cutoff keeping the truncation error below the
    /// `RETAINED_NORM_MIN` budget: exact for Fock states; for the Gaussian
    /// states a mean-plus-margin heuristic extended until the summed tail
    /// actually fits the budget (the heuristic alone undershoots for
    /// squeezed states, whose photon-number tails are heavy). Squeezed
    /// cutoffs stay even to end on a populated component.
    pub fn default_truncation(&self) -> usize {
        match *self {
            InputStateSpec::Fock(n) => n,
            InputStateSpec::Coherent(alpha) => {
                let a = alpha.norm();
                let base = (a * a + 6.0 * a + 6.0).ceil() as usize;
                extend_until_retained(*self, base, 1)
            }
            InputStateSpec::SqueezedVacuum { r, .. } => {
                let n = (6.0 * r.sinh().powi(2) + 10.0).ceil() as usize;
                extend_until_retained(*self, n + n % 2, 2)
            }
        }
    }
}

fn extend_until_retained(spec: InputStateSpec, base: usize, step: usize) -> usize {
    let mut n_max = base;
    loop {
        let retained: f64 = mode_amplitudes(spec, n_max)
            .map(|a| a.iter().map(|c| c.norm_sqr()).sum())
            .unwrap_or(0.0);
        if retained >= RETAINED_NORM_MIN || n_max > 4096 {
            return n_max;
        }
        n_max += step;
    }
}

/// Fock-basis amplitudes of the spec'd state on one mode, truncated to
/// `dim = n_max + 1` components; not renormalized.
pub fn mode_amplitudes(spec: InputStateSpec, n_max: usize) -> Result<Array1<C64>> {
    spec.validate()?;
    let mut amps = Array1::zeros(n_max + 1);
    match spec {
        InputStateSpec::Fock(n) => {
            if n > n_max {
                return Err(Error::InsufficientTruncation {
                    retained: 0.0,
                    required: RETAINED_NORM_MIN,
                });
            }
            amps[n] = C64::ONE;
        }
        InputStateSpec::Coherent(alpha) => {
            let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
            amps[0] = c;
            for n in 1..=n_max {
                c *= alpha / C64::from((n as f64).sqrt());
                amps[n] = c;
            }
        }
        InputStateSpec::SqueezedVacuum { r, theta } => {
            let step = -C64::from_polar(r.tanh(), theta);
            let mut c = C64::from(1.0 / r.cosh().sqrt());
            amps[0] = c;
            for m in 1..=n_max / 2 {
                let k = (2 * m - 1) as f64;
                c *= step * (k * (k + 1.0)).sqrt() / (k + 1.0);
                amps[2 * m] = c;
            }
        }
    }
    Ok(amps)
}

fn checked_mode_amplitudes(spec: InputStateSpec, n_max: usize) -> Result<Array1<C64>> {
    let mut amps = mode_amplitudes(spec, n_max)?;
    let retained: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    if retained < RETAINED_NORM_MIN {
        return Err(Error::InsufficientTruncation {
            retained,
            required: RETAINED_NORM_MIN,
        });
    }
    amps.mapv_inplace(|c| c / C64::from(retained.sqrt()));
    Ok(amps)
}

/// Normalized single-mode pure state for the spec on `n_max + 1` Fock levels.
pub fn mode_state(spec: InputStateSpec, n_max: usize) -> Result<QuantumState> {
    QuantumState::pure(
        Basis::Mode(n_max + 1),
        checked_mode_amplitudes(spec, n_max)?,
    )
}

/// (MW state) x |G> x |0_o> in the product basis.
pub fn prepare_initial(spec: InputStateSpec, basis: &ProductBasis) -> Result<QuantumState> {
    let mw = checked_mode_amplitudes(spec, basis.n_max_mw)?;
    let mut amps = Array1::zeros(basis.dim());
    for (m, c) in mw.iter().enumerate() {
        let idx = basis.index_of(&SiteLabel {
            n_mw: m,
            atom: AtomLevel::G,
            n_opt: 0,
        })?;
        amps[idx] = *c;
    }
    QuantumState::pure(Basis::Product(*basis), amps)
}

/// Ideal converted state |0_m, G, target_o>: Fock inputs map to the same
/// Fock level, coherent inputs pick up the per-photon sign (amplitude -alpha),
/// squeezed inputs keep their xi because the sign squares away on the
/// even-only components.
pub fn ideal_target(spec: InputStateSpec, basis: &ProductBasis) -> Result<QuantumState> {
    let flipped = match spec {
        InputStateSpec::Fock(n) => InputStateSpec::Fock(n),
        InputStateSpec::Coherent(alpha) => InputStateSpec::Coherent(-alpha),
        InputStateSpec::SqueezedVacuum { r, theta } => InputStateSpec::SqueezedVacuum { r, theta },
    };
    let opt = checked_mode_amplitudes(flipped, basis.n_max_opt)?;
    let mut amps = Array1::zeros(basis.dim());
    for (n, c) in opt.iter().enumerate() {
        let idx = basis.index_of(&SiteLabel {
            n_mw: 0,
            atom: AtomLevel::G,
            n_opt: n,
        })?;
        amps[idx] = *c;
    }
    QuantumState::pure(Basis::Product(*basis), amps)
}

/// <target|rho|target> for a pure target; imaginary residue beyond 1e-10
/// signals a non-Hermitian density matrix upstream.
pub fn fidelity(state: &QuantumState, target: &QuantumState) -> Result<f64> {
    if state.basis() != target.basis() {
        return Err(Error::BasisMismatch(format!(
            "fidelity between {} and {}",
            state.basis().descriptor(),
            target.basis().descriptor()
        )));
    }
    let t = target
        .as_pure()
        .ok_or_else(|| Error::InvalidState("fidelity target must be a pure state".into()))?;
    let f = match state.payload() {
        StatePayload::Pure(psi) => {
            let overlap: C64 = t.iter().zip(psi.iter()).map(|(a, b)| a.conj() * b).sum();
            overlap.norm_sqr()
        }
        StatePayload::Density(rho) => {
            let rt = rho.dot(t);
            let val: C64 = t.iter().zip(rt.iter()).map(|(a, b)| a.conj() * b).sum();
            if val.im.abs() > 1e-10 {
                return Err(Error::InvalidState(format!(
                    "fidelity has imaginary residue {:e}",
                    val.im
                )));
            }
            val.re
        }
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Phase-space grid for Wigner evaluation, x = (a + a^dag)/sqrt(2).
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

impl WignerGrid {
    pub fn symmetric(extent: f64, points: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) || points < 2 {
            return Err(Error::InvalidParameter(format!(
                "Wigner grid needs extent > 0 and >= 2 points, got {extent}, {points}"
            )));
        }
        let axis: Vec<f64> = (0..points)
            .map(|i| -extent + 2.0 * extent * i as f64 / (points - 1) as f64)
            .collect();
        Ok(WignerGrid {
            xs: axis.clone(),
            ps: axis,
        })
    }

    /// Extent sqrt(2 n_max) + 3 covers the classically allowed region of
    /// every retained Fock level plus a vacuum-width margin.
    pub fn auto(n_max: usize, points: usize) -> Result<Self> {
        Self::symmetric((2.0 * n_max as f64).sqrt() + 3.0, points)
    }
}

/// Wigner function samples W[ix, ip] on the grid, plus the trapezoid
/// integral used for the capture check.
#[derive(Clone, Debug)]
pub struct WignerMap {
    pub grid: WignerGrid,
    pub values: Array2<f64>,
    pub integral: f64,
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|i| {
            let left = if i == 0 { axis[0] } else { axis[i - 1] };
            let right = if i == n - 1 { axis[n - 1] } else { axis[i + 1] };
            0.5 * (right - left)
        })
        .collect()
}

/// Displaced-parity Wigner function of a single-mode state:
/// W(x,p) = (1/pi) tr[rho D(alpha) Pi D(alpha)^dag], alpha = (x+ip)/sqrt(2),
/// normalized so the (x,p)-plane integral is 1. Errors when the grid
/// captures less than 99.9% of that integral.
pub fn wigner(state: &QuantumState, grid: &WignerGrid) -> Result<WignerMap> {
    let dim = match state.basis() {
        Basis::Mode(d) => *d,
        other => {
            return Err(Error::BasisMismatch(format!(
                "Wigner function needs a single-mode state, got {}",
                other.descriptor()
            )))
        }
    };
    let rho = state.density_matrix();
    let rows: Vec<Vec<f64>> = grid
        .xs
        .par_iter()
        .map(|&x| {
            grid.ps
                .iter()
                .map(|&p| wigner_point(&rho, dim, x, p))
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((grid.xs.len(), grid.ps.len()));
    for (ix, row) in rows.iter().enumerate() {
        for (ip, v) in row.iter().enumerate() {
            values[[ix, ip]] = *v;
        }
    }
    let wx = trapezoid_weights(&grid.xs);
    let wp = trapezoid_weights(&grid.ps);
    let mut integral = 0.0;
    for ix in 0..grid.xs.len() {
        for ip in 0..grid.ps.len() {
            integral += wx[ix] * wp[ip] * values[[ix, ip]];
        }
    }
    if integral < 0.999 {
        return Err(Error::WignerGridTooSmall { captured: integral });
    }
    Ok(WignerMap {
        grid: grid.clone(),
        values,
        integral,
    })
}

/// One displaced-parity sample via D(alpha) Pi D(alpha)^dag = D(2 alpha) Pi:
/// W = (1/pi) tr[rho D(beta) Pi], beta = 2 alpha. The displacement matrix
/// corner M[m][k] = <m|D(beta)|k> is built exactly from the ladder
/// recurrence sqrt(m+1) <m+1|D|k> = sqrt(k) <m|D|k-1> + beta <m|D|k>,
/// so no truncation wraparound enters (the naive exp(iH) in the truncated
/// space corrupts large displacements).
fn wigner_point(rho: &Array2<C64>, dim: usize, x: f64, p: f64) -> f64 {
    let beta = C64::new(x, p) * C64::from(2.0_f64.sqrt());
    // first row: <0|D|k> = (-beta*)^k / sqrt(k!) e^{-|beta|^2/2}
    let mut row = vec![C64::ZERO; dim];
    let mut next = vec![C64::ZERO; dim];
    row[0] = C64::from((-0.5 * beta.norm_sqr()).exp());
    for k in 1..dim {
        row[k] = row[k - 1] * (-beta.conj()) / C64::from((k as f64).sqrt());
    }
    let mut w = C64::ZERO;
    for m in 0..dim {
        if m > 0 {
            for k in 0..dim {
                let lower = if k == 0 {
                    C64::ZERO
                } else {
                    row[k - 1] * C64::from((k as f64).sqrt())
                };
                next[k] = (lower + beta * row[k]) / C64::from((m as f64).sqrt());
            }
            std::mem::swap(&mut row, &mut next);
        }
        // sum_k M[m][k] (-1)^k rho[k][m]
        for k in 0..dim {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            w += C64::from(sign) * row[k] * rho[[k, m]];
        }
    }
    w.re / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::expectation;
    use crate::hilbert::Operator;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn pb(mw: usize, opt: usize) -> ProductBasis {
        ProductBasis::new(mw, opt).unwrap()
    }

    fn mw_number_expectation(state: &QuantumState, basis: &ProductBasis) -> f64 {
        let n_op = Operator::number(basis.n_max_mw + 1)
            .embed(crate::hilbert::Slot::Mw, basis)
            .unwrap();
        expectation(&n_op, state).unwrap()
    }

    #[test]
    fn fock_preparation_is_a_basis_state() {
        let basis = pb(5, 5);
        let st = prepare_initial(InputStateSpec::Fock(5), &basis).unwrap();
        let idx = basis
            .index_of(&SiteLabel {
                n_mw: 5,
                atom: AtomLevel::G,
                n_opt: 0,
            })
            .unwrap();
        let a = st.as_pure().unwrap();
        assert_eq!(a[idx], C64::ONE);
        assert_abs_diff_eq!(st.trace(), 1.0, epsilon = 1e-12);
        assert!(prepare_initial(InputStateSpec::Fock(7), &basis).is_err());
    }

    #[test]
    fn coherent_preparation_matches_moments() {
        let spec = InputStateSpec::Coherent(C64::ONE);
        let n_max = spec.default_truncation();
        assert_eq!(n_max, 13);
        let basis = pb(n_max, n_max);
        let st = prepare_initial(spec, &basis).unwrap();
        assert_abs_diff_eq!(mw_number_expectation(&st, &basis), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn squeezed_preparation_matches_moments() {
        let spec = InputStateSpec::SqueezedVacuum { r: 0.7, theta: 0.0 };
        let n_max = spec.default_truncation();
        assert_eq!(n_max % 2, 0);
        let basis = pb(n_max, n_max);
        let st = prepare_initial(spec, &basis).unwrap();
        let want = 0.7_f64.sinh().powi(2);
        assert_abs_diff_eq!(mw_number_expectation(&st, &basis), want, epsilon = 1e-4);
        // odd components vanish exactly
        let amps = mode_amplitudes(spec, n_max).unwrap();
        for m in (1..=n_max).step_by(2) {
            assert_eq!(amps[m], C64::ZERO);
        }
    }

    #[test]
    fn squeezed_amplitudes_closed_form() {
        let r: f64 = 0.7;
        let theta = 1.1;
        let amps = mode_amplitudes(InputStateSpec::SqueezedVacuum { r, theta }, 8).unwrap();
        // c_{2m} = (cosh r)^{-1/2} (-e^{i theta} tanh r)^m sqrt((2m)!)/(2^m m!)
        let mut fact = [1.0_f64; 9];
        for k in 1..=8 {
            fact[k] = fact[k - 1] * k as f64;
        }
        for m in 0..=4_usize {
            let mag = fact[2 * m].sqrt() / (2.0_f64.powi(m as i32) * fact[m]);
            let want = C64::from_polar(r.tanh(), theta).powu(m as u32)
                * C64::from((-1.0_f64).powi(m as i32) * mag / r.cosh().sqrt());
            assert_abs_diff_eq!(amps[2 * m].re, want.re, epsilon = 1e-12);
            assert_abs_diff_eq!(amps[2 * m].im, want.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn targets_follow_caption_conventions() {
        let basis = pb(6, 6);
        let t = ideal_target(InputStateSpec::Fock(5), &basis).unwrap();
        let idx = basis
            .index_of(&SiteLabel {
                n_mw: 0,
                atom: AtomLevel::G,
                n_opt: 5,
            })
            .unwrap();
        assert_eq!(t.as_pure().unwrap()[idx], C64::ONE);

        // coherent target carries (-1)^n alpha^n amplitudes
        let basis = pb(13, 13);
        let t = ideal_target(InputStateSpec::Coherent(C64::ONE), &basis).unwrap();
        let want = mode_amplitudes(InputStateSpec::Coherent(-C64::ONE), 13).unwrap();
        for n in 0..=13 {
            let idx = basis
                .index_of(&SiteLabel {
                    n_mw: 0,
                    atom: AtomLevel::G,
                    n_opt: n,
                })
                .unwrap();
            assert_abs_diff_eq!(t.as_pure().unwrap()[idx].re, want[n].re, epsilon = 1e-9);
        }

        // squeezed target keeps the same xi
        let spec = InputStateSpec::SqueezedVacuum { r: 0.7, theta: 0.3 };
        let n_max = spec.default_truncation();
        assert_eq!(n_max, 24, "heavy squeezed tail pushes past the heuristic");
        let basis = pb(n_max, n_max);
        let t = ideal_target(spec, &basis).unwrap();
        let want = mode_amplitudes(spec, n_max).unwrap();
        let norm: f64 = want.iter().map(|c| c.norm_sqr()).sum::<f64>();
        for n in 0..=n_max {
            let idx = basis
                .index_of(&SiteLabel {
                    n_mw: 0,
                    atom: AtomLevel::G,
                    n_opt: n,
                })
                .unwrap();
            let scaled = want[n] / C64::from(norm.sqrt());
            assert_abs_diff_eq!(t.as_pure().unwrap()[idx].re, scaled.re, epsilon = 1e-12);
            assert_abs_diff_eq!(t.as_pure().unwrap()[idx].im, scaled.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn fidelity_trivial_cases() {
        let basis = Basis::Mode(4);
        let t = QuantumState::basis_state(basis.clone(), 1).unwrap();
        assert_abs_diff_eq!(fidelity(&t, &t).unwrap(), 1.0);
        let o = QuantumState::basis_state(basis.clone(), 2).unwrap();
        assert_abs_diff_eq!(fidelity(&o, &t).unwrap(), 0.0);
        // maximally mixed over d = 4 states
        let mut rho = Array2::zeros((4, 4));
        for i in 0..4 {
            rho[[i, i]] = C64::from(0.25);
        }
        let mixed = QuantumState::density(basis.clone(), rho).unwrap();
        assert_abs_diff_eq!(fidelity(&mixed, &t).unwrap(), 0.25, epsilon = 1e-12);
        // basis mismatch
        let other = QuantumState::basis_state(Basis::Mode(5), 1).unwrap();
        assert!(fidelity(&other, &t).is_err());
        assert!(fidelity(&t, &mixed).is_err());
    }

    #[test]
    fn fidelity_stable_under_truncation_growth() {
        let spec = InputStateSpec::Coherent(C64::new(0.8, 0.4));
        let n0 = spec.default_truncation();
        let mut vals = Vec::new();
        for extra in [0, 2] {
            let basis = pb(n0 + extra, n0 + extra);
            let st = prepare_initial(spec, &basis).unwrap();
            let t = ideal_target(spec, &basis).unwrap();
            vals.push(fidelity(&st, &t).unwrap());
        }
        assert!((vals[0] - vals[1]).abs() < 1e-5, "{vals:?}");
    }

    #[test]
    fn wigner_point_is_exact_for_vacuum() {
        // the ladder recurrence has no truncation wraparound: the vacuum
        // Gaussian comes out exact even far outside the Fock support
        let dim = 7;
        let mut rho: Array2<C64> = Array2::zeros((dim, dim));
        rho[[0, 0]] = C64::ONE;
        for (x, p) in [
            (0.0, 0.0),
            (1.0, 0.0),
            (2.0, 0.0),
            (0.0, 1.5),
            (3.0, 0.0),
            (6.0, 4.0),
        ] {
            let got = wigner_point(&rho, dim, x, p);
            let want = (-x * x - p * p).exp() / PI;
            assert_abs_diff_eq!(got, want, epsilon = 1e-13);
        }
    }

    #[test]
    fn wigner_point_checks() {
        let vac = mode_state(InputStateSpec::Fock(0), 6).unwrap();
        let grid = WignerGrid::auto(6, 81).unwrap();
        let map = wigner(&vac, &grid).unwrap();
        assert_abs_diff_eq!(map.integral, 1.0, epsilon = 1e-3);
        let mid = grid.xs.len() / 2; // odd point count puts the origin on the grid
        assert_abs_diff_eq!(map.values[[mid, mid]], 1.0 / PI, epsilon = 1e-9);

        let one = mode_state(InputStateSpec::Fock(1), 6).unwrap();
        let map1 = wigner(&one, &grid).unwrap();
        assert_abs_diff_eq!(map1.values[[mid, mid]], -1.0 / PI, epsilon = 1e-9);
        assert_abs_diff_eq!(map1.integral, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn wigner_coherent_peak_is_displaced() {
        let spec = InputStateSpec::Coherent(C64::ONE);
        let st = mode_state(spec, spec.default_truncation()).unwrap();
        // grid through (sqrt(2), 0) exactly: odd count, extent multiple of sqrt(2)
        let extent = 4.0 * 2.0_f64.sqrt();
        let grid = WignerGrid::symmetric(extent, 81).unwrap();
        let map = wigner(&st, &grid).unwrap();
        let ix = grid
            .xs
            .iter()
            .position(|&x| (x - 2.0_f64.sqrt()).abs() < 1e-9)
            .unwrap();
        let ip = grid.ps.len() / 2;
        assert_abs_diff_eq!(map.values[[ix, ip]], 1.0 / PI, epsilon = 1e-6);
        // and it is the global maximum
        let mut best = (0, 0);
        let mut best_v = f64::MIN;
        for i in 0..grid.xs.len() {
            for j in 0..grid.ps.len() {
                if map.values[[i, j]] > best_v {
                    best_v = map.values[[i, j]];
                    best = (i, j);
                }
            }
        }
        assert_eq!(best, (ix, ip));
    }

    #[test]
    fn wigner_marginals_match_hermite_functions() {
        // integrating W over p gives |psi_n(x)|^2 with Hermite functions
        let grid = WignerGrid::auto(6, 161).unwrap();
        let wp = trapezoid_weights(&grid.ps);
        for n in 0..=3_usize {
            let st = mode_state(InputStateSpec::Fock(n), 6).unwrap();
            let map = wigner(&st, &grid).unwrap();
            for (ix, &x) in grid.xs.iter().enumerate().step_by(20) {
                let marginal: f64 = (0..grid.ps.len())
                    .map(|ip| wp[ip] * map.values[[ix, ip]])
                    .sum();
                // Hermite polynomial by recurrence
                let mut h0 = 1.0;
                let mut h1 = 2.0 * x;
                let h = match n {
                    0 => h0,
                    1 => h1,
                    _ => {
                        let mut hk = 0.0;
                        for k in 2..=n {
                            hk = 2.0 * x * h1 - 2.0 * (k as f64 - 1.0) * h0;
                            h0 = h1;
                            h1 = hk;
                        }
                        hk
                    }
                };
                let mut fact = 1.0;
                for k in 1..=n {
                    fact *= k as f64;
                }
                let psi_sq = h * h * (-x * x).exp() / (2.0_f64.powi(n as i32) * fact * PI.sqrt());
                assert_abs_diff_eq!(marginal, psi_sq, epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn wigner_flags_small_grids() {
        let st = mode_state(InputStateSpec::Coherent(C64::from(1.5)), 14).unwrap();
        let tight = WignerGrid::symmetric(1.5, 41).unwrap();
        match wigner(&st, &tight) {
            Err(Error::WignerGridTooSmall { captured }) => assert!(captured < 0.999),
            other => panic!("expected grid-too-small, got {other:?}"),
        }
        // product-basis states are rejected
        let basis = pb(2, 2);
        let full = prepare_initial(InputStateSpec::Fock(1), &basis).unwrap();
        assert!(wigner(&full, &WignerGrid::auto(2, 21).unwrap()).is_err());
    }

    #[test]
    fn wigner_accepts_reduced_density_states() {
        let basis = pb(3, 3);
        // amplitude 0.2 keeps the n_max = 3 truncation within budget
        let st = prepare_initial(InputStateSpec::Coherent(C64::from(0.2)), &basis).unwrap();
        let reduced = crate::hilbert::partial_trace(&st, crate::hilbert::Slot::Mw).unwrap();
        let map = wigner(&reduced, &WignerGrid::auto(3, 81).unwrap()).unwrap();
        assert_abs_diff_eq!(map.integral, 1.0, epsilon = 1e-3);
    }
}
