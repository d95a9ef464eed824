//! Topological toolkit for the chain models: chiral operator, zero mode,
//! spectrum, mean-chiral-displacement winding estimate, the closed-form
//! winding number and the distribution center it predicts.

use ndarray::Array1;
use num_complex::Complex64 as C64;

use crate::dynamics::{evolve_schrodinger, time_grid, EvolveOptions, ObservableSet};
use crate::hamiltonians::{ChainKind, ChainModel, Couplings, Drive, DrivenHamiltonian};
use crate::hilbert::{Basis, Operator, QuantumState};
use crate::linalg;
use crate::{Error, Result};

/// Default number of quadrature points for the MCD time average; the
/// integrand oscillates at frequencies up to 2 sqrt(N) g, so the grid stays
/// dense relative to the averaging window.
pub const DEFAULT_MCD_POINTS: usize = 2001;

/// Diagonal +1/-1 sublattice operator; odd (1-based) sites carry +1, even
/// sites -1, so the final site 2N+1 carries +1.
pub fn chiral_operator(n: usize) -> Result<Operator> {
    let model = ChainModel::new(ChainKind::Fsl, n)?;
    let basis = Basis::Chain(model.chain());
    let triplets = (0..2 * n + 1)
        .map(|i| {
            let sign = if (i + 1) % 2 == 1 { 1.0 } else { -1.0 };
            (i, i, C64::from(sign))
        })
        .collect();
    Ok(Operator::from_triplets(basis, triplets))
}

/// Normalized zero-energy eigenvector of the photon-number chain:
/// amplitudes sqrt(C(N,j)) G_o^(N-j) (-G_m)^j on the odd sites |2j+1>.
pub fn zero_mode(n: usize, c: Couplings) -> Result<QuantumState> {
    let model = ChainModel::new(ChainKind::Fsl, n)?;
    if c.g_m == 0.0 && c.g_o == 0.0 {
        return Err(Error::InvalidParameter(
            "zero mode undefined at vanishing couplings".into(),
        ));
    }
    let mut amps = Array1::zeros(2 * n + 1);
    let mut norm_sq = 0.0;
    let mut binom = 1.0_f64;
    for j in 0..=n {
        let a = binom.sqrt() * c.g_o.powi((n - j) as i32) * (-c.g_m).powi(j as i32);
        amps[2 * j] = C64::from(a);
        norm_sq += a * a;
        binom *= (n - j) as f64 / (j + 1) as f64;
    }
    let norm = norm_sq.sqrt();
    amps.mapv_inplace(|v| v / norm);
    QuantumState::pure(Basis::Chain(model.chain()), amps)
}

/// Ascending eigenvalues of a Hermitian operator.
pub fn spectrum(h: &Operator) -> Result<Vec<f64>> {
    h.ensure_hermitian()?;
    Ok(linalg::eigvalsh(&h.to_dense()))
}

/// P_d = sum_{j=1}^{N} j (P_{2j-1} - P_{2j}); the last site 2N+1 is
/// excluded from the sum.
pub fn chiral_displacement(populations: &[f64]) -> Result<f64> {
    if populations.len() < 3 || populations.len().is_multiple_of(2) {
        return Err(Error::InvalidDimension(format!(
            "chain populations come in odd lengths 2N+1 >= 3, got {}",
            populations.len()
        )));
    }
    let n = (populations.len() - 1) / 2;
    let mut p_d = 0.0;
    for j in 1..=n {
        p_d += j as f64 * (populations[2 * j - 2] - populations[2 * j - 1]);
    }
    Ok(p_d)
}

/// Diagonal weights implementing `chiral_displacement` as one observable.
pub fn chiral_displacement_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; 2 * n + 1];
    for j in 1..=n {
        w[2 * j - 2] = j as f64;
        w[2 * j - 1] = -(j as f64);
    }
    w
}

/// Cell-displacement weights for the winding estimator: cell j groups the
/// even site 2j with the odd site 2j+1 (the pair sharing one microwave
/// photon number), weighted +j on the odd and -j on the even member. With
/// this pairing the time average of 2 P_d lands on W - 1 for any even start
/// site, exactly on the photon-number chain and up to finite-size
/// corrections on the uniform chain.
fn winding_cell_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; 2 * n + 1];
    for j in 1..=n {
        w[2 * j] = j as f64;
        w[2 * j - 1] = -(j as f64);
    }
    w
}

/// Closed-form winding number G_o^2 / (G_m^2 + G_o^2); the all-microwave
/// limit G_o = 0 maps to W = 0.
pub fn analytic_winding(c: Couplings) -> Result<f64> {
    if c.g_m == 0.0 && c.g_o == 0.0 {
        return Err(Error::InvalidParameter(
            "winding number undefined at vanishing couplings".into(),
        ));
    }
    Ok(c.g_o * c.g_o / (c.g_m * c.g_m + c.g_o * c.g_o))
}

/// Center of the zero-mode photon distribution in chain coordinates,
/// P_c = 2N(1 - W) + 1.
pub fn distribution_center(n: usize, w: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!(
            "winding number must lie in [0, 1], got {w}"
        )));
    }
    Ok(2.0 * n as f64 * (1.0 - w) + 1.0)
}

/// Middle even site 2 ceil(N/2), the default starting point for the MCD
/// measurement (any even site works; the middle one minimizes edge effects).
pub fn default_initial_even_site(n: usize) -> usize {
    2 * n.div_ceil(2)
}

/// One time-averaged chiral-displacement measurement.
#[derive(Clone, Copy, Debug)]
pub struct WindingEstimate {
    pub value: f64,
    pub tau: f64,
    pub initial_even_site: usize,
    pub kind: ChainKind,
    /// False when the last-quarter average strays more than 0.02 from the
    /// full average, signalling that tau is too short.
    pub converged: bool,
}

impl WindingEstimate {
    fn new(
        value: f64,
        tau: f64,
        initial_even_site: usize,
        kind: ChainKind,
        converged: bool,
    ) -> Result<Self> {
        if !(-0.1..=1.1).contains(&value) {
            return Err(Error::InvalidState(format!(
                "winding estimate {value} outside the physical band [-0.1, 1.1]"
            )));
        }
        Ok(WindingEstimate {
            value,
            tau,
            initial_even_site,
            kind,
            converged,
        })
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Winding number from the mean chiral displacement: evolve from an even
/// site at constant couplings, average 2 P_d(t) over [0, tau] with
/// trapezoidal quadrature on the trajectory grid, and shift by the unit
/// offset of the cell pairing (see `winding_cell_weights`), W = 1 + <2 P_d>.
pub fn measure_winding_mcd(
    model: &ChainModel,
    c: Couplings,
    tau: f64,
    initial_even_site: usize,
    points: usize,
) -> Result<WindingEstimate> {
    let n = model.excitation;
    if !initial_even_site.is_multiple_of(2) || initial_even_site == 0 || initial_even_site > 2 * n {
        return Err(Error::InvalidParameter(format!(
            "initial site must be an even chain index in [2, {}], got {initial_even_site}",
            2 * n
        )));
    }
    if c.norm() == 0.0 {
        return Err(Error::InvalidParameter(
            "MCD measurement needs nonvanishing couplings".into(),
        ));
    }
    let h = DrivenHamiltonian::for_chain(model, Drive::Static(c))?;
    let grid = time_grid(tau, points.max(3))?;
    let mut obs = ObservableSet::new(2 * n + 1);
    obs.push_diagonal("p_d", winding_cell_weights(n))?;
    let psi0 = QuantumState::basis_state(h.basis().clone(), initial_even_site - 1)?;
    let traj = evolve_schrodinger(&h, &psi0, &grid, &obs, &EvolveOptions::default())?;
    let p_d = traj.column("p_d").expect("recorded above");

    let w_full = 1.0 + 2.0 / tau * trapezoid(&traj.times, p_d);
    // convergence probe: redo the average on the last quarter window
    let start = traj.times.len() - traj.times.len() / 4 - 1;
    let window = traj.times[traj.times.len() - 1] - traj.times[start];
    let w_tail = 1.0 + 2.0 / window * trapezoid(&traj.times[start..], &p_d[start..]);
    let converged = (w_full - w_tail).abs() <= 0.02;
    WindingEstimate::new(w_full, tau, initial_even_site, model.kind, converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::chain_hamiltonian;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fsl(n: usize) -> ChainModel {
        ChainModel::new(ChainKind::Fsl, n).unwrap()
    }

    fn ssh(n: usize) -> ChainModel {
        ChainModel::new(ChainKind::Ssh, n).unwrap()
    }

    const G: f64 = 1.7718582566;

    #[test]
    fn chiral_operator_signs_and_square() {
        let gc = chiral_operator(1).unwrap();
        let d = gc.to_dense();
        assert_eq!(d[[0, 0]], C64::ONE);
        assert_eq!(d[[1, 1]], -C64::ONE);
        assert_eq!(d[[2, 2]], C64::ONE);
        let sq = gc.matmul(&gc).unwrap();
        for i in 0..3 {
            assert_eq!(sq.entry(i, i), C64::ONE);
        }
    }

    #[test]
    fn zero_mode_closed_forms() {
        // equal couplings, single excitation: (|1> - |3>)/sqrt(2)
        let z = zero_mode(1, Couplings::new(1.0, 1.0).unwrap()).unwrap();
        let a = z.as_pure().unwrap();
        let s = 0.5_f64.sqrt();
        assert_abs_diff_eq!(a[0].re, s, epsilon = 1e-15);
        assert_eq!(a[1], C64::ZERO);
        assert_abs_diff_eq!(a[2].re, -s, epsilon = 1e-15);

        // all-optical coupling pins the mode to the first site
        let z = zero_mode(4, Couplings::new(0.0, 2.3).unwrap()).unwrap();
        assert_abs_diff_eq!(z.as_pure().unwrap()[0].re, 1.0, epsilon = 1e-15);

        // ratio 2 at N = 3: amplitudes proportional to (1, -2r3, 4r3, -8)
        let z = zero_mode(3, Couplings::new(2.0, 1.0).unwrap()).unwrap();
        let a = z.as_pure().unwrap();
        let r3 = 3.0_f64.sqrt();
        let raw = [1.0, -2.0 * r3, 4.0 * r3, -8.0];
        let norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (j, want) in raw.iter().enumerate() {
            assert_abs_diff_eq!(a[2 * j].re, want / norm, epsilon = 1e-12);
        }
        assert!(zero_mode(3, Couplings::new(0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn zero_mode_annihilated_across_ratio_sweep() {
        for n in 1..=10 {
            for k in 0..20 {
                let ratio = 10f64.powf(-2.0 + 4.0 * k as f64 / 19.0);
                let c = Couplings::from_ratio(G, ratio).unwrap();
                let z = zero_mode(n, c).unwrap();
                let h = chain_hamiltonian(&fsl(n), c);
                let hz = h.apply_vec(z.as_pure().unwrap());
                let res: f64 = hz.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                assert!(res < 1e-9 * G, "residual {res:e} at N={n} ratio={ratio}");
                // support strictly on odd sites
                for i in (1..2 * n + 1).step_by(2) {
                    assert_eq!(z.as_pure().unwrap()[i], C64::ZERO);
                }
            }
        }
    }

    #[test]
    fn zero_mode_center_matches_closed_form() {
        for n in [1, 3, 5, 8] {
            for ratio in [0.1, 0.5, 1.0, 2.0, 7.5] {
                let c = Couplings::from_ratio(G, ratio).unwrap();
                let z = zero_mode(n, c).unwrap();
                let pops = z.populations();
                let center: f64 = pops
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i + 1) as f64 * p)
                    .sum();
                let w = analytic_winding(c).unwrap();
                let p_c = distribution_center(n, w).unwrap();
                assert_abs_diff_eq!(center, p_c, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let h = chain_hamiltonian(&fsl(2), Couplings::from_ratio(1.0, 1.0).unwrap());
        let eigs = spectrum(&h).unwrap();
        let expect = [-(2.0_f64.sqrt()), -1.0, 0.0, 1.0, 2.0_f64.sqrt()];
        for (got, want) in eigs.iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let h = chain_hamiltonian(&fsl(1), Couplings::new(3.0, 4.0).unwrap());
        let eigs = spectrum(&h).unwrap();
        for (got, want) in eigs.iter().zip([-5.0, 0.0, 5.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let a = Operator::annihilation(3).unwrap();
        assert!(spectrum(&a).is_err());
    }

    #[test]
    fn chiral_displacement_site_examples() {
        let n = 4;
        let len = 2 * n + 1;
        let one_at = |s: usize| {
            let mut p = vec![0.0; len];
            p[s - 1] = 1.0;
            p
        };
        assert_abs_diff_eq!(chiral_displacement(&one_at(1)).unwrap(), 1.0);
        assert_abs_diff_eq!(chiral_displacement(&one_at(2)).unwrap(), -1.0);
        assert_abs_diff_eq!(chiral_displacement(&one_at(len)).unwrap(), 0.0);
        assert!(chiral_displacement(&[0.5, 0.5]).is_err());
        // weights mirror the direct sum
        let w = chiral_displacement_weights(n);
        let pops: Vec<f64> = (0..len).map(|i| (i as f64 + 0.3) / 20.0).collect();
        let direct = chiral_displacement(&pops).unwrap();
        let weighted: f64 = w.iter().zip(&pops).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(direct, weighted, epsilon = 1e-14);
    }

    #[test]
    fn analytic_winding_limits() {
        assert_abs_diff_eq!(
            analytic_winding(Couplings::new(0.0, 2.0).unwrap()).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            analytic_winding(Couplings::new(1.5, 1.5).unwrap()).unwrap(),
            0.5
        );
        assert_abs_diff_eq!(
            analytic_winding(Couplings::new(2.0, 0.0).unwrap()).unwrap(),
            0.0
        );
        assert!(analytic_winding(Couplings::new(0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn distribution_center_examples() {
        assert_abs_diff_eq!(distribution_center(5, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(distribution_center(5, 0.0).unwrap(), 11.0);
        assert_abs_diff_eq!(distribution_center(5, 0.5).unwrap(), 6.0);
        assert!(distribution_center(5, 1.2).is_err());
    }

    #[test]
    fn mcd_tracks_closed_form_winding() {
        let tau = 200.0 / G;
        for (ratio, want) in [(1.0, 0.5), (2.0, 0.2)] {
            let c = Couplings::from_ratio(G, ratio).unwrap();
            let est = measure_winding_mcd(
                &fsl(3),
                c,
                tau,
                default_initial_even_site(3),
                DEFAULT_MCD_POINTS,
            )
            .unwrap();
            assert!(
                (est.value - want).abs() < 0.05,
                "ratio {ratio}: W = {} want {want}",
                est.value
            );
        }
    }

    #[test]
    fn mcd_is_start_site_insensitive() {
        let tau = 200.0 / G;
        let c = Couplings::from_ratio(G, 1.0).unwrap();
        for start in [2, 4, 6, 8, 10] {
            let est = measure_winding_mcd(&fsl(5), c, tau, start, DEFAULT_MCD_POINTS).unwrap();
            assert!(
                (est.value - 0.5).abs() < 0.02,
                "start {start}: W = {}",
                est.value
            );
            assert_eq!(est.initial_even_site, start);
        }
    }

    #[test]
    fn mcd_convergence_flag() {
        let long = measure_winding_mcd(
            &ssh(5),
            Couplings::from_ratio(G, 0.2).unwrap(),
            200.0 / G,
            6,
            DEFAULT_MCD_POINTS,
        )
        .unwrap();
        assert!(long.converged);
        let short = measure_winding_mcd(
            &fsl(3),
            Couplings::from_ratio(G, 1.0).unwrap(),
            20.0 / G,
            4,
            DEFAULT_MCD_POINTS,
        )
        .unwrap();
        assert!(!short.converged, "tau = 20/g must trip the tail check");
    }

    #[test]
    fn mcd_uniform_chain_plateaus() {
        let tau = 200.0 / G;
        let n = 5;
        let start = default_initial_even_site(n);
        let low = measure_winding_mcd(
            &ssh(n),
            Couplings::from_ratio(G, 0.2).unwrap(),
            tau,
            start,
            DEFAULT_MCD_POINTS,
        )
        .unwrap();
        assert!(low.value > 0.95, "topological plateau, got {}", low.value);
        let high = measure_winding_mcd(
            &ssh(n),
            Couplings::from_ratio(G, 5.0).unwrap(),
            tau,
            start,
            DEFAULT_MCD_POINTS,
        )
        .unwrap();
        assert!(high.value < 0.05, "trivial plateau, got {}", high.value);
    }

    #[test]
    fn mcd_validates_start_site() {
        let c = Couplings::from_ratio(G, 1.0).unwrap();
        assert!(measure_winding_mcd(&fsl(3), c, 10.0, 3, 101).is_err());
        assert!(measure_winding_mcd(&fsl(3), c, 10.0, 8, 101).is_err());
        assert!(measure_winding_mcd(&fsl(3), c, 10.0, 0, 101).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn chiral_conjugation_negates_chain_hamiltonians(
            n in 1_usize..=12,
            kind_fsl in proptest::bool::ANY,
            g_m in 0.0_f64..3.0,
            g_o in 0.0_f64..3.0,
        ) {
            let kind = if kind_fsl { ChainKind::Fsl } else { ChainKind::Ssh };
            let model = ChainModel::new(kind, n).unwrap();
            let h = chain_hamiltonian(&model, Couplings::new(g_m, g_o).unwrap());
            let gc = chiral_operator(n).unwrap();
            let conj = gc.matmul(&h).unwrap().matmul(&gc).unwrap();
            let sum = conj.add(&h).unwrap().to_dense();
            // exact entrywise cancellation, not approximate
            for v in sum.iter() {
                prop_assert_eq!(*v, C64::ZERO);
            }
        }
    }
}
