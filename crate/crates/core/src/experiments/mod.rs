//! Scenario runners: pumping records, critical-time scans with fits,
//! winding curves, winding under disorder, and disorder surfaces.
//!
//! Every runner takes a normalized `ExperimentConfig` and is deterministic
//! for a fixed config + seed: ensembles draw their quenched disorder
//! sequentially from one seeded stream, fan the independent trajectories
//! out to the worker pool, and aggregate in sample order.

pub mod config;
mod output;
pub mod selftest;

pub use config::{ExperimentConfig, ResolvedConfig, Scenario};
pub use output::{Cell, CsvTable, RunArtifacts};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{
    evolve_lindblad, evolve_schrodinger, time_grid, EvolveOptions, ObservableSet, StepStats,
    Trajectory,
};
use crate::hamiltonians::{
    chain_hamiltonian, sample_disorder, ChainKind, ChainModel, CouplingSchedule, Couplings, Drive,
    DrivenHamiltonian,
};
use crate::hilbert::{
    chain_to_product_embedding, Basis, FockChain, Operator, ProductBasis, QuantumState, Slot,
};
use crate::states::{fidelity, ideal_target, prepare_initial, wigner, WignerGrid, WignerMap};
use crate::topology::{
    analytic_winding, default_initial_even_site, measure_winding_mcd, spectrum as chain_spectrum,
};
use crate::{linalg, Error, Result};

use output::RunWriter;

/// Golden-section refinement tolerance for critical times, us.
pub const CRITICAL_TIME_TOL_US: f64 = 1e-3;
/// Allowed gap in the adiabatic-population completeness check.
pub const ADIABATIC_SUM_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// least-squares fits

/// Polynomial least-squares fit, coefficients highest power first.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub points_used: usize,
}

/// Ordinary least squares of y on powers of x, `order` 1 (line) or 2
/// (parabola). Needs at least order + 2 points.
pub fn fit_scaling(points: &[(f64, f64)], order: usize) -> Result<FitResult> {
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "fit order must be 1 or 2, got {order}"
        )));
    }
    if points.len() < order + 2 {
        return Err(Error::FitFailed(format!(
            "need at least {} points for order {order}, got {}",
            order + 2,
            points.len()
        )));
    }
    let n = points.len();
    let m = order + 1;
    let mut x = nalgebra::DMatrix::<f64>::zeros(n, m);
    let mut y = nalgebra::DVector::<f64>::zeros(n);
    for (i, &(xi, yi)) in points.iter().enumerate() {
        for p in 0..m {
            x[(i, p)] = xi.powi((order - p) as i32);
        }
        y[i] = yi;
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-12 * n.max(m) as f64;
    if svd.singular_values.iter().any(|s| *s <= tol) {
        return Err(Error::FitFailed("design matrix is rank-deficient".into()));
    }
    let beta = svd
        .solve(&y, tol)
        .map_err(|e| Error::FitFailed(e.to_string()))?;
    let residual_norm = (x * &beta - &y).norm();
    Ok(FitResult {
        coefficients: beta.iter().copied().collect(),
        residual_norm,
        points_used: n,
    })
}

// ---------------------------------------------------------------------------
// pumping runs

/// One pumping run: transport curve, site populations, instantaneous
/// spectrum and adiabatic-eigenstate populations on the output grid.
#[derive(Clone, Debug)]
pub struct PumpingRecord {
    pub times: Vec<f64>,
    pub nbar_o: Vec<f64>,
    pub weight: Vec<f64>,
    /// [time, site] populations over the 2N+1 chain sites.
    pub site_pops: Array2<f64>,
    /// [time, level] instantaneous eigenvalues, ascending.
    pub spectrum: Array2<f64>,
    /// [time, level] populations of the instantaneous eigenstates.
    pub adiabatic: Array2<f64>,
    pub final_transfer: f64,
    pub final_nbar_o: f64,
    pub n_m: usize,
    pub closed: bool,
    pub stats: StepStats,
}

fn chain_nbar_weights(chain: &FockChain) -> Vec<f64> {
    chain.sites().iter().map(|s| s.n_opt as f64).collect()
}

fn product_nbar_weights(basis: &ProductBasis) -> Vec<f64> {
    (0..basis.dim())
        .map(|i| basis.label_of(i).n_opt as f64)
        .collect()
}

/// Closed run on the chain basis; the excitation block is the pure state
/// itself, returned as its rank-one density per output time.
fn closed_pump_run(
    model: &ChainModel,
    sched: CouplingSchedule,
    grid: &[f64],
) -> Result<(Trajectory, Vec<Array2<C64>>)> {
    let h = DrivenHamiltonian::for_chain(model, Drive::Pump(sched))?;
    let dim = h.dim();
    let mut obs = ObservableSet::new(dim);
    obs.push_diagonal("nbar_o", chain_nbar_weights(&model.chain()))?;
    obs.push_weight("weight");
    let psi0 = QuantumState::basis_state(h.basis().clone(), 0)?;
    let opts = EvolveOptions {
        snapshot_stride: Some(1),
        ..EvolveOptions::default()
    };
    let traj = evolve_schrodinger(&h, &psi0, grid, &obs, &opts)?;
    let blocks = traj
        .snapshots
        .iter()
        .map(|(_, s)| {
            let psi = s.as_pure().expect("closed snapshots are pure");
            let mut b = Array2::zeros((dim, dim));
            for i in 0..dim {
                for j in 0..dim {
                    b[[i, j]] = psi[i] * psi[j].conj();
                }
            }
            b
        })
        .collect();
    Ok((traj, blocks))
}

/// Open run on the product basis; the chain block of the density matrix is
/// recorded entry-by-entry through Hermitian pair observables.
fn open_pump_run(
    model: &ChainModel,
    sched: CouplingSchedule,
    grid: &[f64],
    rates: &crate::dynamics::DecayRates,
) -> Result<(Trajectory, Vec<Array2<C64>>)> {
    let n = model.excitation;
    let basis = ProductBasis::new(n, n)?;
    let chain = model.chain();
    let sites = chain.len();
    let embed = chain_to_product_embedding(&chain, &basis)?;
    let h = DrivenHamiltonian::for_product(&basis, Drive::Pump(sched))?;
    let mut obs = ObservableSet::new(basis.dim());
    obs.push_diagonal("nbar_o", product_nbar_weights(&basis))?;
    obs.push_weight("weight");
    for i in 0..sites {
        for j in i..sites {
            let (ei, ej) = (embed[i], embed[j]);
            if i == j {
                obs.push_operator(
                    format!("blk_re_{i}_{j}"),
                    Operator::from_triplets(Basis::Product(basis), vec![(ei, ei, C64::ONE)]),
                )?;
            } else {
                obs.push_operator(
                    format!("blk_re_{i}_{j}"),
                    Operator::from_triplets(
                        Basis::Product(basis),
                        vec![(ei, ej, C64::ONE), (ej, ei, C64::ONE)],
                    ),
                )?;
                obs.push_operator(
                    format!("blk_im_{i}_{j}"),
                    Operator::from_triplets(
                        Basis::Product(basis),
                        vec![(ei, ej, C64::I), (ej, ei, -C64::I)],
                    ),
                )?;
            }
        }
    }
    let rho0 = prepare_initial(crate::states::InputStateSpec::Fock(n), &basis)?.promote();
    let traj = evolve_lindblad(&h, &rho0, rates, grid, &obs, &EvolveOptions::default())?;
    let mut blocks = Vec::with_capacity(traj.times.len());
    for k in 0..traj.times.len() {
        let mut b = Array2::zeros((sites, sites));
        for i in 0..sites {
            for j in i..sites {
                if i == j {
                    let p = traj.column(&format!("blk_re_{i}_{j}")).expect("recorded")[k];
                    b[[i, i]] = C64::from(p);
                } else {
                    let re = traj.column(&format!("blk_re_{i}_{j}")).expect("recorded")[k];
                    let im = traj.column(&format!("blk_im_{i}_{j}")).expect("recorded")[k];
                    let v = 0.5 * C64::new(re, im);
                    b[[i, j]] = v;
                    b[[j, i]] = v.conj();
                }
            }
        }
        blocks.push(b);
    }
    Ok((traj, blocks))
}

/// Fig.-2-style pumping run from the all-microwave edge site. Closed runs
/// evolve the chain; open runs evolve the product-basis master equation
/// with the configured decay rates.
pub fn run_pumping(cfg: &ExperimentConfig) -> Result<PumpingRecord> {
    match cfg.input {
        crate::states::InputStateSpec::Fock(f) if f == cfg.n_m => {}
        _ => {
            return Err(Error::InvalidParameter(
                "pumping runs take the Fock input matching the chain excitation; \
                 use the wigner scenario for coherent or squeezed inputs"
                    .into(),
            ))
        }
    }
    let model = ChainModel::new(cfg.model, cfg.n_m)?;
    let sched = CouplingSchedule::new(cfg.g, cfg.t_us)?;
    let grid = time_grid(cfg.t_us, cfg.grid_points)?;
    let sites = 2 * cfg.n_m + 1;

    let (traj, blocks) = if cfg.rates.is_zero() {
        closed_pump_run(&model, sched, &grid)?
    } else {
        open_pump_run(&model, sched, &grid, &cfg.rates)?
    };

    let mut spectrum = Array2::zeros((traj.times.len(), sites));
    let mut adiabatic = Array2::zeros((traj.times.len(), sites));
    let mut site_pops = Array2::zeros((traj.times.len(), sites));
    for (k, &t) in traj.times.iter().enumerate() {
        let hk = chain_hamiltonian(&model, sched.at(t)?);
        let eig = linalg::eigh(&hk.to_dense());
        let b = &blocks[k];
        let mut total = 0.0;
        for lvl in 0..sites {
            spectrum[[k, lvl]] = eig.values[lvl];
            let v = eig.vectors.column(lvl);
            let mut acc = C64::ZERO;
            for i in 0..sites {
                let mut row = C64::ZERO;
                for j in 0..sites {
                    row += b[[i, j]] * v[j];
                }
                acc += v[i].conj() * row;
            }
            adiabatic[[k, lvl]] = acc.re;
            total += acc.re;
        }
        let block_trace: f64 = (0..sites).map(|i| b[[i, i]].re).sum();
        if (total - block_trace).abs() > ADIABATIC_SUM_TOL {
            return Err(Error::InvalidState(format!(
                "adiabatic populations sum to {total} but the excitation block holds {block_trace} at t = {t}"
            )));
        }
        for i in 0..sites {
            site_pops[[k, i]] = b[[i, i]].re;
        }
    }

    let nbar_o = traj.column("nbar_o").expect("recorded").to_vec();
    let weight = traj.column("weight").expect("recorded").to_vec();
    let last = traj.times.len() - 1;
    Ok(PumpingRecord {
        final_transfer: site_pops[[last, sites - 1]],
        final_nbar_o: nbar_o[last],
        times: traj.times,
        nbar_o,
        weight,
        site_pops,
        spectrum,
        adiabatic,
        n_m: cfg.n_m,
        closed: cfg.rates.is_zero(),
        stats: traj.stats,
    })
}

// ---------------------------------------------------------------------------
// critical-time scans

/// Final population of the all-optical edge site after one closed pump of
/// duration `t_total`.
pub fn transfer_fidelity(model: &ChainModel, g: f64, t_total: f64) -> Result<f64> {
    let sched = CouplingSchedule::new(g, t_total)?;
    let h = DrivenHamiltonian::for_chain(model, Drive::Pump(sched))?;
    let dim = h.dim();
    let mut w = vec![0.0; dim];
    w[dim - 1] = 1.0;
    let mut obs = ObservableSet::new(dim);
    obs.push_diagonal("transfer", w)?;
    let psi0 = QuantumState::basis_state(h.basis().clone(), 0)?;
    let grid = [0.0, t_total];
    let traj = evolve_schrodinger(&h, &psi0, &grid, &obs, &EvolveOptions::default())?;
    Ok(traj.column("transfer").expect("recorded")[1])
}

#[derive(Clone, Copy, Debug)]
pub struct ScanPoint {
    pub n_m: usize,
    pub gt: f64,
    pub fidelity: f64,
}

/// First transfer-fidelity peak at or above the threshold; censored when
/// the scanned window holds none.
#[derive(Clone, Copy, Debug)]
pub struct CriticalTime {
    pub n_m: usize,
    pub gt_m: f64,
    pub t_m_us: f64,
    pub fidelity: f64,
    pub censored: bool,
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub curve: Vec<ScanPoint>,
    pub critical: Vec<CriticalTime>,
}

fn golden_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d)?;
        }
    }
    if fc >= fd {
        Ok((c, fc))
    } else {
        Ok((d, fd))
    }
}

/// Closed-system scan over pump durations: per excitation number, locate
/// the first local fidelity peak at or above `threshold` on the coarse gT
/// grid, then refine its position by golden section to 1e-3 us.
pub fn scan_critical_time(
    kind: ChainKind,
    n_list: &[usize],
    g: f64,
    gt_range: (f64, f64, f64),
    threshold: f64,
) -> Result<ScanOutcome> {
    let (lo, hi, step) = gt_range;
    if !(g > 0.0 && lo > 0.0 && hi > lo && step > 0.0 && threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bad scan window (g = {g}, gT in [{lo}, {hi}] step {step}, threshold {threshold})"
        )));
    }
    let count = ((hi - lo) / step).floor() as usize + 1;
    let gts: Vec<f64> = (0..count).map(|k| lo + k as f64 * step).collect();

    let tasks: Vec<(usize, f64)> = n_list
        .iter()
        .flat_map(|&n| gts.iter().map(move |&gt| (n, gt)))
        .collect();
    let fids: Vec<f64> = tasks
        .par_iter()
        .map(|&(n, gt)| transfer_fidelity(&ChainModel::new(kind, n)?, g, gt / g))
        .collect::<Result<_>>()?;

    let mut curve = Vec::with_capacity(tasks.len());
    let mut critical = Vec::with_capacity(n_list.len());
    for (block, &n) in n_list.iter().enumerate() {
        let f = &fids[block * gts.len()..(block + 1) * gts.len()];
        for (k, &gt) in gts.iter().enumerate() {
            curve.push(ScanPoint {
                n_m: n,
                gt,
                fidelity: f[k],
            });
        }
        let model = ChainModel::new(kind, n)?;
        let peak = (1..gts.len()).find(|&i| {
            f[i] >= threshold && f[i] >= f[i - 1] && (i + 1 == gts.len() || f[i] >= f[i + 1])
        });
        match peak {
            None => critical.push(CriticalTime {
                n_m: n,
                gt_m: f64::NAN,
                t_m_us: f64::NAN,
                fidelity: f64::NAN,
                censored: true,
            }),
            Some(i) => {
                let a = gts[i - 1] / g;
                let b = gts[usize::min(i + 1, gts.len() - 1)] / g;
                let (t_m, fid) = golden_max(
                    |t| transfer_fidelity(&model, g, t),
                    a,
                    b,
                    CRITICAL_TIME_TOL_US,
                )?;
                critical.push(CriticalTime {
                    n_m: n,
                    gt_m: g * t_m,
                    t_m_us: t_m,
                    fidelity: fid.max(f[i]),
                    censored: false,
                });
            }
        }
    }
    Ok(ScanOutcome { curve, critical })
}

// ---------------------------------------------------------------------------
// winding measurements

#[derive(Clone, Copy, Debug)]
pub struct WindingRow {
    pub n: usize,
    pub ratio: f64,
    pub w_mcd: f64,
    /// Closed-form winding for the photon-number chain; unit step for the
    /// uniform reference chain.
    pub w_ref: f64,
    pub tau_over_g: f64,
    pub initial_site: usize,
    pub converged: bool,
}

/// Static-coupling winding measurements over the configured (N, ratio)
/// grid, ratio = G_m / G_o.
pub fn winding_vs_ratio(cfg: &ExperimentConfig) -> Result<Vec<WindingRow>> {
    let tau = cfg.tau_us();
    let tasks: Vec<(usize, f64)> = cfg
        .winding_n_list
        .iter()
        .flat_map(|&n| cfg.ratios.iter().map(move |&r| (n, r)))
        .collect();
    tasks
        .into_par_iter()
        .map(|(n, ratio)| {
            let model = ChainModel::new(cfg.model, n)?;
            let c = Couplings::from_ratio(cfg.g, ratio)?;
            let site = default_initial_even_site(n);
            let est = measure_winding_mcd(&model, c, tau, site, cfg.mcd_points)?;
            let w_ref = match cfg.model {
                ChainKind::Fsl => analytic_winding(c)?,
                ChainKind::Ssh => {
                    if ratio < 1.0 {
                        1.0
                    } else if ratio > 1.0 {
                        0.0
                    } else {
                        0.5
                    }
                }
            };
            Ok(WindingRow {
                n,
                ratio,
                w_mcd: est.value,
                w_ref,
                tau_over_g: cfg.tau_over_g,
                initial_site: site,
                converged: est.converged,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeRow {
    pub n: usize,
    pub probe_frac: f64,
    pub t_us: f64,
    pub w_mean: f64,
    pub w_se: f64,
    /// Closed-form winding of the undisordered schedule at the probe time.
    pub w_analytic: f64,
    pub samples: usize,
    pub converged: usize,
}

/// Sample mean and standard error; bit-exact when every draw is equal
/// (the zero-disorder case), where the mean is that shared value.
fn mean_se(vals: &[f64]) -> (f64, f64) {
    if vals.windows(2).all(|w| w[0] == w[1]) {
        return (vals[0], 0.0);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Winding evolution during the pump: per sample, draw one quenched
/// disorder pair, freeze the schedule at each probe time, and measure the
/// MCD winding at the frozen couplings; then average over samples.
pub fn winding_during_pump(cfg: &ExperimentConfig) -> Result<Vec<ProbeRow>> {
    let sched = CouplingSchedule::new(cfg.g, cfg.t_us)?;
    let tau = cfg.tau_us();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    for &n in &cfg.winding_n_list {
        let model = ChainModel::new(cfg.model, n)?;
        let site = default_initial_even_site(n);
        let draws: Vec<(f64, f64)> = (0..cfg.samples)
            .map(|_| sample_disorder(cfg.eta_m, cfg.eta_o, &mut rng))
            .collect::<Result<_>>()?;
        let per_sample: Vec<Vec<(f64, bool)>> = draws
            .par_iter()
            .map(|&(em, eo)| {
                let ds = sched.with_disorder(em, eo)?;
                cfg.probe_fracs
                    .iter()
                    .map(|&frac| {
                        let c = ds.at_clamped(frac * cfg.t_us);
                        measure_winding_mcd(&model, c, tau, site, cfg.mcd_points)
                            .map(|e| (e.value, e.converged))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (pi, &frac) in cfg.probe_fracs.iter().enumerate() {
            let vals: Vec<f64> = per_sample.iter().map(|s| s[pi].0).collect();
            let converged = per_sample.iter().filter(|s| s[pi].1).count();
            let (w_mean, w_se) = mean_se(&vals);
            rows.push(ProbeRow {
                n,
                probe_frac: frac,
                t_us: frac * cfg.t_us,
                w_mean,
                w_se,
                w_analytic: analytic_winding(sched.at_clamped(frac * cfg.t_us))?,
                samples: cfg.samples,
                converged,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// disorder surface

#[derive(Clone, Copy, Debug)]
pub struct SurfacePoint {
    pub eta_m: f64,
    pub eta_o: f64,
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct SurfaceRecord {
    pub points: Vec<SurfacePoint>,
    /// Final photon number of the single undisordered run.
    pub undisordered: f64,
}

/// Final optical photon number of one pump with a fixed disorder draw;
/// the lean kernel behind the ensemble scenarios.
pub fn pump_final_nbar(cfg: &ExperimentConfig, eps: (f64, f64)) -> Result<f64> {
    let model = ChainModel::new(cfg.model, cfg.n_m)?;
    let sched = CouplingSchedule::new(cfg.g, cfg.t_us)?.with_disorder(eps.0, eps.1)?;
    let grid = [0.0, cfg.t_us];
    let traj = if cfg.rates.is_zero() {
        let h = DrivenHamiltonian::for_chain(&model, Drive::Pump(sched))?;
        let mut obs = ObservableSet::new(h.dim());
        obs.push_diagonal("nbar_o", chain_nbar_weights(&model.chain()))?;
        let psi0 = QuantumState::basis_state(h.basis().clone(), 0)?;
        evolve_schrodinger(&h, &psi0, &grid, &obs, &EvolveOptions::default())?
    } else {
        let basis = ProductBasis::new(cfg.n_m, cfg.n_m)?;
        let h = DrivenHamiltonian::for_product(&basis, Drive::Pump(sched))?;
        let mut obs = ObservableSet::new(basis.dim());
        obs.push_diagonal("nbar_o", product_nbar_weights(&basis))?;
        let rho0 = prepare_initial(crate::states::InputStateSpec::Fock(cfg.n_m), &basis)?.promote();
        evolve_lindblad(
            &h,
            &rho0,
            &cfg.rates,
            &grid,
            &obs,
            &EvolveOptions::default(),
        )?
    };
    Ok(*traj
        .column("nbar_o")
        .expect("recorded")
        .last()
        .expect("grid"))
}

/// Ensemble-mean final photon number over the (eta_m, eta_o) grid. The
/// zero-disorder grid point reuses the single undisordered run: every
/// sample's multiplier is exactly one there.
pub fn disorder_surface(cfg: &ExperimentConfig) -> Result<SurfaceRecord> {
    let undisordered = pump_final_nbar(cfg, (0.0, 0.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::with_capacity(cfg.eta_m_grid.len() * cfg.eta_o_grid.len());
    for &em in &cfg.eta_m_grid {
        for &eo in &cfg.eta_o_grid {
            let draws: Vec<(f64, f64)> = (0..cfg.samples)
                .map(|_| sample_disorder(em, eo, &mut rng))
                .collect::<Result<_>>()?;
            let finals: Vec<f64> = if draws.iter().all(|&d| d == (0.0, 0.0)) {
                vec![undisordered; cfg.samples]
            } else {
                draws
                    .par_iter()
                    .map(|&eps| pump_final_nbar(cfg, eps))
                    .collect::<Result<_>>()?
            };
            let (mean, se) = mean_se(&finals);
            points.push(SurfacePoint {
                eta_m: em,
                eta_o: eo,
                mean,
                se,
                samples: cfg.samples,
            });
        }
    }
    Ok(SurfaceRecord {
        points,
        undisordered,
    })
}

// ---------------------------------------------------------------------------
// transduction of nonclassical states

#[derive(Clone, Debug)]
pub struct TransductionRecord {
    pub times: Vec<f64>,
    pub nbar_o: Vec<f64>,
    /// Overlap with the ideal transduced target at each output time.
    pub fidelity: Vec<f64>,
    pub weight: Vec<f64>,
    pub final_fidelity: f64,
    pub final_nbar_o: f64,
    /// Per-mode Fock truncation used for the product space.
    pub n_max: usize,
    pub wigner_map: WignerMap,
    pub stats: StepStats,
    pub closed: bool,
}

/// Pump an arbitrary microwave input through the transducer and return
/// the transport curve, the target fidelity, and the Wigner map of the
/// reduced optical state at t = T.
pub fn run_transduction(cfg: &ExperimentConfig) -> Result<TransductionRecord> {
    cfg.input.validate()?;
    let n_max = cfg.input.default_truncation().max(1);
    let basis = ProductBasis::new(n_max, n_max)?;
    let psi0 = prepare_initial(cfg.input, &basis)?;
    let target = ideal_target(cfg.input, &basis)?;
    let sched = CouplingSchedule::new(cfg.g, cfg.t_us)?;
    let h = DrivenHamiltonian::for_product(&basis, Drive::Pump(sched))?;
    let grid = time_grid(cfg.t_us, cfg.grid_points)?;
    let mut obs = ObservableSet::new(basis.dim());
    obs.push_diagonal("nbar_o", product_nbar_weights(&basis))?;
    obs.push_projector("fidelity", &target)?;
    obs.push_weight("weight");

    // Large density matrices: fewer spectral positivity probes, slightly
    // looser steps; both leave the 0.91 fidelity band untouched.
    let big = basis.dim() > 600;
    let mut opts = EvolveOptions {
        snapshot_stride: Some(usize::MAX),
        ..EvolveOptions::default()
    };
    if big {
        opts.positivity_checks = 1;
        opts.stepper.rtol = 1e-7;
        opts.stepper.atol = 1e-10;
    }

    let traj = if cfg.rates.is_zero() {
        evolve_schrodinger(&h, &psi0, &grid, &obs, &opts)?
    } else {
        evolve_lindblad(&h, &psi0.promote(), &cfg.rates, &grid, &obs, &opts)?
    };
    let (_, final_state) = traj.snapshots.last().expect("final snapshot requested");
    let final_fidelity = fidelity(final_state, &target)?;
    let optical = crate::hilbert::partial_trace(final_state, Slot::Opt)?;
    let wigner_map = wigner(&optical, &WignerGrid::auto(n_max, cfg.wigner_points)?)?;

    let nbar_o = traj.column("nbar_o").expect("recorded").to_vec();
    Ok(TransductionRecord {
        final_fidelity,
        final_nbar_o: *nbar_o.last().expect("grid"),
        times: traj.times.clone(),
        nbar_o,
        fidelity: traj.column("fidelity").expect("recorded").to_vec(),
        weight: traj.column("weight").expect("recorded").to_vec(),
        n_max,
        wigner_map,
        stats: traj.stats,
        closed: cfg.rates.is_zero(),
    })
}

// ---------------------------------------------------------------------------
// spectrum scan

#[derive(Clone, Debug)]
pub struct SpectrumRecord {
    pub times: Vec<f64>,
    /// [time, level] eigenvalues, ascending.
    pub levels: Array2<f64>,
    /// {0, +-g sqrt(j)} for the photon-number chain; absent for the
    /// uniform chain, whose spectrum moves with the schedule.
    pub reference: Option<Vec<f64>>,
}

pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<SpectrumRecord> {
    let model = ChainModel::new(cfg.model, cfg.n_m)?;
    let sched = CouplingSchedule::new(cfg.g, cfg.t_us)?;
    let times = time_grid(cfg.t_us, cfg.grid_points)?;
    let sites = 2 * cfg.n_m + 1;
    let mut levels = Array2::zeros((times.len(), sites));
    for (k, &t) in times.iter().enumerate() {
        let h = chain_hamiltonian(&model, sched.at(t)?);
        let vals = chain_spectrum(&h)?;
        for (lvl, v) in vals.iter().enumerate() {
            levels[[k, lvl]] = *v;
        }
    }
    let reference = (cfg.model == ChainKind::Fsl).then(|| {
        let mut r: Vec<f64> = vec![0.0];
        for j in 1..=cfg.n_m {
            let e = cfg.g * (j as f64).sqrt();
            r.push(e);
            r.push(-e);
        }
        r.sort_by(f64::total_cmp);
        r
    });
    Ok(SpectrumRecord {
        times,
        levels,
        reference,
    })
}

// ---------------------------------------------------------------------------
// scenario execution and artifact writing

fn fmt_sites(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

fn float_array(vals: &[f64]) -> toml::Value {
    toml::Value::Array(vals.iter().map(|&v| toml::Value::Float(v)).collect())
}

/// Run the configured scenario and write its artifacts: config echo, CSV
/// data, summary, and run manifest. CSV bytes are a pure function of the
/// config; timestamps live only in the manifest.
pub fn execute(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    match cfg.scenario {
        Scenario::Spectrum => execute_spectrum(cfg, force, tools),
        Scenario::Pump => execute_pump(cfg, force, tools),
        Scenario::CriticalScan => execute_scan(cfg, force, tools),
        Scenario::WindingVsRatio => execute_winding_ratio(cfg, force, tools),
        Scenario::WindingDuringPump => execute_winding_pump(cfg, force, tools),
        Scenario::DisorderSurface => execute_disorder(cfg, force, tools),
        Scenario::Wigner => execute_wigner(cfg, force, tools),
    }
}

fn execute_spectrum(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    let mut writer = RunWriter::new(cfg, &["spectrum.csv"], force)?;
    let rec = run_spectrum(cfg)?;
    let sites = rec.levels.ncols();
    let mut header = vec!["t_us".to_string()];
    header.extend(fmt_sites("e_", sites));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new("spectrum.csv", &header_refs);
    for (k, &t) in rec.times.iter().enumerate() {
        let mut row = vec![Cell::F(t)];
        row.extend((0..sites).map(|l| Cell::F(rec.levels[[k, l]])));
        table.push(row);
    }
    writer.write_table(&table)?;
    if let Some(reference) = &rec.reference {
        let max_dev = rec
            .levels
            .rows()
            .into_iter()
            .flat_map(|row| {
                row.iter()
                    .zip(reference)
                    .map(|(a, b)| (a - b).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        writer.headline("max_deviation_over_g", toml::Value::Float(max_dev / cfg.g));
        writer.summary_table("reference", {
            let mut t = toml::Table::new();
            t.insert("levels".into(), float_array(reference));
            t
        });
    }
    writer.finish(cfg, tools)
}

fn execute_pump(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    let mut writer = RunWriter::new(cfg, &["pump_trajectory.csv", "pump_levels.csv"], force)?;
    let rec = run_pumping(cfg)?;
    let sites = rec.site_pops.ncols();

    let mut header = vec![
        "t_us".to_string(),
        "nbar_o".to_string(),
        "nbar_o_over_nm".to_string(),
        "weight".to_string(),
    ];
    header.extend(fmt_sites("site_", sites));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new("pump_trajectory.csv", &header_refs);
    for (k, &t) in rec.times.iter().enumerate() {
        let mut row = vec![
            Cell::F(t),
            Cell::F(rec.nbar_o[k]),
            Cell::F(rec.nbar_o[k] / rec.n_m as f64),
            Cell::F(rec.weight[k]),
        ];
        row.extend((0..sites).map(|i| Cell::F(rec.site_pops[[k, i]])));
        table.push(row);
    }
    writer.write_table(&table)?;

    let mut header = vec!["t_us".to_string()];
    header.extend(fmt_sites("e_", sites));
    header.extend(fmt_sites("adiab_", sites));
    header.push("adiab_sum".to_string());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new("pump_levels.csv", &header_refs);
    for (k, &t) in rec.times.iter().enumerate() {
        let mut row = vec![Cell::F(t)];
        row.extend((0..sites).map(|l| Cell::F(rec.spectrum[[k, l]])));
        let mut sum = 0.0;
        for l in 0..sites {
            sum += rec.adiabatic[[k, l]];
            row.push(Cell::F(rec.adiabatic[[k, l]]));
        }
        row.push(Cell::F(sum));
        table.push(row);
    }
    writer.write_table(&table)?;

    writer.headline("final_nbar_o", toml::Value::Float(rec.final_nbar_o));
    writer.headline("final_transfer", toml::Value::Float(rec.final_transfer));
    writer.headline("closed", toml::Value::Boolean(rec.closed));
    writer.summary_table("stepper", stats_table(&rec.stats));
    writer.finish(cfg, tools)
}

fn execute_scan(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    let mut writer = RunWriter::new(cfg, &["scan_curve.csv", "critical_times.csv"], force)?;
    let outcome = scan_critical_time(
        cfg.model,
        &cfg.scan_n_list,
        cfg.g,
        cfg.scan_gt,
        cfg.threshold,
    )?;

    let mut table = CsvTable::new("scan_curve.csv", &["n_m", "g_t", "t_us", "fidelity"]);
    for p in &outcome.curve {
        table.push(vec![
            Cell::U(p.n_m),
            Cell::F(p.gt),
            Cell::F(p.gt / cfg.g),
            Cell::F(p.fidelity),
        ]);
    }
    writer.write_table(&table)?;

    let mut table = CsvTable::new(
        "critical_times.csv",
        &["n_m", "g_t_m", "t_m_us", "fidelity", "censored"],
    );
    for c in &outcome.critical {
        table.push(vec![
            Cell::U(c.n_m),
            Cell::F(c.gt_m),
            Cell::F(c.t_m_us),
            Cell::F(c.fidelity),
            Cell::B(c.censored),
        ]);
    }
    writer.write_table(&table)?;

    let fit_points: Vec<(f64, f64)> = outcome
        .critical
        .iter()
        .filter(|c| !c.censored)
        .map(|c| (c.n_m as f64, c.gt_m))
        .collect();
    let order = match cfg.model {
        ChainKind::Fsl => 1,
        ChainKind::Ssh => 2,
    };
    writer.headline(
        "censored_points",
        toml::Value::Integer((outcome.critical.len() - fit_points.len()) as i64),
    );
    if fit_points.len() >= order + 2 {
        let fit = fit_scaling(&fit_points, order)?;
        let mut t = toml::Table::new();
        t.insert("order".into(), toml::Value::Integer(order as i64));
        t.insert("coefficients".into(), float_array(&fit.coefficients));
        t.insert(
            "residual_norm".into(),
            toml::Value::Float(fit.residual_norm),
        );
        t.insert(
            "points_used".into(),
            toml::Value::Integer(fit.points_used as i64),
        );
        writer.summary_table("fit", t);
        writer.headline(
            "fit_leading_coefficient",
            toml::Value::Float(fit.coefficients[0]),
        );
    }
    writer.finish(cfg, tools)
}

fn execute_winding_ratio(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    let mut writer = RunWriter::new(cfg, &["winding_ratio.csv"], force)?;
    let rows = winding_vs_ratio(cfg)?;
    let mut table = CsvTable::new(
        "winding_ratio.csv",
        &[
            "model",
            "n",
            "ratio",
            "w_mcd",
            "w_ref",
            "tau_over_g",
            "initial_site",
            "converged",
        ],
    );
    let mut max_dev = 0.0f64;
    for r in &rows {
        max_dev = max_dev.max((r.w_mcd - r.w_ref).abs());
        table.push(vec![
            Cell::S(model_id(cfg.model).into()),
            Cell::U(r.n),
            Cell::F(r.ratio),
            Cell::F(r.w_mcd),
            Cell::F(r.w_ref),
            Cell::F(r.tau_over_g),
            Cell::U(r.initial_site),
            Cell::B(r.converged),
        ]);
    }
    writer.write_table(&table)?;
    writer.headline("max_deviation_from_reference", toml::Value::Float(max_dev));
    writer.finish(cfg, tools)
}

fn execute_winding_pump(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    let mut writer = RunWriter::new(cfg, &["winding_pump.csv"], force)?;
    let rows = winding_during_pump(cfg)?;
    let mut table = CsvTable::new(
        "winding_pump.csv",
        &[
            "n",
            "probe_frac",
            "t_us",
            "w_mean",
            "w_se",
            "w_analytic",
            "samples",
            "n_converged",
        ],
    );
    let mut max_dev = 0.0f64;
    for r in &rows {
        max_dev = max_dev.max((r.w_mean - r.w_analytic).abs());
        table.push(vec![
            Cell::U(r.n),
            Cell::F(r.probe_frac),
            Cell::F(r.t_us),
            Cell::F(r.w_mean),
            Cell::F(r.w_se),
            Cell::F(r.w_analytic),
            Cell::U(r.samples),
            Cell::U(r.converged),
        ]);
    }
    writer.write_table(&table)?;
    writer.headline("max_deviation_from_analytic", toml::Value::Float(max_dev));
    writer.finish(cfg, tools)
}

fn execute_disorder(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    let mut writer = RunWriter::new(cfg, &["disorder_surface.csv"], force)?;
    let rec = disorder_surface(cfg)?;
    let mut table = CsvTable::new(
        "disorder_surface.csv",
        &["eta_m", "eta_o", "nbar_mean", "nbar_se", "samples"],
    );
    for p in &rec.points {
        table.push(vec![
            Cell::F(p.eta_m),
            Cell::F(p.eta_o),
            Cell::F(p.mean),
            Cell::F(p.se),
            Cell::U(p.samples),
        ]);
    }
    writer.write_table(&table)?;
    writer.headline("undisordered_nbar_o", toml::Value::Float(rec.undisordered));
    let worst = rec
        .points
        .iter()
        .map(|p| (p.mean - rec.undisordered).abs() / rec.undisordered)
        .fold(0.0, f64::max);
    writer.headline("max_relative_shift", toml::Value::Float(worst));
    writer.finish(cfg, tools)
}

fn execute_wigner(
    cfg: &ExperimentConfig,
    force: bool,
    tools: &[(&str, &str)],
) -> Result<RunArtifacts> {
    let mut writer = RunWriter::new(cfg, &["transduction.csv", "wigner_map.csv"], force)?;
    let rec = run_transduction(cfg)?;

    let mut table = CsvTable::new(
        "transduction.csv",
        &["t_us", "nbar_o", "fidelity", "weight"],
    );
    for (k, &t) in rec.times.iter().enumerate() {
        table.push(vec![
            Cell::F(t),
            Cell::F(rec.nbar_o[k]),
            Cell::F(rec.fidelity[k]),
            Cell::F(rec.weight[k]),
        ]);
    }
    writer.write_table(&table)?;

    let mut table = CsvTable::new("wigner_map.csv", &["x", "p", "w"]);
    let grid = &rec.wigner_map.grid;
    for (ix, &x) in grid.xs.iter().enumerate() {
        for (ip, &p) in grid.ps.iter().enumerate() {
            table.push(vec![
                Cell::F(x),
                Cell::F(p),
                Cell::F(rec.wigner_map.values[[ix, ip]]),
            ]);
        }
    }
    writer.write_table(&table)?;

    writer.headline("final_fidelity", toml::Value::Float(rec.final_fidelity));
    writer.headline("final_nbar_o", toml::Value::Float(rec.final_nbar_o));
    writer.headline("n_max", toml::Value::Integer(rec.n_max as i64));
    writer.headline(
        "wigner_integral",
        toml::Value::Float(rec.wigner_map.integral),
    );
    writer.summary_table("stepper", stats_table(&rec.stats));
    writer.finish(cfg, tools)
}

fn stats_table(stats: &StepStats) -> toml::Table {
    let mut t = toml::Table::new();
    t.insert(
        "accepted_steps".into(),
        toml::Value::Integer(stats.accepted as i64),
    );
    t.insert(
        "rejected_steps".into(),
        toml::Value::Integer(stats.rejected as i64),
    );
    t.insert(
        "rhs_evals".into(),
        toml::Value::Integer(stats.rhs_evals as i64),
    );
    t
}

fn model_id(kind: ChainKind) -> &'static str {
    match kind {
        ChainKind::Fsl => "fsl",
        ChainKind::Ssh => "ssh",
    }
}
