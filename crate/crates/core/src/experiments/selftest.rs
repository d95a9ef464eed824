//! Fast numerical hygiene checks shared by the CLI `selftest` subcommand
//! and the integration suite: solver cross-validation, conserved
//! quantities, convergence under step halving, and output determinism.

use crate::dynamics::{
    evolve_lindblad, evolve_schrodinger, time_grid, DecayRates, EvolveOptions, ObservableSet,
};
use crate::hamiltonians::{
    chain_hamiltonian, ChainKind, ChainModel, CouplingSchedule, Couplings, Drive, DrivenHamiltonian,
};
use crate::hilbert::{Basis, ProductBasis, QuantumState};
use crate::states::{wigner, InputStateSpec, WignerGrid};
use crate::topology::{
    analytic_winding, chiral_operator, default_initial_even_site, measure_winding_mcd, spectrum,
    zero_mode,
};
use crate::Result;

use super::config::{ExperimentConfig, Scenario};
use super::{run_spectrum, Cell, CsvTable};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, result: Result<(bool, String)>) -> Check {
    match result {
        Ok((passed, detail)) => Check {
            name: name.into(),
            passed,
            detail,
        },
        Err(e) => Check {
            name: name.into(),
            passed: false,
            detail: format!("errored: {e}"),
        },
    }
}

fn spectrum_constancy() -> Result<(bool, String)> {
    let g = crate::hamiltonians::mhz_to_angular(0.282);
    let n = 5;
    let model = ChainModel::new(ChainKind::Fsl, n)?;
    let sched = CouplingSchedule::new(g, 8.2)?;
    let mut reference: Vec<f64> = vec![0.0];
    for j in 1..=n {
        let e = g * (j as f64).sqrt();
        reference.push(e);
        reference.push(-e);
    }
    reference.sort_by(f64::total_cmp);
    let mut max_dev = 0.0f64;
    for &t in &time_grid(8.2, 51)? {
        let vals = spectrum(&chain_hamiltonian(&model, sched.at(t)?))?;
        for (a, b) in vals.iter().zip(&reference) {
            max_dev = max_dev.max((a - b).abs());
        }
    }
    Ok((
        max_dev <= 1e-9 * g,
        format!("max spectral drift {:.3e} of g over the pump", max_dev / g),
    ))
}

fn zero_mode_and_chirality() -> Result<(bool, String)> {
    let model = ChainModel::new(ChainKind::Fsl, 5)?;
    let c = Couplings::new(1.0, 0.7)?;
    let h = chain_hamiltonian(&model, c);
    let phi = zero_mode(5, c)?;
    let amps = phi.as_pure().expect("zero mode is pure");
    let h_phi = h.apply_vec(amps);
    let res: f64 = h_phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let gamma = chiral_operator(5)?;
    let anti = gamma.matmul(&h)?.add(&h.matmul(&gamma)?)?;
    let anti_norm: f64 = anti
        .to_dense()
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok((
        res <= 1e-12 && anti_norm <= 1e-12,
        format!("|H phi0| = {res:.3e}, |{{Gamma, H}}| = {anti_norm:.3e}"),
    ))
}

fn mcd_quick() -> Result<(bool, String)> {
    let g = 1.0;
    let model = ChainModel::new(ChainKind::Fsl, 3)?;
    let site = default_initial_even_site(3);
    let mut worst = 0.0f64;
    for ratio in [1.0, 2.0] {
        let c = Couplings::from_ratio(g, ratio)?;
        let est = measure_winding_mcd(&model, c, 200.0 / g, site, 2001)?;
        worst = worst.max((est.value - analytic_winding(c)?).abs());
    }
    Ok((
        worst < 0.05,
        format!("max |W_mcd - W_analytic| = {worst:.4} over ratios 1, 2"),
    ))
}

fn closed_vs_open() -> Result<(bool, String)> {
    let g = crate::hamiltonians::mhz_to_angular(0.282);
    let n = 2;
    let t_total = 2.0;
    let grid = time_grid(t_total, 9)?;
    let model = ChainModel::new(ChainKind::Fsl, n)?;
    let sched = CouplingSchedule::new(g, t_total)?;

    let h = DrivenHamiltonian::for_chain(&model, Drive::Pump(sched))?;
    let mut obs = ObservableSet::new(h.dim());
    obs.push_diagonal("nbar_o", super::chain_nbar_weights(&model.chain()))?;
    let psi0 = QuantumState::basis_state(h.basis().clone(), 0)?;
    let closed = evolve_schrodinger(&h, &psi0, &grid, &obs, &EvolveOptions::default())?;

    let basis = ProductBasis::new(n, n)?;
    let hp = DrivenHamiltonian::for_product(&basis, Drive::Pump(sched))?;
    let mut obs = ObservableSet::new(basis.dim());
    obs.push_diagonal("nbar_o", super::product_nbar_weights(&basis))?;
    let rho0 = crate::states::prepare_initial(InputStateSpec::Fock(n), &basis)?.promote();
    let open = evolve_lindblad(
        &hp,
        &rho0,
        &DecayRates::zero(),
        &grid,
        &obs,
        &EvolveOptions::default(),
    )?;

    let a = closed.column("nbar_o").expect("recorded");
    let b = open.column("nbar_o").expect("recorded");
    let max_dev = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok((
        max_dev <= 1e-6,
        format!("max |closed - open| photon-number gap {max_dev:.3e} at zero decay"),
    ))
}

fn trace_preservation() -> Result<(bool, String)> {
    let g = crate::hamiltonians::mhz_to_angular(0.282);
    let n = 2;
    let rates = DecayRates::new(
        crate::hamiltonians::khz_to_angular(3.6),
        crate::hamiltonians::khz_to_angular(2.0),
        crate::hamiltonians::khz_to_angular(3.4),
    )?;
    let basis = ProductBasis::new(n, n)?;
    let sched = CouplingSchedule::new(g, 3.0)?;
    let h = DrivenHamiltonian::for_product(&basis, Drive::Pump(sched))?;
    let mut obs = ObservableSet::new(basis.dim());
    obs.push_weight("trace");
    let rho0 = crate::states::prepare_initial(InputStateSpec::Fock(n), &basis)?.promote();
    let grid = time_grid(3.0, 7)?;
    let traj = evolve_lindblad(&h, &rho0, &rates, &grid, &obs, &EvolveOptions::default())?;
    let max_dev = traj
        .column("trace")
        .expect("recorded")
        .iter()
        .map(|w| (w - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((
        max_dev <= 1e-6,
        format!("max trace drift {max_dev:.3e} under decay"),
    ))
}

fn step_halving() -> Result<(bool, String)> {
    let g = crate::hamiltonians::mhz_to_angular(0.282);
    let n = 3;
    let t_total = 4.0;
    let model = ChainModel::new(ChainKind::Fsl, n)?;
    let sched = CouplingSchedule::new(g, t_total)?;
    let h = DrivenHamiltonian::for_chain(&model, Drive::Pump(sched))?;
    let mut obs = ObservableSet::new(h.dim());
    obs.push_diagonal("nbar_o", super::chain_nbar_weights(&model.chain()))?;
    let psi0 = QuantumState::basis_state(h.basis().clone(), 0)?;
    let grid = [0.0, t_total];
    let run = |steps: f64| -> Result<f64> {
        let opts = EvolveOptions {
            stepper: crate::dynamics::StepperOptions {
                fixed_step: Some(t_total / steps),
                ..Default::default()
            },
            ..EvolveOptions::default()
        };
        let traj = evolve_schrodinger(&h, &psi0, &grid, &obs, &opts)?;
        Ok(traj.column("nbar_o").expect("recorded")[1])
    };
    let coarse = run(400.0)?;
    let fine = run(800.0)?;
    let dev = (coarse - fine).abs();
    Ok((
        dev <= 1e-6,
        format!("final photon number moves {dev:.3e} under step halving"),
    ))
}

fn wigner_sanity() -> Result<(bool, String)> {
    let grid = WignerGrid::auto(8, 61)?;
    let vacuum = QuantumState::basis_state(Basis::Mode(9), 0)?;
    let one = QuantumState::basis_state(Basis::Mode(9), 1)?;
    let wv = wigner(&vacuum, &grid)?;
    let w1 = wigner(&one, &grid)?;
    let inv_pi = 1.0 / std::f64::consts::PI;
    let mid = wv.grid.xs.len() / 2;
    let ok = (wv.integral - 1.0).abs() <= 1e-3
        && (w1.integral - 1.0).abs() <= 1e-3
        && (wv.values[[mid, mid]] - inv_pi).abs() <= 1e-9
        && (w1.values[[mid, mid]] + inv_pi).abs() <= 1e-9;
    Ok((
        ok,
        format!(
            "integrals {:.6}, {:.6}; origin values {:.6}, {:.6} (want +-1/pi)",
            wv.integral,
            w1.integral,
            wv.values[[mid, mid]],
            w1.values[[mid, mid]]
        ),
    ))
}

fn csv_determinism() -> Result<(bool, String)> {
    let cfg = ExperimentConfig::defaults(Scenario::Spectrum);
    let render = || -> Result<String> {
        let rec = run_spectrum(&cfg)?;
        let mut table = CsvTable::new("spectrum.csv", &["t_us", "e_1"]);
        for (k, &t) in rec.times.iter().enumerate() {
            table.push(vec![Cell::F(t), Cell::F(rec.levels[[k, 0]])]);
        }
        Ok(table.render(cfg.scenario.id(), cfg.config_sha256()))
    };
    let a = render()?;
    let b = render()?;
    Ok((
        a == b,
        format!(
            "two renders of {} bytes {}",
            a.len(),
            if a == b { "match" } else { "differ" }
        ),
    ))
}

/// Run every hygiene check and report pass/fail plus a one-line detail.
pub fn run_selftests() -> Vec<Check> {
    vec![
        check("spectrum_constancy", spectrum_constancy()),
        check("zero_mode_and_chirality", zero_mode_and_chirality()),
        check("mcd_quick", mcd_quick()),
        check("closed_vs_open_zero_decay", closed_vs_open()),
        check("trace_preservation", trace_preservation()),
        check("step_halving", step_halving()),
        check("wigner_sanity", wigner_sanity()),
        check("csv_determinism", csv_determinism()),
    ]
}
