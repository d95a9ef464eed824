//! Scenario configuration: lab-unit files in, normalized rad/us values out.
//!
//! Config files carry the laboratory "/2pi" units (MHz, kHz, us) and are
//! converted exactly once here. Parsing collects every problem before
//! failing, so a bad file reports all of its mistakes in one pass. The
//! fully resolved lab-unit view is kept alongside the normalized values:
//! it is what the echo file contains and what the config hash commits to.

use std::collections::BTreeSet;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::DecayRates;
use crate::hamiltonians::{khz_to_angular, mhz_to_angular, ChainKind};
use crate::states::InputStateSpec;
use crate::topology::DEFAULT_MCD_POINTS;
use crate::{Error, Result};

/// Largest chain excitation number kept desk-scale (2N+1 = 25 sites).
pub const MAX_EXCITATION: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Spectrum,
    Pump,
    WindingVsRatio,
    WindingDuringPump,
    CriticalScan,
    DisorderSurface,
    Wigner,
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::Spectrum => "spectrum",
            Scenario::Pump => "pump",
            Scenario::WindingVsRatio => "winding-ratio",
            Scenario::WindingDuringPump => "winding-pump",
            Scenario::CriticalScan => "scan",
            Scenario::DisorderSurface => "disorder",
            Scenario::Wigner => "wigner",
        }
    }

    fn from_id(id: &str) -> Option<Self> {
        Some(match id {
            "spectrum" => Scenario::Spectrum,
            "pump" => Scenario::Pump,
            "winding-ratio" => Scenario::WindingVsRatio,
            "winding-pump" => Scenario::WindingDuringPump,
            "scan" => Scenario::CriticalScan,
            "disorder" => Scenario::DisorderSurface,
            "wigner" => Scenario::Wigner,
            _ => return None,
        })
    }
}

/// Fully resolved configuration in lab units; serializes to the echo file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub scenario: String,
    pub model: String,
    pub n_m: usize,
    pub g_over_2pi_mhz: f64,
    pub t_us: f64,
    pub grid_points: usize,
    pub closed: bool,
    pub gamma0_over_2pi_khz: f64,
    pub kappa_m_over_2pi_khz: f64,
    pub kappa_o_over_2pi_khz: f64,
    pub seed: u64,
    pub out_dir: String,
    pub input: ResolvedInput,
    pub winding: ResolvedWinding,
    pub scan: ResolvedScan,
    pub disorder: ResolvedDisorder,
    pub wigner: ResolvedWigner,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedInput {
    pub kind: String,
    pub n: usize,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub r: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedWinding {
    pub tau_over_g: f64,
    pub points: usize,
    pub ratios: Vec<f64>,
    pub n_list: Vec<usize>,
    pub probe_fracs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedScan {
    pub gt_min: f64,
    pub gt_max: f64,
    pub gt_step: f64,
    pub threshold: f64,
    pub n_list: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedDisorder {
    pub eta_m: f64,
    pub eta_o: f64,
    pub samples: usize,
    pub eta_m_grid: Vec<f64>,
    pub eta_o_grid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedWigner {
    pub points: usize,
}

/// Normalized configuration: angular frequencies in rad/us, times in us.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub model: ChainKind,
    pub n_m: usize,
    pub g: f64,
    pub t_us: f64,
    pub grid_points: usize,
    pub closed: bool,
    pub rates: DecayRates,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub input: InputStateSpec,
    pub tau_over_g: f64,
    pub mcd_points: usize,
    pub ratios: Vec<f64>,
    pub winding_n_list: Vec<usize>,
    pub probe_fracs: Vec<f64>,
    pub scan_gt: (f64, f64, f64),
    pub threshold: f64,
    pub scan_n_list: Vec<usize>,
    pub eta_m: f64,
    pub eta_o: f64,
    pub samples: usize,
    pub eta_m_grid: Vec<f64>,
    pub eta_o_grid: Vec<f64>,
    pub wigner_points: usize,
    resolved: ResolvedConfig,
    hash: String,
}

impl ExperimentConfig {
    /// Parse and normalize a lab-unit config document. An empty document
    /// resolves to the default N_m = 5 pumping setup.
    pub fn from_toml(scenario: Scenario, text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(vec![format!("config does not parse: {e}")]))?;
        Self::from_table(scenario, table)
    }

    pub fn defaults(scenario: Scenario) -> Self {
        Self::from_table(scenario, toml::Table::new()).expect("defaults are valid")
    }

    pub fn from_table(scenario: Scenario, table: toml::Table) -> Result<Self> {
        let resolved = resolve(scenario, &table)?;
        Self::from_resolved(scenario, resolved)
    }

    fn from_resolved(scenario: Scenario, resolved: ResolvedConfig) -> Result<Self> {
        let mut errors = Vec::new();
        let model = match resolved.model.as_str() {
            "fsl" => ChainKind::Fsl,
            "ssh" => ChainKind::Ssh,
            other => {
                errors.push(format!(
                    "model: expected \"fsl\" or \"ssh\", got \"{other}\""
                ));
                ChainKind::Fsl
            }
        };
        let input = match resolved.input.kind.as_str() {
            "fock" => InputStateSpec::Fock(resolved.input.n),
            "coherent" => {
                InputStateSpec::Coherent(C64::new(resolved.input.alpha_re, resolved.input.alpha_im))
            }
            "squeezed" => InputStateSpec::SqueezedVacuum {
                r: resolved.input.r,
                theta: resolved.input.theta,
            },
            other => {
                errors.push(format!(
                    "input.kind: expected \"fock\", \"coherent\" or \"squeezed\", got \"{other}\""
                ));
                InputStateSpec::Fock(resolved.n_m)
            }
        };
        if let Err(e) = input.validate() {
            errors.push(format!("input: {e}"));
        }
        let rates = if resolved.closed {
            DecayRates::zero()
        } else {
            DecayRates::new(
                khz_to_angular(resolved.gamma0_over_2pi_khz),
                khz_to_angular(resolved.kappa_m_over_2pi_khz),
                khz_to_angular(resolved.kappa_o_over_2pi_khz),
            )
            .unwrap_or_else(|e| {
                errors.push(format!("decay rates: {e}"));
                DecayRates::zero()
            })
        };
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let echo = toml::to_string(&resolved).expect("resolved config serializes");
        let hash = Sha256::digest(echo.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        Ok(ExperimentConfig {
            scenario,
            model,
            n_m: resolved.n_m,
            g: mhz_to_angular(resolved.g_over_2pi_mhz),
            t_us: resolved.t_us,
            grid_points: resolved.grid_points,
            closed: resolved.closed,
            rates,
            seed: resolved.seed,
            out_dir: PathBuf::from(&resolved.out_dir),
            input,
            tau_over_g: resolved.winding.tau_over_g,
            mcd_points: resolved.winding.points,
            ratios: resolved.winding.ratios.clone(),
            winding_n_list: resolved.winding.n_list.clone(),
            probe_fracs: resolved.winding.probe_fracs.clone(),
            scan_gt: (
                resolved.scan.gt_min,
                resolved.scan.gt_max,
                resolved.scan.gt_step,
            ),
            threshold: resolved.scan.threshold,
            scan_n_list: resolved.scan.n_list.clone(),
            eta_m: resolved.disorder.eta_m,
            eta_o: resolved.disorder.eta_o,
            samples: resolved.disorder.samples,
            eta_m_grid: resolved.disorder.eta_m_grid.clone(),
            eta_o_grid: resolved.disorder.eta_o_grid.clone(),
            wigner_points: resolved.wigner.points,
            resolved,
            hash,
        })
    }

    /// Lab-unit view of the fully resolved configuration.
    pub fn resolved(&self) -> &ResolvedConfig {
        &self.resolved
    }

    /// Echo document: the resolved lab-unit config as TOML. Parsing it
    /// back yields the same normalized configuration.
    pub fn echo_toml(&self) -> String {
        toml::to_string(&self.resolved).expect("resolved config serializes")
    }

    /// SHA-256 of the echo document; embedded in every output file.
    pub fn config_sha256(&self) -> &str {
        &self.hash
    }

    /// MCD averaging window in us.
    pub fn tau_us(&self) -> f64 {
        self.tau_over_g / self.g
    }
}

/// Field-extraction context: records problems instead of failing fast.
struct Ctx {
    errors: Vec<String>,
}

impl Ctx {
    fn value<'t>(&mut self, table: &'t toml::Table, key: &str) -> Option<&'t toml::Value> {
        table.get(key)
    }

    fn f64(&mut self, table: &toml::Table, key: &str, default: f64) -> f64 {
        match self.value(table, key) {
            None => default,
            Some(toml::Value::Float(v)) => *v,
            Some(toml::Value::Integer(v)) => *v as f64,
            Some(other) => {
                self.errors
                    .push(format!("{key}: expected a number, got {other}"));
                default
            }
        }
    }

    fn usize(&mut self, table: &toml::Table, key: &str, default: usize) -> usize {
        match self.value(table, key) {
            None => default,
            Some(toml::Value::Integer(v)) if *v >= 0 => *v as usize,
            Some(other) => {
                self.errors.push(format!(
                    "{key}: expected a non-negative integer, got {other}"
                ));
                default
            }
        }
    }

    fn u64(&mut self, table: &toml::Table, key: &str, default: u64) -> u64 {
        match self.value(table, key) {
            None => default,
            Some(toml::Value::Integer(v)) if *v >= 0 => *v as u64,
            Some(other) => {
                self.errors.push(format!(
                    "{key}: expected a non-negative integer, got {other}"
                ));
                default
            }
        }
    }

    fn bool(&mut self, table: &toml::Table, key: &str, default: bool) -> bool {
        match self.value(table, key) {
            None => default,
            Some(toml::Value::Boolean(v)) => *v,
            Some(other) => {
                self.errors
                    .push(format!("{key}: expected a boolean, got {other}"));
                default
            }
        }
    }

    fn string(&mut self, table: &toml::Table, key: &str, default: &str) -> String {
        match self.value(table, key) {
            None => default.to_string(),
            Some(toml::Value::String(v)) => v.clone(),
            Some(other) => {
                self.errors
                    .push(format!("{key}: expected a string, got {other}"));
                default.to_string()
            }
        }
    }

    fn f64_list(&mut self, table: &toml::Table, key: &str) -> Option<Vec<f64>> {
        match self.value(table, key) {
            None => None,
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    match item {
                        toml::Value::Float(v) => out.push(*v),
                        toml::Value::Integer(v) => out.push(*v as f64),
                        other => {
                            self.errors
                                .push(format!("{key}[{i}]: expected a number, got {other}"));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Some(other) => {
                self.errors
                    .push(format!("{key}: expected an array of numbers, got {other}"));
                None
            }
        }
    }

    fn usize_list(&mut self, table: &toml::Table, key: &str) -> Option<Vec<usize>> {
        match self.value(table, key) {
            None => None,
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, item) in items.iter().enumerate() {
                    match item {
                        toml::Value::Integer(v) if *v >= 0 => out.push(*v as usize),
                        other => {
                            self.errors.push(format!(
                                "{key}[{i}]: expected a non-negative integer, got {other}"
                            ));
                            return None;
                        }
                    }
                }
                Some(out)
            }
            Some(other) => {
                self.errors
                    .push(format!("{key}: expected an array of integers, got {other}"));
                None
            }
        }
    }

    fn table<'t>(&mut self, table: &'t toml::Table, key: &str) -> Option<&'t toml::Table> {
        match self.value(table, key) {
            None => None,
            Some(toml::Value::Table(t)) => Some(t),
            Some(other) => {
                self.errors
                    .push(format!("{key}: expected a table, got {other}"));
                None
            }
        }
    }

    fn check_keys(&mut self, table: &toml::Table, path: &str, allowed: &[&str]) {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for key in table.keys() {
            if !allowed.contains(key.as_str()) {
                let full = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                self.errors.push(format!("unknown key `{full}`"));
            }
        }
    }
}

fn check_positive(ctx: &mut Ctx, key: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        ctx.errors.push(format!("{key}: must be positive, got {v}"));
    }
}

fn check_range(ctx: &mut Ctx, key: &str, v: f64, lo: f64, hi: f64) {
    if !(v.is_finite() && (lo..=hi).contains(&v)) {
        ctx.errors
            .push(format!("{key}: must lie in [{lo}, {hi}], got {v}"));
    }
}

fn check_excitation(ctx: &mut Ctx, key: &str, n: usize) {
    if n == 0 || n > MAX_EXCITATION {
        ctx.errors
            .push(format!("{key}: must lie in [1, {MAX_EXCITATION}], got {n}"));
    }
}

/// 15-point logarithmic default ratio grid over [0.1, 10].
fn default_ratios() -> Vec<f64> {
    let count = 15;
    (0..count)
        .map(|i| 10f64.powf(-1.0 + 2.0 * i as f64 / (count - 1) as f64))
        .collect()
}

fn resolve(scenario: Scenario, table: &toml::Table) -> Result<ResolvedConfig> {
    let mut ctx = Ctx { errors: Vec::new() };
    ctx.check_keys(
        table,
        "",
        &[
            "scenario",
            "model",
            "n_m",
            "g_over_2pi_mhz",
            "t_us",
            "grid_points",
            "closed",
            "gamma0_over_2pi_khz",
            "kappa_m_over_2pi_khz",
            "kappa_o_over_2pi_khz",
            "seed",
            "out_dir",
            "input",
            "winding",
            "scan",
            "disorder",
            "wigner",
        ],
    );

    let file_scenario = ctx.string(table, "scenario", scenario.id());
    match Scenario::from_id(&file_scenario) {
        None => ctx
            .errors
            .push(format!("scenario: unknown id \"{file_scenario}\"")),
        Some(s) if s != scenario => ctx.errors.push(format!(
            "scenario: file says \"{file_scenario}\" but the run is \"{}\"",
            scenario.id()
        )),
        Some(_) => {}
    }

    let model = ctx.string(table, "model", "fsl");
    if model != "fsl" && model != "ssh" {
        ctx.errors.push(format!(
            "model: expected \"fsl\" or \"ssh\", got \"{model}\""
        ));
    }
    let is_fsl = model != "ssh";

    let n_m = ctx.usize(table, "n_m", 5);
    check_excitation(&mut ctx, "n_m", n_m);

    let g_over_2pi_mhz = ctx.f64(table, "g_over_2pi_mhz", 0.282);
    check_positive(&mut ctx, "g_over_2pi_mhz", g_over_2pi_mhz);

    let t_us = ctx.f64(table, "t_us", 8.2);
    check_positive(&mut ctx, "t_us", t_us);

    let default_grid = if scenario == Scenario::Spectrum {
        51
    } else {
        501
    };
    let grid_points = ctx.usize(table, "grid_points", default_grid);
    if grid_points < 2 {
        ctx.errors
            .push(format!("grid_points: need at least 2, got {grid_points}"));
    }

    let closed = ctx.bool(table, "closed", false);
    let gamma0 = ctx.f64(table, "gamma0_over_2pi_khz", 3.6);
    let kappa_m = ctx.f64(table, "kappa_m_over_2pi_khz", 2.0);
    let kappa_o = ctx.f64(table, "kappa_o_over_2pi_khz", 3.4);
    for (key, v) in [
        ("gamma0_over_2pi_khz", gamma0),
        ("kappa_m_over_2pi_khz", kappa_m),
        ("kappa_o_over_2pi_khz", kappa_o),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            ctx.errors
                .push(format!("{key}: must be finite and non-negative, got {v}"));
        }
    }

    let seed = ctx.u64(table, "seed", 42);
    let out_dir = ctx.string(table, "out_dir", &format!("runs/{}", scenario.id()));
    if out_dir.is_empty() {
        ctx.errors.push("out_dir: must not be empty".into());
    }

    let empty = toml::Table::new();

    // [input]
    let input_table = ctx.table(table, "input").unwrap_or(&empty).clone();
    ctx.check_keys(
        &input_table,
        "input",
        &["kind", "n", "alpha_re", "alpha_im", "r", "theta"],
    );
    let input_kind = ctx.string(&input_table, "kind", "fock");
    let input_n = ctx.usize(&input_table, "n", n_m);
    let alpha_re = ctx.f64(&input_table, "alpha_re", 1.0);
    let alpha_im = ctx.f64(&input_table, "alpha_im", 0.0);
    let input_r = ctx.f64(&input_table, "r", 0.7);
    let input_theta = ctx.f64(&input_table, "theta", 0.0);
    match input_kind.as_str() {
        "fock" => {
            check_excitation(&mut ctx, "input.n", input_n);
            if input_n != n_m {
                ctx.errors.push(format!(
                    "input.n: fock input must match n_m = {n_m}, got {input_n}"
                ));
            }
        }
        "coherent" | "squeezed" => {}
        other => ctx.errors.push(format!(
            "input.kind: expected \"fock\", \"coherent\" or \"squeezed\", got \"{other}\""
        )),
    }

    // [winding]
    let winding_table = ctx.table(table, "winding").unwrap_or(&empty).clone();
    ctx.check_keys(
        &winding_table,
        "winding",
        &[
            "tau_over_g",
            "points",
            "ratios",
            "ratio_min",
            "ratio_max",
            "ratio_count",
            "n_list",
            "probe_fracs",
        ],
    );
    let tau_over_g = ctx.f64(&winding_table, "tau_over_g", 200.0);
    check_positive(&mut ctx, "winding.tau_over_g", tau_over_g);
    let mcd_points = ctx.usize(&winding_table, "points", DEFAULT_MCD_POINTS);
    if mcd_points < 3 {
        ctx.errors
            .push(format!("winding.points: need at least 3, got {mcd_points}"));
    }
    let explicit_ratios = ctx.f64_list(&winding_table, "ratios");
    let has_grid_keys = winding_table.contains_key("ratio_min")
        || winding_table.contains_key("ratio_max")
        || winding_table.contains_key("ratio_count");
    let ratios = match explicit_ratios {
        Some(list) => {
            if has_grid_keys {
                ctx.errors.push(
                    "winding.ratios: give either an explicit list or ratio_min/max/count, not both"
                        .into(),
                );
            }
            list
        }
        None if has_grid_keys => {
            let lo = ctx.f64(&winding_table, "ratio_min", 0.1);
            let hi = ctx.f64(&winding_table, "ratio_max", 10.0);
            let count = ctx.usize(&winding_table, "ratio_count", 15);
            check_positive(&mut ctx, "winding.ratio_min", lo);
            if !(hi.is_finite() && hi > lo) {
                ctx.errors.push(format!(
                    "winding.ratio_max: must exceed ratio_min = {lo}, got {hi}"
                ));
            }
            if count < 2 {
                ctx.errors
                    .push(format!("winding.ratio_count: need at least 2, got {count}"));
            }
            if ctx.errors.is_empty() {
                (0..count)
                    .map(|i| {
                        10f64.powf(
                            lo.log10() + (hi.log10() - lo.log10()) * i as f64 / (count - 1) as f64,
                        )
                    })
                    .collect()
            } else {
                default_ratios()
            }
        }
        None => default_ratios(),
    };
    if ratios.is_empty() {
        ctx.errors.push("winding.ratios: must not be empty".into());
    }
    for (i, r) in ratios.iter().enumerate() {
        if !(r.is_finite() && *r > 0.0) {
            ctx.errors
                .push(format!("winding.ratios[{i}]: must be positive, got {r}"));
        }
    }
    let default_winding_n: Vec<usize> = match scenario {
        Scenario::WindingVsRatio if is_fsl => (2..=8).collect(),
        _ => vec![n_m.clamp(1, MAX_EXCITATION)],
    };
    let winding_n_list = ctx
        .usize_list(&winding_table, "n_list")
        .unwrap_or(default_winding_n);
    if winding_n_list.is_empty() {
        ctx.errors.push("winding.n_list: must not be empty".into());
    }
    for n in &winding_n_list {
        check_excitation(&mut ctx, "winding.n_list", *n);
    }
    let probe_fracs = ctx
        .f64_list(&winding_table, "probe_fracs")
        .unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    if probe_fracs.is_empty() {
        ctx.errors
            .push("winding.probe_fracs: must not be empty".into());
    }
    for (i, f) in probe_fracs.iter().enumerate() {
        if !(f.is_finite() && (0.0..=1.0).contains(f)) {
            ctx.errors.push(format!(
                "winding.probe_fracs[{i}]: must lie in [0, 1], got {f}"
            ));
        }
    }

    // [scan]
    let scan_table = ctx.table(table, "scan").unwrap_or(&empty).clone();
    ctx.check_keys(
        &scan_table,
        "scan",
        &["gt_min", "gt_max", "gt_step", "threshold", "n_list"],
    );
    // The window starts above the short-chain 2pi pulse-area resonance
    // (gT = 6.1 for a single excitation), which would otherwise preempt
    // the peak family that the critical-time scaling follows.
    let (dmin, dmax, dstep) = if is_fsl {
        (10.0, 30.0, 0.25)
    } else {
        (10.0, 320.0, 1.0)
    };
    let gt_min = ctx.f64(&scan_table, "gt_min", dmin);
    let gt_max = ctx.f64(&scan_table, "gt_max", dmax);
    let gt_step = ctx.f64(&scan_table, "gt_step", dstep);
    check_positive(&mut ctx, "scan.gt_min", gt_min);
    if !(gt_max.is_finite() && gt_max > gt_min) {
        ctx.errors.push(format!(
            "scan.gt_max: must exceed gt_min = {gt_min}, got {gt_max}"
        ));
    }
    if !(gt_step.is_finite() && gt_step > 0.0 && gt_step < gt_max - gt_min) {
        ctx.errors.push(format!(
            "scan.gt_step: must be positive and smaller than the range, got {gt_step}"
        ));
    }
    let threshold = ctx.f64(&scan_table, "threshold", 0.99);
    if !(threshold.is_finite() && threshold > 0.0 && threshold <= 1.0) {
        ctx.errors.push(format!(
            "scan.threshold: must lie in (0, 1], got {threshold}"
        ));
    }
    let default_scan_n: Vec<usize> = if is_fsl {
        (1..=10).collect()
    } else {
        (1..=6).collect()
    };
    let scan_n_list = ctx
        .usize_list(&scan_table, "n_list")
        .unwrap_or(default_scan_n);
    if scan_n_list.is_empty() {
        ctx.errors.push("scan.n_list: must not be empty".into());
    }
    for n in &scan_n_list {
        check_excitation(&mut ctx, "scan.n_list", *n);
    }

    // [disorder]
    let disorder_table = ctx.table(table, "disorder").unwrap_or(&empty).clone();
    ctx.check_keys(
        &disorder_table,
        "disorder",
        &["eta_m", "eta_o", "samples", "eta_m_grid", "eta_o_grid"],
    );
    let default_eta = if scenario == Scenario::WindingDuringPump {
        0.1
    } else {
        0.0
    };
    let eta_m = ctx.f64(&disorder_table, "eta_m", default_eta);
    let eta_o = ctx.f64(&disorder_table, "eta_o", default_eta);
    check_range(&mut ctx, "disorder.eta_m", eta_m, 0.0, 0.5);
    check_range(&mut ctx, "disorder.eta_o", eta_o, 0.0, 0.5);
    let default_samples = if scenario == Scenario::DisorderSurface {
        1001
    } else {
        101
    };
    let samples = ctx.usize(&disorder_table, "samples", default_samples);
    if samples == 0 {
        ctx.errors.push("disorder.samples: need at least 1".into());
    }
    let default_grid_vals = vec![0.0, 0.05, 0.1, 0.15, 0.2];
    let eta_m_grid = ctx
        .f64_list(&disorder_table, "eta_m_grid")
        .unwrap_or_else(|| default_grid_vals.clone());
    let eta_o_grid = ctx
        .f64_list(&disorder_table, "eta_o_grid")
        .unwrap_or(default_grid_vals);
    for (key, grid) in [("eta_m_grid", &eta_m_grid), ("eta_o_grid", &eta_o_grid)] {
        if grid.is_empty() {
            ctx.errors
                .push(format!("disorder.{key}: must not be empty"));
        }
        for (i, v) in grid.iter().enumerate() {
            check_range(&mut ctx, &format!("disorder.{key}[{i}]"), *v, 0.0, 0.2);
        }
    }

    // [wigner]
    let wigner_table = ctx.table(table, "wigner").unwrap_or(&empty).clone();
    ctx.check_keys(&wigner_table, "wigner", &["points"]);
    let wigner_points = ctx.usize(&wigner_table, "points", 101);
    if wigner_points < 9 {
        ctx.errors.push(format!(
            "wigner.points: need at least 9 per axis, got {wigner_points}"
        ));
    }

    if !ctx.errors.is_empty() {
        return Err(Error::Config(ctx.errors));
    }

    Ok(ResolvedConfig {
        scenario: scenario.id().to_string(),
        model,
        n_m,
        g_over_2pi_mhz,
        t_us,
        grid_points,
        closed,
        gamma0_over_2pi_khz: gamma0,
        kappa_m_over_2pi_khz: kappa_m,
        kappa_o_over_2pi_khz: kappa_o,
        seed,
        out_dir,
        input: ResolvedInput {
            kind: input_kind,
            n: input_n,
            alpha_re,
            alpha_im,
            r: input_r,
            theta: input_theta,
        },
        winding: ResolvedWinding {
            tau_over_g,
            points: mcd_points,
            ratios,
            n_list: winding_n_list,
            probe_fracs,
        },
        scan: ResolvedScan {
            gt_min,
            gt_max,
            gt_step,
            threshold,
            n_list: scan_n_list,
        },
        disorder: ResolvedDisorder {
            eta_m,
            eta_o,
            samples,
            eta_m_grid,
            eta_o_grid,
        },
        wigner: ResolvedWigner {
            points: wigner_points,
        },
    })
}
