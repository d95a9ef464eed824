//! Thin command-line front end: parses arguments, loads the lab-unit
//! config file, applies flag overrides, and dispatches to the scenario
//! runners. All physics lives in fsl-core; this binary only plumbs
//! configuration, output paths, and exit codes.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error,
//! 3 numerical or I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use fsl_core::experiments::{self, ExperimentConfig, Scenario};
use fsl_core::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "fsl-sim",
    version,
    about = "Fock-state-lattice transducer simulator",
    long_about = "Simulates microwave-to-optical conversion by topological pumping on a \
                  Fock-state lattice: spectra, pumping runs, winding-number measurements, \
                  critical-time scans, disorder ensembles, and Wigner maps.\n\
                  Config files use laboratory units (MHz, kHz, us); see README for the schema."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file; omit for the documented defaults
    #[arg(short, long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory override
    #[arg(short, long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Ensemble seed override
    #[arg(short, long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads (default: all cores)
    #[arg(short, long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Overwrite existing output files
    #[arg(short, long, global = true)]
    force: bool,

    /// Print progress detail
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Fsl,
    Ssh,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WindingMode {
    /// Static couplings over a ratio grid
    Ratio,
    /// Frozen pump schedule under disorder
    Pump,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Instantaneous chain spectrum across the pump
    Spectrum {
        /// Chain kind override
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        /// Excitation number override
        #[arg(long, value_name = "N")]
        n: Option<usize>,
    },
    /// Pumping run: transport curve, site populations, adiabatic levels
    Pump,
    /// Winding-number measurement by mean chiral displacement
    Winding {
        /// What to sweep
        #[arg(long, value_enum, default_value = "ratio")]
        mode: WindingMode,
    },
    /// Critical-time scan with scaling fit
    Scan,
    /// Disorder-ensemble conversion surface
    Disorder,
    /// Transduce an arbitrary input and map the optical Wigner function
    Wigner,
    /// Run the numerical hygiene checks
    Selftest,
}

fn error_record(exit_code: i32, kind: &str, messages: &[String]) {
    let record = serde_json::json!({
        "status": "error",
        "exit_code": exit_code,
        "kind": kind,
        "messages": messages,
    });
    eprintln!("{record}");
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Config(_) => "config",
        Error::InvalidParameter(_) => "invalid-parameter",
        Error::OutputCollision(_) => "output-collision",
        Error::Io(_) => "io",
        _ => "numerical",
    }
}

fn report(err: &Error) -> ExitCode {
    let code = err.exit_code();
    let messages = match err {
        Error::Config(list) => list.clone(),
        other => vec![other.to_string()],
    };
    error_record(code, error_kind(err), &messages);
    ExitCode::from(code as u8)
}

fn scenario_of(cmd: &Command) -> Scenario {
    match cmd {
        Command::Spectrum { .. } => Scenario::Spectrum,
        Command::Pump => Scenario::Pump,
        Command::Winding {
            mode: WindingMode::Ratio,
        } => Scenario::WindingVsRatio,
        Command::Winding {
            mode: WindingMode::Pump,
        } => Scenario::WindingDuringPump,
        Command::Scan => Scenario::CriticalScan,
        Command::Disorder => Scenario::DisorderSurface,
        Command::Wigner => Scenario::Wigner,
        Command::Selftest => unreachable!("selftest takes no config scenario"),
    }
}

/// Load the config table and apply flag overrides; overrides are written
/// into the table before normalization so validation sees final values.
fn load_config(cmd: &Command, common: &Common) -> Result<ExperimentConfig, Error> {
    let mut table = match &common.config {
        None => toml::Table::new(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(vec![format!("cannot read config {}: {e}", path.display())])
            })?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::Config(vec![format!("config does not parse: {e}")]))?
        }
    };
    if let Command::Spectrum { model, n } = cmd {
        if let Some(m) = model {
            let id = match m {
                ModelArg::Fsl => "fsl",
                ModelArg::Ssh => "ssh",
            };
            table.insert("model".into(), toml::Value::String(id.into()));
        }
        if let Some(n) = n {
            table.insert("n_m".into(), toml::Value::Integer(*n as i64));
        }
    }
    if let Some(seed) = common.seed {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    if let Some(out) = &common.out {
        table.insert(
            "out_dir".into(),
            toml::Value::String(out.display().to_string()),
        );
    }
    ExperimentConfig::from_table(scenario_of(cmd), table)
}

fn run_selftest() -> ExitCode {
    let checks = experiments::selftest::run_selftests();
    let mut failed = 0;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {:<28} {}", c.name, c.detail);
        if !c.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all {} checks passed", checks.len());
        ExitCode::SUCCESS
    } else {
        error_record(
            3,
            "selftest",
            &[format!("{failed} of {} checks failed", checks.len())],
        );
        ExitCode::from(3)
    }
}

fn run(cli: Cli) -> ExitCode {
    if let Some(threads) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            error_record(1, "usage", &[format!("cannot set thread count: {e}")]);
            return ExitCode::from(1);
        }
    }

    if matches!(cli.command, Command::Selftest) {
        return run_selftest();
    }

    let cfg = match load_config(&cli.command, &cli.common) {
        Ok(cfg) => cfg,
        Err(e) => return report(&e),
    };
    if cli.common.verbose > 0 {
        println!("scenario       {}", cfg.scenario.id());
        println!("config sha256  {}", cfg.config_sha256());
        println!("output dir     {}", cfg.out_dir.display());
    }
    match experiments::execute(&cfg, cli.common.force, &[("fsl-sim", VERSION)]) {
        Ok(arts) => {
            println!("wrote {} files to {}", arts.files.len(), arts.dir.display());
            for (key, value) in &arts.headline {
                println!("  {key} = {value}");
            }
            if cli.common.verbose > 0 {
                for f in &arts.files {
                    println!("  {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(cli),
        Err(e)
            if matches!(
                e.kind(),
                ClapErrorKind::DisplayHelp
                    | ClapErrorKind::DisplayVersion
                    | ClapErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            print!("{e}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{e}");
            error_record(1, "usage", &[e.to_string()]);
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn subcommands_map_to_scenarios() {
        let cases = [
            (vec!["fsl-sim", "spectrum"], Scenario::Spectrum),
            (vec!["fsl-sim", "pump"], Scenario::Pump),
            (vec!["fsl-sim", "winding"], Scenario::WindingVsRatio),
            (
                vec!["fsl-sim", "winding", "--mode", "pump"],
                Scenario::WindingDuringPump,
            ),
            (vec!["fsl-sim", "scan"], Scenario::CriticalScan),
            (vec!["fsl-sim", "disorder"], Scenario::DisorderSurface),
            (vec!["fsl-sim", "wigner"], Scenario::Wigner),
        ];
        for (args, want) in cases {
            let cli = parse(&args);
            assert_eq!(scenario_of(&cli.command), want, "{args:?}");
        }
    }

    #[test]
    fn flag_overrides_land_in_the_config() {
        let cli = parse(&[
            "fsl-sim", "spectrum", "--model", "ssh", "--n", "3", "--seed", "7", "--out", "/tmp/x",
        ]);
        let cfg = load_config(&cli.command, &cli.common).unwrap();
        assert_eq!(cfg.model, fsl_core::hamiltonians::ChainKind::Ssh);
        assert_eq!(cfg.n_m, 3);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let cli = parse(&["fsl-sim", "pump", "--config", "/nonexistent/nope.toml"]);
        let err = load_config(&cli.command, &cli.common).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert_eq!(err.exit_code(), 2);
        assert_eq!(error_kind(&err), "config");
    }

    #[test]
    fn error_kinds_cover_the_exit_code_contract() {
        assert_eq!(error_kind(&Error::Config(vec!["x".into()])), "config");
        assert_eq!(
            error_kind(&Error::InvalidParameter("x".into())),
            "invalid-parameter"
        );
        assert_eq!(
            error_kind(&Error::OutputCollision("x".into())),
            "output-collision"
        );
    }
}
