//! Run artifacts: CSV tables, config echo, summary and manifest files.
//!
//! CSV bytes depend only on the config and seed, so reruns are
//! byte-identical; wall-clock timestamps live in the manifest alone.
//! Floats print through the shortest round-trip formatter (`{}`), which is
//! deterministic and loss-free.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use chrono::{DateTime, SecondsFormat, Utc};

use super::config::ExperimentConfig;
use crate::{Error, Result};

pub const ECHO_FILE: &str = "config.echo.toml";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Where a finished run put its files.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub config_sha256: String,
    /// Headline (key, rendered value) pairs, also written to the summary.
    pub headline: Vec<(String, String)>,
}

/// One CSV cell; keeps numeric formatting in one place.
pub enum Cell {
    F(f64),
    U(usize),
    I(u64),
    S(String),
    B(bool),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::F(v) => write!(f, "{v}"),
            Cell::U(v) => write!(f, "{v}"),
            Cell::I(v) => write!(f, "{v}"),
            Cell::S(v) => write!(f, "{v}"),
            Cell::B(v) => write!(f, "{}", u8::from(*v)),
        }
    }
}

pub struct CsvTable {
    name: String,
    header: Vec<String>,
    lines: Vec<String>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            lines: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{c}");
        }
        self.lines.push(line);
    }

    pub fn render(&self, scenario: &str, hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# scenario = {scenario}");
        let _ = writeln!(out, "# config_sha256 = {hash}");
        let _ = writeln!(out, "{}", self.header.join(","));
        for line in &self.lines {
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

/// Collision-checked writer for one scenario run directory.
pub struct RunWriter {
    dir: PathBuf,
    scenario: String,
    hash: String,
    seed: u64,
    force: bool,
    started: DateTime<Utc>,
    files: Vec<PathBuf>,
    headline: Vec<(String, String)>,
    summary: toml::Table,
}

impl RunWriter {
    /// Prepare the run directory and refuse to clobber any of the files
    /// this run will produce unless `force` is set.
    pub fn new(cfg: &ExperimentConfig, data_files: &[&str], force: bool) -> Result<Self> {
        let dir = cfg.out_dir.clone();
        fs::create_dir_all(&dir)?;
        if !force {
            for name in data_files
                .iter()
                .copied()
                .chain([ECHO_FILE, SUMMARY_FILE, MANIFEST_FILE])
            {
                let path = dir.join(name);
                if path.exists() {
                    return Err(Error::OutputCollision(path.display().to_string()));
                }
            }
        }
        Ok(RunWriter {
            dir,
            scenario: cfg.scenario.id().to_string(),
            hash: cfg.config_sha256().to_string(),
            seed: cfg.seed,
            force,
            started: Utc::now(),
            files: Vec::new(),
            headline: Vec::new(),
            summary: toml::Table::new(),
        })
    }

    fn write_file(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        if !self.force && path.exists() && !self.files.contains(&path) {
            return Err(Error::OutputCollision(path.display().to_string()));
        }
        fs::write(&path, content)?;
        if !self.files.contains(&path) {
            self.files.push(path);
        }
        Ok(())
    }

    pub fn write_table(&mut self, table: &CsvTable) -> Result<()> {
        let rendered = table.render(&self.scenario, &self.hash);
        self.write_file(&table.name, &rendered)
    }

    /// Record one headline metric; lands in the summary file and in the
    /// artifact report the CLI prints.
    pub fn headline(&mut self, key: &str, value: toml::Value) {
        self.headline.push((key.to_string(), render_value(&value)));
        self.summary.insert(key.to_string(), value);
    }

    /// Attach a nested summary table (e.g. fit coefficients).
    pub fn summary_table(&mut self, key: &str, table: toml::Table) {
        self.summary
            .insert(key.to_string(), toml::Value::Table(table));
    }

    pub fn finish(
        mut self,
        cfg: &ExperimentConfig,
        tools: &[(&str, &str)],
    ) -> Result<RunArtifacts> {
        self.write_file(ECHO_FILE, &cfg.echo_toml())?;

        let mut summary = toml::Table::new();
        summary.insert("scenario".into(), self.scenario.clone().into());
        summary.insert("config_sha256".into(), self.hash.clone().into());
        summary.insert("seed".into(), toml::Value::Integer(self.seed as i64));
        for (k, v) in std::mem::take(&mut self.summary) {
            summary.insert(k, v);
        }
        self.write_file(
            SUMMARY_FILE,
            &toml::to_string(&summary).expect("summary serializes"),
        )?;

        let mut versions = BTreeMap::new();
        versions.insert(
            "fsl-core".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        for (name, version) in tools {
            versions.insert(name.to_string(), version.to_string());
        }
        let mut manifest = toml::Table::new();
        manifest.insert("scenario".into(), self.scenario.clone().into());
        manifest.insert("config_sha256".into(), self.hash.clone().into());
        manifest.insert("seed".into(), toml::Value::Integer(self.seed as i64));
        manifest.insert(
            "started_at".into(),
            self.started
                .to_rfc3339_opts(SecondsFormat::Micros, true)
                .into(),
        );
        manifest.insert(
            "finished_at".into(),
            Utc::now()
                .to_rfc3339_opts(SecondsFormat::Micros, true)
                .into(),
        );
        let mut vt = toml::Table::new();
        for (k, v) in &versions {
            vt.insert(k.clone(), v.clone().into());
        }
        manifest.insert("versions".into(), toml::Value::Table(vt));
        let names: Vec<toml::Value> = self
            .files
            .iter()
            .map(|p| {
                p.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
                    .into()
            })
            .collect();
        manifest.insert("files".into(), toml::Value::Array(names));
        self.write_file(
            MANIFEST_FILE,
            &toml::to_string(&manifest).expect("manifest serializes"),
        )?;

        Ok(RunArtifacts {
            dir: self.dir,
            files: self.files,
            config_sha256: self.hash,
            headline: self.headline,
        })
    }
}

fn render_value(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
