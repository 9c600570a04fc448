//! Batch driver for the fracnash checks: experiment configs, commands and
//! the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

use crate::commands::Outcome;
use crate::config::{Command, ExperimentConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub command: Option<Command>,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub strict: bool,
}

impl RunOptions {
    /// Loads the config (if any), applies overrides and fills defaults.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.command) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(cmd)) => ExperimentConfig::new(cmd),
            (None, None) => anyhow::bail!("give a command or --config PATH"),
        };
        if let Some(cmd) = self.command {
            cfg.command = cmd;
        }
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if cfg.out.is_none() {
            cfg.out = Some(PathBuf::from("results").join(cfg.command.to_string()));
        }
        cfg.resolve()
    }
}

/// Runs one experiment and returns the process exit code.
pub fn run(opts: &RunOptions) -> i32 {
    let cfg = match opts.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: cannot start {} worker threads: {e}", opts.jobs.unwrap_or(0));
            return EXIT_CONFIG;
        }
    };
    let start = Instant::now();
    let outcome = pool.install(|| commands::execute(&cfg, opts.strict));
    let wall = start.elapsed().as_secs_f64();
    let dir = cfg.out.clone().expect("resolved config has an output directory");
    match outcome.and_then(|o| persist(&cfg, opts, &o, wall).map(|m| (o, m))) {
        Ok((o, manifest)) => {
            for f in &o.failures {
                eprintln!("assertion failed: {} ({})", f.message, dir.join(&f.artifact).display());
            }
            println!("{} tables written to {} (manifest {})", o.tables.len(), dir.display(), manifest.display());
            if o.failures.is_empty() {
                EXIT_PASS
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ASSERTION
        }
    }
}

fn persist(cfg: &ExperimentConfig, opts: &RunOptions, o: &Outcome, wall: f64) -> Result<PathBuf> {
    let dir = cfg.out.as_ref().expect("resolved config has an output directory");
    let mut files = Vec::new();
    for t in &o.tables {
        let path = t.write(dir)?;
        files.push((t.name.clone() + ".csv", fs::metadata(&path)?.len()));
    }
    for (name, text) in &o.texts {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        files.push((name.clone(), text.len() as u64));
    }
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut m = String::new();
    let _ = writeln!(m, "command = {}", cfg.command);
    let _ = writeln!(m, "fracnash_cli = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "fracnash_core = {}", fracnash_core::VERSION);
    let _ = writeln!(m, "seed = {}", cfg.seed());
    let _ = writeln!(m, "jobs = {}", opts.jobs.map_or("auto".to_string(), |j| j.to_string()));
    let _ = writeln!(m, "strict = {}", opts.strict);
    let _ = writeln!(m, "status = {}", if o.failures.is_empty() { "pass" } else { "fail" });
    let _ = writeln!(m, "wall_time_s = {wall:.3}");
    let _ = writeln!(m, "timestamp_unix = {stamp}");
    m.push_str("\n[files]\n");
    for (name, bytes) in &files {
        let _ = writeln!(m, "{name} = {bytes}");
    }
    for f in &o.failures {
        let _ = writeln!(m, "failure = {:?}", format!("{}: {}", f.artifact, f.message));
    }
    m.push_str("\n[config]\n");
    m.push_str(&cfg.to_toml());
    let path = dir.join("manifest.txt");
    fs::write(&path, m).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
