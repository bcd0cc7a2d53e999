//! The `doa` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::array::{spark_ula, ArrayGeometry};
use crate::config::{self, ConfigError, ManifestFile, ManifestSection, Overrides, ResolvedConfig};
use crate::harness;
use crate::output;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Parser)]
#[command(
    name = "doa",
    version,
    about = "On-grid DOA estimation experiments for uniform linear arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalized spatial spectra of every configured estimator on one realization.
    Spectrum(RunArgs),
    /// RMSE against SNR over Monte-Carlo trials.
    Rmse(RunArgs),
    /// Repeated OMP recoveries of one scene and their support stability.
    Consistency(RunArgs),
    /// Largest source count the array can uniquely identify.
    Identifiability {
        /// Number of sensors N.
        n_sensors: usize,
        /// Rank of the data matrix.
        rank_x: usize,
    },
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file, manifest of a previous run, or preset name.
    #[arg(long)]
    pub config: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    pub seed: Option<u64>,
    /// Worker threads for Monte-Carlo trials.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4096))]
    pub jobs: Option<u64>,
    /// Trial count (overrides the config).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Also write a gnuplot script.
    #[arg(long)]
    pub gnuplot: bool,
}

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Rmse(a) => cmd_rmse(&a),
        Command::Consistency(a) => cmd_consistency(&a),
        Command::Identifiability { n_sensors, rank_x } => {
            print!("{}", cmd_identifiability(n_sensors, rank_x)?);
            Ok(())
        }
        Command::Presets { name: None } => {
            for n in config::preset_names() {
                println!("{n}");
            }
            Ok(())
        }
        Command::Presets { name: Some(n) } => match config::preset(&n) {
            Some(text) => {
                print!("{text}");
                Ok(())
            }
            None => Err(Failure::Usage(format!("unknown preset {n}"))),
        },
    }
}

fn load(args: &RunArgs) -> Result<ResolvedConfig, Failure> {
    Ok(config::load(
        &args.config,
        Overrides {
            seed: args.seed,
            trials: args.trials.map(|t| t as usize),
        },
    )?)
}

fn jobs(args: &RunArgs) -> Option<usize> {
    args.jobs.map(|j| j as usize)
}

fn compute<T: Send>(
    args: &RunArgs,
    f: impl FnOnce() -> crate::Result<T> + Send,
) -> Result<T, Failure> {
    match harness::with_jobs(jobs(args), f) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e @ crate::DoaError::Config(_))) | Err(e @ crate::DoaError::Config(_)) => {
            Err(Failure::Usage(e.to_string()))
        }
        Ok(Err(e)) | Err(e) => Err(Failure::Runtime(e.to_string())),
    }
}

fn finish(
    command: &str,
    args: &RunArgs,
    resolved: &ResolvedConfig,
    mut files: Vec<(String, String)>,
) -> Result<(), Failure> {
    let mut outputs: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    outputs.push(MANIFEST_FILE.to_string());
    let manifest = ManifestFile {
        manifest: ManifestSection {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: resolved.experiment.master_seed,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            outputs,
        },
        config: resolved.file.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Failure::Runtime(e.to_string()))?;
    files.push((MANIFEST_FILE.to_string(), text));
    let written = output::commit(&args.out, &files)
        .map_err(|e| Failure::Runtime(format!("cannot write to {}: {e}", args.out.display())))?;
    verify(&written)?;
    for p in &written {
        println!("{}", p.display());
    }
    Ok(())
}

fn verify(paths: &[PathBuf]) -> Result<(), Failure> {
    for p in paths {
        if !Path::new(p).is_file() {
            return Err(Failure::Runtime(format!(
                "output {} is missing",
                p.display()
            )));
        }
    }
    Ok(())
}

fn spectrum_files(
    resolved: &ResolvedConfig,
    args: &RunArgs,
) -> Result<Vec<(String, String)>, Failure> {
    let spectra = compute(args, || {
        harness::run_spectrum_experiment(&resolved.experiment)
    })?;
    // Configuration order, not map order.
    let mut files = Vec::new();
    for a in &resolved.experiment.algorithms {
        let s = &spectra[&a.kind];
        files.push((
            output::spectrum_file_name(a.kind),
            output::spectrum_csv(s, "normalized_power"),
        ));
    }
    if args.gnuplot {
        let names: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
        files.push(("plot.gp".into(), output::gnuplot_spectra(&names)));
    }
    Ok(files)
}

pub fn cmd_spectrum(args: &RunArgs) -> Result<(), Failure> {
    {
        let resolved = load(args)?;
        let files = spectrum_files(&resolved, args)?;
        finish("spectrum", args, &resolved, files)
    }
}

pub fn cmd_rmse(args: &RunArgs) -> Result<(), Failure> {
    {
        let resolved = load(args)?;
        let curves = compute(args, || harness::run_rmse_experiment(&resolved.experiment))?;
        let mut files = vec![("rmse.csv".to_string(), output::rmse_csv(&curves))];
        if args.gnuplot {
            files.push(("plot.gp".into(), output::gnuplot_rmse(&curves)));
        }
        finish("rmse", args, &resolved, files)
    }
}

pub fn cmd_consistency(args: &RunArgs) -> Result<(), Failure> {
    {
        let resolved = load(args)?;
        let result = compute(args, || {
            harness::run_consistency_experiment(&resolved.experiment)
        })?;
        let mut files: Vec<(String, String)> = result
            .trials
            .iter()
            .enumerate()
            .map(|(i, t)| {
                (
                    output::trial_file_name(i),
                    output::spectrum_csv(&t.spectrum, "scaled_power"),
                )
            })
            .collect();
        files.push((
            "aggregate.csv".into(),
            output::spectrum_csv(&result.aggregate, "scaled_power"),
        ));
        files.push((
            "consistency_summary.csv".into(),
            output::consistency_summary_csv(&result),
        ));
        files.push(("stability.csv".into(), output::stability_csv(&result)));
        if args.gnuplot {
            let names: Vec<String> = (0..result.trials.len())
                .map(output::trial_file_name)
                .collect();
            files.push(("plot.gp".into(), output::gnuplot_spectra(&names)));
        }
        finish("consistency", args, &resolved, files)
    }
}

/// The identifiability bound with its formula terms.
pub fn cmd_identifiability(n_sensors: usize, rank_x: usize) -> Result<String, Failure> {
    let geometry =
        ArrayGeometry::half_wavelength(n_sensors).map_err(|e| Failure::Usage(e.to_string()))?;
    let m = crate::array::max_identifiable_sources(&geometry, rank_x)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let spark = spark_ula(&geometry);
    Ok(format!(
        "N = {n_sensors}, rank(X) = {rank_x}, spark = N + 1 = {spark}\n\
         M < (spark - 1 + rank(X)) / 2 = (N + rank(X)) / 2 = {}\n\
         M ≤ {m}\n",
        fmt_half(n_sensors + rank_x)
    ))
}

fn fmt_half(twice: usize) -> String {
    if twice.is_multiple_of(2) {
        format!("{}", twice / 2)
    } else {
        format!("{}.5", twice / 2)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}
