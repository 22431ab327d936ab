//! `driftgap`: spectral gap certificates for drift Laplacians, plus the experiments that check them.

mod config;
mod experiments;
mod output;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use driftgap::catalog::{by_name, shipped_operators};
use driftgap::modulus::{build_modulus, find_sigma2};
use driftgap::sl::{gap_from_spectrum, solve_sl, SlProblem};
use driftgap::spectrum::{assemble, low_spectrum};
use driftgap::{certify, soundness_report, CertifyOptions, OperatorSpec};

use crate::config::ExperimentConfig;
use crate::experiments::Settings;
use crate::output::{Check, Report};

#[derive(Parser)]
#[command(name = "driftgap", version, about = "Lower bounds for the spectral gap of drift Laplacians")]
struct Cli {
    /// Worker threads for independent solves; runs are sequential by default.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for sampled point pairs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-dimensional comparison problem.
    Sl {
        #[command(subcommand)]
        command: SlCommand,
    },
    /// Modulus of expansion psi for given sigma and Lambda.
    Modulus {
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        diameter: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Low spectrum of a discretized operator.
    Spectrum {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 4)]
        modes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the matrix in coordinate format.
        #[arg(long)]
        matrix: bool,
    },
    /// Certified gap lower bound with a soundness check against the computed gap.
    Certify {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sampled pairs for tau.
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Run a named experiment, writing CSV, SVG and a PASS/FAIL summary.
    Experiment {
        /// One of: sl-spectrum, sl-asymptotics, sigma-ladder, modulus-check, ac-interval,
        /// phi-laplacian, constant-drift, rotating-disk, identity-check, certify.
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        diameter: Option<f64>,
        #[arg(long)]
        modes: Option<usize>,
        /// Finest grid spacing; the experiment also solves at twice this spacing.
        #[arg(long)]
        grid: Option<f64>,
    },
    /// List the built-in operators.
    Operators,
}

#[derive(Subcommand)]
enum SlCommand {
    /// Eigenvalues and eigenfunctions.
    Solve {
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        diameter: f64,
        #[arg(long, default_value_t = 2)]
        modes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// mu1 - mu0 through the Wronskian identity.
    Gap {
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        diameter: f64,
    },
    /// Critical sigma and the confirmed sigma2.
    CriticalSigma {
        #[arg(long, default_value_t = 1.0)]
        diameter: f64,
    },
}

#[derive(clap::Args)]
struct Target {
    /// Built-in operator name (see `driftgap operators`).
    #[arg(long, conflicts_with = "config")]
    operator: Option<String>,
    /// TOML or JSON file with an `operator` table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid spacing.
    #[arg(long)]
    grid: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl Target {
    fn resolve(&self) -> Result<(String, OperatorSpec, f64)> {
        if let Some(path) = &self.config {
            let config = ExperimentConfig::load(path)?;
            let op = match (&config.operator, &config.builtin) {
                (Some(op), _) => op.clone(),
                (None, Some(name)) => builtin(name)?.operator,
                (None, None) => bail!("{} has neither an operator table nor a builtin name", path.display()),
            };
            let h = self.grid.or_else(|| config.grids.as_ref().and_then(|g| g.last().copied())).ok_or_else(|| anyhow!("no grid spacing given; pass --grid"))?;
            return Ok((config.name.unwrap_or_else(|| "custom".into()), op, h));
        }
        let named = builtin(self.operator.as_deref().unwrap_or("interval"))?;
        Ok((named.name.to_string(), named.operator, self.grid.unwrap_or(named.h)))
    }
}

fn builtin(name: &str) -> Result<driftgap::catalog::NamedOperator> {
    by_name(name).ok_or_else(|| {
        let names: Vec<&str> = shipped_operators().iter().map(|n| n.name).collect();
        anyhow!("unknown built-in operator {name}; expected one of {}", names.join(", "))
    })
}

fn out_dir(out: Option<PathBuf>, default: &str) -> PathBuf {
    out.unwrap_or_else(|| Path::new("results").join(default))
}

fn sl(command: SlCommand) -> Result<bool> {
    match command {
        SlCommand::Solve { sigma, diameter, modes, out } => {
            let spectrum = solve_sl(&SlProblem::new(sigma, diameter)?, modes)?;
            println!("index,mu,parity,zeros,residual");
            for p in &spectrum.pairs {
                println!("{},{:.15e},{:?},{},{:.3e}", p.index, p.mu, p.parity, p.zero_count(), p.residual());
            }
            if let Some(out) = out {
                let mut report = Report::new(&out)?;
                let rows: Vec<Vec<f64>> = spectrum.pairs.iter().map(|p| vec![p.index as f64, p.mu]).collect();
                report.table("eigenvalues", &["index", "mu"], &rows)?;
                let (headers, rows) = experiments::eigenpair_table(&spectrum);
                report.table("eigenpairs", &headers.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;
            }
        }
        SlCommand::Gap { sigma, diameter } => {
            let gap = gap_from_spectrum(&solve_sl(&SlProblem::new(sigma, diameter)?, 2)?)?;
            println!("mu0 = {:.15e}\nmu1 = {:.15e}\ngap = {:.15e}\nlog_gap = {:.15e}", gap.mu0, gap.mu1, gap.gap, gap.log_gap);
        }
        SlCommand::CriticalSigma { diameter } => {
            let search = find_sigma2(diameter)?;
            println!("sigma0 = {:.12e}\nsigma2 = {:.12e}", search.sigma0, search.sigma2);
            println!("sigma,s0");
            for (sigma, s0) in &search.ladder {
                println!("{sigma:.12e},{s0:.12e}");
            }
        }
    }
    Ok(true)
}

fn modulus(sigma: Option<f64>, lambda: f64, diameter: f64, out: Option<PathBuf>) -> Result<bool> {
    let sigma = match sigma {
        Some(s) => s,
        None => find_sigma2(diameter)?.sigma2.max(8.0 * lambda),
    };
    let spectrum = solve_sl(&SlProblem::new(sigma, diameter)?, 2)?;
    let profile = build_modulus(&spectrum, lambda)?;
    let c = profile.checks;
    println!(
        "sigma = {:.12e}\neta_sigma = {:.12e}\neta = {:.12e}\ns0 = {:.12e}\nmu0 = {:.12e}",
        profile.sigma, profile.eta_sigma, profile.eta, profile.s0, profile.mu0
    );
    println!(
        "psi(0) = {:.3e}\nmax psi' = {:.3e}\nriccati residual = {:.3e}\ninequality max = {:.3e}",
        c.psi_at_zero, c.max_psi_slope, c.riccati_residual, c.inequality_max
    );
    if let Some(out) = out {
        let mut report = Report::new(&out)?;
        report.table("modulus", &["s", "v", "omega", "psi", "ratio"], &experiments::profile_table(&spectrum, &profile)?)?;
    }
    Ok(true)
}

fn spectrum(target: &Target, modes: usize, out: Option<PathBuf>, matrix: bool) -> Result<bool> {
    let (name, op, h) = target.resolve()?;
    let discrete = assemble(&op, h)?;
    let spectrum = low_spectrum(&discrete, modes)?;
    let mut rows = vec![vec![spectrum.lambda0, 0.0, spectrum.residual_norms[0]]];
    rows.extend(spectrum.others.iter().zip(&spectrum.residual_norms[1..]).map(|(z, r)| vec![z.re, z.im, *r]));
    println!("{name}, h = {h:e}, {} nodes", discrete.grid.len());
    println!("re,im,residual");
    for r in &rows {
        println!("{:.12e},{:.12e},{:.3e}", r[0], r[1], r[2]);
    }
    let out = out_dir(out, &format!("spectrum-{name}"));
    let mut report = Report::new(&out)?;
    report.table("spectrum", &["re", "im", "residual"], &rows)?;
    if matrix {
        let path = out.join("matrix.coo");
        discrete.matrix.write_coordinates(BufWriter::new(File::create(&path).with_context(|| format!("writing {}", path.display()))?))?;
    }
    Ok(true)
}

fn certify_command(target: &Target, format: Format, out: Option<PathBuf>, options: CertifyOptions) -> Result<bool> {
    let (name, op, h) = target.resolve()?;
    let solve = |h: f64| -> Result<_> { Ok(low_spectrum(&assemble(&op, h)?, 3)?) };
    let (fine, coarse) = rayon::join(|| solve(h), || solve(2.0 * h));
    let (fine, coarse) = (fine?, coarse?);
    let cert = certify(&op, &fine, options)?;
    let sound = soundness_report(&cert, &fine, &coarse)?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "certificate": cert, "soundness": sound }))?),
        Format::Text => println!("{}{}", cert.to_text(), sound.to_text()),
    }
    if let Some(out) = out {
        let mut report = Report::new(&out)?;
        report.text(&format!("certificate_{name}.json"), &cert.to_json())?;
        report.text(&format!("certificate_{name}.txt"), &format!("{}{}\n", cert.to_text(), sound.to_text()))?;
        report.check(Check::new("10", format!("{name}: alpha <= measured gap + tol_h"), sound.actual_gap - cert.alpha, -sound.tol_h, Some(h), sound.pass));
        report.finish()?;
    }
    Ok(sound.pass)
}

struct ExperimentArgs {
    name: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    sigma: Option<f64>,
    diameter: Option<f64>,
    modes: Option<usize>,
    grid: Option<f64>,
}

fn experiment(args: ExperimentArgs, seed: Option<u64>) -> Result<bool> {
    if !experiments::NAMES.contains(&args.name.as_str()) {
        bail!("unknown experiment {}; expected one of {}", args.name, experiments::NAMES.join(", "));
    }
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(sigma) = args.sigma {
        config.sigmas = Some(vec![sigma]);
    }
    if args.diameter.is_some() {
        config.diameter = args.diameter;
    }
    if args.modes.is_some() {
        config.modes = args.modes;
    }
    if let Some(h) = args.grid {
        config.grids = Some(vec![2.0 * h, h]);
    }
    config.validate()?;
    let out = args.out.or_else(|| config.output_dir.clone()).unwrap_or_else(|| Path::new("results").join(&args.name));
    let seed = seed.or(config.seed).unwrap_or(0);
    let settings = Settings { config, seed };
    let mut report = Report::new(&out)?;
    experiments::run(&args.name, &settings, &mut report)?;
    print!("{}", report.finish()?);
    println!("results in {}", out.display());
    Ok(report.all_pass())
}

fn run(cli: Cli) -> Result<bool> {
    rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.max(1)).build_global().context("configuring the worker pool")?;
    match cli.command {
        Command::Sl { command } => sl(command),
        Command::Modulus { sigma, lambda, diameter, out } => modulus(sigma, lambda, diameter, out),
        Command::Spectrum { target, modes, out, matrix } => spectrum(&target, modes, out, matrix),
        Command::Certify { target, format, out, pairs } => {
            let defaults = CertifyOptions::default();
            let options = CertifyOptions { pairs: pairs.unwrap_or(defaults.pairs), seed: cli.seed.unwrap_or(defaults.seed) };
            certify_command(&target, format, out, options)
        }
        Command::Experiment { name, config, out, sigma, diameter, modes, grid } => {
            experiment(ExperimentArgs { name, config, out, sigma, diameter, modes, grid }, cli.seed)
        }
        Command::Operators => {
            for named in shipped_operators() {
                println!("{:<16} h = {:<10} {}", named.name, named.h, serde_json::to_string(&named.operator)?);
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
