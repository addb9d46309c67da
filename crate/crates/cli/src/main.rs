//! `nonint`: Melnikov curves, resonance sweeps and integrability verdicts
//! from the command line.

use std::collections::BTreeMap;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod emit;

use config::Command;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nonint::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Core(e) if e.is_domain() => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

/// Declares the shared option struct together with the list of its keys so
/// flags and config-file entries go through one resolver.
macro_rules! options {
    ($($(#[doc = $doc:literal])* $field:ident),* $(,)?) => {
        #[derive(Debug, Args, Default)]
        struct Opts {
            /// Read settings from a sectioned key = value file; flags override it.
            #[arg(long, value_name = "PATH")]
            config: Option<String>,
            $(
                $(#[doc = $doc])*
                #[arg(long, allow_hyphen_values = true, value_name = "VALUE")]
                $field: Option<String>,
            )*
        }

        impl Opts {
            #[cfg(test)]
            const KEYS: &'static [&'static str] = &[$(stringify!($field)),*];

            fn entries(&self) -> Vec<(&'static str, &Option<String>)> {
                vec![$((stringify!($field), &self.$field)),*]
            }
        }
    };
}

options! {
    /// duffing, pendulum (pendulum_torque) or coupled (coupled_oscillators)
    system,
    /// Duffing cubic sign, 1 or -1
    a,
    /// Forcing amplitude, or pendulum torque coefficient
    beta,
    /// Damping
    delta,
    /// Forcing frequency
    nu,
    /// Set nu so the orbit of this modulus is resonant for the first l, n
    nu_from_k,
    /// Orbit family: interior, interior_minus, exterior, soft, homoclinic, homoclinic_minus
    family,
    /// Number of coupled oscillators
    ell,
    /// Coupled drives, comma-separated
    drive,
    /// Coupling harmonics as k1:k2=a,...
    coupling,
    /// Exponential coupling scale,rate,max_order
    coupling_exp,
    /// Coupling decay bound scale,rate
    decay,
    /// Largest coupling order k1 + k2
    truncation,
    /// Orbit-period multipliers (or limit orders), comma-separated
    l,
    /// Forcing-period multipliers, comma-separated
    n,
    /// Phase grid size
    grid,
    /// Newton shooting tolerance
    tol,
    /// Homoclinic tail tolerance
    tail_tol,
    /// Perturbation sizes for persist, comma-separated
    eps,
    /// Relative tolerance of the zero and constant tests
    rel_tol,
    /// Quadrature grid for resonant integrals
    tau_grid,
    /// Fourier lattice truncation
    lattice_truncation,
    /// Denominator bound for rational frequency ratios
    denom_bound,
    /// Resonances sampled per verdict sequence
    evidence_points,
    /// Maximum resonant actions reported
    max_points,
    /// Lower end of the scan frequency range
    nu_min,
    /// Upper end of the scan frequency range
    nu_max,
    /// Frequencies on the scan grid
    points,
    /// Multiples of the chaos threshold scanned at each frequency
    ratio_factors,
    /// Extra random scan tuples
    random,
    /// Seed for random tuples
    seed,
    /// Output directory; stdout when absent
    out,
    /// csv or json
    format,
}

#[derive(Debug, Parser)]
#[command(
    name = "nonint",
    version,
    about = "Melnikov and resonant-integral tests for nonintegrability"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Subharmonic Melnikov curve, quadrature against closed form
    Sub(Opts),
    /// Homoclinic Melnikov curve, quadrature against closed form
    Hom(Opts),
    /// Resonant moduli (Duffing) or resonant actions (action-angle systems)
    Resonances(Opts),
    /// Subharmonic to homoclinic convergence
    Limit(Opts),
    /// Newton continuation of periodic orbits from simple Melnikov zeros
    Persist(Opts),
    /// Chaos threshold against homoclinic zero counts
    Scan(Opts),
    /// Theorem-level verdicts with evidence
    Verdict(Opts),
}

fn settings(opts: &Opts) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;
            config::parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in opts.entries() {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    Ok(map)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, opts) = match cli.cmd {
        Cmd::Sub(o) => (Command::Sub, o),
        Cmd::Hom(o) => (Command::Hom, o),
        Cmd::Resonances(o) => (Command::Resonances, o),
        Cmd::Limit(o) => (Command::Limit, o),
        Cmd::Persist(o) => (Command::Persist, o),
        Cmd::Scan(o) => (Command::Scan, o),
        Cmd::Verdict(o) => (Command::Verdict, o),
    };
    let cfg = config::resolve(command, &settings(&opts)?)?;
    let text = commands::run(&cfg)?;
    if let Some(path) = emit::write_output(&cfg, &text)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(64)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
