//! Command-line front end for the three-state ensemble.
//!
//! `eval` prints quantities at one `γ`, `sweep` tabulates them over a grid
//! (with presets for the standard figures), `verify` runs every identity
//! check, and `invert` finds the `γ` for a target charge or population.

pub mod error;
pub mod format;
pub mod table;
pub mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qei_core::{gamma_for_charge, gamma_for_population, Capacity, ChemicalPotential, DomainSpec, InversionResult, Tolerance};

pub use error::CliError;
use table::{parse_quantities, GammaGrid, OutputFormat, Preset, Quantity, SweepConfig};
use verify::VerifyConfig;

#[derive(Debug, Parser)]
#[command(name = "qei", version, about = "Three-state open-domain ensemble: evaluate, sweep, verify, invert")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantities at a single γ.
    Eval(EvalArgs),
    /// Quantities over a uniform γ grid.
    Sweep(SweepArgs),
    /// Finite-difference checks of the expectation identities.
    Verify(VerifyArgs),
    /// γ for a target transferred charge or mean population.
    Invert(InvertArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Baseline electron count N.
    #[arg(long)]
    pub n: u32,
    /// Maximum charge capacity q.
    #[arg(long)]
    pub q: u32,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Comma-separated subset of nu,variance,purity,covariance,entropy,weights,mean.
    #[arg(long)]
    pub quantities: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Reproduce a figure's data: q ∈ {1,2,3}, N = 3, γ ∈ [-6, 6], 601 points.
    #[arg(long, value_enum, conflicts_with_all = ["n", "q", "gamma_min", "gamma_max", "steps", "quantities"])]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub n: Option<u32>,
    /// One capacity, or a comma list for side-by-side columns.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<u32>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub quantities: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Baseline electron count; defaults to the largest q.
    #[arg(long)]
    pub n: Option<u32>,
    /// Capacities to check, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = verify::DEFAULT_CAPACITIES)]
    pub q: Vec<u32>,
    /// Check this single point instead of a grid.
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["gamma_min", "gamma_max", "steps"])]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true, default_value_t = verify::DEFAULT_GAMMA_MIN)]
    pub gamma_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = verify::DEFAULT_GAMMA_MAX)]
    pub gamma_max: f64,
    #[arg(long, default_value_t = verify::DEFAULT_STEPS)]
    pub steps: usize,
    /// Relative tolerance; the absolute floor is min(this, 1e-9).
    #[arg(long, default_value_t = Tolerance::DEFAULT_RELATIVE)]
    pub tolerance: f64,
    /// Full per-check table; the default is a failure listing and a summary.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Required with --population.
    #[arg(long, requires = "population")]
    pub n: Option<u32>,
    #[arg(long)]
    pub q: u32,
    /// Target transferred charge ν, strictly inside (-q, q).
    #[arg(long, allow_negative_numbers = true, conflicts_with = "population", required_unless_present = "population")]
    pub nu: Option<f64>,
    /// Target mean population, strictly inside (N - q, N + q).
    #[arg(long, allow_negative_numbers = true, requires = "n")]
    pub population: Option<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(flatten)]
    pub output: Output,
}

fn quantities_or_all(list: Option<&str>) -> Result<Vec<Quantity>, CliError> {
    match list {
        Some(l) => parse_quantities(l),
        None => Ok(Quantity::ALL.to_vec()),
    }
}

pub fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, CliError> {
    if let Some(p) = args.preset {
        return Ok(p.config(args.format));
    }
    let missing = |flag: &str| CliError::Usage(format!("sweep needs --{flag} (or --preset)"));
    let n = args.n.ok_or_else(|| missing("n"))?;
    if args.q.is_empty() {
        return Err(missing("q"));
    }
    let grid = GammaGrid::new(
        args.gamma_min.ok_or_else(|| missing("gamma-min"))?,
        args.gamma_max.ok_or_else(|| missing("gamma-max"))?,
        args.steps.ok_or_else(|| missing("steps"))?,
    )?;
    Ok(SweepConfig {
        n,
        q: args.q.clone(),
        grid,
        quantities: quantities_or_all(args.quantities.as_deref())?,
        format: args.format,
        preset: None,
    })
}

pub fn verify_config(args: &VerifyArgs) -> Result<VerifyConfig, CliError> {
    if args.q.is_empty() {
        return Err(CliError::Usage("verify needs at least one q".into()));
    }
    let gammas = match args.gamma {
        Some(g) => vec![g],
        None => GammaGrid::new(args.gamma_min, args.gamma_max, args.steps)?.points(),
    };
    if !(args.tolerance.is_finite() && args.tolerance > 0.0) {
        return Err(CliError::Usage(format!("tolerance must be positive, got {}", args.tolerance)));
    }
    Ok(VerifyConfig {
        n: args.n.unwrap_or_else(|| *args.q.iter().max().expect("non-empty")),
        q: args.q.clone(),
        gammas,
        tolerance: Tolerance::with_relative(args.tolerance),
    })
}

pub fn invert(args: &InvertArgs) -> Result<InversionResult, CliError> {
    let r = match (args.nu, args.population, args.n) {
        (Some(nu), None, _) => gamma_for_charge(Capacity::new(args.q)?, nu)?,
        (None, Some(p), Some(n)) => gamma_for_population(&DomainSpec::new(n, args.q)?, p)?,
        _ => return Err(CliError::Usage("invert needs --nu, or --n with --population".into())),
    };
    Ok(r)
}

fn render_inversion(r: &InversionResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!(
            "gamma,achieved_nu,iterations,bracket_width_final\n{},{},{},{}\n",
            format::format_value(r.gamma),
            format::format_value(r.achieved_nu),
            r.iterations,
            format::format_value(r.bracket_width_final)
        ),
        OutputFormat::Json => {
            let doc = json!({
                "gamma": r.gamma,
                "achieved_nu": r.achieved_nu,
                "iterations": r.iterations,
                "bracket_width_final": r.bracket_width_final,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("record serializes");
            s.push('\n');
            s
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

/// Executes one command, writing its output. The error's
/// [`CliError::exit_code`] is the process status.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval(a) => {
            let spec = DomainSpec::new(a.n, a.q)?;
            let gamma = ChemicalPotential::new(a.gamma)?;
            let quantities = quantities_or_all(a.quantities.as_deref())?;
            emit(a.output.out.as_deref(), &table::render_eval(&spec, gamma, &quantities, a.format))
        }
        Command::Sweep(a) => {
            let cfg = sweep_config(&a)?;
            emit(a.output.out.as_deref(), &table::render_sweep(&cfg)?)
        }
        Command::Verify(a) => {
            let summary = verify::run(verify_config(&a)?)?;
            let text = match a.format {
                None => summary.to_text(),
                Some(OutputFormat::Csv) => summary.to_csv(),
                Some(OutputFormat::Json) => summary.to_json(),
            };
            emit(a.output.out.as_deref(), &text)?;
            if summary.all_passed() {
                Ok(())
            } else {
                Err(CliError::VerificationFailed {
                    failed: summary.failed(),
                    total: summary.checks.len(),
                })
            }
        }
        Command::Invert(a) => {
            let r = invert(&a)?;
            emit(a.output.out.as_deref(), &render_inversion(&r, a.format))
        }
    }
}
