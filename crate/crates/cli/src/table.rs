//! Quantity tables over a `γ` grid, rendered as CSV or JSON.

use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use qei_core::{
    covariance_rho_m, entropy, mean_population, purity, transferred_charge, variance, weights, ChemicalPotential,
    DomainSpec,
};

use crate::error::CliError;
use crate::format::format_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Nu,
    Variance,
    Purity,
    Covariance,
    Entropy,
    /// Expands to three columns, one per basis state.
    Weights,
    Mean,
}

impl Quantity {
    /// Every quantity, in the default column order.
    pub const ALL: [Quantity; 7] = [
        Quantity::Nu,
        Quantity::Variance,
        Quantity::Purity,
        Quantity::Covariance,
        Quantity::Entropy,
        Quantity::Weights,
        Quantity::Mean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Nu => "nu",
            Quantity::Variance => "variance",
            Quantity::Purity => "purity",
            Quantity::Covariance => "covariance",
            Quantity::Entropy => "entropy",
            Quantity::Weights => "weights",
            Quantity::Mean => "mean",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            Quantity::Weights => &["w_cation", "w_neutral", "w_anion"],
            Quantity::Nu => &["nu"],
            Quantity::Variance => &["variance"],
            Quantity::Purity => &["purity"],
            Quantity::Covariance => &["covariance"],
            Quantity::Entropy => &["entropy"],
            Quantity::Mean => &["mean"],
        }
    }

    fn evaluate(self, spec: &DomainSpec, gamma: ChemicalPotential, out: &mut Vec<f64>) {
        let q = spec.max_capacity();
        match self {
            Quantity::Nu => out.push(transferred_charge(q, gamma).value()),
            Quantity::Variance => out.push(variance(q, gamma)),
            Quantity::Purity => out.push(purity(q, gamma)),
            Quantity::Covariance => out.push(covariance_rho_m(q, gamma)),
            Quantity::Entropy => out.push(entropy(spec, gamma)),
            Quantity::Weights => out.extend(weights(spec, gamma).to_array()),
            Quantity::Mean => out.push(mean_population(spec, gamma)),
        }
    }
}

impl FromStr for Quantity {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Quantity::ALL.iter().map(|q| q.name()).collect();
                CliError::Usage(format!("unknown quantity `{s}` (expected one of {})", known.join(", ")))
            })
    }
}

/// Parses a comma-separated quantity list; duplicates are dropped.
pub fn parse_quantities(list: &str) -> Result<Vec<Quantity>, CliError> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let q: Quantity = item.parse()?;
        if !out.contains(&q) {
            out.push(q);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("at least one quantity is required".into()));
    }
    Ok(out)
}

/// Uniform `γ` grid, exact at both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaGrid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GammaGrid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self, CliError> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(CliError::Usage("gamma range must be finite".into()));
        }
        if min >= max {
            return Err(CliError::Usage(format!("gamma-min ({min}) must be below gamma-max ({max})")));
        }
        if steps < 2 {
            return Err(CliError::Usage(format!("steps must be at least 2, got {steps}")));
        }
        Ok(Self { min, max, steps })
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.max
        } else {
            self.min + i as f64 * (self.max - self.min) / (self.steps - 1) as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.point(i)).collect()
    }
}

/// Everything needed to produce one sweep file.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n: u32,
    /// One entry for a plain sweep; presets overlay several capacities.
    pub q: Vec<u32>,
    pub grid: GammaGrid,
    pub quantities: Vec<Quantity>,
    pub format: OutputFormat,
    pub preset: Option<String>,
}

impl SweepConfig {
    fn domains(&self) -> Result<Vec<DomainSpec>, CliError> {
        if self.q.is_empty() {
            return Err(CliError::Usage("at least one q is required".into()));
        }
        if self.quantities.is_empty() {
            return Err(CliError::Usage("at least one quantity is required".into()));
        }
        self.q
            .iter()
            .map(|&q| DomainSpec::new(self.n, q).map_err(CliError::from))
            .collect()
    }

    fn config_json(&self) -> Value {
        let mut m = Map::new();
        if let Some(p) = &self.preset {
            m.insert("preset".into(), json!(p));
        }
        m.insert("n".into(), json!(self.n));
        if let [q] = self.q[..] {
            m.insert("q".into(), json!(q));
        } else {
            m.insert("q".into(), json!(self.q));
        }
        m.insert("gamma_min".into(), json!(self.grid.min));
        m.insert("gamma_max".into(), json!(self.grid.max));
        m.insert("steps".into(), json!(self.grid.steps));
        let names: Vec<_> = self.quantities.iter().map(|q| q.name()).collect();
        m.insert("quantities".into(), json!(names));
        m.insert("format".into(), json!(self.format.to_string()));
        Value::Object(m)
    }
}

/// Column header and rows; the first column is always `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_value(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: Value) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(k, &v)| (k.clone(), json!(rounded(v))))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "config": config, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

/// The value exactly as the CSV shows it, so both formats agree.
fn rounded(v: f64) -> f64 {
    format_value(v).parse().unwrap_or(v)
}

fn header(quantities: &[Quantity], q: &[u32]) -> Vec<String> {
    let mut cols = vec!["gamma".to_string()];
    for &qv in q {
        for quantity in quantities {
            for col in quantity.columns() {
                if q.len() == 1 {
                    cols.push((*col).to_string());
                } else {
                    cols.push(format!("{col}_q{qv}"));
                }
            }
        }
    }
    cols
}

fn row(domains: &[DomainSpec], quantities: &[Quantity], gamma: f64) -> Result<Vec<f64>, CliError> {
    let g = ChemicalPotential::new(gamma)?;
    let mut values = vec![gamma];
    for spec in domains {
        for quantity in quantities {
            quantity.evaluate(spec, g, &mut values);
        }
    }
    Ok(values)
}

/// Rows are computed in parallel and collected in grid order.
pub fn sweep_table(cfg: &SweepConfig) -> Result<Table, CliError> {
    let domains = cfg.domains()?;
    let rows = (0..cfg.grid.steps)
        .into_par_iter()
        .map(|i| row(&domains, &cfg.quantities, cfg.grid.point(i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table {
        header: header(&cfg.quantities, &cfg.q),
        rows,
    })
}

pub fn render_sweep(cfg: &SweepConfig) -> Result<String, CliError> {
    let table = sweep_table(cfg)?;
    Ok(match cfg.format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => table.to_json(cfg.config_json()),
    })
}

/// A single-point record with the same layout as a one-row sweep.
pub fn eval_table(spec: &DomainSpec, gamma: ChemicalPotential, quantities: &[Quantity]) -> Table {
    let mut values = vec![gamma.value()];
    for quantity in quantities {
        quantity.evaluate(spec, gamma, &mut values);
    }
    Table {
        header: header(quantities, &[spec.max_capacity().get()]),
        rows: vec![values],
    }
}

pub fn render_eval(
    spec: &DomainSpec,
    gamma: ChemicalPotential,
    quantities: &[Quantity],
    format: OutputFormat,
) -> String {
    let table = eval_table(spec, gamma, quantities);
    match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => {
            let names: Vec<_> = quantities.iter().map(|q| q.name()).collect();
            let config = json!({
                "n": spec.baseline_population(),
                "q": spec.max_capacity().get(),
                "gamma": gamma.value(),
                "quantities": names,
            });
            table.to_json(config)
        }
    }
}

/// Figure-reproduction presets: `q ∈ {1, 2, 3}`, `γ ∈ [-6, 6]`, 601 points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Preset {
    /// Transferred charge.
    Fig1a,
    /// Particle-number variance.
    Fig1b,
    /// Purity.
    Fig2a,
    /// State–number covariance.
    Fig2b,
}

impl Preset {
    pub const CAPACITIES: [u32; 3] = [1, 2, 3];
    pub const BASELINE: u32 = 3;
    pub const GAMMA_MIN: f64 = -6.0;
    pub const GAMMA_MAX: f64 = 6.0;
    pub const STEPS: usize = 601;

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1a => "fig1a",
            Preset::Fig1b => "fig1b",
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
        }
    }

    pub fn quantity(self) -> Quantity {
        match self {
            Preset::Fig1a => Quantity::Nu,
            Preset::Fig1b => Quantity::Variance,
            Preset::Fig2a => Quantity::Purity,
            Preset::Fig2b => Quantity::Covariance,
        }
    }

    pub fn config(self, format: OutputFormat) -> SweepConfig {
        SweepConfig {
            n: Self::BASELINE,
            q: Self::CAPACITIES.to_vec(),
            grid: GammaGrid::new(Self::GAMMA_MIN, Self::GAMMA_MAX, Self::STEPS).expect("preset grid is valid"),
            quantities: vec![self.quantity()],
            format,
            preset: Some(self.name().to_string()),
        }
    }
}
