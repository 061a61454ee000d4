//! Runs every identity check over a grid of domains and `γ` points.

use rayon::prelude::*;
use serde_json::{json, Value};

use qei_core::{
    verify_fdt, verify_pfdt, verify_qei, ChemicalPotential, DiagonalObservable, DomainSpec, FiniteDiffConfig,
    QeiReport, Tolerance,
};

use crate::error::CliError;
use crate::format::format_value;
use crate::table::GammaGrid;

pub const DEFAULT_CAPACITIES: [u32; 3] = [1, 2, 3];
pub const DEFAULT_GAMMA_MIN: f64 = -6.0;
pub const DEFAULT_GAMMA_MAX: f64 = 6.0;
pub const DEFAULT_STEPS: usize = 121;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n: u32,
    pub q: Vec<u32>,
    pub gammas: Vec<f64>,
    pub tolerance: Tolerance,
}

impl VerifyConfig {
    pub fn default_grid() -> Vec<f64> {
        GammaGrid::new(DEFAULT_GAMMA_MIN, DEFAULT_GAMMA_MAX, DEFAULT_STEPS)
            .expect("default grid is valid")
            .points()
    }
}

/// One identity check at one `(q, γ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub n: u32,
    pub q: u32,
    pub report: QeiReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySummary {
    pub config: VerifyConfig,
    pub checks: Vec<CheckRecord>,
}

impl VerifySummary {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.report.passed)
    }

    pub fn failed(&self) -> usize {
        self.failures().count()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in self.failures() {
            out.push_str(&format!(
                "FAIL {:<14} N={} q={} gamma={} lhs={} rhs={} abs={:.3e} rel={:.3e}\n",
                c.report.label,
                c.n,
                c.q,
                format_value(c.report.gamma),
                format_value(c.report.lhs),
                format_value(c.report.rhs),
                c.report.abs_residual,
                c.report.rel_residual,
            ));
        }
        let t = self.config.tolerance;
        out.push_str(&format!(
            "{} of {} checks passed (relative {:e}, absolute {:e})\n",
            self.checks.len() - self.failed(),
            self.checks.len(),
            t.relative,
            t.absolute
        ));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,gamma,check,lhs,rhs,abs_residual,rel_residual,passed\n");
        for c in &self.checks {
            let r = &c.report;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.q,
                format_value(r.gamma),
                r.label,
                format_value(r.lhs),
                format_value(r.rhs),
                format_value(r.abs_residual),
                format_value(r.rel_residual),
                r.passed
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .checks
            .iter()
            .map(|c| {
                let r = &c.report;
                json!({
                    "q": c.q,
                    "gamma": r.gamma,
                    "check": r.label,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "abs_residual": r.abs_residual,
                    "rel_residual": r.rel_residual,
                    "passed": r.passed,
                })
            })
            .collect();
        let doc = json!({
            "config": {
                "n": self.config.n,
                "q": self.config.q,
                "points": self.config.gammas.len(),
                "tolerance": {
                    "relative": self.config.tolerance.relative,
                    "absolute": self.config.tolerance.absolute,
                },
            },
            "passed": self.checks.len() - self.failed(),
            "total": self.checks.len(),
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn checks_at(spec: &DomainSpec, gamma: f64, tolerance: Tolerance) -> Result<Vec<CheckRecord>, CliError> {
    let g = ChemicalPotential::new(gamma)?;
    let cfg = FiniteDiffConfig::for_gamma(g);
    let mut reports = vec![verify_fdt(spec, g, &cfg, tolerance)?, verify_pfdt(spec, g, &cfg, tolerance)?];
    for obs in DiagonalObservable::library(*spec) {
        reports.push(verify_qei(&obs, spec, g, &cfg, tolerance)?);
    }
    Ok(reports
        .into_iter()
        .map(|report| CheckRecord {
            n: spec.baseline_population(),
            q: spec.max_capacity().get(),
            report,
        })
        .collect())
}

/// FDT, p-FDT and the generic identity for every bundled observable, at
/// every `(q, γ)`. Results come back in `(q, γ, check)` order.
pub fn run(config: VerifyConfig) -> Result<VerifySummary, CliError> {
    if config.q.is_empty() || config.gammas.is_empty() {
        return Err(CliError::Usage("nothing to verify".into()));
    }
    let t = config.tolerance;
    if !(t.relative >= 0.0 && t.absolute >= 0.0) {
        return Err(CliError::Usage("tolerance must be non-negative".into()));
    }
    let specs = config
        .q
        .iter()
        .map(|&q| DomainSpec::new(config.n, q).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<(DomainSpec, f64)> = specs
        .iter()
        .flat_map(|s| config.gammas.iter().map(move |&g| (*s, g)))
        .collect();
    let per_point = points
        .into_par_iter()
        .map(|(s, g)| checks_at(&s, g, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VerifySummary {
        config,
        checks: per_point.into_iter().flatten().collect(),
    })
}
