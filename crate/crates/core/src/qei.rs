//! Executable form of the quantum expectation identity for the
//! three-state ensemble, with the derivation parameter taken to be `γ`:
//!
//! ```text
//! ∂⟨A⟩/∂γ = ⟨∂A/∂γ⟩ - ⟨A M⟩ - (∂ ln Ξ/∂γ) ⟨A⟩,    ∂ ln Ξ/∂γ = -⟨M⟩
//! ```
//!
//! The left side is estimated by central finite differences of the
//! expectation, the right side is assembled from exact weighted sums.
//!
//! Only observables diagonal in the `{N - q, N, N + q}` basis can be
//! expressed, so every observable commutes with `ρ` and the compatibility
//! condition holds by construction.

use std::fmt;
use std::sync::Arc;

use crate::ensemble::{
    covariance_rho_m, mean_population, purity, variance, weights, ChemicalPotential, DomainSpec,
};
use crate::error::{Error, Result};

type EigenFn = Arc<dyn Fn(i64, f64) -> f64 + Send + Sync>;

/// Relative tolerance used by the derivative self-consistency gate.
const GATE_RELATIVE: f64 = 1e-6;
const GATE_ABSOLUTE: f64 = 1e-9;

/// A test operator sharing `ρ`'s eigenbasis: one eigenvalue `a(M, γ)` per
/// particle-number state, plus its declared `γ`-derivative.
#[derive(Clone)]
pub struct DiagonalObservable {
    label: String,
    eigenvalue: EigenFn,
    gamma_derivative: EigenFn,
}

impl fmt::Debug for DiagonalObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagonalObservable")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl DiagonalObservable {
    pub fn new<A, D>(label: impl Into<String>, eigenvalue: A, gamma_derivative: D) -> Self
    where
        A: Fn(i64, f64) -> f64 + Send + Sync + 'static,
        D: Fn(i64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eigenvalue: Arc::new(eigenvalue),
            gamma_derivative: Arc::new(gamma_derivative),
        }
    }

    /// The identity operator.
    pub fn identity() -> Self {
        Self::new("identity", |_, _| 1.0, |_, _| 0.0)
    }

    /// The number operator `M`.
    pub fn number() -> Self {
        Self::new("number", |m, _| m as f64, |_, _| 0.0)
    }

    /// `M²`
    pub fn number_squared() -> Self {
        Self::new("number_squared", |m, _| (m * m) as f64, |_, _| 0.0)
    }

    /// `γ M`, the simplest observable with an explicit `γ` dependence.
    pub fn gamma_scaled_number() -> Self {
        Self::new("gamma_number", |m, g| g * m as f64, |m, _| m as f64)
    }

    /// `ρ` itself, with eigenvalues `w_M(γ)` and `∂w_M/∂γ = w_M (⟨M⟩ - M)`.
    pub fn density(spec: DomainSpec) -> Self {
        let eigen = move |m: i64, g: f64| match ChemicalPotential::new(g) {
            Ok(g) => weights(&spec, g).of_state(&spec, m).unwrap_or(0.0),
            Err(_) => f64::NAN,
        };
        let deriv = move |m: i64, g: f64| match ChemicalPotential::new(g) {
            Ok(g) => {
                let w = weights(&spec, g).of_state(&spec, m).unwrap_or(0.0);
                w * (mean_population(&spec, g) - m as f64)
            }
            Err(_) => f64::NAN,
        };
        Self::new("density", eigen, deriv)
    }

    /// Every observable bundled with the library, for the given domain.
    pub fn library(spec: DomainSpec) -> Vec<Self> {
        vec![
            Self::identity(),
            Self::number(),
            Self::number_squared(),
            Self::gamma_scaled_number(),
            Self::density(spec),
        ]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eigenvalue(&self, m: i64, gamma: f64) -> f64 {
        (self.eigenvalue)(m, gamma)
    }

    pub fn gamma_derivative(&self, m: i64, gamma: f64) -> f64 {
        (self.gamma_derivative)(m, gamma)
    }

    fn error(&self, reason: impl Into<String>) -> Error {
        Error::Observable {
            label: self.label.clone(),
            reason: reason.into(),
        }
    }

    fn checked_eigenvalue(&self, m: i64, gamma: f64) -> Result<f64> {
        let a = self.eigenvalue(m, gamma);
        if a.is_finite() {
            Ok(a)
        } else {
            Err(self.error(format!("non-finite eigenvalue {a} at M = {m}, γ = {gamma}")))
        }
    }

    fn checked_derivative(&self, m: i64, gamma: f64) -> Result<f64> {
        let d = self.gamma_derivative(m, gamma);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(self.error(format!("non-finite derivative {d} at M = {m}, γ = {gamma}")))
        }
    }

    /// Compares the declared derivative against a finite difference of the
    /// eigenvalue on every basis state.
    pub fn check_derivative(
        &self,
        spec: &DomainSpec,
        gamma: ChemicalPotential,
        cfg: &FiniteDiffConfig,
    ) -> Result<()> {
        for m in spec.states() {
            let declared = self.checked_derivative(m, gamma.value())?;
            let numeric = cfg.derivative(gamma.value(), |g| self.checked_eigenvalue(m, g))?;
            let diff = (declared - numeric).abs();
            let scale = declared.abs().max(numeric.abs());
            if diff > GATE_ABSOLUTE && diff > GATE_RELATIVE * scale {
                return Err(self.error(format!(
                    "declared derivative {declared} disagrees with finite difference {numeric} at M = {m}, γ = {}",
                    gamma.value()
                )));
            }
        }
        Ok(())
    }
}

/// Central difference stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FdScheme {
    /// `(f(γ+h) - f(γ-h)) / 2h`, error `O(h²)`.
    Central2,
    /// Five-point stencil, error `O(h⁴)`.
    Central4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDiffConfig {
    step: f64,
    scheme: FdScheme,
}

impl FiniteDiffConfig {
    pub const MAX_STEP: f64 = 1e-2;

    pub fn new(step: f64, scheme: FdScheme) -> Result<Self> {
        if !(step > 0.0 && step <= Self::MAX_STEP) {
            return Err(Error::Config(format!(
                "step must lie in (0, {}], got {step}",
                Self::MAX_STEP
            )));
        }
        Ok(Self { step, scheme })
    }

    /// Default: two-point central difference with `h = 1e-5 · max(1, |γ|)`.
    pub fn for_gamma(gamma: ChemicalPotential) -> Self {
        Self {
            step: 1e-5 * gamma.value().abs().max(1.0),
            scheme: FdScheme::Central2,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn scheme(&self) -> FdScheme {
        self.scheme
    }

    fn derivative<F>(&self, x: f64, f: F) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let h = self.step;
        let reach = match self.scheme {
            FdScheme::Central2 => h,
            FdScheme::Central4 => 2.0 * h,
        };
        if !(x - reach).is_finite() || !(x + reach).is_finite() {
            return Err(Error::Config(format!("stencil around γ = {x} leaves the finite range")));
        }
        Ok(match self.scheme {
            FdScheme::Central2 => (f(x + h)? - f(x - h)?) / (2.0 * h),
            FdScheme::Central4 => {
                (-f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?)
                    / (12.0 * h)
            }
        })
    }
}

/// Pass criterion: a check passes if either residual is within its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Tolerance {
    pub const DEFAULT_RELATIVE: f64 = 1e-6;
    pub const DEFAULT_ABSOLUTE: f64 = 1e-9;

    pub fn new(relative: f64, absolute: f64) -> Self {
        Self { relative, absolute }
    }

    /// Relative bound `relative`, with the absolute floor lowered to match
    /// when `relative` is tighter than the default floor.
    pub fn with_relative(relative: f64) -> Self {
        Self {
            relative,
            absolute: relative.min(Self::DEFAULT_ABSOLUTE),
        }
    }

    pub fn accepts(&self, abs_residual: f64, rel_residual: f64) -> bool {
        abs_residual <= self.absolute || rel_residual <= self.relative
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(Self::DEFAULT_RELATIVE, Self::DEFAULT_ABSOLUTE)
    }
}

/// Right-hand side of the identity, term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QeiTerms {
    /// `⟨A⟩`
    pub expectation: f64,
    /// `⟨∂A/∂γ⟩`
    pub term_da: f64,
    /// `⟨A M⟩`
    pub term_am: f64,
    /// `∂ ln Ξ/∂γ = -⟨M⟩`
    pub term_log_xi: f64,
}

impl QeiTerms {
    /// `term_da - term_am - term_log_xi · expectation`
    pub fn combine(&self) -> f64 {
        self.term_da - self.term_am - self.term_log_xi * self.expectation
    }

    /// Largest magnitude entering [`Self::combine`]; rounding in the
    /// combination is relative to this.
    pub fn scale(&self) -> f64 {
        self.term_da
            .abs()
            .max(self.term_am.abs())
            .max((self.term_log_xi * self.expectation).abs())
    }
}

/// Outcome of one identity check at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct QeiReport {
    pub label: String,
    pub gamma: f64,
    /// Finite-difference derivative of the expectation.
    pub lhs: f64,
    /// Analytic right-hand side.
    pub rhs: f64,
    pub terms: QeiTerms,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub tolerance: Tolerance,
    pub passed: bool,
}

impl QeiReport {
    fn new(label: &str, gamma: f64, lhs: f64, rhs: f64, terms: QeiTerms, tolerance: Tolerance) -> Self {
        let abs_residual = (lhs - rhs).abs();
        let rel_residual = if abs_residual == 0.0 {
            0.0
        } else {
            abs_residual / lhs.abs().max(rhs.abs())
        };
        Self {
            label: label.to_string(),
            gamma,
            lhs,
            rhs,
            terms,
            abs_residual,
            rel_residual,
            tolerance,
            passed: tolerance.accepts(abs_residual, rel_residual),
        }
    }
}

/// `⟨A⟩ = Σ w_M a(M, γ)`.
pub fn expectation(obs: &DiagonalObservable, spec: &DomainSpec, gamma: ChemicalPotential) -> Result<f64> {
    let (reference, excess) = split_expectation(obs, spec, gamma.value(), dominant_state(spec, gamma))?;
    Ok(reference + excess)
}

/// Index of the most probable basis state (the neutral one at `γ = 0`).
fn dominant_state(spec: &DomainSpec, gamma: ChemicalPotential) -> usize {
    let w = weights(spec, gamma).to_array();
    if w[1] >= w[0] && w[1] >= w[2] {
        1
    } else if w[0] > w[2] {
        0
    } else {
        2
    }
}

/// `⟨A⟩` split as `a(M_ref, γ) + Σ w_M (a(M, γ) - a(M_ref, γ)) / Σ w_M`.
///
/// Differencing the two parts separately keeps the large reference
/// eigenvalue out of the small weights' rounding, and the division by
/// `Σ w_M` makes `⟨1⟩` exactly one.
fn split_expectation(
    obs: &DiagonalObservable,
    spec: &DomainSpec,
    gamma: f64,
    reference: usize,
) -> Result<(f64, f64)> {
    let w = weights(spec, ChemicalPotential::new(gamma)?).to_array();
    let states = spec.states();
    let a_ref = obs.checked_eigenvalue(states[reference], gamma)?;
    let mut excess = 0.0;
    for (i, (m, wm)) in states.into_iter().zip(w).enumerate() {
        let a = obs.checked_eigenvalue(m, gamma)?;
        if i != reference {
            excess += wm * (a - a_ref);
        }
    }
    Ok((a_ref, excess / w.iter().sum::<f64>()))
}

/// Terms of the right-hand side. For `γ`-independent observables their
/// combination is `-Cov(A, M)`.
pub fn qei_rhs(obs: &DiagonalObservable, spec: &DomainSpec, gamma: ChemicalPotential) -> Result<QeiTerms> {
    let w = weights(spec, gamma).to_array();
    let g = gamma.value();
    let mut terms = QeiTerms {
        expectation: 0.0,
        term_da: 0.0,
        term_am: 0.0,
        term_log_xi: -mean_population(spec, gamma),
    };
    for (m, wm) in spec.states().into_iter().zip(w) {
        let a = obs.checked_eigenvalue(m, g)?;
        let da = obs.checked_derivative(m, g)?;
        terms.expectation += wm * a;
        terms.term_da += wm * da;
        terms.term_am += wm * a * m as f64;
    }
    Ok(terms)
}

/// Left-hand side `∂⟨A⟩/∂γ` by finite differences.
///
/// The reference state is fixed at the centre point so its eigenvalue is
/// differenced on its own; see `split_expectation`.
pub fn qei_lhs_fd(
    obs: &DiagonalObservable,
    spec: &DomainSpec,
    gamma: ChemicalPotential,
    cfg: &FiniteDiffConfig,
) -> Result<f64> {
    let reference = dominant_state(spec, gamma);
    let d_ref = cfg.derivative(gamma.value(), |g| Ok(split_expectation(obs, spec, g, reference)?.0))?;
    let d_excess = cfg.derivative(gamma.value(), |g| Ok(split_expectation(obs, spec, g, reference)?.1))?;
    Ok(d_ref + d_excess)
}

/// Full identity check for a single observable. The observable's declared
/// derivative is validated first; an inconsistent one is an error rather
/// than a failed report.
pub fn verify_qei(
    obs: &DiagonalObservable,
    spec: &DomainSpec,
    gamma: ChemicalPotential,
    cfg: &FiniteDiffConfig,
    tolerance: Tolerance,
) -> Result<QeiReport> {
    obs.check_derivative(spec, gamma, cfg)?;
    let terms = qei_rhs(obs, spec, gamma)?;
    let lhs = qei_lhs_fd(obs, spec, gamma, cfg)?;
    Ok(QeiReport::new(obs.label(), gamma.value(), lhs, terms.combine(), terms, tolerance))
}

/// Particle-number fluctuation–dissipation check: `∂⟨M⟩/∂γ = -Var(M)`,
/// with the variance taken from its closed form.
pub fn verify_fdt(
    spec: &DomainSpec,
    gamma: ChemicalPotential,
    cfg: &FiniteDiffConfig,
    tolerance: Tolerance,
) -> Result<QeiReport> {
    let terms = qei_rhs(&DiagonalObservable::number(), spec, gamma)?;
    let lhs = cfg.derivative(gamma.value(), |g| Ok(mean_population(spec, ChemicalPotential::new(g)?)))?;
    let rhs = -variance(spec.max_capacity(), gamma);
    Ok(QeiReport::new("fdt", gamma.value(), lhs, rhs, terms, tolerance))
}

/// Purity fluctuation–dissipation check: `∂φ/∂γ = -2 Cov(ρ, M)`, both
/// sides from closed forms.
pub fn verify_pfdt(
    spec: &DomainSpec,
    gamma: ChemicalPotential,
    cfg: &FiniteDiffConfig,
    tolerance: Tolerance,
) -> Result<QeiReport> {
    let q = spec.max_capacity();
    let terms = qei_rhs(&DiagonalObservable::density(*spec), spec, gamma)?;
    let lhs = cfg.derivative(gamma.value(), |g| Ok(purity(q, ChemicalPotential::new(g)?)))?;
    let rhs = -2.0 * covariance_rho_m(q, gamma);
    Ok(QeiReport::new("pfdt", gamma.value(), lhs, rhs, terms, tolerance))
}
