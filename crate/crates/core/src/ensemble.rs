//! Closed-form quantities of the three-state N-canonical ensemble.
//!
//! A domain with baseline population `N` and maximum capacity `q` is
//! described by the mixed state
//!
//! ```text
//! ρ(γ; q) = exp(-γ M) / Ξ(γ; q),    M ∈ {N - q, N, N + q}
//! ```
//!
//! with `Ξ = exp(-γN) · (1 + 2 cosh(γq))`. Everything here is evaluated in
//! shifted-exponent form: with `x = γq` and `t = exp(-|x|)` the three
//! Boltzmann factors relative to the dominant one are `1, t, t²`, so no
//! intermediate overflows for any finite `γ`.

use std::fmt;
use std::num::NonZeroU32;

use crate::error::{Error, Result};

/// Above this `|γq|` the hyperbolic closed forms are replaced by their
/// `exp(-|γq|)`-reduced equivalents (`cosh` overflows near 710).
pub const SATURATION_ONSET: f64 = 350.0;

/// Weights smaller than this contribute nothing to the entropy (`x ln x → 0`).
pub const ENTROPY_WEIGHT_FLOOR: f64 = 1e-300;

/// Maximum transferable charge `q`, a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Capacity(NonZeroU32);

impl Capacity {
    pub fn new(q: u32) -> Result<Self> {
        NonZeroU32::new(q)
            .map(Capacity)
            .ok_or_else(|| Error::Domain("maximum capacity q must be at least 1".into()))
    }

    pub fn get(self) -> u32 {
        self.0.get()
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0.get())
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The pair `(N, q)` defining the basis `{N - q, N, N + q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DomainSpec {
    baseline_population: u32,
    max_capacity: Capacity,
}

impl DomainSpec {
    /// Fails if `q < 1` or if the cationic state `N - q` would hold a
    /// negative electron count.
    pub fn new(baseline_population: u32, max_capacity: u32) -> Result<Self> {
        let max_capacity = Capacity::new(max_capacity)?;
        if max_capacity.get() > baseline_population {
            return Err(Error::Domain(format!(
                "cationic population N - q = {} - {} is negative",
                baseline_population,
                max_capacity.get()
            )));
        }
        Ok(Self {
            baseline_population,
            max_capacity,
        })
    }

    pub fn baseline_population(&self) -> u32 {
        self.baseline_population
    }

    pub fn max_capacity(&self) -> Capacity {
        self.max_capacity
    }

    /// Particle numbers of the cationic, neutral and anionic states, in that order.
    pub fn states(&self) -> [i64; 3] {
        let n = i64::from(self.baseline_population);
        let q = i64::from(self.max_capacity.get());
        [n - q, n, n + q]
    }
}

/// The control parameter `γ` conjugate to the particle number.
///
/// Any finite value is admissible; `±∞` would select one of the ionic pure
/// states, which the model never reaches, and is rejected.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChemicalPotential(f64);

impl ChemicalPotential {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() {
            Ok(Self(gamma))
        } else {
            Err(Error::Input(format!("chemical potential must be finite, got {gamma}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Statistical weights of the cationic (`N - q`), neutral (`N`) and anionic
/// (`N + q`) states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub cation: f64,
    pub neutral: f64,
    pub anion: f64,
}

impl WeightVector {
    /// Weights in basis order `[N - q, N, N + q]`.
    pub fn to_array(self) -> [f64; 3] {
        [self.cation, self.neutral, self.anion]
    }

    pub fn sum(self) -> f64 {
        self.cation + self.neutral + self.anion
    }

    /// Weight of the basis state with particle number `m`, if it belongs to `spec`.
    pub fn of_state(self, spec: &DomainSpec, m: i64) -> Option<f64> {
        spec.states()
            .iter()
            .zip(self.to_array())
            .find_map(|(&s, w)| (s == m).then_some(w))
    }
}

/// Fractional charge `ν` moved into (`ν > 0`) or out of (`ν < 0`) the domain.
///
/// Alongside `ν` it carries the distance to the nearest asymptote,
/// `q - |ν|`, evaluated directly. Close to saturation `ν` itself rounds to
/// `±q` while the gap keeps full relative precision, which is what lets
/// the inversion recover `γ` deep in the tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferredCharge {
    nu: f64,
    saturation_gap: f64,
}

impl TransferredCharge {
    pub fn value(self) -> f64 {
        self.nu
    }

    /// `q - |ν|`, always in `(0, q]` up to underflow.
    pub fn saturation_gap(self) -> f64 {
        self.saturation_gap
    }
}

/// Shifted three-state factors for `x = γq`.
#[derive(Debug, Clone, Copy)]
struct Shifted {
    x: f64,
    /// `exp(-|x|)`
    t: f64,
    /// `1 + t + t²`
    norm: f64,
}

impl Shifted {
    fn new(q: Capacity, gamma: ChemicalPotential) -> Self {
        let x = gamma.value() * q.as_f64();
        let t = (-x.abs()).exp();
        Self {
            x,
            t,
            norm: 1.0 + t + t * t,
        }
    }

    /// `ln(1 + t + t²)`
    fn log_norm(self) -> f64 {
        (self.t + self.t * self.t).ln_1p()
    }

    fn saturated(self) -> bool {
        self.x.abs() > SATURATION_ONSET
    }
}

/// `ln Ξ(γ; q) = -γN + ln(1 + 2 cosh γq)`, evaluated as
/// `-γ·M_dominant + ln(1 + t + t²)`.
pub fn log_partition(spec: &DomainSpec, gamma: ChemicalPotential) -> f64 {
    let s = Shifted::new(spec.max_capacity, gamma);
    let [cation, _, anion] = spec.states();
    let dominant = if s.x >= 0.0 { cation } else { anion };
    -gamma.value() * dominant as f64 + s.log_norm()
}

/// Statistical weights `ω^M = exp(-γM) / Ξ`.
///
/// These do not depend on `N` once normalized.
pub fn weights(spec: &DomainSpec, gamma: ChemicalPotential) -> WeightVector {
    let s = Shifted::new(spec.max_capacity, gamma);
    let dominant = 1.0 / s.norm;
    let middle = s.t / s.norm;
    let far = s.t * s.t / s.norm;
    if s.x >= 0.0 {
        WeightVector {
            cation: dominant,
            neutral: middle,
            anion: far,
        }
    } else {
        WeightVector {
            cation: far,
            neutral: middle,
            anion: dominant,
        }
    }
}

/// Natural logarithms of the weights, in basis order; never `-∞` for finite `γ`.
pub fn log_weights(spec: &DomainSpec, gamma: ChemicalPotential) -> [f64; 3] {
    let s = Shifted::new(spec.max_capacity, gamma);
    let log_norm = s.log_norm();
    let dominant = -log_norm;
    let middle = -s.x.abs() - log_norm;
    let far = -2.0 * s.x.abs() - log_norm;
    if s.x >= 0.0 {
        [dominant, middle, far]
    } else {
        [far, middle, dominant]
    }
}

/// `ν = -2q sinh(γq) / (2 cosh(γq) + 1)`.
pub fn transferred_charge(q: Capacity, gamma: ChemicalPotential) -> TransferredCharge {
    let s = Shifted::new(q, gamma);
    let qf = q.as_f64();
    // q - |ν| = q (t + 2t²) / (1 + t + t²)
    let saturation_gap = qf * s.t * (1.0 + 2.0 * s.t) / s.norm;
    // Past half saturation, deriving ν from the gap keeps it as accurate
    // as the gap and makes its rounding monotone in γ.
    let nu = if saturation_gap <= 0.5 * qf {
        -s.x.signum() * (qf - saturation_gap)
    } else {
        -2.0 * qf * s.x.sinh() / (2.0 * s.x.cosh() + 1.0)
    };
    TransferredCharge { nu, saturation_gap }
}

/// Mean electron number `⟨M⟩ = N + ν`.
pub fn mean_population(spec: &DomainSpec, gamma: ChemicalPotential) -> f64 {
    f64::from(spec.baseline_population) + transferred_charge(spec.max_capacity, gamma).value()
}

/// Particle-number variance `2q² (cosh γq + 2) / (2 cosh γq + 1)²`.
pub fn variance(q: Capacity, gamma: ChemicalPotential) -> f64 {
    let s = Shifted::new(q, gamma);
    let q2 = q.as_f64() * q.as_f64();
    if s.saturated() {
        q2 * s.t * (1.0 + 4.0 * s.t + s.t * s.t) / (s.norm * s.norm)
    } else {
        let c = s.x.cosh();
        let d = 2.0 * c + 1.0;
        2.0 * q2 * (c + 2.0) / (d * d)
    }
}

/// Quantum purity `Tr ρ² = (2 cosh γq - 1) / (2 cosh γq + 1)`.
pub fn purity(q: Capacity, gamma: ChemicalPotential) -> f64 {
    let s = Shifted::new(q, gamma);
    if s.saturated() {
        (1.0 - s.t + s.t * s.t) / s.norm
    } else {
        let c = s.x.cosh();
        (2.0 * c - 1.0) / (2.0 * c + 1.0)
    }
}

/// Covariance between the state and the number operator,
/// `Cov(ρ, M) = -2q sinh(γq) / (2 cosh γq + 1)²`.
pub fn covariance_rho_m(q: Capacity, gamma: ChemicalPotential) -> f64 {
    let s = Shifted::new(q, gamma);
    let qf = q.as_f64();
    if s.saturated() {
        -s.x.signum() * qf * (1.0 - s.t * s.t) * s.t / (s.norm * s.norm)
    } else {
        let d = 2.0 * s.x.cosh() + 1.0;
        -2.0 * qf * s.x.sinh() / (d * d)
    }
}

/// Von Neumann entropy `-Σ ω ln ω` of the three-state mixture.
pub fn entropy(spec: &DomainSpec, gamma: ChemicalPotential) -> f64 {
    let w = weights(spec, gamma).to_array();
    let lw = log_weights(spec, gamma);
    w.iter()
        .zip(lw)
        .filter(|(&wi, _)| wi >= ENTROPY_WEIGHT_FLOOR)
        .map(|(&wi, lwi)| -wi * lwi)
        .sum()
}
