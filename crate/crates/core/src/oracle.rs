//! Brute-force reference ensemble.
//!
//! Builds `exp(-γM)/Ξ` over an arbitrary list of integer particle numbers and
//! evaluates every statistic by direct, compensated summation. Nothing in
//! here calls into [`crate::ensemble`]; the two must stay independent so one
//! can check the other.

use crate::error::{Error, Result};

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.compensation
    }
}

fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Exponential ensemble over a finite set of distinct particle numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralEnsemble {
    states: Vec<i64>,
    gamma: f64,
    weights: Vec<f64>,
    log_partition: f64,
}

/// Builds the ensemble `w_i ∝ exp(-γ M_i)` using shifted exponents.
pub fn make_ensemble(states: &[i64], gamma: f64) -> Result<GeneralEnsemble> {
    if states.is_empty() {
        return Err(Error::Input("ensemble needs at least one state".into()));
    }
    if !gamma.is_finite() {
        return Err(Error::Input(format!("chemical potential must be finite, got {gamma}")));
    }
    let mut sorted = states.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Input(format!("duplicate particle number {}", w[0])));
    }

    let exponents: Vec<f64> = states.iter().map(|&m| -gamma * m as f64).collect();
    let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let factors: Vec<f64> = exponents.iter().map(|e| (e - shift).exp()).collect();
    let total = compensated_sum(factors.iter().copied());
    let weights = factors.iter().map(|f| f / total).collect();

    Ok(GeneralEnsemble {
        states: states.to_vec(),
        gamma,
        weights,
        log_partition: shift + total.ln(),
    })
}

impl GeneralEnsemble {
    pub fn states(&self) -> &[i64] {
        &self.states
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `ln Σ exp(-γ M_i)`
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    /// Weight of state `m`, or `None` if it is not in the ensemble.
    pub fn weight_of(&self, m: i64) -> Option<f64> {
        self.states
            .iter()
            .position(|&s| s == m)
            .map(|i| self.weights[i])
    }

    fn weighted_sum(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        compensated_sum(
            self.states
                .iter()
                .zip(&self.weights)
                .map(|(&m, &w)| f(m as f64, w)),
        )
    }
}

/// Raw moment `Σ w M^k`.
pub fn oracle_moment(ens: &GeneralEnsemble, k: u32) -> f64 {
    let k = k as i32;
    ens.weighted_sum(|m, w| w * m.powi(k))
}

/// Two-pass variance `Σ w (M - ⟨M⟩)²`.
pub fn oracle_variance(ens: &GeneralEnsemble) -> f64 {
    let mean = oracle_moment(ens, 1);
    ens.weighted_sum(|m, w| w * (m - mean) * (m - mean))
}

/// `Tr ρ² = Σ w²`.
pub fn oracle_purity(ens: &GeneralEnsemble) -> f64 {
    ens.weighted_sum(|_, w| w * w)
}

/// `Cov(ρ, M) = Σ w² M - (Σ w²)(Σ w M)`.
pub fn oracle_cov(ens: &GeneralEnsemble) -> f64 {
    // Centering on the mean leaves the covariance unchanged and avoids
    // cancelling two terms of size ~⟨M⟩.
    let mean = oracle_moment(ens, 1);
    let rho_m = ens.weighted_sum(|m, w| w * w * (m - mean));
    let rho = oracle_purity(ens);
    let centered_mean = ens.weighted_sum(|m, w| w * (m - mean));
    rho_m - rho * centered_mean
}

/// `-Σ w ln w`, skipping weights that underflowed to (near) zero.
pub fn oracle_entropy(ens: &GeneralEnsemble) -> f64 {
    compensated_sum(
        ens.weights
            .iter()
            .filter(|&&w| w >= 1e-300)
            .map(|&w| -w * w.ln()),
    )
}
