//! Inversion of the charge-transfer curve: the `γ` that produces a given
//! fractional charge `ν` (or mean population `N + ν`).
//!
//! `ν(γ)` is odd and strictly decreasing, so the sign of the target fixes
//! the sign of `γ` and only `|γ|q` has to be found. The solve runs on
//! `ln(q - |ν|)`, which stays well conditioned all the way into the
//! saturated tails where `ν` itself is flat to machine precision.

use crate::ensemble::{transferred_charge, Capacity, ChemicalPotential, DomainSpec, TransferredCharge};
use crate::error::{Error, Result};

/// Stop once the bracket on `γ` is narrower than this.
pub const GAMMA_TOLERANCE: f64 = 1e-12;
/// Stop once `ln(q - |ν|)` matches the target to this.
pub const RESIDUAL_TOLERANCE: f64 = 1e-13;

const MAX_DOUBLINGS: u32 = 64;
const MAX_ITERATIONS: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionResult {
    pub gamma: f64,
    /// `ν` evaluated at the returned `γ`.
    pub achieved_nu: f64,
    pub iterations: u32,
    /// Width in `γ` of the final bracket.
    pub bracket_width_final: f64,
}

/// `γ` such that `ν(γ) = target_nu`, for `|target_nu| < q`.
pub fn gamma_for_charge(q: Capacity, target_nu: f64) -> Result<InversionResult> {
    if target_nu.is_nan() {
        return Err(Error::Input("target charge is NaN".into()));
    }
    let qf = q.as_f64();
    if target_nu.abs() >= qf {
        return Err(Error::UnreachableTarget {
            target: target_nu,
            lower: -qf,
            upper: qf,
        });
    }
    solve(q, target_nu.signum(), qf - target_nu.abs(), target_nu == 0.0)
}

/// Same as [`gamma_for_charge`], but uses the saturation gap carried by
/// `target`, so `γ` is recovered even where `ν` has rounded to `±q`.
pub fn gamma_for_transferred(q: Capacity, target: TransferredCharge) -> Result<InversionResult> {
    let qf = q.as_f64();
    let gap = target.saturation_gap();
    if !(gap > 0.0 && gap <= qf) || target.value().abs() > qf {
        return Err(Error::UnreachableTarget {
            target: target.value(),
            lower: -qf,
            upper: qf,
        });
    }
    solve(q, target.value().signum(), gap, target.value() == 0.0)
}

/// `γ` such that `⟨M⟩ = target_population`, for a target strictly inside
/// `(N - q, N + q)`.
pub fn gamma_for_population(spec: &DomainSpec, target_population: f64) -> Result<InversionResult> {
    if target_population.is_nan() {
        return Err(Error::Input("target population is NaN".into()));
    }
    let n = f64::from(spec.baseline_population());
    let q = spec.max_capacity();
    let (lower, upper) = (n - q.as_f64(), n + q.as_f64());
    if !(target_population > lower && target_population < upper) {
        return Err(Error::UnreachableTarget {
            target: target_population,
            lower,
            upper,
        });
    }
    gamma_for_charge(q, target_population - n)
}

/// `ln(q - |ν|)` as a function of `x = |γ| q ≥ 0`:
/// `ln q - x + ln(1 + 2t) - ln(1 + t + t²)` with `t = exp(-x)`.
fn log_gap(q: f64, x: f64) -> f64 {
    let t = (-x).exp();
    q.ln() - x + (2.0 * t).ln_1p() - (t + t * t).ln_1p()
}

fn solve(q: Capacity, sign: f64, gap: f64, neutral: bool) -> Result<InversionResult> {
    let qf = q.as_f64();
    let finish = |x: f64, iterations: u32, width_x: f64| {
        // ν > 0 (acceptor) needs γ < 0 and vice versa.
        let gamma = if x == 0.0 { 0.0 } else { -sign * x / qf };
        let achieved_nu = transferred_charge(q, ChemicalPotential::new(gamma)?).value();
        Ok(InversionResult {
            gamma,
            achieved_nu,
            iterations,
            bracket_width_final: width_x / qf,
        })
    };
    if neutral {
        return finish(0.0, 0, 0.0);
    }

    let target = gap.ln();
    let f = |x: f64| log_gap(qf, x) - target;

    // f decreases from f(0) = ln q - ln gap ≥ 0 towards -∞.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo <= 0.0 {
        return finish(0.0, 0, 0.0);
    }
    let mut doublings = 0;
    while f_hi > 0.0 {
        if doublings == MAX_DOUBLINGS {
            return Err(Error::UnreachableTarget {
                target: sign * (qf - gap),
                lower: -qf,
                upper: qf,
            });
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = f(hi);
        doublings += 1;
    }
    if f_hi == 0.0 {
        return finish(hi, 0, hi - lo);
    }

    // Illinois regula falsi, falling back to bisection when the secant
    // point lands outside the open bracket.
    let mut side = 0i8;
    for iteration in 1..=MAX_ITERATIONS {
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx.abs() < RESIDUAL_TOLERANCE {
            return finish(x, iteration, hi - lo);
        }
        if fx > 0.0 {
            lo = x;
            f_lo = fx;
            if side == 1 {
                f_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            f_hi = fx;
            if side == -1 {
                f_lo *= 0.5;
            }
            side = -1;
        }
        if (hi - lo) / qf < GAMMA_TOLERANCE {
            return finish(0.5 * (lo + hi), iteration, hi - lo);
        }
    }
    finish(0.5 * (lo + hi), MAX_ITERATIONS, hi - lo)
}
