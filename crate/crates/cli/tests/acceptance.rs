//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! shown.

use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qei_core::oracle::{oracle_cov, oracle_entropy, oracle_moment, oracle_purity, oracle_variance};
use qei_core::*;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn spec(n: u32, q: u32) -> DomainSpec {
    DomainSpec::new(n, q).unwrap()
}

fn cap(q: u32) -> Capacity {
    Capacity::new(q).unwrap()
}

fn g(v: f64) -> ChemicalPotential {
    ChemicalPotential::new(v).unwrap()
}

/// 241 points with |γq| ≤ 30.
fn grid(q: u32) -> impl Iterator<Item = f64> {
    (0..=240).map(move |i| (-30.0 + 60.0 * i as f64 / 240.0) / q as f64)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn normalization() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst_sum = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for _ in 0..10_000 {
        let q = rng.gen_range(1..=6u32);
        let n = rng.gen_range(q..=q + 100);
        let gamma = rng.gen_range(-30.0..=30.0) / q as f64;
        let w = weights(&spec(n, q), g(gamma));
        let want = (2.0 * gamma * q as f64).exp();
        worst_sum = worst_sum.max((w.sum() - 1.0).abs());
        worst_ratio = worst_ratio.max(((w.cation / w.anion) - want).abs() / want);
    }
    ensure(worst_sum <= 1e-12 && worst_ratio <= 1e-10, || {
        format!("sum error {worst_sum:.2e}, ratio error {worst_ratio:.2e}")
    })?;
    Ok(format!("10000 points, max |Σw-1| {worst_sum:.1e}, max ratio error {worst_ratio:.1e}"))
}

fn closed_forms_vs_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for q in 1..=6u32 {
        for n in [q, q + 3, q + 40] {
            let s = spec(n, q);
            for gamma in grid(q) {
                let p = g(gamma);
                let ens = make_ensemble(&s.states(), gamma).unwrap();
                let pairs = [
                    (transferred_charge(cap(q), p).value(), oracle_moment(&ens, 1) - n as f64),
                    (mean_population(&s, p), oracle_moment(&ens, 1)),
                    (variance(cap(q), p), oracle_variance(&ens)),
                    (purity(cap(q), p), oracle_purity(&ens)),
                    (covariance_rho_m(cap(q), p), oracle_cov(&ens)),
                    (entropy(&s, p), oracle_entropy(&ens)),
                ];
                for (a, b) in pairs {
                    worst = worst.max((a - b).abs());
                }
                count += 1;
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:.2e}"))?;
    Ok(format!("{count} points x 6 quantities, max deviation {worst:.1e}"))
}

fn fdt() -> Outcome {
    let mut count = 0;
    for q in 1..=6u32 {
        let s = spec(q + 2, q);
        for gamma in grid(q) {
            let r = verify_fdt(&s, g(gamma), &FiniteDiffConfig::for_gamma(g(gamma)), Tolerance::default()).unwrap();
            ensure(r.passed, || format!("q={q} γ={gamma}: {r:?}"))?;
            count += 1;
        }
    }
    let mut ratios = Vec::new();
    for (q, gamma) in [(1u32, 0.3), (2, 1.0), (3, -0.7), (6, 0.15)] {
        let s = spec(q + 1, q);
        let residual = |h: f64| {
            let cfg = FiniteDiffConfig::new(h, FdScheme::Central2).unwrap();
            verify_fdt(&s, g(gamma), &cfg, Tolerance::default()).unwrap().abs_residual
        };
        let r = [residual(1e-3), residual(5e-4), residual(2.5e-4)];
        for pair in r.windows(2) {
            let ratio = pair[0] / pair[1];
            ensure((ratio - 4.0).abs() < 0.05, || format!("q={q} γ={gamma}: ratio {ratio}"))?;
            ratios.push(ratio);
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    Ok(format!("{count} points pass; residual ratio under h/2 in [{lo:.3}, {hi:.3}]"))
}

fn pfdt() -> Outcome {
    let mut count = 0;
    for q in 1..=6u32 {
        let s = spec(q + 2, q);
        for gamma in grid(q) {
            let r = verify_pfdt(&s, g(gamma), &FiniteDiffConfig::for_gamma(g(gamma)), Tolerance::default()).unwrap();
            ensure(r.passed, || format!("q={q} γ={gamma}: {r:?}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} points pass"))
}

fn generic_identity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst_identity = 0.0f64;
    let mut checks = 0;
    for _ in 0..500 {
        let q = rng.gen_range(1..=6u32);
        let n = rng.gen_range(q..=q + 40);
        let gamma = rng.gen_range(-25.0..=25.0) / q as f64;
        let s = spec(n, q);
        let cfg = FiniteDiffConfig::for_gamma(g(gamma));
        for obs in DiagonalObservable::library(s) {
            let r = verify_qei(&obs, &s, g(gamma), &cfg, Tolerance::default()).unwrap();
            ensure(r.passed, || format!("{} at N={n} q={q} γ={gamma}: {r:?}", obs.label()))?;
            checks += 1;
        }
        let id = qei_rhs(&DiagonalObservable::identity(), &s, g(gamma)).unwrap().combine();
        worst_identity = worst_identity.max(id.abs());
    }
    ensure(worst_identity <= 1e-13, || format!("identity rhs {worst_identity:.2e}"))?;
    Ok(format!("{checks} checks pass; max |identity rhs| {worst_identity:.1e}"))
}

fn landmarks() -> Outcome {
    for q in 1..=6u32 {
        let (c, qf) = (cap(q), q as f64);
        let zero = g(0.0);
        ensure((purity(c, zero) - 1.0 / 3.0).abs() <= 1e-12, || format!("q={q}: φ(0)"))?;
        ensure((variance(c, zero) - 2.0 * qf * qf / 3.0).abs() <= 1e-12, || format!("q={q}: Var(0)"))?;
        ensure(covariance_rho_m(c, zero).abs() <= 1e-15, || format!("q={q}: Cov(0)"))?;
        let (neg, pos) = (g(-50.0 / qf), g(50.0 / qf));
        ensure((transferred_charge(c, neg).value() - qf).abs() <= 1e-10, || format!("q={q}: ν(-50/q)"))?;
        ensure((transferred_charge(c, pos).value() + qf).abs() <= 1e-10, || format!("q={q}: ν(50/q)"))?;
        ensure((purity(c, neg) - 1.0).abs() <= 1e-10, || format!("q={q}: φ(-50/q)"))?;
        ensure((purity(c, pos) - 1.0).abs() <= 1e-10, || format!("q={q}: φ(50/q)"))?;
    }
    Ok("q = 1..6: φ(0), Var(0), Cov(0), ν(∓50/q), φ(±50/q)".into())
}

fn symmetry() -> Outcome {
    let mut worst = 0.0f64;
    for q in 1..=6u32 {
        let (s, c) = (spec(q + 1, q), cap(q));
        for gamma in grid(q) {
            let (p, m) = (g(gamma), g(-gamma));
            for d in [
                transferred_charge(c, p).value() + transferred_charge(c, m).value(),
                covariance_rho_m(c, p) + covariance_rho_m(c, m),
                variance(c, p) - variance(c, m),
                purity(c, p) - purity(c, m),
                entropy(&s, p) - entropy(&s, m),
            ] {
                worst = worst.max(d.abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max asymmetry {worst:.2e}"))?;
    Ok(format!("ν, Cov odd; Var, φ, S even; max deviation {worst:.1e}"))
}

/// Strictly decreasing, comparing `ν` itself and, once `ν` has rounded to
/// `±q`, the saturation gap (`q - |ν|`, growing towards `γ = 0`).
fn strictly_decreasing(c: Capacity, points: &[f64]) -> bool {
    let charges: Vec<TransferredCharge> = points.iter().map(|&x| transferred_charge(c, g(x))).collect();
    charges.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        if b.value() != a.value() {
            return b.value() < a.value();
        }
        // equal values only in a saturated tail: ν > 0 before γ = 0, ν < 0 after
        if a.value() > 0.0 {
            b.saturation_gap() > a.saturation_gap()
        } else {
            b.saturation_gap() < a.saturation_gap()
        }
    })
}

fn monotonicity_and_inversion() -> Outcome {
    let preset: Vec<f64> = (0..601).map(|i| -6.0 + 12.0 * i as f64 / 600.0).collect();
    for q in 1..=6u32 {
        let c = cap(q);
        let fine: Vec<f64> = (0..1000).map(|i| (-20.0 + 40.0 * i as f64 / 999.0) / q as f64).collect();
        for (name, points) in [("241-point", grid(q).collect::<Vec<_>>()), ("1000-point", fine)] {
            let nus: Vec<f64> = points.iter().map(|&x| transferred_charge(c, g(x)).value()).collect();
            ensure(nus.windows(2).all(|w| w[1] < w[0]), || format!("q={q}: ν not decreasing on the {name} grid"))?;
        }
        // The figure grid reaches |γq| = 36 for q = 6, past where ν is
        // distinguishable from ±q in f64; there the gap carries the order.
        ensure(strictly_decreasing(c, &preset), || format!("q={q}: not decreasing on the 601-point grid"))?;
        if q <= 3 {
            let nus: Vec<f64> = preset.iter().map(|&x| transferred_charge(c, g(x)).value()).collect();
            ensure(nus.windows(2).all(|w| w[1] < w[0]), || format!("q={q}: ν not decreasing on the 601-point grid"))?;
        }
    }
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = rng.gen_range(1..=6u32);
        let gamma = rng.gen_range(-20.0..=20.0) / q as f64;
        let charge = transferred_charge(cap(q), g(gamma));
        let r = gamma_for_transferred(cap(q), charge).map_err(|e| format!("q={q} γ={gamma}: {e}"))?;
        worst = worst.max((r.gamma - gamma).abs());
    }
    ensure(worst <= 1e-9, || format!("round-trip error {worst:.2e}"))?;
    Ok(format!("strictly decreasing on all grids; 1000 round trips, max |Δγ| {worst:.1e}"))
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Hyperbolic closed forms, written out independently of the library.
fn reference(preset: &str, q: f64, gamma: f64) -> f64 {
    let x = gamma * q;
    let (s, c) = (x.sinh(), x.cosh());
    let d = 2.0 * c + 1.0;
    match preset {
        "fig1a" => -2.0 * q * s / d,
        "fig1b" => 2.0 * q * q * (c + 2.0) / (d * d),
        "fig2a" => (2.0 * c - 1.0) / d,
        "fig2b" => -2.0 * q * s / (d * d),
        _ => unreachable!(),
    }
}

fn goldens() -> Outcome {
    for preset in ["fig1a", "fig1b", "fig2a", "fig2b"] {
        let path = golden_dir().join(format!("{preset}.csv"));
        let golden = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let out = Command::new(env!("CARGO_BIN_EXE_qei"))
            .args(["sweep", "--preset", preset])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("{preset}: exit {:?}", out.status))?;
        ensure(out.stdout == golden, || format!("{preset}: output differs from {}", path.display()))?;

        let text = String::from_utf8(golden).map_err(|e| e.to_string())?;
        let mut lines = text.lines();
        let q_cols = ["1", "2", "3"].map(|q| format!("_q{q}"));
        let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
        ensure(header.len() == 4 && header[0] == "gamma", || format!("{preset}: header {header:?}"))?;
        for (col, suffix) in header[1..].iter().zip(&q_cols) {
            ensure(col.ends_with(suffix.as_str()), || format!("{preset}: column {col}"))?;
        }
        let mut rows = 0;
        for (i, line) in lines.enumerate() {
            let gamma = if i == 600 { 6.0 } else { -6.0 + i as f64 * 12.0 / 600.0 };
            let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect();
            ensure(cells.len() == 4, || format!("{preset} row {i}: {line}"))?;
            ensure((cells[0] - gamma).abs() <= 5e-12 * gamma.abs().max(1e-3), || format!("{preset} row {i}: γ"))?;
            for (k, &got) in cells[1..].iter().enumerate() {
                let want = reference(preset, (k + 1) as f64, gamma);
                ensure((got - want).abs() <= 6e-12 * want.abs(), || {
                    format!("{preset} row {i} q={}: {got} vs {want}", k + 1)
                })?;
            }
            rows += 1;
        }
        ensure(rows == 601, || format!("{preset}: {rows} rows"))?;
    }
    Ok("fig1a, fig1b, fig2a, fig2b byte-identical and regenerated from hyperbolic forms".into())
}

fn saturation() -> Outcome {
    let mut count = 0;
    for q in 1..=6u32 {
        for n in [q, q + 10] {
            let s = spec(n, q);
            for gamma in [-1000.0, 1000.0] {
                let p = g(gamma);
                let mut values = vec![
                    log_partition(&s, p),
                    transferred_charge(cap(q), p).value(),
                    transferred_charge(cap(q), p).saturation_gap(),
                    mean_population(&s, p),
                    variance(cap(q), p),
                    purity(cap(q), p),
                    covariance_rho_m(cap(q), p),
                    entropy(&s, p),
                ];
                values.extend(weights(&s, p).to_array());
                values.extend(log_weights(&s, p).iter().filter(|v| **v != f64::NEG_INFINITY));
                ensure(values.iter().all(|v| v.is_finite()), || format!("N={n} q={q} γ={gamma}: {values:?}"))?;
                count += values.len();
            }
        }
    }
    Ok(format!("{count} values finite at |γ| = 1000"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("normalization and weight ratio", normalization),
        ("closed forms vs oracle", closed_forms_vs_oracle),
        ("number fluctuation-dissipation", fdt),
        ("purity fluctuation-dissipation", pfdt),
        ("generic expectation identity", generic_identity),
        ("landmark values", landmarks),
        ("parity", symmetry),
        ("monotonicity and inversion", monotonicity_and_inversion),
        ("figure goldens", goldens),
        ("saturation robustness", saturation),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
