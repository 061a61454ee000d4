//! Criterion benchmarks for `qei-core`; the benchmark targets live in `benches/`.
