//! Criterion benchmarks for cbd-core. See `benches/`.
