//! Criterion benchmarks for `barw-core`; see `benches/`.
