//! Criterion benchmarks for the hot paths of `fracnash-core`; see `benches/`.
