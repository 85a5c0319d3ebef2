//! Criterion benchmarks for perclab; see `benches/`.
