//! Criterion benchmarks for the thermal model and objective; see `benches/`.
