//! Criterion benchmarks for relfill live under `benches/`.
