//! Criterion benchmarks for the per-day hot paths; see `benches/hot_paths.rs`.
