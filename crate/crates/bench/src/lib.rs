//! Benchmarks for the navigation pipeline live in `benches/`.
