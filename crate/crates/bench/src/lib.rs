//! Criterion benchmarks for the RRTx core live in `benches/`.
