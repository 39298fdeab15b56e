//! Criterion benchmarks for the network, policy-head and training hot paths;
//! see `benches/`.
