//! Criterion benchmarks for the numerical kernels; see `benches/kernels.rs`.

pub use specgeo;
