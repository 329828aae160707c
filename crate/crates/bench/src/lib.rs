//! Criterion benchmarks for the hot paths of `quasirest`: the restricted
//! kernel sweep, left quantization on a grid, sphere harmonic restriction
//! and the eikonal solve. Run them with `cargo bench -p quasirest-bench`.
