//! Criterion benchmarks for `hwkern`; run with `cargo bench -p hwkern-bench`.
