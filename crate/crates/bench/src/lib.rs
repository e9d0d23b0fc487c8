//! Benchmark harness crate. All the content lives in `benches/`; this
//! library exists only so the package has a compilation unit.
