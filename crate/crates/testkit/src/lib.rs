//! Test-only support: brute-force oracles written directly from the formulas,
//! and deterministic synthetic scenes.
//!
//! Nothing here depends on the library under test. Maps are plain row-major
//! `f64` slices with an explicit validity mask.

pub mod oracle;
pub mod scenes;
