//! Acceptance checks for the solver core and the sweep harness.
//!
//! The checks live in `tests/acceptance.rs` and print one PASS/FAIL line
//! per criterion: `cargo test -p wpt-mec-validation --test acceptance`.
