//! Acceptance suite for the DSM toolkit. The checks live in
//! `tests/acceptance.rs`; run them with `cargo test -p dsm-validation`.
//!
//! The suite is its own package so that it runs after the unit and
//! integration tests of the other crates.
