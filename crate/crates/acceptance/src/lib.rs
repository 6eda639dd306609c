//! Acceptance checks for `grandpot` live in `tests/acceptance.rs`.
