//! Release criteria live in `tests/acceptance.rs`; this crate exists only
//! to host that suite.
