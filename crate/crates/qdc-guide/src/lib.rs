//! Doc-test shim for the book under `book/`.
//!
//! mdbook renders the chapters but does not compile them against this
//! workspace, so each chapter is also included here as module
//! documentation. `cargo test --doc -p qdc-guide` then builds and runs
//! every fenced Rust snippet, keeping the book and the library in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/bell-states.md")]
pub mod bell_states {}

#[doc = include_str!("../../../book/src/simulator.md")]
pub mod simulator {}

#[doc = include_str!("../../../book/src/entanglement-swapping.md")]
pub mod entanglement_swapping {}

#[doc = include_str!("../../../book/src/authentication.md")]
pub mod authentication {}

#[doc = include_str!("../../../book/src/communication.md")]
pub mod communication {}

#[doc = include_str!("../../../book/src/legacy-protocols.md")]
pub mod legacy_protocols {}

#[doc = include_str!("../../../book/src/adversaries.md")]
pub mod adversaries {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
