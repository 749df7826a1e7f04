//! Simulation of a microwave quantum memory built from a superconducting
//! artificial chiral atom in an open transmission line.
//!
//! The atom is two emitter qubits a quarter wavelength apart plus a detuned
//! memory qubit, treated as an 8-level system and evolved under a Lindblad
//! master equation. Mean output fields follow from input-output theory.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod model;
pub mod ode;
pub mod quantum;
pub mod runner;
pub mod units;

pub use error::{Error, Result};
