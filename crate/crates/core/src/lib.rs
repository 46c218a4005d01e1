//! Simulation and entanglement certification for two atoms entangled by
//! spin exchange in an optical tweezer and then separated.
//!
//! Modules, bottom-up:
//! - [`qstate`]: two-atom spin states, density matrices, Bloch vectors.
//! - [`potential`]: trap frequencies, overlaps and the exchange energy.
//! - [`dynamics`]: exchange beats, adiabatic passage, gradient, pulses,
//!   collective dephasing.
//! - [`measure`]: populations, parity, error model, shot sampling, fitting.
//! - [`witness`]: separability bound, fidelity witness, concurrence,
//!   partial transpose.
//! - [`cli`]: configuration, pipelines and CSV output.

pub mod cli;
pub mod dynamics;
pub mod measure;
pub mod potential;
pub mod qstate;
pub mod witness;
