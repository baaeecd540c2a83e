//! Heat statistics of a finite-level quantum system under repeated
//! projective measurements.
//!
//! A system prepared in a mixture of energy eigenstates is measured
//! projectively: first its energy, then `M` times an observable that
//! need not commute with the Hamiltonian (with random waiting times
//! between measurements), then its energy again. The energy difference
//! between the two boundary measurements is the heat exchanged with the
//! measurement apparatus. This crate computes the full heat
//! distribution and its characteristic function exactly, samples
//! trajectories by Monte Carlo, analyzes the large-`M` thermalization
//! and quantum Zeno regimes, and carries closed-form treatments of the
//! two-level and three-level cases.

pub mod asymptotics;
pub mod error;
pub mod exact;
pub mod montecarlo;
pub mod protocol;
pub mod qcore;
pub mod qubit;
pub mod qutrit;
pub mod tol;

pub use error::{Error, Result};
