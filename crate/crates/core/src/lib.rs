//! Spectral analysis of pumped open quantum systems.
//!
//! The density matrix of a system with a population source `Λ` evolves as
//! `∂ρ/∂t = Λ + Lρ`, where the Liouvillian `L = -i[H, ·] + R` combines the
//! coherent dynamics with relaxation. This crate assembles `L`, finds the
//! steady state `ρ₀ = -L⁻¹Λ`, builds the biorthogonal eigenbasis of `L` and
//! its metric operator `Ω`, and evaluates the quadratic form
//! `M_Ω = ⟨⟨δρ|Ω|δρ⟩⟩` which decreases monotonically along every trajectory.
//!
//! Module map:
//!
//! * [`linalg`] dense complex matrices, linear solves, general eigensolver
//! * [`model`] Hamiltonian, relaxation and pump; superoperator assembly
//! * [`spectral`] biorthonormal decomposition and metric operator
//! * [`dynamics`] steady state, propagation, Lyapunov functional
//! * [`ensemble`] pure-state injection ensemble used to cross-check the pump term
//! * [`twolevel`] driven two-level system with pumping, reference fixtures

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod tolerances;
pub mod twolevel;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, ComplexVector, C64};
pub use tolerances::Tolerances;
