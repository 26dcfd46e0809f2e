//! Simulator for a microwave dressed-state trapped-ion qubit.
//!
//! The crate models the four-level ground-state manifold of a trapped ion
//! dressed by two continuous microwave fields, the interrupted-STIRAP
//! protocol that moves population in and out of the protected dark state,
//! single-rf-field qubit manipulation, magnetic-field-noise dephasing and
//! threshold fluorescence detection. Everything numerical is generic over
//! the real scalar type (`f32` or `f64`); the experiment harness and CLI
//! work in `f64` through the aliases below.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod hamiltonian;
pub mod linalg;
pub mod noise;
pub mod measure;
pub mod propagator;
pub mod pulses;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod seqlang;
pub mod statespace;

pub use scalar::{Float, C};

/// Concrete `f64` aliases for the common domain types.
pub type StateVector64 = statespace::StateVector<f64>;
pub type Operator64 = statespace::Operator<f64>;
pub type FieldConfig64 = hamiltonian::FieldConfig<f64>;
pub type PhysicalConstants64 = hamiltonian::PhysicalConstants<f64>;
pub type SpeciesCalibration64 = hamiltonian::SpeciesCalibration<f64>;

/// Concrete `f32` aliases.
pub type StateVector32 = statespace::StateVector<f32>;
pub type Operator32 = statespace::Operator<f32>;
