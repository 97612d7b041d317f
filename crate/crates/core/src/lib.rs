//! Ground states of finite-range generalized Frenkel-Kontorova models.
//!
//! The crate computes periodic minimizers, the crossing energy of pairs of
//! configurations, heteroclinic connections across gaps of the minimizer
//! set, and a Birkhoff/non-Birkhoff classification of candidate ground
//! states. A linear second-neighbour model with explicit solutions serves
//! as an independent oracle.

pub mod classify;
pub mod cli;
pub mod crossing;
pub mod lattice;
pub mod linear_oracle;
pub mod model;
pub mod quadrature;
pub mod solver;

pub use lattice::Window;
pub use model::{fk_classic, second_neighbor, LocalEnergyModel, ModelSpec, TwistMode};
