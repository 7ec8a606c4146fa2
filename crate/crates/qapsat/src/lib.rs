//! Random QAP-SAT instances: generation, exact and heuristic solving, and
//! phase-transition fitting.

pub mod analysis;
pub mod error;
pub mod exact;
pub mod features;
pub mod generator;
pub mod harness;
pub mod instance;
pub mod io;
pub mod lap;
pub mod matrix;
pub mod permutation;
pub mod plot;
pub mod rots;

pub use error::{Error, Result};
pub use exact::{branch_and_bound, enumerate_min, gilmore_lawler_bound, Assignment, BnbOptions, SolveOutcome};
pub use generator::{generate, GeneratorConfig};
pub use instance::{clause_lower_bound, is_satisfied, ClauseSpec, QapInstance, QapSatInstance};
pub use matrix::SquareMatrix;
pub use permutation::Permutation;
