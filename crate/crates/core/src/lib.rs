//! Contextuality-by-Default analysis of systems of categorical random
//! variables.
//!
//! The pipeline is: build or load a [`System`], optionally expand it with
//! joined or coarsened contents ([`transform`]), compile it to its all-binary
//! split representation ([`canonical`]), and decide whether the bunch
//! distributions are compatible with multimaximally coupled connections
//! ([`solver`]). [`two_connection`] holds the closed-form theory for a single
//! content measured in two contexts with all of its splits.

pub mod canonical;
pub mod coupling;
pub mod error;
pub mod io;
pub mod lp;
pub mod rational;
pub mod solver;
pub mod system;
pub mod testlab;
pub mod transform;
pub mod two_connection;

pub use canonical::{canonicalize, CanonicalSystem, SplitLabel, SplitPolicy};
pub use coupling::JointMass;
pub use error::{CbdError, Result};
pub use lp::LinearProgram;
pub use rational::Rational;

pub use system::{BunchDistribution, System, ValueSet};

pub use solver::{SolverConfig, Verdict};
pub use two_connection::TwoConnectionInstance;
