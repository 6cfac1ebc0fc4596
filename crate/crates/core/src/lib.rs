//! Simulation and analysis of branching random walks in `R^d`: first passage
//! into far unit balls, the maximal displacement, and the genealogy of the
//! particles that get there first.

pub mod engine;
pub mod error;
pub mod genealogy;
pub mod laws;
pub mod ratefn;
pub mod rng;
pub mod stats;

pub use engine::{GenealogyArena, PruneMode, PrunePolicy, NodeId};
pub use error::{Error, Result};
pub use laws::{check_assumptions, AssumptionReport, IncrementKind, IncrementLaw, OffspringLaw};
pub use ratefn::{legendre_1d, legendre_nd, solve_constants, Asymptote, Case, LdConstants};
pub use rng::RandomStream;
