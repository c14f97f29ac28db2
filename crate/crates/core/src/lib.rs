//! Network selection between a licensed (primary) and an unlicensed
//! (secondary) network as a finite-population imitation process.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: M|M|1 utilities, Nash-equilibrium traffic, social welfare
//!   and Price-of-Anarchy metrics.
//! - [`protocols`]: imitation rules `q(z)` (pairwise proportional, Fermi).
//! - [`chain`]: the birth-death chain over the number of primary users,
//!   its classification, stationary laws and absorption analysis.
//! - [`replicator`]: the deterministic two-strategy mean dynamics.
//! - [`montecarlo`]: seeded simulation of the chain.

pub mod chain;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod protocols;
pub mod replicator;

pub use chain::{
    AbsorptionReport, ChainClass, DistributionKind, EigenMethod, PopulationConfig,
    StationaryDistribution, TransitionKernel,
};
pub use error::{Error, Result};
pub use model::{EquilibriumInfo, NetworkParams, SocialOptimum};
pub use montecarlo::{
    AbsorptionFrequency, InitialState, OccupancyHistogram, SimulationOutput, SimulationSpec,
};
pub use protocols::{BetaSpec, ImitationRule};
pub use replicator::{IntegrationOptions, ReplicatorState, Trajectory};
