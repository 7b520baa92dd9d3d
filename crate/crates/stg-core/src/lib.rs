//! Stochastic timed games: shared data model, simulation and exact semantics,
//! the 1-clock region/MDP abstraction with exact threshold decision, and the
//! two-counter machine reductions.

pub mod exppoly;
pub mod format;
pub mod interval;
pub mod model;
pub mod rat;
pub mod region;
pub mod transient;
pub mod exact;
pub mod mdp;
pub mod sim;
pub mod solver;
pub mod tcm;
pub mod validate;

pub use exppoly::ExpPoly;
pub use model::{
    enabled_interval, enabled_set, edge_choice_prob, satisfies, Clock, ClockConstraint,
    DistributionSpec, Edge, EdgeId, Location, LocationId, Owner, State, Stg,
};
pub use rat::Rat;
pub use region::{build_region_stg, check_star, Region, RegionStg, StarReport};
pub use validate::{check_wellformed, ValidationReport};
