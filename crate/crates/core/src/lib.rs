//! Perpetual schedulers for combinatorial bamboo garden trimming (CBGT) and
//! combinatorial pinwheel scheduling (CPS), together with an exact-arithmetic
//! simulation engine that verifies every height, discrepancy and density bound
//! the schedulers promise.
//!
//! A CBGT instance is a set system `(E, I)` plus a rational growth rate per
//! element; each day one independent set is cut and its bamboos reset to
//! height 0. The schedulers in [`sched`] cover the matroid families (exact
//! period-`T` schedules with discrepancy below 1, tree schedules, coloring
//! compositions) and general set systems (potential greedy, interleavings).
//! Everything a scheduler claims is replayed and checked by [`simulator`] in
//! exact rationals.

pub mod error;
pub mod generators;
pub mod io;
pub mod model;
pub mod pinwheel;
pub mod sched;
pub mod set_systems;
pub mod simulator;

pub use error::Error;
pub use model::{rational, CbgtInstance, ConvexCombination, Element, GrowthVector, Rational, Schedule};
pub use set_systems::SetSystemDescriptor;
pub use simulator::SimulationReport;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
