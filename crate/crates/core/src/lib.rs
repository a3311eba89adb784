//! Simulation and analysis toolkit for the zero-temperature Schelling spin
//! system on a torus with extended Moore neighborhoods.
//!
//! * [`grid`]: spins, intolerance, incremental neighborhood counts.
//! * [`dynamics`]: Glauber dynamics under discrete or clock schedulers.
//! * [`regions`]: affected nodes, blocks, radical regions, cascades,
//!   firewalls and monochromatic regions.
//! * [`bounds`]: closed-form exponents and exact binomial tails.
//! * [`fpp`]: idealized first-passage growth.
//! * [`harness`]: configuration, sweeps and file formats.

pub mod bounds;
pub mod dynamics;
pub mod fpp;
pub mod grid;
pub mod harness;
pub mod regions;
pub mod scalar;

/// The fixed simulation PRNG (ChaCha with 8 rounds, counter based).
pub type SimRng = rand_chacha::ChaCha8Rng;

pub use scalar::Scalar;

/// Closed-form bounds evaluated in `f64`.
pub type Bounds = bounds::Bounds<f64>;
pub type CurveRow = bounds::CurveRow<f64>;
pub type RhoFamily = bounds::RhoFamily<f64>;
pub type PassageStats = fpp::PassageStats<f64>;

pub use dynamics::{Scheduler, Simulation, SteadyStateReport, StepOutcome};
pub use grid::{Intolerance, Node, Spin, SpinGrid};
