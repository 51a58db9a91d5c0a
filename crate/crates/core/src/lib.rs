//! Routing of delay-constrained packets between a capacity-limited local
//! breakout backhaul and the core network.
//!
//! The routing problem is an average-reward Markov decision process over the
//! backhaul queue length seen at packet arrivals. [`solver`] computes the
//! optimal stationary policy by relative value iteration, [`sim`] checks any
//! policy in a slot-level Monte-Carlo simulation, and [`harness`] runs
//! parameter sweeps with CSV and SVG output.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

pub mod delay;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod policy;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod solver;
pub mod special;

pub use delay::{cn_delay_cdf, cn_delay_sample, p_bac, p_bac_curve, rewards, PathReward};
pub use error::{Error, Result};
pub use kernel::{sample_epoch, transition_row, Action, QueueState};
pub use policy::{bind, decide, PolicySpec, PolicyTable};
pub use scalar::Scalar;
pub use sim::{SimConfig, SimulationReport};
pub use solver::{bellman_backup, extract_threshold, solve, ThresholdReport};

pub type SystemParams = kernel::SystemParams<f64>;
pub type DelayModel = delay::DelayModel<f64>;
pub type TransitionRow = kernel::TransitionRow<f64>;
pub type ValueFunction = solver::ValueFunction<f64>;
pub type SolveResult = solver::SolveResult<f64>;
pub type MdpModel = solver::MdpModel<f64>;

pub type SystemParams32 = kernel::SystemParams<f32>;
pub type DelayModel32 = delay::DelayModel<f32>;
pub type SolveResult32 = solver::SolveResult<f32>;
