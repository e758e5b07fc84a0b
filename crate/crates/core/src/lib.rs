//! Goal exploration with adaptive skill distributions on discrete mazes.
//!
//! The crate is organised around the pieces of the exploration loop:
//!
//! - [`maze`]: grid mazes, transitions and the sparse goal reward.
//! - [`history`]: the sliding context window and local entropy of achieved goals.
//! - [`skills`]: directional skills, the skill posterior and skill-start flags.
//! - [`svf`]: a recurrent skill value model and its training targets.
//! - [`adaptive`]: Boltzmann skill distributions with dynamic temperature.
//! - [`explorer`]: sub-goal selection, goal-conditioned navigation and the
//!   two-stage episode loop.
//! - [`oracle`]: exhaustive checks of the Boltzmann-optimality and
//!   lower-bound results on tiny instances.
//! - [`kde`]: Gaussian kernel density over normalised goals.
//! - [`harness`]: experiment orchestration, metrics and CSV output.

pub mod adaptive;
pub mod error;
pub mod explorer;
pub mod harness;
pub mod history;
pub mod kde;
pub mod maze;
pub mod oracle;
pub mod skills;
pub mod svf;

pub use error::{Error, Result};
