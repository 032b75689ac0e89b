//! Hawkes-driven infinite-server queues.
//!
//! Closed-form and ODE-based moments for Hawkes/PH/∞ and Hawkes/D/∞ queues,
//! the cumulant generating function, Monte Carlo simulation, the club-queue
//! admission control problem and web-traffic click calculators.

pub mod applications;
pub mod cli;
pub mod config;
pub mod control;
pub mod det_queue;
pub mod error;
pub mod generating;
pub mod hawkes;
pub mod matrix_kit;
pub mod numeric;
pub mod phase_type;
pub mod queue_moments;
pub mod selftest;
pub mod simulate;

pub use error::{Error, Result};
pub use hawkes::HawkesParams;
pub use phase_type::PhaseTypeDist;
pub use queue_moments::QueueModel;
