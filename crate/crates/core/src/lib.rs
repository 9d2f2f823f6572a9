//! Simulation and parameter optimization for measurement-device-independent
//! QKD over asymmetric channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`physics`] models the channel, the threshold detectors and the Bell-state
//!   measurement relay, and produces the expected gains and error rates of each
//!   intensity pair. It also carries the interference-visibility formulas.
//! * [`decoy`] turns per-pair statistics into a lower bound on the
//!   single-photon-pair yield and an upper bound on its phase error, with
//!   optional finite-size widening.
//! * [`keyrate`] evaluates the secret key rate, the digital-signature
//!   feasibility margin and the twin-field rate formula.
//! * [`optimizer`] searches the 12 source parameters (intensities and send
//!   probabilities of both parties) in polar coordinates with coordinate
//!   descent, for the seven-intensity method and the two symmetric baselines.
//! * [`montecarlo`] is a photon-level simulator used to validate the closed
//!   forms in [`physics`].
//!
//! Independent runs (restarts, scan points, Monte-Carlo chunks) are spread
//! over a rayon pool when the `parallel` feature is on; see [`Execution`].

pub mod decoy;
mod error;
pub mod keyrate;
pub mod montecarlo;
mod parallel;
pub mod physics;
pub mod optimizer;

pub use error::{Error, Result};
pub use parallel::Execution;
