//! Physics and information-theory core for a resonant-beam communication
//! (RBCom) link in the quasi-static regime.
//!
//! The crate models the full chain of an amplitude-keyed resonant beam
//! system: Gaussian-beam diffraction loss between transmitter and receiver,
//! saturated amplification in the gain medium at both ends, the round-trip
//! link gain and its stable operating point, capacity bounds for the
//! resulting peak-amplitude-constrained AWGN channel, a grid search for the
//! jointly optimal splitting ratio and keying amplitude, and a frame-level
//! simulator of the compensated echo channel.
//!
//! Modules mirror that chain:
//!
//! - [`units`]: validated scalar quantities (watts, sqrt-watt amplitudes,
//!   intensities, dimensionless ratios) and dBm conversions.
//! - [`beam`]: transmitter-to-receiver diffraction loss of the fundamental
//!   Gaussian mode.
//! - [`gain`]: saturated power gain of a pumped medium from the implicit
//!   round-trip balance equation.
//! - [`link`]: the end-to-end link gain `h(x)` over one echo round trip and
//!   its inverse.
//! - [`resonance`]: feasibility thresholds and the stable circulating power.
//! - [`capacity`]: upper and lower bounds on the capacity of the equivalent
//!   peak-constrained AWGN channel.
//! - [`optimizer`]: exhaustive grid search for the best splitting ratio and
//!   keying amplitude under receiver power limits.
//! - [`sim`]: seeded Monte-Carlo simulation of the compensated modulation
//!   scheme over the raw echo channel.
//! - [`solver`]: the bracketed bisection primitive shared by the modules
//!   above.
//!
//! With the default `parallel` feature the optimizer grid and the simulator
//! slots run on a rayon pool; disabling the feature compiles purely
//! sequential fallbacks with identical results.
//!
//! ## Example
//!
//! ```
//! use rbcom_core::beam::BeamGeometry;
//! use rbcom_core::gain::GainMedium;
//! use rbcom_core::resonance::threshold_power;
//!
//! let medium = GainMedium::new(1.2e7, 0.7, 3e-3).unwrap();
//! let geometry = BeamGeometry::new(1064e-9, 0.2e-3, 15.0, medium.cross_section()).unwrap();
//! let delta = geometry.link_loss();
//! let p_th = threshold_power(&medium, delta).unwrap();
//! assert!(p_th.watts() > 0.0, "lossy link must have a positive threshold");
//! ```

pub mod beam;
pub mod capacity;
pub mod error;
pub mod gain;
pub mod link;
pub mod optimizer;
pub mod resonance;
pub mod sim;
pub mod solver;
pub mod units;

pub use error::{Error, Result};
