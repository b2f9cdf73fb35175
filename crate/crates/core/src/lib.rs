//! Link-level simulation of fingerprint-embedded physical-layer
//! authentication for a multi-user mmWave downlink protected by artificial
//! noise.
//!
//! The crate models a base station that superimposes a low-power, key-derived
//! authentication tag on each user's data stream while broadcasting
//! artificial noise in the null space of the user channels. It provides:
//!
//! - closed-form evaluation of the legitimate user's authentication
//!   probability and the eavesdropper's key-detection probability,
//! - the ψ/ω power-allocation algebra that trades those two probabilities
//!   against the sum rate, and
//! - a deterministic Monte Carlo engine that cross-validates the closed
//!   forms at the waveform level.

// validation guards use `!(x > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod authentication;
pub mod channel;
pub mod montecarlo;
pub mod numerics;
pub mod powerctl;
pub mod precoding;
pub mod validation;

pub use numerics::RngStream;
