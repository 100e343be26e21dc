//! Simulator for a handset "thermal radiation" (TR) mode that suspends
//! high-bandwidth uplink traffic under poor signal strength.
//!
//! The crate couples a cellular link model (Rayleigh multipath channels,
//! Shannon-inversion power allocation, SINR and interference) to an
//! exposure model (far-field power density, SAR, layered-skin attenuation)
//! and an explicit Pennes bioheat solver, and compares an all-Active cell
//! against a cell where some handsets run in TR mode.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bioheat;
pub mod channel;
pub mod data;
pub mod dielectric;
pub mod error;
pub mod exposure;
pub mod format;
pub mod mode;
pub mod power;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
