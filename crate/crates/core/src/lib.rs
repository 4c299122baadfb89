//! Permutation-coded M-ary FSK for narrowband power-line links.
//!
//! - [`permcode`]: permutation codes, distance bounds, exact code search.
//! - [`modem`]: FSK parameters, efficiency formulas, envelope detection.
//! - [`channel`]: attenuation and noise model, link budget, error scenarios.
//! - [`codec`]: threshold demodulation and max-agreement decoding.
//! - [`sim`]: seeded Monte Carlo experiments.

pub mod channel;
pub mod codec;
pub mod error;
pub mod modem;
pub mod permcode;
pub mod sim;

pub use error::{Error, Result};
