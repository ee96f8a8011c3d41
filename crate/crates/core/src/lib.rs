//! Limit law of diffusion in a spectrally negative stable random environment.

pub mod demo;
pub mod environment;
pub mod error;
pub mod extrema;
pub mod fluctuation;
pub mod inversion;
pub mod montecarlo;
pub mod numeric;
pub mod quadrature;
pub mod scale;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use special::{SeriesConfig, StabilityIndex};
