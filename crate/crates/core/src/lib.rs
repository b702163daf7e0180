pub mod decayfit;
pub mod error;
pub mod evolve;
pub mod geometry;
pub mod indexsets;
pub mod resonance;
pub mod specfun;
pub mod spectrum;

pub use error::{Error, Result};
