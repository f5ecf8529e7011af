pub mod cli;
pub mod density;
pub mod error;
pub mod linalg;
pub mod model;
pub mod norm;
pub mod pgm;
pub mod reach;
pub mod rng;
pub mod simulate;
pub mod theory;
pub mod ulam;
mod quad;

pub use error::{Error, Result};
