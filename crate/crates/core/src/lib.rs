pub mod archive;
pub mod basis;
pub mod bench;
pub mod cli;
pub mod error;
pub mod linear;
pub mod ordinal;
pub mod proposal;
pub mod sampler;
pub mod sobol;
pub mod sparse;

pub use error::{KhaosError, Result};
