pub mod cli;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod io;
pub mod noise_morph;
pub mod pipeline;
pub mod stn;
pub mod transients;
pub mod vocoder;

pub use error::{Error, Result};
