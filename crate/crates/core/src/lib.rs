pub mod cli;
pub mod curve;
pub mod descriptors;
pub mod error;
pub mod image;
pub mod io;
pub mod motion;
pub mod pipeline;
pub mod regression;
pub mod spatial;
pub mod temporal;

pub use error::{Error, Result};
