pub mod analysis;
pub mod blocks;
pub mod cavity;
pub mod error;
pub mod hilbert;
pub mod optics;
pub mod protocols;

pub use error::{Error, Result};
