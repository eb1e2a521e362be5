pub mod assignment;
pub mod certify;
pub mod diagrams;
pub mod embeddings;
pub mod error;
pub mod geometry;
pub mod rational;
pub mod transport;

pub use error::{Error, Result};
