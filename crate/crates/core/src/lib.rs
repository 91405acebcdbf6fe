pub mod error;
pub mod error_model;
pub mod estimation;
pub mod geometry;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod link;
pub mod simulate;

pub use error::{Error, Result};
