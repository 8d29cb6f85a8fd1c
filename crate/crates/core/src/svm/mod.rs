//! Large-margin classification on the hyperboloid.

mod data;
mod models;
mod multiclass;
mod platt;

pub use data::*;
pub use models::*;
pub use multiclass::*;
pub use platt::*;
