//! Triangular cloud models, a cloud controller tuned by chaos search and
//! conjugate gradient, and robust H-infinity compensator synthesis for
//! uncertain Takagi-Sugeno plants.

pub mod cg;
pub mod chaos;
pub mod cloud;
pub mod compare;
pub mod controller;
pub mod error;
pub mod ga;
pub mod hinf;
pub mod io;
pub mod plant;
pub mod ts;
pub mod tune;

pub use error::{Error, Result};
