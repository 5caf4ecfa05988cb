//! Counting solutions, local densities and variable bounds for systems of
//! diagonal equations with repeated and differing degrees.

pub mod bounds;
pub mod counting;
pub mod density;
pub mod error;
pub mod expsum;
pub mod harness;
pub mod primes;
pub mod system;

pub use error::{Error, Result};
pub use system::{parse_system, AdditiveSystem, DegreeProfile};
