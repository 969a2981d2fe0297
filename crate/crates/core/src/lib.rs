pub mod error;
pub mod numkit;
pub mod qstate;
pub mod noise;
pub mod encoder;
pub mod ansatz;
pub mod training;
pub mod mitigation;
pub mod baseline;
pub mod harness;
pub mod seed;
pub mod tolerance;

pub use error::{Error, Result};
pub use numkit::{c64, ComplexMatrix, Complex64};
pub use tolerance::Tolerances;
