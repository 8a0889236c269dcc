pub mod eigen;
pub mod error;
pub mod io;
pub mod lattice;
pub mod localization;
pub mod qwalk;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
