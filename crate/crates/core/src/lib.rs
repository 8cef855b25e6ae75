//! Passivity-preserving model-order reduction via spectral factors of the
//! Popov function.

pub mod contractive;
pub mod error;
pub mod kyp;
pub mod linalg;
pub mod lti;
pub mod models;
pub mod par;
pub mod reducers;
pub mod sfmor;

pub use error::{Error, Result};
