#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod kernels;
pub mod collocation;
pub mod numkit;
pub mod oracle;
pub mod photon;
pub mod soe;
pub mod sources;
pub mod stepper;

pub use error::{Error, Result};
pub use num_complex::Complex64;
