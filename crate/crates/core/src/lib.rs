#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod caseio;
pub mod cli;
pub mod error;
pub mod netmodel;
pub mod solvers;
pub mod splinalg;

pub use error::{Error, Result};
