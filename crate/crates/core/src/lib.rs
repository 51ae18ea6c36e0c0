// Negated comparisons deliberately treat NaN as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod genfun;
pub mod oracle;
pub mod par;
pub mod poly;
pub mod scalar;
pub mod special;
pub mod words;

pub use error::{Error, Result};
