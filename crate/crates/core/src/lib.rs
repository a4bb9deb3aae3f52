#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod error;
pub mod expr;
pub mod lattice;
pub mod linalg;
pub mod operator;
pub mod parabolic;
pub mod elliptic;
pub mod richardson;
pub mod conditions;
pub mod estimates;
pub mod config;
pub mod presets;
pub mod report;
pub mod cli;

pub use error::{Error, Result};
