//! Operating envelopes: unions of disjoint boxes in feature space whose
//! sample-average response is high, subject to a coverage floor.

// `!(x > 0.0)` style checks reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod estimation;
pub mod ga;
pub mod model_selection;
pub mod objective;
pub mod par;
pub mod region;
pub mod seed;
pub mod sim_bench;

pub use error::{Error, Result};
