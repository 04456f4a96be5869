// Negated comparisons are used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod chanstats;
pub mod cli;
pub mod clustering;
pub mod dropsim;
pub mod error;
pub mod fitting;
pub mod geometry;
pub mod io;
pub mod los;
pub mod pathloss;
pub mod penetration;
pub mod rays;
pub mod units;
