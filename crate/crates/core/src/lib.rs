#![allow(clippy::result_large_err)]

pub mod constructions;
pub mod error;
pub mod io;
pub mod lp;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod random;
pub mod rational;
pub mod solver;

pub use error::{CakeError, Result};
pub use model::{make_valuation, refine, CellPartition, Coverage, Division, Instance, Interval, Segment, Valuation};
pub use rational::{format_rational, parse_rational, rat, Rational};
