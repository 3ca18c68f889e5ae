//! Computational tools for the group of measure-class preserving
//! transformations of `[0, 1]`: derivative distributions, double-coset
//! invariants, the coset topology and the approximation engines.

pub mod approx;
pub mod cli;
pub mod cosets;
pub mod error;
pub mod fixtures;
pub mod laurent;
pub mod measure;
pub mod numeric;
pub mod topology;
pub mod transform;

pub use error::{Error, Result};
pub use laurent::Laurent;
pub use measure::{measure_distance, Atom, Piece, RMeasure, StripGrid, ValueBinGrid, ValueInterval};
pub use transform::{DistributionMatrix, Form, IntervalSet, PwMap, Segment};
