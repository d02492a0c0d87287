//! Cardinal interpolation with radial basis functions on the integer lattice:
//! symbols, lattice sums, spatial synthesis and verification of the
//! multiresolution properties of the resulting scaling functions.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod families;
pub mod lattice;
pub mod parallel;
pub mod periodization;
pub mod specfun;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};
pub use families::{CardinalInterpolator, FamilyPath, ParameterAxis, SymbolValue, Variant};
pub use periodization::{LatticeSumConfig, PeriodizedValue, SymbolGrid, SymbolKind};
pub use synthesis::{CoefficientSequence, Generator, GramMatrix, SampledFunction, SynthesisParams};
pub use verify::{full_report, MRAReport, ReportConfig, ReportTarget};
