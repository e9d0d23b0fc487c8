//! Traces of CM values of weakly holomorphic modular functions, and the
//! holomorphic parts of their Kudla-Millson (weight 3/2) and Millson
//! (weight 1/2) theta lifts.

pub mod cmeval;
pub mod construct;
pub mod error;
pub mod lifts;
pub mod numctx;
pub mod qseries;
pub mod quadforms;
pub mod selftest;
pub mod traces;
pub mod weilrep;

pub use error::{Error, Result};
pub use lifts::{CoeffTable, CoeffValue, WhmfSpec};
pub use numctx::{BigComplex, Precision};
pub use qseries::FracQSeries;
pub use quadforms::{ClassList, QForm, Sign};
