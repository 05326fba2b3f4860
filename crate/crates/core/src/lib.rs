pub mod cli;
pub mod dichotomy;
pub mod error;
pub mod experiments;
pub mod generators;
pub mod norms;
pub mod scalar;
pub mod special;
pub mod stepfn;
pub mod walks;

pub use error::{Error, Result};
pub use generators::{ConcaveGenerator, LimitEstimate, LimitGrid};
pub use scalar::{Rational, Scalar};
pub use stepfn::StepFunction;
