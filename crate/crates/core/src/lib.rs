pub mod dynamics;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod observables;
pub mod path;
pub mod semigroup;

pub use error::{Error, Result};
pub use path::{PastSegment, PathKind, SampledPath, StatePoint};
