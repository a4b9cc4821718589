//! Non-stationary online regression: restarted experts aggregated by
//! Follow-the-Leading-History, oracle baselines, drift generators and an
//! experiment harness.

pub mod baselines;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod learner;
pub mod linalg;
pub mod meta;
pub mod subroutines;

pub use error::{Error, Result};
pub use learner::{ExpertFactory, Observation, OutputBound, PredictionRecord, Subroutine};
pub use meta::{Eta, ExpertPool, MetaConfig, Pruning};
