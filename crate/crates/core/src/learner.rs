//! Shared stream types, the expert contract, and loss helpers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One round of a regression stream.
///
/// `y_true` is the noiseless output `x·θ_t` and is only present for
/// generated streams. Learners never see it: the [`Subroutine`] contract and
/// the meta pool only accept `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub y_true: Option<f64>,
}

impl Observation {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Realised noise `y - y_true`, when the truth is known.
    pub fn noise(&self) -> Option<f64> {
        self.y_true.map(|truth| self.y - truth)
    }
}

/// Checks the stream invariants: rounds strictly increasing and a constant
/// input dimension.
pub fn validate_stream(stream: &[Observation]) -> Result<()> {
    let Some(first) = stream.first() else {
        return Ok(());
    };
    let dim = first.dim();
    for pair in stream.windows(2) {
        if pair[1].t <= pair[0].t {
            return Err(Error::Domain(format!(
                "rounds must be strictly increasing, got {} after {}",
                pair[1].t, pair[0].t
            )));
        }
        if pair[1].dim() != dim {
            return Err(Error::Domain(format!(
                "input dimension changed from {} to {} at round {}",
                dim,
                pair[1].dim(),
                pair[1].t
            )));
        }
    }
    Ok(())
}

/// An online regressor that can be restarted at any round.
///
/// Each round the driver calls `predict` (no mutation) and then `observe`.
/// An instance only ever sees data from its birth round onwards, and two
/// instances replayed on the same history produce the same predictions.
pub trait Subroutine: Send {
    fn predict(&self, x: &[f64]) -> f64;
    fn observe(&mut self, x: &[f64], y: f64);
}

impl<S: Subroutine + ?Sized> Subroutine for Box<S> {
    fn predict(&self, x: &[f64]) -> f64 {
        (**self).predict(x)
    }

    fn observe(&mut self, x: &[f64], y: f64) {
        (**self).observe(x, y)
    }
}

/// Builds fresh subroutine instances for the meta pool.
pub trait ExpertFactory: Send + Sync {
    type Expert: Subroutine;

    /// A new instance started at `birth` that has seen no data.
    fn fresh(&self, birth: usize) -> Self::Expert;
}

impl<F, S> ExpertFactory for F
where
    F: Fn(usize) -> S + Send + Sync,
    S: Subroutine,
{
    type Expert = S;

    fn fresh(&self, birth: usize) -> S {
        self(birth)
    }
}

/// Per-round output of a meta learner.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub t: usize,
    pub y_hat: f64,
    /// Expert birth round -> (clipped expert prediction, normalized weight after the update).
    pub per_expert: BTreeMap<usize, (f64, f64)>,
    pub loss_obs: f64,
    pub err_true: Option<f64>,
}

/// Running maximum of `|y|` over the outputs seen so far.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputBound {
    pub y_max: f64,
}

impl OutputBound {
    pub fn new(y_max: f64) -> Self {
        Self { y_max: y_max.abs() }
    }

    pub fn update(self, y: f64) -> Self {
        update_output_bound(self, y)
    }
}

pub fn square_loss(y_hat: f64, y: f64) -> Result<f64> {
    if !y_hat.is_finite() || !y.is_finite() {
        return Err(Error::Domain(format!(
            "square loss needs finite inputs, got ({y_hat}, {y})"
        )));
    }
    let diff = y_hat - y;
    Ok(diff * diff)
}

/// Clamps a prediction into `[-Y, Y]`.
pub fn clip_to_bound(y_hat: f64, bound: OutputBound) -> f64 {
    y_hat.clamp(-bound.y_max, bound.y_max)
}

pub fn update_output_bound(bound: OutputBound, y: f64) -> OutputBound {
    OutputBound {
        y_max: bound.y_max.max(y.abs()),
    }
}
