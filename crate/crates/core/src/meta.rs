//! Follow-the-Leading-History meta aggregation.
//!
//! A new expert is started at every round with prior weight `1/t`; the
//! surviving experts share the remaining `1 - 1/t` in proportion to their
//! carried weights. Predictions are exponentially weighted averages of the
//! (clipped) expert predictions. Under binary pruning (IFLH) the expert born
//! at `t` retires at `t + 2^k`, `k` the lowest set bit of `t`, which keeps at
//! most `⌊log₂ t⌋ + 1` experts alive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::learner::{
    clip_to_bound, square_loss, update_output_bound, ExpertFactory, OutputBound, PredictionRecord,
    Subroutine,
};

/// Learning rate of the exponential weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Eta {
    /// Recomputed every round from the running output bound, see [`learning_rate`].
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pruning {
    /// FLH: experts never retire.
    None,
    /// IFLH with base 2 ending times.
    #[default]
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetaConfig {
    pub eta: Eta,
    pub pruning: Pruning,
}

impl MetaConfig {
    pub fn flh(eta: Eta) -> Self {
        Self {
            eta,
            pruning: Pruning::None,
        }
    }

    pub fn iflh(eta: Eta) -> Self {
        Self {
            eta,
            pruning: Pruning::Binary,
        }
    }
}

/// `t + 2^k` with `k` the index of the lowest set bit of `t`.
pub fn ending_time(t: usize) -> usize {
    assert!(t >= 1, "rounds start at 1");
    t + (t & t.wrapping_neg())
}

/// Exponential-weights rate `1/(8·(2Y)²)`: the square loss is exp-concave
/// with this constant when predictions and outputs both lie in `[-Y, Y]`.
pub fn learning_rate(bound: OutputBound) -> f64 {
    if bound.y_max > 0.0 {
        1.0 / (32.0 * bound.y_max * bound.y_max)
    } else {
        1.0
    }
}

/// Chained expert lifetimes covering `[r, s]`: expert `t_j` is live on
/// `[t_j, τ(t_j) - 1]`, `t_1 = r` and `t_{j+1} = τ(t_j)`. Returns
/// `(birth, last live round)` pairs; the last one reaches `s`.
///
/// Starting the next expert at `τ(t_j) + 1` instead would leave odd starts
/// with lifetime 2 forever, so the cover would grow linearly.
pub fn interval_cover(r: usize, s: usize) -> Vec<(usize, usize)> {
    assert!(1 <= r && r <= s, "need 1 <= r <= s, got r={r}, s={s}");
    let mut segments = Vec::new();
    let mut start = r;
    loop {
        let end = ending_time(start);
        segments.push((start, end - 1));
        if end > s {
            break;
        }
        start = end;
    }
    segments
}

/// One live expert.
#[derive(Debug, Clone)]
pub struct ExpertSlot<S> {
    pub birth: usize,
    /// Retirement round; `None` under FLH.
    pub end: Option<usize>,
    /// Normalized log-weight.
    log_weight: f64,
    pub state: S,
}

impl<S> ExpertSlot<S> {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }

    fn alive_at(&self, t: usize) -> bool {
        self.end.is_none_or(|end| end > t)
    }
}

/// Meta prediction together with the clipped prediction of each expert.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaPrediction {
    pub y_hat: f64,
    /// `(birth, clipped prediction)` in pool order.
    pub experts: Vec<(usize, f64)>,
}

/// The pool of experts driven round by round.
///
/// The pool never sees `y_true`: [`ExpertPool::step`] takes only `(x, y)`.
pub struct ExpertPool<F: ExpertFactory> {
    config: MetaConfig,
    factory: F,
    slots: Vec<ExpertSlot<F::Expert>>,
    round: usize,
    bound: OutputBound,
    last: Option<MetaPrediction>,
    last_eta: f64,
    resets: usize,
}

impl<F: ExpertFactory> ExpertPool<F> {
    pub fn new(config: MetaConfig, factory: F) -> Self {
        if let Eta::Fixed(eta) = config.eta {
            assert!(
                eta >= 0.0 && eta.is_finite(),
                "eta must be a finite non-negative number"
            );
        }
        Self {
            config,
            factory,
            slots: Vec::new(),
            round: 0,
            bound: OutputBound::default(),
            last: None,
            last_eta: 0.0,
            resets: 0,
        }
    }

    pub fn config(&self) -> MetaConfig {
        self.config
    }

    /// Last completed or started round.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn bound(&self) -> OutputBound {
        self.bound
    }

    pub fn slots(&self) -> &[ExpertSlot<F::Expert>] {
        &self.slots
    }

    pub fn active(&self) -> usize {
        self.slots.len()
    }

    pub fn births(&self) -> Vec<usize> {
        self.slots.iter().map(|s| s.birth).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.slots.iter().map(ExpertSlot::weight).collect()
    }

    /// Learning rate applied in the most recent update.
    pub fn last_eta(&self) -> f64 {
        self.last_eta
    }

    /// Number of times the weights degenerated and were reset to uniform.
    pub fn resets(&self) -> usize {
        self.resets
    }

    /// Opens round `round() + 1`: retires experts whose ending time has
    /// passed, rescales the survivors to total mass `1 - 1/t` and starts a
    /// new expert with weight `1/t`.
    pub fn spawn_and_normalize(&mut self) {
        let t = self.round + 1;
        self.round = t;
        self.last = None;
        self.slots.retain(|slot| slot.alive_at(t));
        if !self.slots.is_empty() {
            let norm = log_sum_exp(self.slots.iter().map(|s| s.log_weight));
            let keep = (1.0 - 1.0 / t as f64).ln();
            for slot in &mut self.slots {
                slot.log_weight += keep - norm;
            }
        }
        let end = match self.config.pruning {
            Pruning::None => None,
            Pruning::Binary => Some(ending_time(t)),
        };
        self.slots.push(ExpertSlot {
            birth: t,
            end,
            log_weight: -(t as f64).ln(),
            state: self.factory.fresh(t),
        });
    }

    /// Convex combination of the clipped expert predictions.
    pub fn predict(&mut self, x: &[f64]) -> MetaPrediction {
        assert!(
            !self.slots.is_empty(),
            "call spawn_and_normalize before predict"
        );
        let experts: Vec<(usize, f64)> = self
            .slots
            .iter()
            .map(|slot| (slot.birth, clip_to_bound(slot.state.predict(x), self.bound)))
            .collect();
        let y_hat = self
            .slots
            .iter()
            .zip(&experts)
            .map(|(slot, &(_, p))| slot.weight() * p)
            .sum::<f64>();
        let prediction = MetaPrediction {
            y_hat: clip_to_bound(y_hat, self.bound),
            experts,
        };
        self.last = Some(prediction.clone());
        prediction
    }

    /// Multiplies each weight by `exp(-η (y - ỹ_i)²)`, renormalizes, and
    /// lets every expert observe `(x, y)`.
    pub fn update(&mut self, x: &[f64], y: f64) {
        let prediction = self
            .last
            .take()
            .expect("update must follow predict within the same round");
        self.bound = update_output_bound(self.bound, y);
        let eta = match self.config.eta {
            Eta::Auto => learning_rate(self.bound),
            Eta::Fixed(eta) => eta,
        };
        self.last_eta = eta;
        for (slot, &(_, pred)) in self.slots.iter_mut().zip(&prediction.experts) {
            let diff = y - pred;
            slot.log_weight -= eta * diff * diff;
        }
        self.normalize();
        for slot in &mut self.slots {
            slot.state.observe(x, y);
        }
    }

    /// Full round: spawn, predict, update. Returns the round record.
    pub fn step(&mut self, x: &[f64], y: f64) -> PredictionRecord {
        self.spawn_and_normalize();
        let prediction = self.predict(x);
        self.update(x, y);
        let per_expert: BTreeMap<usize, (f64, f64)> = prediction
            .experts
            .iter()
            .zip(&self.slots)
            .map(|(&(birth, pred), slot)| (birth, (pred, slot.weight())))
            .collect();
        PredictionRecord {
            t: self.round,
            y_hat: prediction.y_hat,
            per_expert,
            loss_obs: square_loss(prediction.y_hat, y).unwrap_or(f64::INFINITY),
            err_true: None,
        }
    }

    fn normalize(&mut self) {
        let norm = log_sum_exp(self.slots.iter().map(|s| s.log_weight));
        if norm.is_finite() {
            for slot in &mut self.slots {
                slot.log_weight -= norm;
            }
        } else {
            self.resets += 1;
            log::warn!(
                "expert weights degenerated at round {}; resetting to uniform",
                self.round
            );
            let uniform = -(self.slots.len() as f64).ln();
            for slot in &mut self.slots {
                slot.log_weight = uniform;
            }
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}
