//! Comparators: oracle restart partitions and forecasters, the batch-count
//! formulas, and OGD with fixed restarts.

use serde::{Deserialize, Serialize};

use crate::datagen::{Norm, ParameterPath};
use crate::error::{Error, Result};
use crate::learner::{Observation, Subroutine};
use crate::subroutines::Ogd;

/// Segments `[boundaries[i], boundaries[i+1])`, with the first boundary 1
/// and the last `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartPartition {
    pub boundaries: Vec<usize>,
    pub budget: f64,
}

impl RestartPartition {
    /// A single segment covering `1..=n`.
    pub fn whole(n: usize) -> Self {
        Self {
            boundaries: vec![1, n + 1],
            budget: f64::INFINITY,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.boundaries.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn num_segments(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    /// Start of the segment containing round `t`.
    pub fn segment_start(&self, t: usize) -> usize {
        let idx = self.boundaries.partition_point(|&b| b <= t);
        self.boundaries[idx - 1]
    }
}

/// Greedy left-to-right split of the path into segments whose internal TV
/// stays within `C_n / m`.
///
/// A jump closes the current segment once it would bring the internal TV to
/// the budget, so every closed segment plus its bridging jump uses at least
/// `C_n / m` and at most `m + 1` segments are produced.
pub fn greedy_restart_partition(path: &ParameterPath, m: usize, norm: Norm) -> RestartPartition {
    assert!(m >= 1, "m must be at least 1");
    let steps = path.step_norms(norm);
    let total: f64 = steps.iter().sum();
    let budget = total / m as f64;
    let mut boundaries = vec![1];
    let mut internal = 0.0;
    // steps[i] is the jump into round i + 2
    for (i, &jump) in steps.iter().enumerate() {
        if jump > 0.0 && internal + jump >= budget {
            boundaries.push(i + 2);
            internal = 0.0;
        } else {
            internal += jump;
        }
    }
    boundaries.push(path.len() + 1);
    RestartPartition { boundaries, budget }
}

/// `max(1, round((n C² / (σ² (2 + ln n)))^{1/3}))`.
pub fn optimal_num_batches(n: usize, c_n: f64, sigma: f64) -> usize {
    assert!(n >= 1 && c_n > 0.0 && sigma > 0.0);
    let n = n as f64;
    let m = (n * c_n * c_n / (sigma * sigma * (2.0 + n.ln()))).cbrt();
    (m.round() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// `⌈σ⁻¹ √(n ln n) / tv⌉`, at least 1.
pub fn fixed_restart_batch_size(n: usize, sigma: f64, tv: f64) -> usize {
    fixed_restart_batch_size_with(n, sigma, tv, LogBase::Natural)
}

pub fn fixed_restart_batch_size_with(n: usize, sigma: f64, tv: f64, base: LogBase) -> usize {
    assert!(n >= 1 && sigma > 0.0 && tv > 0.0);
    let n = n as f64;
    let size = (n * base.log(n)).max(0.0).sqrt() / (sigma * tv);
    (size.ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    /// Running mean of the observed outputs inside the segment.
    Scalar,
    /// `xᵀθ̄` with `θ̄` the segment average of the true parameters.
    Linear,
    /// `f̄(x)` with `f̄` the segment average of the true dictionary functions.
    Kernel,
}

/// Predictions of the hypothetical forecaster that restarts at the
/// partition boundaries.
pub fn oracle_forecast(
    stream: &[Observation],
    path: Option<&ParameterPath>,
    partition: &RestartPartition,
    mode: OracleMode,
) -> Result<Vec<f64>> {
    if partition.boundaries.last() != Some(&(stream.len() + 1)) {
        return Err(Error::Config(format!(
            "partition covers {} rounds but the stream has {}",
            partition
                .boundaries
                .last()
                .map_or(0, |b| b.saturating_sub(1)),
            stream.len()
        )));
    }
    match mode {
        OracleMode::Scalar => Ok(scalar_oracle(stream, partition)),
        OracleMode::Linear | OracleMode::Kernel => {
            let path = path.ok_or_else(|| {
                Error::Config(format!("{mode:?} oracle needs the true parameter path"))
            })?;
            if stream.iter().any(|o| o.y_true.is_none()) {
                return Err(Error::Config(format!(
                    "{mode:?} oracle needs a generated stream"
                )));
            }
            if mode == OracleMode::Kernel && path.dictionary.is_none() {
                return Err(Error::Config(
                    "kernel oracle needs a dictionary-backed path".into(),
                ));
            }
            if mode == OracleMode::Linear && path.dictionary.is_some() {
                return Err(Error::Config(
                    "linear oracle needs a linear parameter path".into(),
                ));
            }
            if path.len() != stream.len() {
                return Err(Error::Config("path and stream lengths differ".into()));
            }
            Ok(averaged_oracle(stream, path, partition))
        }
    }
}

fn scalar_oracle(stream: &[Observation], partition: &RestartPartition) -> Vec<f64> {
    let mut preds = Vec::with_capacity(stream.len());
    for (start, end) in partition.segments() {
        let mut sum = 0.0;
        for (k, obs) in stream[start - 1..end - 1].iter().enumerate() {
            preds.push(if k == 0 { 0.0 } else { sum / k as f64 });
            sum += obs.y;
        }
    }
    preds
}

fn averaged_oracle(
    stream: &[Observation],
    path: &ParameterPath,
    partition: &RestartPartition,
) -> Vec<f64> {
    let dim = path.dim();
    let mut preds = Vec::with_capacity(stream.len());
    for (start, end) in partition.segments() {
        let mut mean = vec![0.0; dim];
        for theta in &path.thetas[start - 1..end - 1] {
            for (m, v) in mean.iter_mut().zip(theta) {
                *m += v;
            }
        }
        let len = (end - start) as f64;
        mean.iter_mut().for_each(|m| *m /= len);
        preds.extend(
            stream[start - 1..end - 1]
                .iter()
                .map(|o| path.evaluate(&mean, &o.x)),
        );
    }
    preds
}

/// Rounds at which [`fixed_restart_ogd_run`] starts from a fresh state.
pub fn restart_rounds(n: usize, batch: usize) -> Vec<usize> {
    assert!(batch >= 1);
    (1..=n).step_by(batch).collect()
}

/// Predictions of OGD restarted from `fresh()` every `batch` rounds.
pub fn fixed_restart_ogd_run(
    stream: &[Observation],
    batch: usize,
    fresh: impl Fn() -> Ogd,
) -> Vec<f64> {
    assert!(batch >= 1, "batch must be at least 1");
    let mut learner = fresh();
    stream
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            if i % batch == 0 && i > 0 {
                learner = fresh();
            }
            let pred = learner.predict(&obs.x);
            learner.observe(&obs.x, obs.y);
            pred
        })
        .collect()
}
