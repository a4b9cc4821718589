//! Synthetic drifting streams: soft-shift random walks, hard-shift Rademacher
//! chunks, dictionary-backed RKHS paths, and total variation.
//!
//! Every draw comes from a ChaCha8 generator keyed by the seed, with one
//! stream id per purpose, so inputs and noise never perturb the path draws
//! and vice versa.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelFunction;
use crate::learner::Observation;

const PATH_STREAM: u64 = 0;
const INPUT_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const ANCHOR_STREAM: u64 = 3;
const SPLIT_STREAM: u64 = 7;

/// Generator for sub-stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed number `index` of `seed`. Depends only on `(seed, index)`, so
/// adding children never changes earlier ones.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut rng = substream(seed, SPLIT_STREAM);
    rng.set_word_pos(2 * index as u128);
    rng.next_u64()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    L1,
    L2,
    /// Hilbert norm of the dictionary expansion; the ℓ2 norm of the
    /// coordinates when the path has no dictionary.
    Rkhs,
}

/// A fixed set of anchor points. A coefficient vector `α` stands for the
/// function `f(x) = Σ_j α_j k(a_j, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub kernel: KernelFunction,
    pub anchors: Vec<Vec<f64>>,
}

impl Dictionary {
    /// `size` anchors drawn from `U(-1, 1)^d`.
    pub fn sample(kernel: KernelFunction, size: usize, d: usize, seed: u64) -> Result<Self> {
        kernel.validate()?;
        if size == 0 || d == 0 {
            return Err(Error::Config(
                "dictionary needs at least one anchor of positive dimension".into(),
            ));
        }
        let mut rng = substream(seed, ANCHOR_STREAM);
        let anchors = (0..size)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        Ok(Self { kernel, anchors })
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.anchors.first().map_or(0, Vec::len)
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.kernel.gram(&self.anchors)
    }

    pub fn evaluate(&self, coefficients: &[f64], x: &[f64]) -> f64 {
        self.anchors
            .iter()
            .zip(coefficients)
            .map(|(a, c)| c * self.kernel.eval(a, x))
            .sum()
    }

    /// `sqrt(αᵀ K α)`.
    pub fn norm(&self, gram: &DMatrix<f64>, coefficients: &[f64]) -> f64 {
        let n = coefficients.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += coefficients[i] * gram[(i, j)] * coefficients[j];
            }
        }
        total.max(0.0).sqrt()
    }
}

/// Ground-truth parameters `θ_1..θ_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPath {
    pub thetas: Vec<Vec<f64>>,
    pub tv_l1: f64,
    pub tv_l2: f64,
    /// Largest ℓ2 norm (RKHS norm with a dictionary) along the path.
    pub b: f64,
    /// When set, `thetas` are dictionary coefficients rather than linear weights.
    pub dictionary: Option<Dictionary>,
}

impl ParameterPath {
    pub fn from_thetas(thetas: Vec<Vec<f64>>) -> Self {
        let mut path = Self {
            thetas,
            tv_l1: 0.0,
            tv_l2: 0.0,
            b: 0.0,
            dictionary: None,
        };
        path.tv_l1 = total_variation(&path, Norm::L1);
        path.tv_l2 = total_variation(&path, Norm::L2);
        path.b = path.max_norm();
        path
    }

    /// Reinterprets the coordinates as coefficients over `dictionary`.
    pub fn with_dictionary(mut self, dictionary: Dictionary) -> Result<Self> {
        if self.dim() != dictionary.len() {
            return Err(Error::Config(format!(
                "path has {} coordinates but the dictionary has {} anchors",
                self.dim(),
                dictionary.len()
            )));
        }
        self.dictionary = Some(dictionary);
        self.b = self.max_norm();
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Coordinate count of each θ.
    pub fn dim(&self) -> usize {
        self.thetas.first().map_or(0, Vec::len)
    }

    /// Dimension of the inputs the path acts on.
    pub fn input_dim(&self) -> usize {
        match &self.dictionary {
            Some(dict) => dict.input_dim(),
            None => self.dim(),
        }
    }

    /// Noiseless output at round `t` (1-based).
    pub fn output(&self, t: usize, x: &[f64]) -> f64 {
        self.evaluate(&self.thetas[t - 1], x)
    }

    /// Output of an arbitrary parameter in the path's parameterization.
    pub fn evaluate(&self, theta: &[f64], x: &[f64]) -> f64 {
        match &self.dictionary {
            Some(dict) => dict.evaluate(theta, x),
            None => theta.iter().zip(x).map(|(a, b)| a * b).sum(),
        }
    }

    /// Index rounds (1-based) where `θ_t ≠ θ_{t-1}`.
    pub fn change_points(&self) -> Vec<usize> {
        (2..=self.len())
            .filter(|&t| self.thetas[t - 1] != self.thetas[t - 2])
            .collect()
    }

    /// `‖θ_t - θ_{t-1}‖` for `t = 2..n`, under `norm`.
    pub fn step_norms(&self, norm: Norm) -> Vec<f64> {
        let gram = match (norm, &self.dictionary) {
            (Norm::Rkhs, Some(dict)) => Some(dict.gram()),
            _ => None,
        };
        self.thetas
            .windows(2)
            .map(|w| {
                let diff: Vec<f64> = w[1].iter().zip(&w[0]).map(|(a, b)| a - b).collect();
                match (norm, &gram, &self.dictionary) {
                    (Norm::L1, _, _) => diff.iter().map(|v| v.abs()).sum(),
                    (Norm::Rkhs, Some(k), Some(dict)) => dict.norm(k, &diff),
                    _ => diff.iter().map(|v| v * v).sum::<f64>().sqrt(),
                }
            })
            .collect()
    }

    fn max_norm(&self) -> f64 {
        match &self.dictionary {
            Some(dict) => {
                let gram = dict.gram();
                self.thetas
                    .iter()
                    .map(|th| dict.norm(&gram, th))
                    .fold(0.0, f64::max)
            }
            None => self
                .thetas
                .iter()
                .map(|th| th.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
        }
    }
}

/// `Σ_{t=2}^n ‖θ_t - θ_{t-1}‖`.
pub fn total_variation(path: &ParameterPath, norm: Norm) -> f64 {
    path.step_norms(norm).iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ShiftSpec {
    /// Random walk with innovations `N(0, t^{-α} I)`.
    Soft { alpha: f64 },
    /// Piecewise-constant Rademacher chunks starting at the given rounds.
    Hard { starts: Vec<usize> },
}

impl ShiftSpec {
    /// Chunk starts `{1} ∪ {k·step : 1 ≤ k ≤ count}`, capped at `n`.
    pub fn hard_every(step: usize, count: usize, n: usize) -> Self {
        let mut starts = vec![1];
        starts.extend((1..=count).map(|k| k * step).filter(|&s| s > 1 && s <= n));
        ShiftSpec::Hard { starts }
    }

    /// Chunk starts `{1, 2, 4, ..., 2^max_exp}`, capped at `n`.
    pub fn hard_powers(max_exp: u32, n: usize) -> Self {
        let starts = (0..=max_exp)
            .map(|i| 1usize << i)
            .filter(|&s| s <= n)
            .collect();
        ShiftSpec::Hard { starts }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            ShiftSpec::Soft { alpha } => {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::Config(format!(
                        "soft shift alpha must be positive, got {alpha}"
                    )));
                }
            }
            ShiftSpec::Hard { starts } => {
                if starts.first() != Some(&1) {
                    return Err(Error::Config(
                        "hard shift starts must begin at round 1".into(),
                    ));
                }
                if starts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config(
                        "hard shift starts must be strictly increasing".into(),
                    ));
                }
                if starts.last().is_some_and(|&s| s > n) {
                    return Err(Error::Config(format!("hard shift start beyond n = {n}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputMode {
    /// `x_t = 1`: one-dimensional forecasting.
    ConstantOne,
    /// `x_t ~ U(-1, 1)^d`.
    #[default]
    UniformCube,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub input_mode: InputMode,
    pub seed: u64,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Config("stream needs n >= 1 and d >= 1".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if self.input_mode == InputMode::ConstantOne && self.d != 1 {
            return Err(Error::Config("constant-one inputs require d = 1".into()));
        }
        Ok(())
    }
}

pub fn gen_soft_shifts(n: usize, d: usize, alpha: f64, seed: u64) -> ParameterPath {
    assert!(n >= 1 && alpha > 0.0);
    let mut rng = substream(seed, PATH_STREAM);
    let mut thetas = Vec::with_capacity(n);
    let mut current = vec![0.0; d];
    thetas.push(current.clone());
    for t in 2..=n {
        let scale = (t as f64).powf(-alpha / 2.0);
        for c in current.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c += scale * z;
        }
        thetas.push(current.clone());
    }
    ParameterPath::from_thetas(thetas)
}

pub fn gen_hard_shifts(n: usize, d: usize, starts: &[usize], seed: u64) -> ParameterPath {
    assert!(n >= 1);
    let mut rng = substream(seed, PATH_STREAM);
    let mut thetas = Vec::with_capacity(n);
    let mut current = vec![0.0; d];
    let mut next = starts.iter().peekable();
    for t in 1..=n {
        if next.peek() == Some(&&t) || t == 1 {
            if next.peek() == Some(&&t) {
                next.next();
            }
            for c in current.iter_mut() {
                *c = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
        }
        thetas.push(current.clone());
    }
    ParameterPath::from_thetas(thetas)
}

/// Path for `shift` in `d` coordinates.
pub fn gen_path(shift: &ShiftSpec, n: usize, d: usize, seed: u64) -> ParameterPath {
    match shift {
        ShiftSpec::Soft { alpha } => gen_soft_shifts(n, d, *alpha, seed),
        ShiftSpec::Hard { starts } => gen_hard_shifts(n, d, starts, seed),
    }
}

pub fn gen_stream(path: &ParameterPath, spec: &StreamSpec) -> Result<Vec<Observation>> {
    spec.validate()?;
    if path.len() != spec.n {
        return Err(Error::Config(format!(
            "path has {} rounds but the stream asks for {}",
            path.len(),
            spec.n
        )));
    }
    if path.input_dim() != spec.d {
        return Err(Error::Config(format!(
            "path acts on {}-dimensional inputs but the stream has d = {}",
            path.input_dim(),
            spec.d
        )));
    }
    let mut inputs = substream(spec.seed, INPUT_STREAM);
    let mut noise = substream(spec.seed, NOISE_STREAM);
    let gauss = Normal::new(0.0, spec.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let stream = (1..=spec.n)
        .map(|t| {
            let x: Vec<f64> = match spec.input_mode {
                InputMode::ConstantOne => vec![1.0],
                InputMode::UniformCube => (0..spec.d)
                    .map(|_| inputs.random_range(-1.0..1.0))
                    .collect(),
            };
            let y_true = path.output(t, &x);
            let y = y_true + gauss.sample(&mut noise);
            Observation {
                t,
                x,
                y,
                y_true: Some(y_true),
            }
        })
        .collect();
    Ok(stream)
}

/// Writes `t, x_1..x_d, y, y_true` with a header row.
pub fn write_stream_csv(stream: &[Observation], path: &Path) -> Result<()> {
    let d = stream.first().map_or(1, Observation::dim);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x_{i}")));
    header.push("y".into());
    header.push("y_true".into());
    writer
        .write_record(&header)
        .map_err(|e| Error::csv(path, e))?;
    for obs in stream {
        let mut record = vec![obs.t.to_string()];
        record.extend(obs.x.iter().map(|v| format!("{v:e}")));
        record.push(format!("{:e}", obs.y));
        record.push(obs.y_true.map(|v| format!("{v:e}")).unwrap_or_default());
        writer
            .write_record(&record)
            .map_err(|e| Error::csv(path, e))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

pub fn read_stream_csv(path: &Path) -> Result<Vec<Observation>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let header = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let d = header.iter().filter(|h| h.starts_with("x_")).count();
    if header.len() != d + 3 || header.get(0) != Some("t") {
        return Err(Error::Config(format!(
            "{}: unexpected stream header",
            path.display()
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Config(format!("{}: bad number {s:?}: {e}", path.display())))
    };
    let mut stream = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let t = record[0].parse::<usize>().map_err(|e| {
            Error::Config(format!(
                "{}: bad round {:?}: {e}",
                path.display(),
                &record[0]
            ))
        })?;
        let x = (1..=d)
            .map(|i| parse(&record[i]))
            .collect::<Result<Vec<_>>>()?;
        let y = parse(&record[d + 1])?;
        let y_true = match &record[d + 2] {
            "" => None,
            s => Some(parse(s)?),
        };
        stream.push(Observation { t, x, y, y_true });
    }
    crate::learner::validate_stream(&stream)?;
    Ok(stream)
}

/// Reads only the header line of a CSV, for schema checks.
pub fn csv_header(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    BufReader::new(file)
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    Ok(line.trim_end().split(',').map(str::to_string).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn soft_single_round_is_zero() {
        let path = gen_soft_shifts(1, 3, 1.0, 9);
        assert_eq!(path.thetas, vec![vec![0.0; 3]]);
        assert_eq!(path.tv_l1, 0.0);
    }

    #[test]
    fn soft_tv_is_sum_of_innovations() {
        let path = gen_soft_shifts(200, 3, 0.5, 4);
        let manual: f64 = path
            .thetas
            .windows(2)
            .map(|w| {
                w[1].iter()
                    .zip(&w[0])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .sum();
        assert_relative_eq!(path.tv_l1, manual, epsilon = 1e-12);
    }

    #[test]
    fn soft_innovation_scale_matches_half_normal() {
        let seeds = 1000;
        let mut mean = vec![0.0; 100];
        for seed in 0..seeds {
            let path = gen_soft_shifts(100, 1, 1.0, seed);
            for (i, step) in path.step_norms(Norm::L1).iter().enumerate() {
                mean[i + 1] += step / seeds as f64;
            }
        }
        // average over a block of rounds to keep the Monte Carlo error small
        let ratio: f64 = (2..=100)
            .map(|t| mean[t - 1] / ((2.0 / std::f64::consts::PI).sqrt() * (t as f64).powf(-0.5)))
            .sum::<f64>()
            / 99.0;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
        for t in [2usize, 10, 50, 100] {
            let expected = (2.0 / std::f64::consts::PI).sqrt() * (t as f64).powf(-0.5);
            assert!((mean[t - 1] / expected - 1.0).abs() < 0.1, "t={t}");
        }
    }

    #[test]
    fn hard_single_chunk_is_constant() {
        let path = gen_hard_shifts(50, 4, &[1], 3);
        assert_eq!(path.tv_l1, 0.0);
        assert!(path.thetas.iter().all(|th| th == &path.thetas[0]));
    }

    #[test]
    fn hard_shift_structure() {
        let starts = [1, 5, 9, 20];
        let path = gen_hard_shifts(30, 6, &starts, 11);
        assert!(path.thetas.iter().flatten().all(|&v| v == 1.0 || v == -1.0));
        for t in 2..=30 {
            if !starts.contains(&t) {
                assert_eq!(path.thetas[t - 1], path.thetas[t - 2]);
            }
        }
        let mut manual = 0.0;
        for w in starts.windows(2) {
            let jump: f64 = path.thetas[w[1] - 1]
                .iter()
                .zip(&path.thetas[w[0] - 1])
                .map(|(a, b)| (a - b).abs())
                .sum();
            assert_eq!(jump % 2.0, 0.0);
            assert!(jump <= 12.0);
            manual += jump;
        }
        assert_eq!(path.tv_l1, manual);
    }

    #[test]
    fn total_variation_examples() {
        let p = ParameterPath::from_thetas(vec![vec![0.0], vec![1.0], vec![0.0]]);
        assert_eq!(total_variation(&p, Norm::L1), 2.0);
        assert_eq!(total_variation(&p, Norm::L2), 2.0);
        let q = ParameterPath::from_thetas(vec![vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(q.tv_l1, 2.0);
        assert_relative_eq!(q.tv_l2, 2f64.sqrt(), epsilon = 1e-15);
        let c = ParameterPath::from_thetas(vec![vec![0.4, 0.1]; 5]);
        assert_eq!(total_variation(&c, Norm::L2), 0.0);
    }

    #[test]
    fn noiseless_stream_matches_truth() {
        let path = gen_hard_shifts(40, 3, &[1, 20], 1);
        let spec = StreamSpec {
            n: 40,
            d: 3,
            sigma: 0.0,
            input_mode: InputMode::UniformCube,
            seed: 5,
        };
        let stream = gen_stream(&path, &spec).unwrap();
        assert!(stream.iter().all(|o| Some(o.y) == o.y_true));
    }

    #[test]
    fn constant_one_inputs() {
        let path = gen_soft_shifts(30, 1, 0.3, 2);
        let spec = StreamSpec {
            n: 30,
            d: 1,
            sigma: 1.0,
            input_mode: InputMode::ConstantOne,
            seed: 2,
        };
        let stream = gen_stream(&path, &spec).unwrap();
        for (obs, theta) in stream.iter().zip(&path.thetas) {
            assert_eq!(obs.x, vec![1.0]);
            assert_eq!(obs.y_true, Some(theta[0]));
        }
        let bad = StreamSpec { d: 2, ..spec };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let n = 100_000;
        let sigma = 1.7;
        let path = ParameterPath::from_thetas(vec![vec![0.5]; n]);
        let spec = StreamSpec {
            n,
            d: 1,
            sigma,
            input_mode: InputMode::UniformCube,
            seed: 77,
        };
        let stream = gen_stream(&path, &spec).unwrap();
        let noise: Vec<f64> = stream.iter().map(|o| o.noise().unwrap()).collect();
        let mean = noise.iter().sum::<f64>() / n as f64;
        let var = noise.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn noise_and_inputs_do_not_depend_on_path_draws() {
        let spec = StreamSpec {
            n: 20,
            d: 2,
            sigma: 1.0,
            input_mode: InputMode::UniformCube,
            seed: 3,
        };
        let a = gen_stream(&gen_hard_shifts(20, 2, &[1], 1), &spec).unwrap();
        let b = gen_stream(&gen_hard_shifts(20, 2, &[1], 2), &spec).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u.x, v.x);
            assert!((u.noise().unwrap() - v.noise().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn split_seeds_are_stable_and_distinct() {
        let first: Vec<u64> = (0..5).map(|i| split_seed(42, i)).collect();
        let more: Vec<u64> = (0..50).map(|i| split_seed(42, i)).collect();
        assert_eq!(first[..], more[..5]);
        let mut sorted = more.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 50);
        assert_ne!(split_seed(43, 0), split_seed(42, 0));
    }

    #[test]
    fn dictionary_path_outputs_and_norms() {
        let dict = Dictionary {
            kernel: KernelFunction::Linear,
            anchors: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        };
        let path = ParameterPath::from_thetas(vec![vec![1.0, 0.0], vec![1.0, 2.0]])
            .with_dictionary(dict)
            .unwrap();
        assert_eq!(path.output(2, &[3.0, 1.0]), 5.0);
        assert_relative_eq!(total_variation(&path, Norm::Rkhs), 2.0, epsilon = 1e-12);
        assert_relative_eq!(path.b, 5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn shift_spec_validation() {
        assert!(ShiftSpec::Hard { starts: vec![2, 5] }.validate(10).is_err());
        assert!(ShiftSpec::Hard {
            starts: vec![1, 5, 5]
        }
        .validate(10)
        .is_err());
        assert!(ShiftSpec::Hard {
            starts: vec![1, 11]
        }
        .validate(10)
        .is_err());
        assert!(ShiftSpec::Soft { alpha: 0.0 }.validate(10).is_err());
        assert_eq!(
            ShiftSpec::hard_powers(3, 100),
            ShiftSpec::Hard {
                starts: vec![1, 2, 4, 8]
            }
        );
        assert_eq!(
            ShiftSpec::hard_every(100, 3, 1000),
            ShiftSpec::Hard {
                starts: vec![1, 100, 200, 300]
            }
        );
    }

    #[test]
    fn stream_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("stream.csv");
        let path = gen_soft_shifts(25, 2, 1.0, 8);
        let spec = StreamSpec {
            n: 25,
            d: 2,
            sigma: 0.5,
            input_mode: InputMode::UniformCube,
            seed: 8,
        };
        let stream = gen_stream(&path, &spec).unwrap();
        write_stream_csv(&stream, &file).unwrap();
        assert_eq!(
            csv_header(&file).unwrap(),
            vec!["t", "x_1", "x_2", "y", "y_true"]
        );
        let raw = std::fs::read(&file).unwrap();
        assert!(!raw.contains(&b'\r'));
        assert_eq!(read_stream_csv(&file).unwrap(), stream);
    }

    proptest! {
        #[test]
        fn tv_norm_sandwich(seed in any::<u64>(), d in 1usize..6, hard in any::<bool>()) {
            let path = if hard {
                gen_hard_shifts(60, d, &[1, 7, 19, 40], seed)
            } else {
                gen_soft_shifts(60, d, 1.0, seed)
            };
            prop_assert!(path.tv_l2 <= path.tv_l1 + 1e-12);
            prop_assert!(path.tv_l1 <= (d as f64).sqrt() * path.tv_l2 + 1e-9);
        }

        #[test]
        fn generation_is_seed_deterministic(seed in any::<u64>()) {
            let spec = StreamSpec { n: 30, d: 2, sigma: 1.0, input_mode: InputMode::UniformCube, seed };
            let a = gen_stream(&gen_soft_shifts(30, 2, 2.0, seed), &spec).unwrap();
            let b = gen_stream(&gen_soft_shifts(30, 2, 2.0, seed), &spec).unwrap();
            prop_assert_eq!(&a, &b);
            let other = StreamSpec { seed: seed.wrapping_add(1), ..spec };
            let c = gen_stream(&gen_soft_shifts(30, 2, 2.0, seed.wrapping_add(1)), &other).unwrap();
            prop_assert_ne!(a, c);
        }
    }
}
