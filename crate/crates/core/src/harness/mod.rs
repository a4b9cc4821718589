//! Experiment orchestration: configs, paired multi-run execution, cumulative
//! error curves and the reference bound.

mod output;
mod presets;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::baselines::{
    fixed_restart_batch_size_with, fixed_restart_ogd_run, greedy_restart_partition,
    optimal_num_batches, oracle_forecast, LogBase, OracleMode,
};
use crate::datagen::{
    gen_path, gen_stream, split_seed, Dictionary, InputMode, Norm, ParameterPath, ShiftSpec,
    StreamSpec,
};
use crate::error::{Error, Result};
use crate::kernel::{lambda_schedule, KernelAwv, KernelFunction};
use crate::learner::{Observation, Subroutine};
use crate::meta::{Eta, ExpertPool, MetaConfig, Pruning};
use crate::subroutines::{Awv, GradBound, MovingAverage, Ogd, Ons, OnsTuning};

pub use output::{read_results, read_summary, write_results, RESULTS_HEADER, SUMMARY_HEADER};
pub use presets::{preset, preset_names, Preset, ONS_GAMMA};

/// Environment variable capping the worker threads used by [`run_experiment`].
pub const THREADS_ENV: &str = "DRIFTBENCH_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionarySpec {
    pub size: usize,
    pub kernel: KernelFunction,
}

/// Stream family: everything of a [`StreamSpec`] except the seed, plus the
/// drift model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub n: usize,
    pub d: usize,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub input_mode: InputMode,
    pub shift: ShiftSpec,
    /// Hidden functions expanded over random anchors instead of linear weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<DictionarySpec>,
}

impl DataSpec {
    pub fn stream_spec(&self, seed: u64) -> StreamSpec {
        StreamSpec {
            n: self.n,
            d: self.d,
            sigma: self.sigma,
            input_mode: self.input_mode,
            seed,
        }
    }

    /// Path and stream of one run.
    pub fn generate(&self, seed: u64) -> Result<(ParameterPath, Vec<Observation>)> {
        self.shift.validate(self.n)?;
        self.stream_spec(seed).validate()?;
        let path = match &self.dictionary {
            None => gen_path(&self.shift, self.n, self.d, seed),
            Some(spec) => {
                let dict = Dictionary::sample(spec.kernel, spec.size, self.d, seed)?;
                gen_path(&self.shift, self.n, spec.size, seed).with_dictionary(dict)?
            }
        };
        let stream = gen_stream(&path, &self.stream_spec(seed))?;
        Ok((path, stream))
    }

    /// Total variation used for the bound curve: ℓ1 for linear paths, the
    /// Hilbert norm for dictionary paths.
    pub fn bound_tv(&self, path: &ParameterPath) -> f64 {
        if path.dictionary.is_some() {
            crate::datagen::total_variation(path, Norm::Rkhs)
        } else {
            path.tv_l1
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LambdaSpec {
    Fixed {
        value: f64,
    },
    /// `(n/m)^{β/(β+1)}`; `m` defaults to `max(1, round(C^{2(β+1)/(2β+3)} n^{1/(2β+3)}))`.
    Schedule {
        beta: f64,
        m: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SubroutineSpec {
    MovingAverage,
    /// `radius` defaults to the run's largest `‖θ_t‖` (at least 1).
    Ogd {
        radius: Option<f64>,
        grad_bound: Option<GradBound>,
    },
    /// Without `gamma` the constants follow the running gradient bound;
    /// `gamma` alone sets `ε = 1/(γ²D²)`.
    Ons {
        radius: Option<f64>,
        alpha: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Awv {
        #[serde(default = "one")]
        lambda: f64,
    },
    KernelAwv {
        kernel: KernelFunction,
        lambda: LambdaSpec,
    },
}

impl SubroutineSpec {
    fn is_kernel(&self) -> bool {
        matches!(self, SubroutineSpec::KernelAwv { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AlgorithmKind {
    /// FLH (`pruning = none`) or IFLH (`pruning = binary`) over restarted subroutines.
    Meta {
        #[serde(default)]
        pruning: Pruning,
        subroutine: SubroutineSpec,
        eta: Option<Eta>,
    },
    /// One subroutine started at round 1 and never restarted.
    Single { subroutine: SubroutineSpec },
    /// OGD restarted every `batch` rounds; `batch` defaults to `⌈σ⁻¹√(n log n)/TV⌉`.
    FixedRestartOgd {
        batch: Option<usize>,
        radius: Option<f64>,
    },
    /// Restart oracle over a greedy partition with `m` segments
    /// (default: the optimal batch count).
    Oracle {
        mode: OracleMode,
        m: Option<usize>,
        norm: Option<Norm>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: AlgorithmKind,
}

impl AlgorithmSpec {
    pub fn meta(name: &str, pruning: Pruning, subroutine: SubroutineSpec) -> Self {
        Self {
            name: name.into(),
            kind: AlgorithmKind::Meta {
                pruning,
                subroutine,
                eta: None,
            },
        }
    }

    pub fn single(name: &str, subroutine: SubroutineSpec) -> Self {
        Self {
            name: name.into(),
            kind: AlgorithmKind::Single { subroutine },
        }
    }

    pub fn fixed_restart_ogd(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: AlgorithmKind::FixedRestartOgd {
                batch: None,
                radius: None,
            },
        }
    }

    pub fn oracle(name: &str, mode: OracleMode) -> Self {
        Self {
            name: name.into(),
            kind: AlgorithmKind::Oracle {
                mode,
                m: None,
                norm: None,
            },
        }
    }

    fn uses_kernel(&self) -> bool {
        match &self.kind {
            AlgorithmKind::Meta { subroutine, .. } | AlgorithmKind::Single { subroutine } => {
                subroutine.is_kernel()
            }
            AlgorithmKind::Oracle { mode, .. } => *mode == OracleMode::Kernel,
            AlgorithmKind::FixedRestartOgd { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Default learning rate of the meta algorithms.
    #[serde(default)]
    pub eta: Eta,
    #[serde(default = "one")]
    pub bound_constant: f64,
    /// Log used by the restart batch-size formula.
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_runs() -> usize {
    10
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid experiment config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms configured".into()));
        }
        let mut names = BTreeSet::new();
        for alg in &self.algorithms {
            if !names.insert(alg.name.as_str()) {
                return Err(Error::Config(format!(
                    "duplicate algorithm name {:?}",
                    alg.name
                )));
            }
        }
        let data = &self.data;
        if data.input_mode == InputMode::ConstantOne && data.d > 1 {
            if let Some(alg) = self.algorithms.iter().find(|a| a.uses_kernel()) {
                return Err(Error::Config(format!(
                    "{:?} uses a kernel but constant-one inputs cannot have d = {}",
                    alg.name, data.d
                )));
            }
        }
        data.shift.validate(data.n)?;
        data.stream_spec(self.seed).validate()?;
        if let Some(dict) = &data.dictionary {
            dict.kernel.validate()?;
            if dict.size == 0 {
                return Err(Error::Config("dictionary size must be positive".into()));
            }
        }
        if let Eta::Fixed(eta) = self.eta {
            check_eta(eta)?;
        }
        if !(self.bound_constant >= 0.0 && self.bound_constant.is_finite()) {
            return Err(Error::Config(
                "bound constant must be finite and >= 0".into(),
            ));
        }
        for alg in &self.algorithms {
            self.validate_algorithm(alg)?;
        }
        Ok(())
    }

    fn validate_algorithm(&self, alg: &AlgorithmSpec) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("algorithm {:?}: {msg}", alg.name)));
        match &alg.kind {
            AlgorithmKind::Meta {
                subroutine, eta, ..
            } => {
                if let Some(Eta::Fixed(eta)) = eta {
                    check_eta(*eta)?;
                }
                validate_subroutine(subroutine).or_else(|e| fail(e.to_string()))
            }
            AlgorithmKind::Single { subroutine } => {
                validate_subroutine(subroutine).or_else(|e| fail(e.to_string()))
            }
            AlgorithmKind::FixedRestartOgd { batch, radius } => {
                if *batch == Some(0) {
                    return fail("batch must be at least 1".into());
                }
                if radius.is_some_and(|r| r.is_nan() || r <= 0.0) {
                    return fail("radius must be positive".into());
                }
                Ok(())
            }
            AlgorithmKind::Oracle { mode, m, .. } => {
                if *m == Some(0) {
                    return fail("m must be at least 1".into());
                }
                match mode {
                    OracleMode::Kernel if self.data.dictionary.is_none() => {
                        fail("kernel oracle needs a dictionary data family".into())
                    }
                    OracleMode::Linear if self.data.dictionary.is_some() => {
                        fail("linear oracle needs a linear data family".into())
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    /// Seed of run `r`.
    pub fn run_seed(&self, run: usize) -> u64 {
        split_seed(self.seed, run as u64)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "explicit eta must be positive and finite, got {eta}"
        )))
    }
}

fn validate_subroutine(spec: &SubroutineSpec) -> Result<()> {
    let positive = |v: Option<f64>, what: &str| match v {
        Some(v) if !(v > 0.0 && v.is_finite()) => {
            Err(Error::Config(format!("{what} must be positive, got {v}")))
        }
        _ => Ok(()),
    };
    match spec {
        SubroutineSpec::MovingAverage => Ok(()),
        SubroutineSpec::Ogd { radius, grad_bound } => {
            positive(*radius, "radius")?;
            if let Some(GradBound::Fixed(g)) = grad_bound {
                positive(Some(*g), "gradient bound")?;
            }
            Ok(())
        }
        SubroutineSpec::Ons {
            radius,
            alpha,
            gamma,
            epsilon,
        } => {
            positive(*radius, "radius")?;
            positive(*alpha, "alpha")?;
            positive(*gamma, "gamma")?;
            positive(*epsilon, "epsilon")?;
            if epsilon.is_some() && gamma.is_none() {
                return Err(Error::Config("ONS epsilon needs an explicit gamma".into()));
            }
            Ok(())
        }
        SubroutineSpec::Awv { lambda } => positive(Some(*lambda), "lambda"),
        SubroutineSpec::KernelAwv { kernel, lambda } => {
            kernel.validate()?;
            match lambda {
                LambdaSpec::Fixed { value } => positive(Some(*value), "lambda"),
                LambdaSpec::Schedule { beta, m } => {
                    if !(*beta > 0.0 && *beta < 1.0) {
                        return Err(Error::Config(format!(
                            "beta must lie in (0, 1), got {beta}"
                        )));
                    }
                    if *m == Some(0) {
                        return Err(Error::Config("schedule m must be at least 1".into()));
                    }
                    Ok(())
                }
            }
        }
    }
}

/// `d^{1/3} t^{1/3} tv^{2/3}`.
pub fn bound_curve(t: usize, d: usize, tv: f64) -> f64 {
    (d as f64).cbrt() * (t as f64).cbrt() * tv.max(0.0).powf(2.0 / 3.0)
}

/// Partial sums of `(pred - truth)²`.
pub fn cumulative_true_error(preds: &[f64], truths: &[f64]) -> Result<Vec<f64>> {
    if preds.len() != truths.len() {
        return Err(Error::Domain(format!(
            "{} predictions for {} truths",
            preds.len(),
            truths.len()
        )));
    }
    let mut total = 0.0;
    Ok(preds
        .iter()
        .zip(truths)
        .map(|(p, y)| {
            total += (p - y) * (p - y);
            total
        })
        .collect())
}

/// One round of one (algorithm, run) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub run: usize,
    pub seed: u64,
    pub t: usize,
    pub y_hat: f64,
    pub y: f64,
    pub y_true: f64,
    pub inst_err: f64,
    pub cum_err: f64,
    pub bound: f64,
    /// Live experts after the round's spawn; empty for non-meta algorithms.
    pub active_experts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub t: usize,
    pub mean_cum_err: f64,
    pub std_cum_err: f64,
    pub bound: f64,
}

/// Per-run facts and the parameters each algorithm resolved for that run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub run: usize,
    pub seed: u64,
    pub tv_l1: f64,
    pub tv_l2: f64,
    pub tv_bound: f64,
    pub b: f64,
    pub resolved: BTreeMap<String, Value>,
}

/// The configuration with every default made explicit, as echoed to `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub eta_rule: String,
    pub formula_log: String,
    pub ending_time_log_base: u32,
    pub bound_rule: String,
    pub runs: Vec<RunInfo>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub resolved: ResolvedConfig,
}

impl ExperimentOutput {
    /// Final cumulative error of each run of `algorithm`, in run order.
    pub fn final_errors(&self, algorithm: &str) -> Vec<f64> {
        let n = self.resolved.config.data.n;
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.t == n)
            .map(|r| r.cum_err)
            .collect()
    }

    /// Mean over runs of the final cumulative error.
    pub fn final_mean(&self, algorithm: &str) -> Option<f64> {
        let n = self.resolved.config.data.n;
        self.summary
            .iter()
            .find(|s| s.algorithm == algorithm && s.t == n)
            .map(|s| s.mean_cum_err)
    }

    /// Summary bound at `t = n`.
    pub fn final_bound(&self) -> Option<f64> {
        let n = self.resolved.config.data.n;
        self.summary.iter().find(|s| s.t == n).map(|s| s.bound)
    }
}

struct Trace {
    preds: Vec<f64>,
    active: Option<Vec<usize>>,
    resolved: Value,
}

struct RunData {
    seed: u64,
    path: ParameterPath,
    stream: Vec<Observation>,
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs every algorithm on every run's stream. Run `r` of every algorithm
/// sees the same stream; output order is (algorithm, run, t) regardless of
/// scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = thread_cap() {
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(config))
}

fn execute(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let data = &config.data;
    let runs: Vec<RunData> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let seed = config.run_seed(run);
            data.generate(seed)
                .map(|(path, stream)| RunData { seed, path, stream })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..config.algorithms.len())
        .flat_map(|a| (0..config.runs).map(move |r| (a, r)))
        .collect();
    let traces: Vec<Trace> = jobs
        .par_iter()
        .map(|&(a, r)| run_algorithm(config, &config.algorithms[a], &runs[r]))
        .collect::<Result<_>>()?;

    let bound_tvs: Vec<f64> = runs.iter().map(|r| data.bound_tv(&r.path)).collect();
    let mut rows = Vec::with_capacity(jobs.len() * data.n);
    for (&(a, r), trace) in jobs.iter().zip(&traces) {
        let run = &runs[r];
        let truths: Vec<f64> = run.stream.iter().map(|o| o.y_true.unwrap_or(o.y)).collect();
        let cum = cumulative_true_error(&trace.preds, &truths)?;
        for (i, obs) in run.stream.iter().enumerate() {
            let inst = (trace.preds[i] - truths[i]).powi(2);
            rows.push(ResultRow {
                algorithm: config.algorithms[a].name.clone(),
                run: r,
                seed: run.seed,
                t: obs.t,
                y_hat: trace.preds[i],
                y: obs.y,
                y_true: truths[i],
                inst_err: inst,
                cum_err: cum[i],
                bound: config.bound_constant * bound_curve(obs.t, data.d, bound_tvs[r]),
                active_experts: trace.active.as_ref().map(|a| a[i]),
            });
        }
    }

    let summary = summarize(config, &rows, &bound_tvs);
    let run_infos = runs
        .iter()
        .enumerate()
        .map(|(r, run)| RunInfo {
            run: r,
            seed: run.seed,
            tv_l1: run.path.tv_l1,
            tv_l2: run.path.tv_l2,
            tv_bound: bound_tvs[r],
            b: run.path.b,
            resolved: config
                .algorithms
                .iter()
                .enumerate()
                .map(|(a, alg)| {
                    (
                        alg.name.clone(),
                        traces[a * config.runs + r].resolved.clone(),
                    )
                })
                .collect(),
        })
        .collect();
    let resolved = ResolvedConfig {
        config: config.clone(),
        eta_rule: match config.eta {
            Eta::Auto => "auto: 1/(32 Y^2) with Y the running max |y| (1 while Y = 0)".into(),
            Eta::Fixed(v) => format!("fixed: {v}"),
        },
        formula_log: "natural (batch size uses the configured log_base)".into(),
        ending_time_log_base: 2,
        bound_rule: format!(
            "{} * d^(1/3) * t^(1/3) * TV^(2/3), TV in l1 (Hilbert norm for dictionary paths)",
            config.bound_constant
        ),
        runs: run_infos,
    };
    Ok(ExperimentOutput {
        rows,
        summary,
        resolved,
    })
}

fn summarize(config: &ExperimentConfig, rows: &[ResultRow], bound_tvs: &[f64]) -> Vec<SummaryRow> {
    let n = config.data.n;
    let runs = config.runs;
    let mean_tv = bound_tvs.iter().sum::<f64>() / runs as f64;
    let mut summary = Vec::with_capacity(config.algorithms.len() * n);
    for (a, alg) in config.algorithms.iter().enumerate() {
        let block = &rows[a * runs * n..(a + 1) * runs * n];
        for i in 0..n {
            let values: Vec<f64> = (0..runs).map(|r| block[r * n + i].cum_err).collect();
            let mean = values.iter().sum::<f64>() / runs as f64;
            let std = if runs > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
            } else {
                0.0
            };
            summary.push(SummaryRow {
                algorithm: alg.name.clone(),
                t: i + 1,
                mean_cum_err: mean,
                std_cum_err: std,
                bound: config.bound_constant * bound_curve(i + 1, config.data.d, mean_tv),
            });
        }
    }
    summary
}

fn default_radius(path: &ParameterPath) -> f64 {
    path.b.max(1.0)
}

type BoxedFactory = Box<dyn Fn(usize) -> Box<dyn Subroutine> + Send + Sync>;

fn build_subroutine(
    spec: &SubroutineSpec,
    d: usize,
    n: usize,
    path: &ParameterPath,
    resolved: &mut serde_json::Map<String, Value>,
) -> Result<BoxedFactory> {
    Ok(match spec.clone() {
        SubroutineSpec::MovingAverage => Box::new(|_| Box::new(MovingAverage::new())),
        SubroutineSpec::Ogd { radius, grad_bound } => {
            let radius = radius.unwrap_or_else(|| default_radius(path));
            let grad = grad_bound.unwrap_or(GradBound::Adaptive);
            resolved.insert("radius".into(), json!(radius));
            resolved.insert("grad_bound".into(), json!(grad));
            Box::new(move |_| Box::new(Ogd::new(d, radius, grad)))
        }
        SubroutineSpec::Ons {
            radius,
            alpha,
            gamma,
            epsilon,
        } => {
            let radius = radius.unwrap_or_else(|| default_radius(path));
            let tuning = match (gamma, epsilon) {
                (Some(gamma), Some(epsilon)) => OnsTuning::Fixed { gamma, epsilon },
                (Some(gamma), None) => OnsTuning::Gamma { gamma },
                _ => OnsTuning::Adaptive { alpha },
            };
            resolved.insert("radius".into(), json!(radius));
            match tuning {
                OnsTuning::Adaptive { alpha } => {
                    resolved.insert(
                        "gamma".into(),
                        json!("auto: 0.5 * min(1/(4 G D), alpha), D = 2 radius"),
                    );
                    resolved.insert(
                        "alpha".into(),
                        alpha.map_or(json!("auto: 1/(32 Y^2)"), |a| json!(a)),
                    );
                }
                OnsTuning::Gamma { gamma } => {
                    resolved.insert("gamma".into(), json!(gamma));
                    resolved.insert(
                        "epsilon".into(),
                        json!(1.0 / (gamma * gamma * 4.0 * radius * radius)),
                    );
                }
                OnsTuning::Fixed { gamma, epsilon } => {
                    resolved.insert("gamma".into(), json!(gamma));
                    resolved.insert("epsilon".into(), json!(epsilon));
                }
            }
            Box::new(move |_| Box::new(Ons::new(d, radius, tuning)))
        }
        SubroutineSpec::Awv { lambda } => {
            resolved.insert("lambda".into(), json!(lambda));
            Box::new(move |_| Box::new(Awv::new(d, lambda)))
        }
        SubroutineSpec::KernelAwv { kernel, lambda } => {
            let lambda = match lambda {
                LambdaSpec::Fixed { value } => value,
                LambdaSpec::Schedule { beta, m } => {
                    let tv = crate::datagen::total_variation(path, Norm::Rkhs);
                    let m = m.unwrap_or_else(|| kernel_segments(n, tv, beta)).min(n);
                    resolved.insert("schedule_m".into(), json!(m));
                    resolved.insert("beta".into(), json!(beta));
                    lambda_schedule(n, m, beta)?
                }
            };
            resolved.insert("lambda".into(), json!(lambda));
            resolved.insert("kernel".into(), json!(kernel));
            Box::new(move |_| Box::new(KernelAwv::new(kernel, lambda)))
        }
    })
}

/// `max(1, round(C^{2(β+1)/(2β+3)} n^{1/(2β+3)}))`.
pub fn kernel_segments(n: usize, tv: f64, beta: f64) -> usize {
    let denom = 2.0 * beta + 3.0;
    let m = tv.max(0.0).powf(2.0 * (beta + 1.0) / denom) * (n as f64).powf(1.0 / denom);
    (m.round() as usize).max(1)
}

fn run_algorithm(config: &ExperimentConfig, alg: &AlgorithmSpec, run: &RunData) -> Result<Trace> {
    let data = &config.data;
    let stream = &run.stream;
    let mut resolved = serde_json::Map::new();
    let trace = match &alg.kind {
        AlgorithmKind::Meta {
            pruning,
            subroutine,
            eta,
        } => {
            let factory = build_subroutine(subroutine, data.d, data.n, &run.path, &mut resolved)?;
            let eta = eta.unwrap_or(config.eta);
            let mut pool = ExpertPool::new(
                MetaConfig {
                    eta,
                    pruning: *pruning,
                },
                move |birth: usize| factory(birth),
            );
            let mut preds = Vec::with_capacity(stream.len());
            let mut active = Vec::with_capacity(stream.len());
            for obs in stream {
                pool.spawn_and_normalize();
                active.push(pool.active());
                preds.push(pool.predict(&obs.x).y_hat);
                pool.update(&obs.x, obs.y);
            }
            resolved.insert("pruning".into(), json!(pruning));
            resolved.insert("eta".into(), json!(eta));
            resolved.insert("final_eta".into(), json!(pool.last_eta()));
            resolved.insert("weight_resets".into(), json!(pool.resets()));
            Trace {
                preds,
                active: Some(active),
                resolved: Value::Null,
            }
        }
        AlgorithmKind::Single { subroutine } => {
            let factory = build_subroutine(subroutine, data.d, data.n, &run.path, &mut resolved)?;
            let mut learner = factory(1);
            let preds = stream
                .iter()
                .map(|obs| {
                    let p = learner.predict(&obs.x);
                    learner.observe(&obs.x, obs.y);
                    p
                })
                .collect();
            Trace {
                preds,
                active: None,
                resolved: Value::Null,
            }
        }
        AlgorithmKind::FixedRestartOgd { batch, radius } => {
            let batch = batch.unwrap_or_else(|| {
                if data.sigma > 0.0 && run.path.tv_l1 > 0.0 {
                    fixed_restart_batch_size_with(
                        data.n,
                        data.sigma,
                        run.path.tv_l1,
                        config.log_base,
                    )
                } else {
                    data.n
                }
            });
            let radius = radius.unwrap_or_else(|| default_radius(&run.path));
            resolved.insert("batch".into(), json!(batch));
            resolved.insert("radius".into(), json!(radius));
            resolved.insert("log_base".into(), json!(config.log_base));
            let d = data.d;
            let preds =
                fixed_restart_ogd_run(stream, batch, || Ogd::new(d, radius, GradBound::Adaptive));
            Trace {
                preds,
                active: None,
                resolved: Value::Null,
            }
        }
        AlgorithmKind::Oracle { mode, m, norm } => {
            let norm = norm.unwrap_or(match mode {
                OracleMode::Kernel => Norm::Rkhs,
                _ => Norm::L1,
            });
            let tv = crate::datagen::total_variation(&run.path, norm);
            let m = m.unwrap_or_else(|| {
                if tv > 0.0 && data.sigma > 0.0 {
                    optimal_num_batches(data.n, tv, data.sigma)
                } else {
                    1
                }
            });
            let partition = greedy_restart_partition(&run.path, m, norm);
            resolved.insert("m".into(), json!(m));
            resolved.insert("norm".into(), json!(norm));
            resolved.insert("segments".into(), json!(partition.num_segments()));
            let preds = oracle_forecast(stream, Some(&run.path), &partition, *mode)?;
            Trace {
                preds,
                active: None,
                resolved: Value::Null,
            }
        }
    };
    Ok(Trace {
        resolved: Value::Object(resolved),
        ..trace
    })
}
