//! Named experiment groups that are run together.

use super::{
    AlgorithmSpec, DataSpec, DictionarySpec, ExperimentConfig, LambdaSpec, SubroutineSpec,
};
use crate::baselines::{LogBase, OracleMode};
use crate::datagen::{InputMode, ShiftSpec};
use crate::kernel::KernelFunction;
use crate::meta::{Eta, Pruning};

/// A group of configs that are run together.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub configs: Vec<ExperimentConfig>,
}

pub fn preset_names() -> Vec<&'static str> {
    vec!["fig2", "fig3", "fig4", "kernel"]
}

/// The preset called `name`, or the single-config preset whose config is
/// called `name`.
pub fn preset(name: &str) -> Option<Preset> {
    let group = match name {
        "fig1" | "fig2" => Preset {
            name: "fig2",
            description: "1-d forecasting, IFLH with moving averages: soft shifts, equal chunks, doubling chunks",
            configs: one_dim(),
        },
        "fig3" => Preset {
            name: "fig3",
            description: "linear regression under soft shifts for (alpha, d) in {(1,2), (2,2), (2,10)}",
            configs: vec![
                linear("fig3-a1-d2", 5000, 2, ShiftSpec::Soft { alpha: 1.0 }),
                linear("fig3-a2-d2", 5000, 2, ShiftSpec::Soft { alpha: 2.0 }),
                linear("fig3-a2-d10", 5000, 10, ShiftSpec::Soft { alpha: 2.0 }),
            ],
        },
        "fig4" => Preset {
            name: "fig4",
            description: "linear regression under hard shifts: equal chunks in d=10, doubling chunks in d=2 and d=10",
            configs: vec![
                linear("fig4-equal-d10", 10_000, 10, ShiftSpec::hard_every(100, 100, 10_000)),
                linear("fig4-log-d2", 1 << 15, 2, ShiftSpec::hard_powers(14, 1 << 15)),
                linear("fig4-log-d10", 1 << 15, 10, ShiftSpec::hard_powers(14, 1 << 15)),
            ],
        },
        "kernel" => Preset {
            name: "kernel",
            description: "Gaussian-kernel regression on dictionary paths with doubling chunks",
            configs: vec![kernel_config("kernel-gaussian", 1500)],
        },
        other => {
            let config = preset_names()
                .into_iter()
                .filter_map(preset)
                .flat_map(|p| p.configs)
                .find(|c| c.name == other)?;
            return Some(Preset {
                name: "single",
                description: "single preset config",
                configs: vec![config],
            });
        }
    };
    Some(group)
}

fn base(name: &str, data: DataSpec, algorithms: Vec<AlgorithmSpec>) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        data,
        algorithms,
        runs: 10,
        seed: 0,
        eta: Eta::Auto,
        bound_constant: 1.0,
        log_base: LogBase::Natural,
        output_dir: None,
    }
}

fn one_dim() -> Vec<ExperimentConfig> {
    let family = |name: &str, n: usize, shift: ShiftSpec| {
        base(
            name,
            DataSpec {
                n,
                d: 1,
                sigma: 1.0,
                input_mode: InputMode::ConstantOne,
                shift,
                dictionary: None,
            },
            vec![
                AlgorithmSpec::meta("iflh-ma", Pruning::Binary, SubroutineSpec::MovingAverage),
                AlgorithmSpec::oracle("oracle-ma", OracleMode::Scalar),
            ],
        )
    };
    vec![
        family("fig2-soft", 1000, ShiftSpec::Soft { alpha: 0.3 }),
        family("fig2-equal", 1000, ShiftSpec::hard_every(100, 10, 1000)),
        family("fig2-log", 2048, ShiftSpec::hard_powers(10, 2048)),
    ]
}

/// ONS step constant used by the presets; the gradient-bound rule is far
/// more conservative on these streams.
pub const ONS_GAMMA: f64 = 0.25;

/// IFLH with OGD, ONS and AWV against fixed-restart OGD.
pub(crate) fn linear_algorithms() -> Vec<AlgorithmSpec> {
    vec![
        AlgorithmSpec::meta(
            "iflh-ogd",
            Pruning::Binary,
            SubroutineSpec::Ogd {
                radius: None,
                grad_bound: None,
            },
        ),
        AlgorithmSpec::meta(
            "iflh-ons",
            Pruning::Binary,
            SubroutineSpec::Ons {
                radius: None,
                alpha: None,
                gamma: Some(ONS_GAMMA),
                epsilon: None,
            },
        ),
        AlgorithmSpec::meta(
            "iflh-awv",
            Pruning::Binary,
            SubroutineSpec::Awv { lambda: 1.0 },
        ),
        AlgorithmSpec::fixed_restart_ogd("ogd-fixed-restart"),
    ]
}

fn linear(name: &str, n: usize, d: usize, shift: ShiftSpec) -> ExperimentConfig {
    base(
        name,
        DataSpec {
            n,
            d,
            sigma: 1.0,
            input_mode: InputMode::UniformCube,
            shift,
            dictionary: None,
        },
        linear_algorithms(),
    )
}

pub(crate) fn kernel_config(name: &str, n: usize) -> ExperimentConfig {
    let kernel = KernelFunction::Gaussian { bandwidth: 0.5 };
    let subroutine = SubroutineSpec::KernelAwv {
        kernel,
        lambda: LambdaSpec::Schedule { beta: 0.5, m: None },
    };
    base(
        name,
        DataSpec {
            n,
            d: 2,
            sigma: 1.0,
            input_mode: InputMode::UniformCube,
            shift: ShiftSpec::hard_powers(10, n),
            dictionary: Some(DictionarySpec { size: 8, kernel }),
        },
        vec![
            AlgorithmSpec::meta("iflh-kawv", Pruning::Binary, subroutine.clone()),
            AlgorithmSpec::single("kawv", subroutine),
            AlgorithmSpec::oracle("oracle-kernel", OracleMode::Kernel),
        ],
    )
}
