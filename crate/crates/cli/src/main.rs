use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use driftbench::baselines::OracleMode;
use driftbench::datagen::{write_stream_csv, InputMode, ShiftSpec};
use driftbench::harness::{
    bound_curve, preset, preset_names, run_experiment, write_results, AlgorithmSpec, DataSpec,
    ExperimentConfig, SubroutineSpec, ONS_GAMMA,
};
use driftbench::meta::{Eta, Pruning};
use driftbench::{Error, Result};

#[derive(Parser)]
#[command(
    name = "driftbench",
    version,
    about = "Non-stationary online regression benchmark"
)]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one generated stream as CSV.
    Generate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        data: DataFlags,
        /// Master seed of the experiment.
        #[arg(long)]
        seed: Option<u64>,
        /// Index of the run whose stream is written.
        #[arg(long, default_value_t = 0)]
        run: usize,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write results.csv, summary.csv and config.json.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        data: DataFlags,
        /// Algorithms for an inline config (repeatable).
        #[arg(long = "algo", value_enum)]
        algos: Vec<Algo>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print bound-curve values `c · d^{1/3} t^{1/3} TV^{2/3}`.
    Bound {
        /// Rounds to evaluate (repeatable).
        #[arg(long = "t", required = true)]
        ts: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long)]
        tv: f64,
        #[arg(long, default_value_t = 1.0)]
        bound_constant: f64,
    },
    /// List or run the figure presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Run {
        /// Preset group or single preset config.
        #[arg(long)]
        preset: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Args)]
struct Source {
    /// Experiment config JSON.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Preset config name (the first config of a group).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct DataFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum)]
    input_mode: Option<InputFlag>,
    /// Soft-shift decay exponent.
    #[arg(long, conflicts_with_all = ["starts", "powers", "every"])]
    alpha: Option<f64>,
    /// Hard-shift chunk starts, comma separated, beginning with 1.
    #[arg(long, value_delimiter = ',')]
    starts: Option<Vec<usize>>,
    /// Hard shifts at 1, 2, 4, ..., 2^K.
    #[arg(long, value_name = "K")]
    powers: Option<u32>,
    /// Hard shifts every STEP rounds.
    #[arg(long, value_name = "STEP")]
    every: Option<usize>,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory (one sub-directory per config for preset groups).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    bound_constant: Option<f64>,
    /// Fixed meta learning rate instead of the automatic one.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFlag {
    ConstantOne,
    UniformCube,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    IflhMa,
    FlhMa,
    IflhOgd,
    IflhOns,
    IflhAwv,
    FlhOns,
    FlhAwv,
    OgdFixedRestart,
    OracleScalar,
    OracleLinear,
}

impl Algo {
    fn spec(self) -> AlgorithmSpec {
        let name = self
            .to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string();
        let ogd = SubroutineSpec::Ogd {
            radius: None,
            grad_bound: None,
        };
        let ons = SubroutineSpec::Ons {
            radius: None,
            alpha: None,
            gamma: Some(ONS_GAMMA),
            epsilon: None,
        };
        let awv = SubroutineSpec::Awv { lambda: 1.0 };
        match self {
            Algo::IflhMa => {
                AlgorithmSpec::meta(&name, Pruning::Binary, SubroutineSpec::MovingAverage)
            }
            Algo::FlhMa => AlgorithmSpec::meta(&name, Pruning::None, SubroutineSpec::MovingAverage),
            Algo::IflhOgd => AlgorithmSpec::meta(&name, Pruning::Binary, ogd),
            Algo::IflhOns => AlgorithmSpec::meta(&name, Pruning::Binary, ons),
            Algo::IflhAwv => AlgorithmSpec::meta(&name, Pruning::Binary, awv),
            Algo::FlhOns => AlgorithmSpec::meta(&name, Pruning::None, ons),
            Algo::FlhAwv => AlgorithmSpec::meta(&name, Pruning::None, awv),
            Algo::OgdFixedRestart => AlgorithmSpec::fixed_restart_ogd(&name),
            Algo::OracleScalar => AlgorithmSpec::oracle(&name, OracleMode::Scalar),
            Algo::OracleLinear => AlgorithmSpec::oracle(&name, OracleMode::Linear),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match dispatch(cli.command, cli.quiet) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_io() { 3 } else { 2 })
        }
    }
}

fn dispatch(command: Command, quiet: bool) -> Result<()> {
    match command {
        Command::Generate {
            source,
            data,
            seed,
            run,
            out,
        } => {
            let mut config = load_source(&source)?.unwrap_or_else(|| inline_config(Vec::new()));
            apply_data_flags(&mut config, &data)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let seed = config.run_seed(run);
            let (path, stream) = config.data.generate(seed)?;
            write_stream_csv(&stream, &out)?;
            if !quiet {
                println!(
                    "wrote {} rounds to {} (seed {seed}, TV l1 {:.4})",
                    stream.len(),
                    out.display(),
                    path.tv_l1
                );
            }
            Ok(())
        }
        Command::Run {
            source,
            data,
            algos,
            overrides,
        } => {
            let mut config = match load_source(&source)? {
                Some(mut config) => {
                    if !algos.is_empty() {
                        config.algorithms = algos.iter().map(|a| a.spec()).collect();
                    }
                    config
                }
                None => {
                    if algos.is_empty() {
                        return Err(Error::Config(
                            "give --config, --preset, or at least one --algo".into(),
                        ));
                    }
                    inline_config(algos.iter().map(|a| a.spec()).collect())
                }
            };
            apply_data_flags(&mut config, &data)?;
            let dir = apply_overrides(&mut config, &overrides, None);
            execute(&config, &dir, quiet)
        }
        Command::Bound {
            ts,
            d,
            tv,
            bound_constant,
        } => {
            if d == 0 || tv.is_nan() || tv < 0.0 || ts.contains(&0) {
                return Err(Error::Config(
                    "bound needs t >= 1, d >= 1 and tv >= 0".into(),
                ));
            }
            println!("t,bound");
            for t in ts {
                println!("{t},{}", bound_constant * bound_curve(t, d, tv));
            }
            Ok(())
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for name in preset_names() {
                    let group = preset(name).expect("listed presets exist");
                    println!("{name}: {}", group.description);
                    for config in &group.configs {
                        println!(
                            "  {} (n = {}, d = {})",
                            config.name, config.data.n, config.data.d
                        );
                    }
                }
                Ok(())
            }
            PresetAction::Run {
                preset: name,
                overrides,
            } => {
                let group = preset(&name)
                    .ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
                let root = overrides
                    .out
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("results"));
                for mut config in group.configs {
                    let dir = apply_overrides(&mut config, &overrides, Some(&root));
                    execute(&config, &dir, quiet)?;
                }
                Ok(())
            }
        },
    }
}

fn load_source(source: &Source) -> Result<Option<ExperimentConfig>> {
    if let Some(path) = &source.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        return ExperimentConfig::from_json(&text).map(Some);
    }
    if let Some(name) = &source.preset {
        let group =
            preset(name).ok_or_else(|| Error::Config(format!("unknown preset {name:?}")))?;
        return Ok(group.configs.into_iter().next());
    }
    Ok(None)
}

fn inline_config(algorithms: Vec<AlgorithmSpec>) -> ExperimentConfig {
    ExperimentConfig {
        name: "inline".into(),
        data: DataSpec {
            n: 1000,
            d: 1,
            sigma: 1.0,
            input_mode: InputMode::ConstantOne,
            shift: ShiftSpec::Soft { alpha: 0.3 },
            dictionary: None,
        },
        algorithms,
        runs: 10,
        seed: 0,
        eta: Eta::Auto,
        bound_constant: 1.0,
        log_base: Default::default(),
        output_dir: None,
    }
}

fn apply_data_flags(config: &mut ExperimentConfig, flags: &DataFlags) -> Result<()> {
    let data = &mut config.data;
    if let Some(n) = flags.n {
        data.n = n;
    }
    if let Some(d) = flags.d {
        data.d = d;
        if d > 1 && flags.input_mode.is_none() {
            data.input_mode = InputMode::UniformCube;
        }
    }
    if let Some(sigma) = flags.sigma {
        data.sigma = sigma;
    }
    if let Some(mode) = flags.input_mode {
        data.input_mode = match mode {
            InputFlag::ConstantOne => InputMode::ConstantOne,
            InputFlag::UniformCube => InputMode::UniformCube,
        };
    }
    let n = data.n;
    let shifts = [
        flags.alpha.map(|alpha| ShiftSpec::Soft { alpha }),
        flags
            .starts
            .clone()
            .map(|starts| ShiftSpec::Hard { starts }),
        flags.powers.map(|k| ShiftSpec::hard_powers(k, n)),
        flags
            .every
            .map(|step| ShiftSpec::hard_every(step, n / step.max(1), n)),
    ];
    let mut chosen = shifts.into_iter().flatten();
    if let Some(shift) = chosen.next() {
        if chosen.next().is_some() {
            return Err(Error::Config(
                "choose one of --alpha, --starts, --powers, --every".into(),
            ));
        }
        data.shift = shift;
    }
    Ok(())
}

fn apply_overrides(
    config: &mut ExperimentConfig,
    overrides: &Overrides,
    root: Option<&Path>,
) -> PathBuf {
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(runs) = overrides.runs {
        config.runs = runs;
    }
    if let Some(c) = overrides.bound_constant {
        config.bound_constant = c;
    }
    if let Some(eta) = overrides.eta {
        config.eta = Eta::Fixed(eta);
    }
    let dir = match (root, &overrides.out) {
        (Some(root), _) => root.join(&config.name),
        (None, Some(out)) => out.clone(),
        (None, None) => config
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("results").join(&config.name)),
    };
    config.output_dir = Some(dir.clone());
    dir
}

fn execute(config: &ExperimentConfig, dir: &Path, quiet: bool) -> Result<()> {
    log::info!(
        "running {} ({} algorithms x {} runs, n = {})",
        config.name,
        config.algorithms.len(),
        config.runs,
        config.data.n
    );
    let output = run_experiment(config)?;
    write_results(&output, dir)?;
    if !quiet {
        println!("{} -> {}", config.name, dir.display());
        if let Some(bound) = output.final_bound() {
            println!("  {:<24} {:>14.3}", "bound", bound);
        }
        for alg in &config.algorithms {
            if let Some(mean) = output.final_mean(&alg.name) {
                println!("  {:<24} {:>14.3}", alg.name, mean);
            }
        }
    }
    Ok(())
}
