use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use qae_core::harness::{
    self, EncoderTraining, ExperimentConfig, StageMode, StateKind, TrainingCost, TrainingSettings,
};
use qae_core::mitigation::mitigate;
use qae_core::noise::{apply_noise, check_epsilon, NoiseModel};
use qae_core::qstate::infidelity;
use qae_core::Error;

#[derive(Parser)]
#[command(name = "qae", version, about = "Quantum autoencoder error mitigation simulator")]
struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a layered encoder from a JSON training file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "QAE_OUT_DIR", default_value = "out")]
        out: PathBuf,
        /// Overrides the seed in the training file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mitigate one state with a saved pipeline.
    Mitigate {
        /// Ideal state (matrix text file with a `state` block).
        #[arg(long)]
        state: PathBuf,
        /// Pipeline file with `unitary` and `latent` blocks.
        #[arg(long)]
        pipeline: PathBuf,
        /// global, local, or leakage.
        #[arg(long, default_value = "global")]
        noise: String,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
    },
    /// Run the experiment described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "QAE_OUT_DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Regenerate one figure's data.
    Reproduce {
        figure: String,
        #[arg(long, env = "QAE_OUT_DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DataKind {
    #[default]
    W,
    H2,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CostArg {
    #[default]
    Projection,
    Purity,
}

fn default_n() -> usize {
    4
}
fn default_layers() -> usize {
    1
}
fn default_mode() -> StageMode {
    StageMode::MultiStage
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainPlan {
    #[serde(default)]
    data: DataKind,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_layers")]
    layers: usize,
    #[serde(default = "default_mode")]
    mode: StageMode,
    #[serde(default)]
    extra_stages: usize,
    #[serde(default)]
    cost: CostArg,
    /// Noise on the training inputs.
    #[serde(default)]
    noise: Option<NoiseModel>,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    training: TrainingSettings,
    #[serde(default)]
    seed: u64,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn read(path: &Path) -> qae_core::Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_noise(name: &str) -> qae_core::Result<NoiseModel> {
    match name {
        "global" => Ok(NoiseModel::GlobalDepolarizing),
        "local" => Ok(NoiseModel::LocalDepolarizing),
        "leakage" => Ok(NoiseModel::leakage()),
        other => Err(usage(format!("unknown noise model `{other}`"))),
    }
}

fn train(config: &Path, out: &Path, seed: Option<u64>, quiet: bool) -> qae_core::Result<()> {
    let plan: TrainPlan = serde_json::from_str(&read(config)?).map_err(|e| usage(e.to_string()))?;
    check_epsilon(plan.epsilon).map_err(|e| usage(e.to_string()))?;
    if !(2..=harness::MAX_QUBITS).contains(&plan.n) {
        return Err(usage(format!("n must lie in 2..={}", harness::MAX_QUBITS)));
    }
    let training = EncoderTraining {
        data: match plan.data {
            DataKind::W => StateKind::W,
            DataKind::H2 => StateKind::H2,
        },
        n: plan.n,
        layers: plan.layers,
        mode: plan.mode,
        extra_stages: plan.extra_stages,
        cost: match plan.cost {
            CostArg::Projection => TrainingCost::JunkProjection,
            CostArg::Purity => TrainingCost::Purity,
        },
        noise: plan.noise.map(|m| (m, plan.epsilon)),
        settings: plan.training,
        seed: seed.unwrap_or(plan.seed),
    };
    let trained = training.run()?;
    std::fs::create_dir_all(out)?;
    harness::write_atomic(&out.join("params.json"), trained.theta.to_json().as_bytes())?;
    for (k, r) in trained.records.iter().enumerate() {
        harness::write_atomic(&out.join(format!("stage{}_curve.csv", k + 1)), r.curve_csv().as_bytes())?;
        if !quiet {
            eprintln!(
                "stage {}: cost {:.6e} after {} iterations (converged: {}, attempt {})",
                k + 1,
                r.final_cost,
                r.iterations,
                r.converged,
                r.attempt
            );
        }
    }
    harness::write_atomic(&out.join("pipeline.txt"), harness::write_pipeline(&trained.pipeline).as_bytes())?;
    println!("final_cost {:.12e}", trained.final_cost());
    Ok(())
}

fn mitigate_cmd(state: &Path, pipeline: &Path, noise: &str, epsilon: f64) -> qae_core::Result<()> {
    check_epsilon(epsilon).map_err(|e| usage(e.to_string()))?;
    let ideal = harness::read_state(&read(state)?)?;
    let pipeline = harness::read_pipeline(&read(pipeline)?)?;
    let noisy = apply_noise(&ideal, &parse_noise(noise)?, epsilon)?;
    let outcome = mitigate(&noisy, &pipeline)?;
    println!("keep_probability {:.12e}", outcome.keep_probability);
    println!("uncorrected_infidelity {:.12e}", infidelity(&ideal, &noisy)?);
    println!("corrected_infidelity {:.12e}", infidelity(&ideal, &outcome.corrected)?);
    Ok(())
}

fn sweep(config: &Path, out: &Path, seed: Option<u64>, trials: Option<usize>, quiet: bool) -> qae_core::Result<()> {
    let mut c = ExperimentConfig::from_json(&read(config)?)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(t) = trials {
        c.trials = t;
    }
    c.validate()?;
    let records = harness::run_experiment(&c)?;
    let path = match &c.output {
        Some(p) => p.clone(),
        None => {
            std::fs::create_dir_all(out)?;
            out.join(format!("{}.csv", c.label()))
        }
    };
    harness::emit_report(&records, &path)?;
    if !quiet {
        eprintln!("{} records written to {}", records.len(), path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> qae_core::Result<()> {
    match cli.command {
        Command::Train { config, out, seed } => train(&config, &out, seed, cli.quiet),
        Command::Mitigate {
            state,
            pipeline,
            noise,
            epsilon,
        } => mitigate_cmd(&state, &pipeline, &noise, epsilon),
        Command::Sweep {
            config,
            out,
            seed,
            trials,
        } => sweep(&config, &out, seed, trials, cli.quiet),
        Command::Reproduce {
            figure,
            out,
            seed,
            trials,
        } => {
            let (_, manifest) = harness::reproduce(&figure, &out, seed, trials)?;
            if !cli.quiet {
                eprintln!(
                    "{}: {} records in {:.1} s -> {}",
                    figure,
                    manifest.records,
                    manifest.wall_time_seconds,
                    out.join(&manifest.csv).display()
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse(_) | Error::BadKind(_) | Error::BadEpsilon(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
