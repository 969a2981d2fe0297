use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{check_epsilon, NoiseModel};
use crate::training::{Convergence, StageConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    KnownEncoderSweep,
    TrainedSweep,
    LargeNoise,
    MixedStates,
    NoisyCircuit,
    MeasurementStudy,
    Leakage,
    H2,
    PurityComparison,
    DepolScaling,
    LayerSweep,
    StageComparison,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        ExperimentKind::KnownEncoderSweep,
        ExperimentKind::TrainedSweep,
        ExperimentKind::LargeNoise,
        ExperimentKind::MixedStates,
        ExperimentKind::NoisyCircuit,
        ExperimentKind::MeasurementStudy,
        ExperimentKind::Leakage,
        ExperimentKind::H2,
        ExperimentKind::PurityComparison,
        ExperimentKind::DepolScaling,
        ExperimentKind::LayerSweep,
        ExperimentKind::StageComparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::KnownEncoderSweep => "known_encoder_sweep",
            ExperimentKind::TrainedSweep => "trained_sweep",
            ExperimentKind::LargeNoise => "large_noise",
            ExperimentKind::MixedStates => "mixed_states",
            ExperimentKind::NoisyCircuit => "noisy_circuit",
            ExperimentKind::MeasurementStudy => "measurement_study",
            ExperimentKind::Leakage => "leakage",
            ExperimentKind::H2 => "h2",
            ExperimentKind::PurityComparison => "purity_comparison",
            ExperimentKind::DepolScaling => "depol_scaling",
            ExperimentKind::LayerSweep => "layer_sweep",
            ExperimentKind::StageComparison => "stage_comparison",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ExperimentKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageMode {
    /// One ancilla qubit per stage, one ansatz group per stage.
    MultiStage,
    /// A single group trained directly against the final latent subspace.
    SingleStage,
    /// Run both and label the records.
    Both,
}

/// Distance above the known cost floor at which restarts stop.
pub const ACCEPT_MARGIN: f64 = 1e-6;

/// Optimizer settings shared by every trained stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSettings {
    pub gamma: f64,
    /// Step size of odd-numbered restart attempts, used only where the cost
    /// floor is unknown.
    pub alt_gamma: Option<f64>,
    pub max_iters: usize,
    pub window: usize,
    pub min_improvement: f64,
    pub fd_step: f64,
    pub exact_gradient: bool,
    pub restarts: usize,
    pub restart_spread: f64,
    /// Train on the noisy states of each grid point instead of the ideal ones.
    pub noisy_inputs: bool,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            alt_gamma: Some(2.0),
            max_iters: 20_000,
            window: 100,
            min_improvement: 1e-9,
            fd_step: 1e-5,
            exact_gradient: true,
            restarts: 9,
            restart_spread: 0.5,
            noisy_inputs: true,
        }
    }
}

impl TrainingSettings {
    /// Apply these settings to a stage trained on inputs with `noise`.
    ///
    /// Restarts stop early only where the lowest reachable cost is known:
    /// within `ACCEPT_MARGIN` of zero for ideal inputs and of `eps Tr[M_J] / N`
    /// for global depolarizing noise. Otherwise every restart runs, alternating
    /// between `gamma` and `alt_gamma`.
    pub fn configure(&self, stage: &mut StageConfig, noise: Option<(&NoiseModel, f64)>) {
        stage.gamma = self.gamma;
        stage.max_iters = self.max_iters;
        stage.convergence = Convergence {
            window: self.window,
            min_improvement: self.min_improvement,
        };
        stage.fd_step = self.fd_step;
        stage.exact_gradient = self.exact_gradient;
        stage.restarts = self.restarts;
        stage.restart_spread = self.restart_spread;
        let dim = stage.latent.space().dim() as f64;
        let junk = dim - stage.latent.rank() as f64;
        stage.accept_cost = match noise {
            None => ACCEPT_MARGIN,
            Some((_, eps)) if eps == 0.0 => ACCEPT_MARGIN,
            Some((NoiseModel::GlobalDepolarizing, eps)) => ACCEPT_MARGIN + eps * junk / dim,
            Some(_) => 0.0,
        };
        stage.alt_gamma = if stage.accept_cost == 0.0 { self.alt_gamma } else { None };
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.fd_step > 0.0) || !(self.restart_spread > 0.0)
            || self.alt_gamma.is_some_and(|g| !(g > 0.0))
        {
            return Err(Error::Config("gamma, fd_step and restart_spread must be positive".into()));
        }
        if self.window == 0 || self.max_iters == 0 {
            return Err(Error::Config("window and max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// One experiment, as read from a JSON configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub label: Option<String>,
    /// Qubit counts.
    #[serde(default = "default_n")]
    pub n: Vec<usize>,
    /// Qudit dimension for the leakage experiment.
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_noise")]
    pub noise: Vec<NoiseModel>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Layers per ansatz group.
    #[serde(default = "default_layers")]
    pub layers: Vec<usize>,
    #[serde(default = "default_stage_mode")]
    pub stage_mode: StageMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub training: TrainingSettings,
    /// Standard deviations of the Gaussian parameter noise (noisy-circuit study).
    #[serde(default = "default_circuit_noise")]
    pub circuit_noise: Vec<f64>,
    /// Random projectors (measurement study) or random network unitaries (leakage baseline).
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Complex instead of real Gaussian coefficients for generated states.
    #[serde(default)]
    pub complex_coefficients: bool,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_n() -> Vec<usize> {
    vec![4]
}
fn default_d() -> usize {
    5
}
fn default_noise() -> Vec<NoiseModel> {
    vec![NoiseModel::LocalDepolarizing, NoiseModel::GlobalDepolarizing]
}
fn default_trials() -> usize {
    1000
}
fn default_layers() -> Vec<usize> {
    vec![1]
}
fn default_stage_mode() -> StageMode {
    StageMode::MultiStage
}
fn default_circuit_noise() -> Vec<f64> {
    vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2]
}
fn default_samples() -> usize {
    10
}

pub const MAX_QUBITS: usize = 5;

impl ExperimentConfig {
    /// Defaults for everything except kind and the noise grid.
    pub fn new(kind: ExperimentKind, epsilons: Vec<f64>) -> Self {
        Self {
            kind,
            label: None,
            n: default_n(),
            d: default_d(),
            noise: default_noise(),
            epsilons,
            trials: default_trials(),
            layers: default_layers(),
            stage_mode: default_stage_mode(),
            seed: 0,
            training: TrainingSettings::default(),
            circuit_noise: default_circuit_noise(),
            samples: default_samples(),
            complex_coefficients: false,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("epsilon grid is empty".into()));
        }
        for &e in &self.epsilons {
            check_epsilon(e).map_err(|_| Error::Config(format!("epsilon {e} is outside [0, 1]")))?;
        }
        if self.n.is_empty() || self.n.iter().any(|&n| !(2..=MAX_QUBITS).contains(&n)) {
            return Err(Error::Config(format!("qubit counts must lie in 2..={MAX_QUBITS}")));
        }
        if self.d < 3 {
            return Err(Error::Config("qudit dimension must be at least 3".into()));
        }
        if self.noise.is_empty() {
            return Err(Error::Config("noise list is empty".into()));
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return Err(Error::Config("layer counts must be at least 1".into()));
        }
        if self.circuit_noise.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Config("circuit noise levels must be finite and non-negative".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        self.training.validate()?;
        let needs_four = matches!(
            self.kind,
            ExperimentKind::H2 | ExperimentKind::MeasurementStudy
        );
        if needs_four && self.n.iter().any(|&n| n != 4) {
            return Err(Error::Config(format!("{} is defined for n = 4", self.kind.name())));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(r#"{"kind": "trained_sweep", "epsilons": [0.1]}"#).unwrap();
        assert_eq!(c.trials, 1000);
        assert_eq!(c.n, vec![4]);
        assert_eq!(c.noise.len(), 2);
        assert_eq!(c.training, TrainingSettings::default());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(ExperimentConfig::from_json(r#"{"kind": "h2", "epsilons": [0.1], "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "h2", "epsilons": [1.5]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "h2", "epsilons": [0.1], "trials": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "h2", "epsilons": [0.1], "n": [3]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "nope", "epsilons": [0.1]}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"kind": "h2", "epsilons": [0.1], "training": {"gama": 1}}"#
        )
        .is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let mut c = ExperimentConfig::new(ExperimentKind::Leakage, vec![0.0, 0.5]);
        c.noise = vec![NoiseModel::leakage()];
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
