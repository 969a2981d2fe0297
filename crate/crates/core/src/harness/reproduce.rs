//! Named figure presets.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind, StageMode};
use super::experiments::run_experiment;
use super::record::{emit_report, write_atomic, ResultRecord};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;

/// Figure identifiers accepted by [`reproduce`].
pub const FIGURES: [&str; 12] = [
    "fig2",
    "fig4",
    "figS-large",
    "figS-mixed",
    "figS-noisycircuit",
    "figS-mismatch",
    "figS-leak",
    "figS-h2",
    "figS-purity",
    "figS-layers",
    "figS-stages",
    "appB-scaling",
];

const SWEEP: [f64; 7] = [0.0, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1];

fn tenths(last: usize) -> Vec<f64> {
    (0..=last).map(|k| k as f64 / 10.0).collect()
}

/// Default configuration of a figure.
pub fn figure_config(id: &str) -> Result<ExperimentConfig> {
    use ExperimentKind::*;
    let mut c = match id {
        "fig2" => {
            let mut c = ExperimentConfig::new(KnownEncoderSweep, vec![0.05]);
            c.n = vec![2, 3, 4, 5];
            c
        }
        "fig4" => ExperimentConfig::new(TrainedSweep, SWEEP.to_vec()),
        "figS-large" => ExperimentConfig::new(LargeNoise, tenths(10)),
        "figS-mixed" => ExperimentConfig::new(MixedStates, SWEEP.to_vec()),
        "figS-noisycircuit" => ExperimentConfig::new(NoisyCircuit, vec![0.05, 0.1]),
        "figS-mismatch" => {
            let mut c = ExperimentConfig::new(MeasurementStudy, vec![0.0, 0.05, 0.1]);
            c.noise = vec![NoiseModel::GlobalDepolarizing];
            c
        }
        "figS-leak" => {
            let mut c = ExperimentConfig::new(Leakage, tenths(9));
            c.noise = vec![NoiseModel::leakage()];
            c
        }
        "figS-h2" => ExperimentConfig::new(H2, SWEEP.to_vec()),
        "figS-purity" => ExperimentConfig::new(PurityComparison, vec![0.0, 0.1]),
        "figS-layers" => {
            let mut c = ExperimentConfig::new(LayerSweep, vec![0.0]);
            c.layers = vec![1, 2, 3];
            c.noise = vec![NoiseModel::GlobalDepolarizing];
            c
        }
        "figS-stages" => {
            let mut c = ExperimentConfig::new(StageComparison, SWEEP.to_vec());
            c.stage_mode = StageMode::Both;
            c
        }
        "appB-scaling" => {
            let mut c = ExperimentConfig::new(DepolScaling, vec![0.05]);
            c.n = vec![2, 3, 4, 5];
            c.noise = vec![NoiseModel::GlobalDepolarizing];
            c
        }
        other => {
            return Err(Error::Config(format!(
                "unknown figure `{other}`; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    c.label = Some(id.to_string());
    Ok(c)
}

/// Run metadata written next to the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub figure: String,
    pub version: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub records: usize,
    pub csv: PathBuf,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub config: ExperimentConfig,
}

/// Run a figure preset and write `<id>.csv` and `<id>.manifest.json` into `out_dir`.
pub fn reproduce(id: &str, out_dir: &Path, seed: u64, trials: Option<usize>) -> Result<(Vec<ResultRecord>, Manifest)> {
    let mut config = figure_config(id)?;
    config.seed = seed;
    if let Some(t) = trials {
        config.trials = t;
    }
    config.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let records = run_experiment(&config)?;
    let csv = out_dir.join(format!("{id}.csv"));
    emit_report(&records, &csv)?;
    let manifest = Manifest {
        figure: id.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        trials: config.trials,
        records: records.len(),
        csv: PathBuf::from(format!("{id}.csv")),
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&out_dir.join(format!("{id}.manifest.json")), json.as_bytes())?;
    Ok((records, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_has_a_valid_config() {
        for id in FIGURES {
            figure_config(id).unwrap().validate().unwrap();
        }
        assert!(figure_config("fig9").is_err());
    }

    #[test]
    fn known_encoder_figure_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, _) = reproduce("appB-scaling", &dir.path().join("a"), 7, Some(5)).unwrap();
        let (b, m) = reproduce("appB-scaling", &dir.path().join("b"), 7, Some(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(m.records, 4);
        let read = |p: &str| std::fs::read(dir.path().join(p).join("appB-scaling.csv")).unwrap();
        assert_eq!(read("a"), read("b"));
        assert!(dir.path().join("a/appB-scaling.manifest.json").exists());
    }
}
