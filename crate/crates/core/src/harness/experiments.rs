//! Figure-level experiment runners.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, StageMode, TrainingSettings};
use super::record::ResultRecord;
use super::states::{gen_state, training_set, StateKind};
use crate::ansatz::{perturb_params, GeneratorReading, LayeredAnsatz, ParamVector, QuditGeneratorAnsatz};
use crate::baseline::{haar_unitary, layout_swap, nn_output, NnLayout};
use crate::encoder::{known_w_pipeline, latent_projector, random_subspace_projector, w_latent_qubits, EncoderPipeline};
use crate::error::{Error, Result};
use crate::mitigation::{mitigate, predicted_corrected_infidelity};
use crate::noise::{apply_noise, error_state, NoiseModel};
use crate::numkit::ComplexMatrix;
use crate::qstate::{infidelity, DensityMatrix, HilbertSpace, Projector, PureState};
use crate::seed;
use crate::training::{train_multistage, train_qudit, CostSpec, PurityTerm, StageConfig, TrainRecord};

// seed-derivation stream tags
const STATES: u64 = 1;
const TRAIN: u64 = 2;
const CIRCUIT: u64 = 3;
const PROJECTORS: u64 = 4;
const NETWORKS: u64 = 5;

pub const LARGE_NOISE_NOTE: &str =
    "improvement expected for eps <= 0.6 (local and global) and eps <= 0.8 (global)";

/// Outcome of one mitigation trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub uncorrected: f64,
    /// `None` when every outcome was discarded.
    pub corrected: Option<f64>,
    pub keep: f64,
}

/// Order-independent aggregate of a set of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub kept: usize,
    pub discarded: usize,
    pub mean_uncorrected: f64,
    pub stderr_uncorrected: f64,
    pub mean_corrected: f64,
    pub stderr_corrected: f64,
    pub mean_keep: f64,
}

impl Summary {
    pub fn ratio(&self) -> Option<f64> {
        (self.mean_uncorrected > 1e-12).then(|| self.mean_corrected / self.mean_uncorrected)
    }

    /// Relative reduction `1 - corrected / uncorrected`.
    pub fn reduction(&self) -> Option<f64> {
        self.ratio().map(|r| 1.0 - r)
    }
}

/// Mean and standard error (sample standard deviation over `sqrt(k)`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

pub fn summarize(outcomes: &[TrialOutcome]) -> Summary {
    let unc: Vec<f64> = outcomes.iter().map(|o| o.uncorrected).collect();
    let cor: Vec<f64> = outcomes.iter().filter_map(|o| o.corrected).collect();
    let keep: Vec<f64> = outcomes.iter().map(|o| o.keep).collect();
    let (mu, su) = mean_stderr(&unc);
    let (mc, sc) = mean_stderr(&cor);
    Summary {
        trials: outcomes.len(),
        kept: cor.len(),
        discarded: outcomes.len() - cor.len(),
        mean_uncorrected: mu,
        stderr_uncorrected: su,
        mean_corrected: mc,
        stderr_corrected: sc,
        mean_keep: mean_stderr(&keep).0,
    }
}

/// Run `count` independent trials in parallel; results are gathered by index.
pub fn run_trials<F>(count: usize, trial_seed: impl Fn(usize) -> u64 + Sync, f: F) -> Result<Vec<TrialOutcome>>
where
    F: Fn(usize) -> Result<TrialOutcome> + Sync,
{
    let results: Vec<Result<TrialOutcome>> = (0..count).into_par_iter().map(&f).collect();
    results
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            r.map_err(|e| Error::Trial {
                trial: k,
                seed: trial_seed(k),
                source: Box::new(e),
            })
        })
        .collect()
}

/// Add noise to `ideal`, mitigate, and compare both against `ideal`.
pub fn mitigation_trial(
    ideal: &DensityMatrix,
    noise: &NoiseModel,
    epsilon: f64,
    pipeline: &EncoderPipeline,
) -> Result<TrialOutcome> {
    let noisy = apply_noise(ideal, noise, epsilon)?;
    let uncorrected = infidelity(ideal, &noisy)?;
    match mitigate(&noisy, pipeline) {
        Ok(out) => Ok(TrialOutcome {
            uncorrected,
            corrected: Some(infidelity(ideal, &out.corrected)?),
            keep: out.keep_probability,
        }),
        Err(Error::AllDiscarded { keep }) => Ok(TrialOutcome {
            uncorrected,
            corrected: None,
            keep,
        }),
        Err(e) => Err(e),
    }
}

/// Test-state stream shared by every grid point of a run.
pub fn test_state_seed(master: u64, kind: StateKind, size: usize) -> u64 {
    seed::derive(master, &[STATES, state_tag(kind), size as u64])
}

fn state_tag(kind: StateKind) -> u64 {
    match kind {
        StateKind::W => 0,
        StateKind::H2 => 1,
        StateKind::LeakageBasis => 2,
        StateKind::MixedW => 3,
    }
}

/// Mitigate `trials` seeded test states with a fixed pipeline.
pub fn evaluate_pipeline(
    pipeline: &EncoderPipeline,
    kind: StateKind,
    size: usize,
    trials: usize,
    master: u64,
    complex: bool,
    noise: &NoiseModel,
    epsilon: f64,
) -> Result<Summary> {
    let stream = test_state_seed(master, kind, size);
    let outcomes = run_trials(
        trials,
        |k| seed::derive(stream, &[k as u64]),
        |k| {
            let ideal = gen_state(kind, size, stream, k as u64, complex)?;
            mitigation_trial(&ideal, noise, epsilon, pipeline)
        },
    )?;
    Ok(summarize(&outcomes))
}

/// Cost used to train the layered encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingCost {
    JunkProjection,
    /// One minus the mean purity of the qubits driven to `|0>` so far.
    Purity,
}

/// Everything needed to train one layered encoder on a qubit data set.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderTraining {
    pub data: StateKind,
    pub n: usize,
    pub layers: usize,
    pub mode: StageMode,
    /// Stages beyond the matched latent size (over-compression).
    pub extra_stages: usize,
    pub cost: TrainingCost,
    /// Noise applied to the training inputs.
    pub noise: Option<(NoiseModel, f64)>,
    pub settings: TrainingSettings,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    pub ansatz: LayeredAnsatz,
    pub theta: ParamVector,
    pub records: Vec<TrainRecord>,
    /// Latent projector of each stage.
    pub latents: Vec<Projector>,
    pub pipeline: EncoderPipeline,
}

impl EncoderTraining {
    pub fn new(data: StateKind, n: usize, seed: u64) -> Self {
        Self {
            data,
            n,
            layers: 1,
            mode: StageMode::MultiStage,
            extra_stages: 0,
            cost: TrainingCost::JunkProjection,
            noise: None,
            settings: TrainingSettings::default(),
            seed,
        }
    }

    /// Ancilla counts of the stages: `1, 2, ..., n - m` (+ extra) or just the last.
    pub fn stage_ancillas(&self) -> Result<Vec<usize>> {
        let m = w_latent_qubits(self.n.max(2));
        let last = self.n - m + self.extra_stages;
        if last == 0 || last >= self.n {
            return Err(Error::BadSplit(format!("{last} ancilla qubits out of {}", self.n)));
        }
        Ok(match self.mode {
            StageMode::MultiStage => (1..=last).collect(),
            StageMode::SingleStage => vec![last],
            StageMode::Both => {
                return Err(Error::Config("pick a single stage mode to train".into()));
            }
        })
    }

    pub fn inputs(&self) -> Result<Vec<DensityMatrix>> {
        let ideal = training_set(self.data, self.n)?;
        match &self.noise {
            Some((model, eps)) => ideal.iter().map(|r| apply_noise(r, model, *eps)).collect(),
            None => Ok(ideal),
        }
    }

    pub fn run(&self) -> Result<TrainedEncoder> {
        let ancillas = self.stage_ancillas()?;
        let space = HilbertSpace::qubits(self.n);
        let inputs = self.inputs()?;
        let ansatz = LayeredAnsatz::new(self.n, self.layers, ancillas.len())?;
        let theta0 = ansatz.init_params(seed::derive(self.seed, &[0]));
        let mut stages = Vec::with_capacity(ancillas.len());
        let mut latents = Vec::with_capacity(ancillas.len());
        for (s, &a) in ancillas.iter().enumerate() {
            let (ml, mj) = latent_projector(&space, a)?;
            let cost = match self.cost {
                TrainingCost::JunkProjection => CostSpec::projection(mj, inputs.clone()),
                TrainingCost::Purity => CostSpec::purity(
                    (0..a)
                        .map(|q| PurityTerm {
                            keep: vec![q],
                            weight: 1.0 / a as f64,
                        })
                        .collect(),
                    inputs.clone(),
                ),
            };
            let mut stage = StageConfig::with_cost(cost, ml.clone(), seed::derive(self.seed, &[1, s as u64]));
            self.settings.configure(&mut stage, self.noise.as_ref().map(|(m, e)| (m, *e)));
            stages.push(stage);
            latents.push(ml);
        }
        let result = train_multistage(&ansatz, &stages, &theta0)?;
        Ok(TrainedEncoder {
            ansatz,
            theta: result.theta,
            records: result.records,
            latents,
            pipeline: result.pipeline,
        })
    }
}

impl TrainedEncoder {
    /// Pipeline built from the first `stages` groups and that stage's projector.
    pub fn pipeline_after(&self, stages: usize) -> Result<EncoderPipeline> {
        if stages == 0 || stages > self.latents.len() {
            return Err(Error::BadIndex(format!("stage {stages} of {}", self.latents.len())));
        }
        let u = self.ansatz.layered_unitary(&self.theta, stages)?;
        EncoderPipeline::new(u, self.latents[stages - 1].clone())
    }

    /// Pipeline with Gaussian noise of standard deviation `sigma` on every parameter.
    pub fn perturbed_pipeline(&self, sigma: f64, seed: u64) -> Result<EncoderPipeline> {
        let theta = perturb_params(&self.theta, sigma, seed)?;
        let u = self.ansatz.layered_unitary(&theta, self.latents.len())?;
        EncoderPipeline::new(u, self.pipeline.latent_projector().clone())
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.final_cost)
    }

    pub fn total_iterations(&self) -> usize {
        self.records.iter().map(|r| r.iterations).sum()
    }

    pub fn converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }
}

/// Lowest reachable junk-projection cost under global depolarizing noise:
/// `eps Tr[M_J] / N`.
pub fn global_noise_floor(epsilon: f64, junk: &Projector) -> f64 {
    epsilon * junk.rank() as f64 / junk.space().dim() as f64
}

/// Trained qudit encoder for the leakage data set `{|1>, ..., |d-1>}` with
/// junk level `junk_level`.
pub fn train_leakage_encoder(
    d: usize,
    junk_level: usize,
    settings: &TrainingSettings,
    master: u64,
) -> Result<crate::training::QuditTrainResult> {
    let space = HilbertSpace::qudit(d);
    let ansatz = QuditGeneratorAnsatz::full(d, GeneratorReading::HermitianPair)?;
    let inputs: Vec<DensityMatrix> = (1..d)
        .map(|i| Ok(PureState::basis(space.clone(), i)?.density()))
        .collect::<Result<_>>()?;
    let junk = Projector::onto_basis(space.clone(), &[junk_level])?;
    let latent = junk.complement();
    let stream = seed::derive(master, &[TRAIN, junk_level as u64]);
    let mut stage = StageConfig::with_cost(CostSpec::projection(junk, inputs), latent, stream);
    settings.configure(&mut stage, None);
    let mut rng = seed::rng(stream, &[0]);
    let angles0: Vec<f64> = (0..ansatz.num_params()).map(|_| rng.random_range(-0.1..=0.1)).collect();
    train_qudit(&ansatz, &stage, &angles0)
}

/// Average infidelity of the trace-preserving network output over the leakage
/// data set, for the SWAP network followed by `samples` Haar-random networks.
pub fn leakage_network_infidelities(d: usize, epsilon: f64, samples: usize, master: u64) -> Result<Vec<f64>> {
    let space = HilbertSpace::qudit(d);
    let layout = NnLayout::autoencoder(space.clone());
    let leak = NoiseModel::leakage();
    let mut networks = vec![layout_swap(&layout)];
    networks.extend((0..samples).map(|k| haar_unitary(d * d, seed::derive(master, &[NETWORKS, k as u64]))));
    networks
        .par_iter()
        .map(|u| {
            let mut total = 0.0;
            for i in 1..d {
                let ideal = PureState::basis(space.clone(), i)?.density();
                let noisy = apply_noise(&ideal, &leak, epsilon)?;
                total += infidelity(&ideal, &nn_output(&noisy, u, &layout)?)?;
            }
            Ok(total / (d - 1) as f64)
        })
        .collect()
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    cache: HashMap<String, TrainedEncoder>,
    records: Vec<ResultRecord>,
}

impl<'a> Runner<'a> {
    fn train_seed(&self) -> u64 {
        seed::derive(self.config.seed, &[TRAIN])
    }

    fn base_training(&self, data: StateKind, n: usize) -> EncoderTraining {
        let mut t = EncoderTraining::new(data, n, self.train_seed());
        t.settings = self.config.training.clone();
        t
    }

    fn trained(&mut self, spec: EncoderTraining) -> Result<TrainedEncoder> {
        let key = format!("{spec:?}");
        if let Some(t) = self.cache.get(&key) {
            return Ok(t.clone());
        }
        let t = spec.run()?;
        self.cache.insert(key, t.clone());
        Ok(t)
    }

    /// Training inputs follow the grid point when `noisy_inputs` is set.
    fn training_noise(&self, noise: &NoiseModel, eps: f64) -> Option<(NoiseModel, f64)> {
        (self.config.training.noisy_inputs && eps > 0.0).then(|| (noise.clone(), eps))
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        label: String,
        noise: &NoiseModel,
        n: usize,
        eps: f64,
        param: f64,
        s: &Summary,
        reference: Option<f64>,
        final_cost: Option<f64>,
        extra_note: Option<&str>,
    ) {
        let mut notes: Vec<&str> = Vec::new();
        if let Some(note) = noise.note() {
            notes.push(note);
        }
        if let Some(note) = extra_note {
            notes.push(note);
        }
        self.records.push(ResultRecord {
            kind: self.config.kind.name().to_string(),
            label,
            noise: noise.label().to_string(),
            n,
            epsilon: eps,
            param,
            trials: s.trials,
            kept: s.kept,
            discarded: s.discarded,
            mean_uncorrected: s.mean_uncorrected,
            stderr_uncorrected: s.stderr_uncorrected,
            mean_corrected: s.mean_corrected,
            stderr_corrected: s.stderr_corrected,
            mean_keep: s.mean_keep,
            ratio: s.ratio(),
            reference,
            final_cost,
            seed: self.config.seed,
            notes: notes.join("; "),
        });
    }

    fn evaluate(&self, pipeline: &EncoderPipeline, kind: StateKind, size: usize, noise: &NoiseModel, eps: f64) -> Result<Summary> {
        evaluate_pipeline(
            pipeline,
            kind,
            size,
            self.config.trials,
            self.config.seed,
            self.config.complex_coefficients,
            noise,
            eps,
        )
    }

    fn known(&mut self, scaling: bool) -> Result<()> {
        let c = self.config;
        for &n in &c.n {
            let pipeline = known_w_pipeline(n)?;
            let big_n = (1usize << n) as f64;
            let big_l = pipeline.latent_dim() as f64;
            for noise in &c.noise {
                for &eps in &c.epsilons {
                    let stream = test_state_seed(c.seed, StateKind::W, n);
                    let complex = c.complex_coefficients;
                    let results: Vec<Result<(TrialOutcome, f64)>> = (0..c.trials)
                        .into_par_iter()
                        .map(|k| {
                            let ideal = gen_state(StateKind::W, n, stream, k as u64, complex)?;
                            let psi = dominant_vector(&ideal)?;
                            let err = error_state(noise, &ideal)?;
                            let predicted = predicted_corrected_infidelity(&psi, &err, &pipeline, eps)?;
                            Ok((mitigation_trial(&ideal, noise, eps, &pipeline)?, predicted))
                        })
                        .collect();
                    let mut outcomes = Vec::with_capacity(c.trials);
                    let mut predicted = Vec::with_capacity(c.trials);
                    for (k, r) in results.into_iter().enumerate() {
                        let (o, p) = r.map_err(|e| Error::Trial {
                            trial: k,
                            seed: seed::derive(stream, &[k as u64]),
                            source: Box::new(e),
                        })?;
                        outcomes.push(o);
                        predicted.push(p);
                    }
                    let s = summarize(&outcomes);
                    let reference = if scaling {
                        (big_l - 1.0) / (big_n - 1.0)
                    } else {
                        mean_stderr(&predicted).0
                    };
                    self.push("known-encoder".into(), noise, n, eps, big_l, &s, Some(reference), None, None);
                }
            }
        }
        Ok(())
    }

    fn modes(&self) -> Vec<StageMode> {
        match self.config.stage_mode {
            StageMode::Both => vec![StageMode::SingleStage, StageMode::MultiStage],
            m => vec![m],
        }
    }

    fn trained_sweep(&mut self, data: StateKind, note: Option<&str>) -> Result<()> {
        let c = self.config;
        for &layers in &c.layers {
            for mode in self.modes() {
                for &n in &c.n {
                    for noise in &c.noise {
                        for &eps in &c.epsilons {
                            let mut spec = self.base_training(data, n);
                            spec.layers = layers;
                            spec.mode = mode;
                            spec.noise = self.training_noise(noise, eps);
                            let t = self.trained(spec)?;
                            let s = self.evaluate(&t.pipeline, data, n, noise, eps)?;
                            let floor = matches!(noise, NoiseModel::GlobalDepolarizing)
                                .then(|| global_noise_floor(eps, t.pipeline.junk_projector()));
                            self.push(
                                mode_label(mode).into(),
                                noise,
                                n,
                                eps,
                                layers as f64,
                                &s,
                                floor,
                                Some(t.final_cost()),
                                note,
                            );
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn mixed(&mut self) -> Result<()> {
        let c = self.config;
        for &layers in &c.layers {
            for &n in &c.n {
                let mut spec = self.base_training(StateKind::W, n);
                spec.layers = layers;
                let t = self.trained(spec)?;
                for noise in &c.noise {
                    for &eps in &c.epsilons {
                        let s = self.evaluate(&t.pipeline, StateKind::MixedW, n, noise, eps)?;
                        self.push("pure-trained".into(), noise, n, eps, layers as f64, &s, None, Some(t.final_cost()), None);
                    }
                }
            }
        }
        Ok(())
    }

    fn noisy_circuit(&mut self) -> Result<()> {
        let c = self.config;
        for &n in &c.n {
            for noise in &c.noise {
                for &eps in &c.epsilons {
                    let mut spec = self.base_training(StateKind::W, n);
                    spec.noise = self.training_noise(noise, eps);
                    let t = self.trained(spec)?;
                    for (j, &sigma) in c.circuit_noise.iter().enumerate() {
                        let stream = test_state_seed(c.seed, StateKind::W, n);
                        let circuit_stream = seed::derive(c.seed, &[CIRCUIT, j as u64]);
                        let complex = c.complex_coefficients;
                        let outcomes = run_trials(
                            c.trials,
                            |k| seed::derive(circuit_stream, &[k as u64]),
                            |k| {
                                let ideal = gen_state(StateKind::W, n, stream, k as u64, complex)?;
                                let p = t.perturbed_pipeline(sigma, seed::derive(circuit_stream, &[k as u64]))?;
                                mitigation_trial(&ideal, noise, eps, &p)
                            },
                        )?;
                        let s = summarize(&outcomes);
                        self.push("circuit-noise".into(), noise, n, eps, sigma, &s, None, Some(t.final_cost()), None);
                    }
                }
            }
        }
        Ok(())
    }

    fn measurement(&mut self) -> Result<()> {
        let c = self.config;
        let n = 4;
        let space = HilbertSpace::qubits(n);
        for noise in &c.noise {
            for &eps in &c.epsilons {
                let mut spec = self.base_training(StateKind::W, n);
                spec.extra_stages = 1;
                spec.noise = self.training_noise(noise, eps);
                let t = self.trained(spec.clone())?;
                for (stages, label) in [(1, "rank-8 under"), (2, "rank-4 matched"), (3, "rank-2 over")] {
                    let p = t.pipeline_after(stages)?;
                    let s = self.evaluate(&p, StateKind::W, n, noise, eps)?;
                    self.push(label.into(), noise, n, eps, p.latent_dim() as f64, &s, None, Some(t.records[stages - 1].final_cost), None);
                }
                for k in 0..c.samples {
                    let latent = random_subspace_projector(&space, 8, seed::derive(c.seed, &[PROJECTORS, k as u64]))?;
                    let stage_seed = seed::derive(spec.seed, &[PROJECTORS, k as u64]);
                    let ansatz = LayeredAnsatz::new(n, 1, 1)?;
                    let mut stage = StageConfig::projection(latent.clone(), spec.inputs()?, stage_seed);
                    c.training.configure(&mut stage, spec.noise.as_ref().map(|(m, e)| (m, *e)));
                    let r = train_multistage(&ansatz, &[stage], &ansatz.init_params(stage_seed))?;
                    let s = self.evaluate(&r.pipeline, StateKind::W, n, noise, eps)?;
                    let final_cost = r.records[0].final_cost;
                    self.push(format!("random-rank-8 #{k}"), noise, n, eps, 8.0, &s, None, Some(final_cost), None);
                }
            }
        }
        Ok(())
    }

    fn leakage(&mut self) -> Result<()> {
        let c = self.config;
        let d = c.d;
        let space = HilbertSpace::qudit(d);
        let identity = EncoderPipeline::new(
            ComplexMatrix::identity(d),
            Projector::onto_basis(space.clone(), &[0])?.complement(),
        )?;
        let mut pipelines: Vec<(String, EncoderPipeline, Option<f64>)> = vec![("identity".into(), identity, None)];
        for junk in [0, d - 1] {
            let t = train_leakage_encoder(d, junk, &c.training, c.seed)?;
            pipelines.push((format!("trained junk={junk}"), t.pipeline, Some(t.final_cost)));
        }
        for noise in &c.noise {
            for &eps in &c.epsilons {
                for (label, p, cost) in &pipelines {
                    let s = self.evaluate(p, StateKind::LeakageBasis, d, noise, eps)?;
                    self.push(label.clone(), noise, d, eps, 0.0, &s, None, *cost, None);
                }
                if matches!(noise, NoiseModel::Leakage { level: 0 }) {
                    let values = leakage_network_infidelities(d, eps, c.samples, c.seed)?;
                    let (mean, stderr) = mean_stderr(&values);
                    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let s = Summary {
                        trials: values.len(),
                        kept: values.len(),
                        discarded: 0,
                        mean_uncorrected: eps,
                        stderr_uncorrected: 0.0,
                        mean_corrected: mean,
                        stderr_corrected: stderr,
                        mean_keep: 1.0,
                    };
                    let bound = eps * (1.0 - 1.0 / (d - 1) as f64);
                    let note = format!("trace-preserving network; min over networks {min:.6e}");
                    self.push("nn-baseline".into(), noise, d, eps, values.len() as f64, &s, Some(bound), None, Some(&note));
                }
            }
        }
        Ok(())
    }

    fn purity(&mut self) -> Result<()> {
        let c = self.config;
        for &n in &c.n {
            for noise in &c.noise {
                for &eps in &c.epsilons {
                    for (cost, label) in [(TrainingCost::JunkProjection, "projection"), (TrainingCost::Purity, "purity")] {
                        let mut spec = self.base_training(StateKind::W, n);
                        spec.cost = cost;
                        spec.noise = self.training_noise(noise, eps);
                        let t = self.trained(spec)?;
                        let s = self.evaluate(&t.pipeline, StateKind::W, n, noise, eps)?;
                        self.push(label.into(), noise, n, eps, t.total_iterations() as f64, &s, None, Some(t.final_cost()), None);
                    }
                }
            }
        }
        Ok(())
    }
}

fn mode_label(mode: StageMode) -> &'static str {
    match mode {
        StageMode::MultiStage => "multi-stage",
        StageMode::SingleStage => "single-stage",
        StageMode::Both => "both",
    }
}

/// State vector of a pure density matrix.
fn dominant_vector(rho: &DensityMatrix) -> Result<PureState> {
    let eig = crate::numkit::hermitian_eig(rho.matrix())?;
    let top = eig.values.len() - 1;
    PureState::normalized(rho.space().clone(), eig.vectors.column(top))
}

/// Run one configured experiment; one record per grid point.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let mut runner = Runner {
        config,
        cache: HashMap::new(),
        records: Vec::new(),
    };
    match config.kind {
        ExperimentKind::KnownEncoderSweep => runner.known(false)?,
        ExperimentKind::DepolScaling => runner.known(true)?,
        ExperimentKind::TrainedSweep | ExperimentKind::StageComparison | ExperimentKind::LayerSweep => {
            runner.trained_sweep(StateKind::W, None)?
        }
        ExperimentKind::LargeNoise => runner.trained_sweep(StateKind::W, Some(LARGE_NOISE_NOTE))?,
        ExperimentKind::H2 => runner.trained_sweep(StateKind::H2, None)?,
        ExperimentKind::MixedStates => runner.mixed()?,
        ExperimentKind::NoisyCircuit => runner.noisy_circuit()?,
        ExperimentKind::MeasurementStudy => runner.measurement()?,
        ExperimentKind::Leakage => runner.leakage()?,
        ExperimentKind::PurityComparison => runner.purity()?,
    }
    Ok(runner.records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn known_sweep_tracks_first_order_prediction() {
        let mut c = ExperimentConfig::new(ExperimentKind::KnownEncoderSweep, vec![0.05]);
        c.n = vec![2, 3, 4];
        c.noise = vec![NoiseModel::GlobalDepolarizing];
        c.trials = 20;
        let records = run_experiment(&c).unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            let big_n = (1usize << r.n) as f64;
            let first_order = 0.05 * (r.param - 1.0) / big_n;
            assert!((r.mean_corrected - first_order).abs() < 0.05 * 0.05);
            assert!((r.reference.unwrap() - first_order).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_leakage_pipeline_is_exact() {
        let mut c = ExperimentConfig::new(ExperimentKind::Leakage, vec![0.0, 0.5, 0.9]);
        c.noise = vec![NoiseModel::leakage()];
        c.trials = 8;
        c.samples = 2;
        let records = run_experiment(&c).unwrap();
        for r in records.iter().filter(|r| r.label == "identity") {
            assert!(r.mean_corrected <= 1e-10);
            assert!((r.mean_uncorrected - r.epsilon).abs() < 1e-12);
        }
        for r in records.iter().filter(|r| r.label == "nn-baseline") {
            assert!(r.mean_corrected >= r.reference.unwrap() - 1e-12);
        }
    }
}
