//! Experiment configuration, data generation, sweeps, and reports.

mod config;
mod experiments;
mod matrix_io;
mod record;
mod reproduce;
mod states;

pub use config::{ExperimentConfig, ExperimentKind, StageMode, TrainingSettings, MAX_QUBITS};
pub use experiments::{
    evaluate_pipeline, global_noise_floor, leakage_network_infidelities, mean_stderr, mitigation_trial,
    run_experiment, run_trials, summarize, test_state_seed, train_leakage_encoder, EncoderTraining, Summary,
    TrainedEncoder, TrainingCost, TrialOutcome, LARGE_NOISE_NOTE,
};
pub use matrix_io::{format_matrices, parse_matrices, read_pipeline, read_state, space_for_dim, write_pipeline};
pub use record::{emit_report, parse_csv, to_csv, write_atomic, ResultRecord, CSV_HEADER};
pub use reproduce::{figure_config, reproduce, Manifest, FIGURES};
pub use states::{gen_state, gen_states, h2_state, mixed_state, training_set, w_basis, w_state, StateKind, H2_BASIS};
