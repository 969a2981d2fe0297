use qae_core::encoder::known_w_pipeline;
use qae_core::harness::{
    emit_report, evaluate_pipeline, parse_csv, run_experiment, EncoderTraining, ExperimentConfig, ExperimentKind,
    StateKind,
};
use qae_core::noise::NoiseModel;

#[test]
fn known_encoder_reduces_local_noise() {
    for n in [3, 4, 5] {
        let p = known_w_pipeline(n).unwrap();
        let s = evaluate_pipeline(&p, StateKind::W, n, 30, 1, true, &NoiseModel::LocalDepolarizing, 0.05).unwrap();
        assert_eq!(s.kept, 30);
        assert!(s.mean_corrected < s.mean_uncorrected, "n={n}: {s:?}");
    }
}

#[test]
fn scaling_report_round_trips_through_csv() {
    let mut c = ExperimentConfig::new(ExperimentKind::DepolScaling, vec![0.05]);
    c.n = vec![2, 3];
    c.noise = vec![NoiseModel::GlobalDepolarizing];
    c.trials = 10;
    let records = run_experiment(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scaling.csv");
    emit_report(&records, &path).unwrap();
    let back = parse_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.len(), 2);
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.label, b.label);
        assert!((a.mean_corrected - b.mean_corrected).abs() <= 1e-11 * a.mean_corrected.abs().max(1e-300));
        // (L - 1) / (N - 1) with L = 2 for n = 2 and L = 4 for n = 3
        let expected = if a.n == 2 { 1.0 / 3.0 } else { 3.0 / 7.0 };
        assert!((b.reference.unwrap() - expected).abs() < 1e-10);
    }
}

#[test]
fn unperturbed_circuit_matches_trained_pipeline() {
    let mut t = EncoderTraining::new(StateKind::W, 2, 5);
    t.settings.max_iters = 4000;
    let trained = t.run().unwrap();
    assert!(trained.final_cost() < 1e-3);
    let same = trained.perturbed_pipeline(0.0, 9).unwrap();
    assert_eq!(same.encode_unitary(), trained.pipeline.encode_unitary());
    let moved = trained.perturbed_pipeline(0.2, 9).unwrap();
    assert!(moved.encode_unitary().distance(trained.pipeline.encode_unitary()) > 1e-3);
}

#[test]
fn leakage_experiment_emits_every_label() {
    let mut c = ExperimentConfig::new(ExperimentKind::Leakage, vec![0.3]);
    c.noise = vec![NoiseModel::leakage()];
    c.trials = 5;
    c.samples = 3;
    let records = run_experiment(&c).unwrap();
    let labels: Vec<&str> = records.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["identity", "trained junk=0", "trained junk=4", "nn-baseline"]);
    let nn = records.last().unwrap();
    assert_eq!(nn.trials, 4);
    assert!(nn.mean_corrected >= 0.3 * 0.75 - 1e-12);
}
