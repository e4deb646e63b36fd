use super::*;
use crate::net::{ActivationKind, ReadoutMode, TrainConfig};

fn tiny(experiment: Experiment, seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(experiment, seeds);
    cfg.input_dim = 20;
    cfg.train = Some(TrainConfig { epochs: 3, convergence_loss: 0.0, train_per_cluster: 16, ..TrainConfig::default() });
    cfg.report.test_per_cluster = 16;
    cfg.report.max_dichotomies = 5;
    cfg.checkpoints = false;
    cfg
}

#[test]
fn config_round_trips_through_json() {
    let cfg = ExperimentConfig::preset(Experiment::Fig2Delta { deltas: vec![0.0, 0.5, 1.0] }, vec![1, 2]);
    let text = cfg.to_json().unwrap();
    assert!(text.contains("\"experiment\": \"fig2_delta\""));
    assert!(text.contains("\"schema_version\": 1"));
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
}

#[test]
fn app_tags_parse() {
    let text = r#"{"schema_version": 1, "experiment": "appE_regions", "delta": 1.0, "sigmas": [0, 0.5], "seeds": [0], "dynamics": true}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg.experiment.tag(), "appE_regions");
    assert!(cfg.violations().is_empty(), "{:?}", cfg.violations());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"schema_version\": 1,\n  \"experiment\": \"fig1\",\n  \"seeds\": [1,\n}").unwrap();
    let v = validate_file(&path);
    assert_eq!(v.len(), 1);
    assert!(v[0].message.contains("bad.json:5:"), "{}", v[0].message);
}

#[test]
fn presets_are_valid() {
    let presets = [
        Experiment::Fig1,
        Experiment::Fig2Delta { deltas: vec![0.0, 1.0] },
        Experiment::Fig3Noise { deltas: vec![1.0], sigmas: vec![0.5, 1.0] },
        Experiment::Fig4Aligned { clusters: vec![8], outputs: vec![2], alignments: vec![0.2], max_dim: vec![true, false] },
        Experiment::Fig5Multilayer { depths: vec![5, 10], tasks: vec![DeepTask::Easy, DeepTask::Hard] },
        Experiment::Fig6Perturb { clusters: 32, outputs: 5, alignments: vec![0.1] },
        Experiment::AppAMultiout,
        Experiment::AppBReadouts { readouts: vec![ReadoutMode::FrozenDiscrete, ReadoutMode::Trainable] },
    ];
    for e in presets {
        let cfg = ExperimentConfig::preset(e, vec![0]);
        assert!(cfg.violations().is_empty(), "{}: {:?}", cfg.experiment.tag(), cfg.violations());
    }
}

#[test]
fn violations_name_the_problem() {
    let mut cfg = ExperimentConfig::preset(
        Experiment::Fig4Aligned { clusters: vec![8], outputs: vec![7], alignments: vec![0.5], max_dim: vec![true] },
        vec![],
    );
    let v = cfg.violations();
    assert!(v.iter().any(|v| v.field == "seeds"));
    assert!(v.iter().any(|v| v.field == "outputs" && v.message.contains("infeasible")));
    cfg = ExperimentConfig::preset(Experiment::Fig1, vec![0]);
    cfg.hidden_width = 7;
    assert!(cfg.violations().iter().any(|v| v.field == "hidden_width"));
    cfg.hidden_width = 8;
    cfg.schema_version = 9;
    assert!(cfg.violations().iter().any(|v| v.field == "schema_version"));
}

#[test]
fn expansion_counts() {
    let seeds: Vec<u64> = (0..20).collect();
    assert_eq!(expand(&ExperimentConfig::preset(Experiment::Fig1, seeds.clone()), 0).len(), 40);
    let fig2 = ExperimentConfig::preset(Experiment::Fig2Delta { deltas: vec![0.0, 0.25, 0.5, 0.75, 1.0] }, seeds.clone());
    assert_eq!(expand(&fig2, 0).len(), 200);
    let fig5 = ExperimentConfig::preset(Experiment::Fig5Multilayer { depths: vec![5, 10], tasks: vec![DeepTask::Easy, DeepTask::Hard] }, seeds);
    let specs = expand(&fig5, 0);
    assert_eq!(specs.len(), 160);
    let depths: std::collections::BTreeSet<String> = specs.iter().map(|s| s.coords["depth"].to_string()).collect();
    assert_eq!(depths.into_iter().collect::<Vec<_>>(), vec!["10", "5"]);
    let offset = expand(&ExperimentConfig::preset(Experiment::Fig1, vec![3]), 100);
    assert!(offset.iter().all(|s| s.seed == 103));
}

#[test]
fn run_is_deterministic_across_worker_counts() {
    let cfg = tiny(Experiment::Fig2Delta { deltas: vec![0.0, 1.0] }, vec![1, 2]);
    let (a, ra) = run_in_memory(&cfg, 1, 0).unwrap();
    let (b, rb) = run_in_memory(&cfg, 3, 0).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(ra, rb);
    assert!(ra.iter().all(|r| r.error.is_none()));
}

#[test]
fn csv_rows_round_trip_through_json() {
    let cfg = tiny(Experiment::Fig1, vec![4, 5]);
    let (table, _) = run_in_memory(&cfg, 1, 0).unwrap();
    let parsed = ResultsTable::from_csv(&table.to_csv()).unwrap();
    let json: ResultsTable = serde_json::from_str(&serde_json::to_string(&table).unwrap()).unwrap();
    assert_eq!(parsed.rows.len(), json.rows.len());
    for (c, j) in parsed.rows.iter().zip(&json.rows) {
        assert_eq!(c.mean, j.mean);
        assert_eq!(c.std, j.std);
        assert_eq!(c.metric, j.metric);
        assert_eq!(c.activation, j.activation);
    }
    // Every (coordinates, activation, metric) appears once.
    let mut keys: Vec<String> = table.rows.iter().map(|r| format!("{:?}{}{}", r.coords, r.activation, r.metric)).collect();
    let n = keys.len();
    keys.dedup();
    assert_eq!(keys.len(), n);
    assert!(table.rows.iter().all(|r| r.std >= 0.0 && r.n == 2));
}

#[test]
fn run_writes_every_artifact() {
    let mut cfg = tiny(Experiment::Fig1, vec![0]);
    cfg.checkpoints = true;
    cfg.dynamics = true;
    cfg.eval_epochs = vec![0, 1, 3];
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&cfg, dir.path(), 2, 0).unwrap();
    assert!(outcome.failures().is_empty());
    for f in ["results.csv", "results.json", "plots/fig1.svg"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let ckpts = std::fs::read_dir(dir.path().join("checkpoints")).unwrap().count();
    assert_eq!(ckpts, 2);
    let dyn_plots: Vec<_> = std::fs::read_dir(dir.path().join("plots"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("dynamics_"))
        .collect();
    assert_eq!(dyn_plots.len(), 2);
    let svg = std::fs::read_to_string(dyn_plots[0].path()).unwrap();
    // Two fields, each with one arrow per grid point.
    assert_eq!(svg.matches("class=\"arrow\"").count(), 2 * 441);
    let epochs: std::collections::BTreeSet<String> =
        outcome.table.rows.iter().filter_map(|r| r.coords.get("epoch")).map(|c| c.to_string()).collect();
    assert_eq!(epochs.into_iter().collect::<Vec<_>>(), vec!["0", "1", "3"]);

    let (replotted, _) = plot_from_dir(dir.path(), None).unwrap();
    assert!(!replotted.is_empty());
    let ckpt_path = std::fs::read_dir(dir.path().join("checkpoints")).unwrap().next().unwrap().unwrap().path();
    let ckpt: Checkpoint = serde_json::from_str(&std::fs::read_to_string(ckpt_path).unwrap()).unwrap();
    assert_eq!(ckpt.network.depth(), 1);
}

#[test]
fn plotting_an_unknown_metric_lists_available_ones() {
    let cfg = tiny(Experiment::Fig1, vec![0]);
    let (table, _) = run_in_memory(&cfg, 1, 0).unwrap();
    let err = metric_canvas(&table, "epoch", Some(&["bogus".to_string()])).err().unwrap();
    match err {
        Error::UnknownMetric { available, .. } => assert!(available.contains("target_alignment")),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn empty_series_are_skipped_with_a_warning() {
    let mut table = ResultsTable { experiment: "fig1".into(), coord_keys: vec![], rows: vec![] };
    table.rows.push(ResultRow { coords: Coords::new(), activation: "tanh".into(), metric: "ccgp".into(), mean: f64::NAN, std: 0.0, n: 0 });
    let (canvas, warnings) = metric_canvas(&table, "epoch", None).unwrap();
    assert_eq!(canvas.len(), 1);
    assert_eq!(warnings.len(), 1);
}

#[test]
fn failed_runs_are_recorded_and_the_sweep_continues() {
    let mut cfg = tiny(Experiment::Fig1, vec![0, 1]);
    cfg.activations = vec![ActivationKind::Relu];
    cfg.train.as_mut().unwrap().learning_rate = 1e300;
    let (_, records) = run_in_memory(&cfg, 1, 0).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.error.is_some()));
}

#[test]
fn workers_resolve_from_explicit_value_first() {
    assert_eq!(resolve_workers(Some(3)), 3);
    assert_eq!(resolve_workers(Some(0)), 1);
}
