use coarray_lab::experiment::{presets, run_experiment_with_threads, ExperimentConfig, Separation};

#[test]
fn easy_separation_resolves_on_both_arrays() {
    let cfg = ExperimentConfig {
        snapshots: vec![55],
        snr_db: vec![0.0],
        separation: vec![Separation::Fixed(0.2)],
        ..presets::fig2()
    };
    let data = run_experiment_with_threads(&cfg, None).unwrap();
    assert_eq!(data.aggregates.len(), 2);
    for a in &data.aggregates {
        assert_eq!(a.trials, 200);
        assert!(a.prob_resolved >= 0.99, "{}: {}", a.arm, a.prob_resolved);
    }
}

#[test]
fn record_count_is_trials_times_grid_times_arms() {
    let cfg = ExperimentConfig { trials: 3, sensors: vec![6, 8], ..presets::fig4() };
    let data = run_experiment_with_threads(&cfg, Some(2)).unwrap();
    assert_eq!(data.records.len(), 3 * cfg.grid().len() * cfg.arms.len());
    for r in &data.records {
        if let Some(md) = r.md {
            assert!((0.0..=0.5).contains(&md));
        }
        if let Some(e) = r.cov_error {
            assert!(e >= 0.0);
        }
    }
}

#[test]
fn single_trial_runs_are_reproducible() {
    let cfg = ExperimentConfig { trials: 1, ..presets::fig1() };
    let a = run_experiment_with_threads(&cfg, Some(1)).unwrap();
    let b = run_experiment_with_threads(&cfg, Some(3)).unwrap();
    assert_eq!(a.aggregates, b.aggregates);
    let text = |d: &coarray_lab::experiment::Dataset| coarray_lab::experiment::render_csv(&d.aggregates).unwrap();
    assert_eq!(text(&a), text(&b));
}
