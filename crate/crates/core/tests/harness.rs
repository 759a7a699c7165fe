use iim_core::harness::report::{summary_csv, SUMMARY_FILE, TRACE_DIR};
use iim_core::harness::run::run_noise_sweep_with;
use iim_core::harness::stats::{log_log_slope, spearman};
use iim_core::harness::{
    emit_report, load_report, run_case, run_noise_free_suite, sub_seed, ExperimentConfig, ExperimentSetup, NoiseTarget,
};
use proptest::prelude::*;

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.experiment.grid = [68, 29];
    cfg.experiment.noise_levels = vec![0.02, 0.01];
    cfg.experiment.seeds = vec![5, 3];
    cfg.optimizer.max_iterations = 6;
    cfg
}

fn read(path: &std::path::Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn sweep_report_contract() {
    let setup = ExperimentSetup::prepare(&small_config()).unwrap();
    let report = run_noise_sweep_with(&setup).unwrap();
    assert_eq!(report.runs.len(), 4);
    let order: Vec<(f64, u64)> = report.runs.iter().map(|r| (r.delta, r.seed)).collect();
    assert_eq!(order, vec![(0.01, 3), (0.01, 5), (0.02, 3), (0.02, 5)]);
    for r in &report.runs {
        assert_eq!(r.trace.len(), r.iterations);
        assert!(r.best_error.joint <= r.final_error.joint);
        assert!((r.alpha - 0.1 * r.delta).abs() < 1e-18);
        assert_eq!(r.wall_ms, 0);
        assert!(r.identifiable);
        assert_ne!(r.reference_noise_seed, r.deformed_noise_seed);
    }
    let stats = report.statistics.unwrap();
    assert_eq!(stats.points, 4);

    let tmp = tempfile::tempdir().unwrap();
    let written = emit_report(&report, tmp.path()).unwrap();
    assert!(written.iter().all(|p| p.exists()));
    let summary = String::from_utf8(read(&tmp.path().join(SUMMARY_FILE))).unwrap();
    assert!(!summary.contains('\r'));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run_id,delta,alpha,seed,lambda_0,mu_0,lambda_1,mu_1,delta_lambda,delta_mu,delta_joint,best_delta_lambda,best_delta_mu,best_delta_joint,wall_ms"
    );
    for line in lines {
        let cells: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        let (dl, dm, dj) = (cells[7], cells[8], cells[9]);
        assert!((dj - (dl * dl + dm * dm).sqrt()).abs() <= 1e-12);
        assert!(cells[12] <= dj);
    }
    for r in &report.runs {
        let trace = read(&tmp.path().join(TRACE_DIR).join(format!("{}.csv", r.run_id)));
        assert_eq!(String::from_utf8(trace).unwrap().lines().count(), 1 + r.iterations);
    }
    for name in ["reference.pgm", "deformed.pgm", "manifest.json", "report.json"] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }

    // re-emitting is byte-identical
    let before: Vec<Vec<u8>> = written.iter().map(|p| read(p)).collect();
    let again = emit_report(&report, tmp.path()).unwrap();
    assert_eq!(again, written);
    assert_eq!(again.iter().map(|p| read(p)).collect::<Vec<_>>(), before);

    let loaded = load_report(tmp.path()).unwrap();
    assert_eq!(loaded.runs, report.runs);
    assert_eq!(loaded.config, report.config);
    assert_eq!(summary_csv(&loaded).unwrap(), summary_csv(&report).unwrap());

    // same configuration, same bytes
    let rerun = run_noise_sweep_with(&setup).unwrap();
    assert_eq!(summary_csv(&rerun).unwrap(), summary_csv(&report).unwrap());
}

#[test]
fn empty_report_gives_header_only_summary() {
    let setup = ExperimentSetup::prepare(&small_config()).unwrap();
    let mut report = run_noise_sweep_with(&setup).unwrap();
    report.runs.clear();
    let tmp = tempfile::tempdir().unwrap();
    emit_report(&report, tmp.path()).unwrap();
    let summary = String::from_utf8(read(&tmp.path().join(SUMMARY_FILE))).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.ends_with('\n'));
}

#[test]
fn single_run_emits_one_row_and_one_trace() {
    let setup = ExperimentSetup::prepare(&small_config()).unwrap();
    let run = run_case(&setup, 0.01, 9, 0).unwrap();
    let mut report = run_noise_sweep_with(&setup).unwrap();
    report.runs = vec![run.clone()];
    let tmp = tempfile::tempdir().unwrap();
    emit_report(&report, tmp.path()).unwrap();
    assert_eq!(String::from_utf8(read(&tmp.path().join(SUMMARY_FILE))).unwrap().lines().count(), 2);
    let traces: Vec<_> = std::fs::read_dir(tmp.path().join(TRACE_DIR)).unwrap().collect();
    assert_eq!(traces.len(), 1);
    assert_eq!(run.iterations, 6);
}

#[test]
fn reference_only_noise_leaves_deformed_image_clean() {
    let mut cfg = small_config();
    cfg.experiment.noise_target = NoiseTarget::ReferenceOnly;
    let setup = ExperimentSetup::prepare(&cfg).unwrap();
    let both = run_case(&ExperimentSetup::prepare(&small_config()).unwrap(), 0.05, 1, 0).unwrap();
    let restricted = run_case(&setup, 0.05, 1, 0).unwrap();
    assert_ne!(both.trace[0].residual, restricted.trace[0].residual);
}

#[test]
fn zero_compression_is_flagged_non_identifiable() {
    let mut cfg = small_config();
    cfg.experiment.compression = 0.0;
    cfg.experiment.noise_levels.clear();
    let report = run_noise_free_suite(&cfg).unwrap();
    let run = &report.runs[0];
    assert!(!run.identifiable);
    assert_eq!(run.final_residual, 0.0);
    assert_eq!(report.interpolation_floor, 0.0);
}

#[test]
fn noise_free_suite_rejects_noise() {
    assert!(run_noise_free_suite(&small_config()).is_err());
}

#[test]
fn run_errors_name_the_run() {
    let mut cfg = small_config();
    cfg.experiment.noise_levels = vec![0.01];
    let setup = ExperimentSetup::prepare(&cfg).unwrap();
    let err = run_case(&setup, -1.0, 4, 0).unwrap_err();
    assert!(err.to_string().contains("delta-1_seed4"), "{err}");
}

#[test]
fn preset_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::load(&path).unwrap().validate().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spearman_invariant_under_monotone_maps(x in prop::collection::vec(-100.0f64..100.0, 3..20)) {
        let y: Vec<f64> = x.iter().map(|v| v.exp().ln_1p() + v * 0.5).collect();
        if let Some(s) = spearman(&x, &y) {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn log_log_slope_recovers_power(p in -2.0f64..2.0, c in 0.01f64..100.0) {
        let x: Vec<f64> = (1..=10).map(|k| k as f64 / 100.0).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(p)).collect();
        prop_assert!((log_log_slope(&x, &y).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn sub_seeds_are_pure(master in any::<u64>(), index in 0u64..1000) {
        prop_assert_eq!(sub_seed(master, "reference", index), sub_seed(master, "reference", index));
        prop_assert_ne!(sub_seed(master, "reference", index), sub_seed(master, "deformed", index));
    }
}
