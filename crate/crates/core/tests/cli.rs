use std::fs;
use std::path::Path;
use std::process::Command;

use irs_core::cli::{manifest_path, run_with};

fn irs(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("irs").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest_value(manifest: &str, key: &str) -> String {
    manifest
        .lines()
        .filter_map(|l| l.split_once('='))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim().to_string())
        .unwrap_or_else(|| panic!("manifest lacks {key}"))
}

const QUICK: [&str; 6] = ["--trials", "3", "--n", "6", "--sweep-values", "470,498"];

#[test]
fn experiment_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4.csv");
    let mut args = vec!["experiment", "--preset", "fig4", "--seed", "7", "--out", p(&out)];
    args.extend(QUICK);
    let (code, stdout, stderr) = irs(&args);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("wrote 10 rows"));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "sweep_var,sweep_value,scheme,mean_rate_bpshz,stderr,trials,seed");
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",3,7")));
    let manifest = fs::read_to_string(manifest_path(&out)).unwrap();
    assert_eq!(manifest_value(&manifest, "subcommand"), "experiment");
    assert_eq!(manifest_value(&manifest, "seed"), "7");
    assert_eq!(manifest_value(&manifest, "version"), env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest_value(&manifest, "out"), p(&out));
}

#[test]
fn manifest_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a.csv");
    let plot = dir.path().join("a.svg");
    let mut args = vec!["experiment", "--preset", "fig6", "--seed", "3", "--out", p(&out), "--plot", p(&plot)];
    args.extend(QUICK);
    assert_eq!(irs(&args).0, 0);
    let first = fs::read(&out).unwrap();
    let first_plot = fs::read(&plot).unwrap();
    assert!(manifest_path(&plot).exists());

    let saved = dir.path().join("replay.conf");
    fs::copy(manifest_path(&out), &saved).unwrap();
    fs::remove_file(&out).unwrap();
    let (code, _, stderr) = irs(&["experiment", "--config", p(&saved)]);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(fs::read(&out).unwrap(), first);
    assert_eq!(fs::read(&plot).unwrap(), first_plot);
}

#[test]
fn flag_overrides_config_and_manifest_records_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out = dir.path().join("r.csv");
    fs::write(
        &cfg,
        format!(
            "# quick run\nseed = 11\ntrials = 2\nn = 4\nschemes = no_irs, 1\nsweep = n\nsweep_values = 4,6\nout = {}\n",
            p(&out)
        ),
    )
    .unwrap();
    let (code, _, stderr) = irs(&["experiment", "--config", p(&cfg), "--seed", "12"]);
    assert_eq!(code, 0, "{stderr}");
    let manifest = fs::read_to_string(manifest_path(&out)).unwrap();
    assert_eq!(manifest_value(&manifest, "seed"), "12");
    assert_eq!(manifest_value(&manifest, "trials"), "2");
    assert_eq!(manifest_value(&manifest, "schemes"), "no_irs,upper_bound_ideal_ao");
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.contains("N,6,upper_bound_ideal_ao,"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",2,12")));
}

#[test]
fn config_preset_is_applied_before_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out = dir.path().join("r.csv");
    fs::write(&cfg, format!("preset = fig5\ntrials = 1\nsweep_values = 2\nout = {}\n", p(&out))).unwrap();
    assert_eq!(irs(&["experiment", "--config", p(&cfg), "--schemes", "5"]).0, 0);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("N,2,no_irs,"));
}

#[test]
fn unknown_subcommand_exits_with_usage() {
    let out = Command::new(env!("CARGO_BIN_EXE_irs")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Usage"), "{stderr}");
}

#[test]
fn help_exits_zero() {
    let (code, stdout, _) = irs(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["circuit-sweep", "fit-model", "optimize", "experiment"] {
        assert!(stdout.contains(sub));
    }
}

#[test]
fn error_classes_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");

    assert_eq!(irs(&["experiment", "--no-such-flag"]).0, 2);
    assert_eq!(irs(&["experiment", "--trials", "many"]).0, 2);
    assert_eq!(irs(&["experiment", "--schemes", "9"]).0, 2);

    fs::write(&bad, "trials 4\n").unwrap();
    let (code, _, err) = irs(&["experiment", "--config", p(&bad)]);
    assert_eq!(code, 3);
    assert!(err.starts_with("error: config:") && err.lines().count() == 1, "{err}");

    fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(irs(&["experiment", "--config", p(&bad)]).0, 3);

    fs::write(&bad, "subcommand = optimize\n").unwrap();
    assert_eq!(irs(&["experiment", "--config", p(&bad)]).0, 3);

    let missing = dir.path().join("missing.conf");
    assert_eq!(irs(&["experiment", "--config", p(&missing)]).0, 4);

    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let under_file = blocker.join("out.csv");
    let (code, _, _) = irs(&["circuit-sweep", "--points", "10", "--out", p(&under_file)]);
    assert_eq!(code, 4);

    assert_eq!(irs(&["experiment", "--trials", "0"]).0, 5);
    assert_eq!(irs(&["optimize", "--beta-min", "1.5", "--out", p(&dir.path().join("o.csv"))]).0, 5);
}

#[test]
fn sweep_then_fit_then_optimize_with_fitted_model() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let model = dir.path().join("model.conf");
    let opt = dir.path().join("opt.csv");
    let channels = dir.path().join("channels.csv");

    let (code, stdout, _) = irs(&["circuit-sweep", "--points", "300", "--r-values", "0,2.5", "--out", p(&sweep)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("600 rows"));
    let text = fs::read_to_string(&sweep).unwrap();
    assert_eq!(text.lines().next().unwrap(), "c,r,amplitude,phase");

    let (code, stdout, _) = irs(&["fit-model", "--input", p(&sweep), "--r", "2.5", "--out", p(&model)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("beta_min = "));
    assert!(manifest_path(&model).exists());

    let (code, stdout, stderr) = irs(&[
        "optimize",
        "--config",
        p(&model),
        "--n",
        "10",
        "--solver",
        "1d",
        "--full-circle",
        "--out",
        p(&opt),
        "--dump-channels",
        p(&channels),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("rate_bpshz = "));
    assert_eq!(fs::read_to_string(&opt).unwrap().lines().count(), 11);
    let ch = fs::read_to_string(&channels).unwrap();
    assert_eq!(ch.lines().next().unwrap(), "link,row,col,re,im");
    assert_eq!(ch.lines().count(), 1 + 2 + 10 + 20);
    let manifest = fs::read_to_string(manifest_path(&channels)).unwrap();
    assert_eq!(manifest_value(&manifest, "full_circle"), "true");
    assert_eq!(manifest_value(&manifest, "solver"), "1d");
    let fitted = fs::read_to_string(&model).unwrap();
    assert_eq!(manifest_value(&manifest, "k"), manifest_value(&fitted, "k"));
}

#[test]
fn fit_without_input_uses_reference_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.conf");
    let (code, stdout, _) = irs(&["fit-model", "--out", p(&model)]);
    assert_eq!(code, 0);
    let rmse: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("# rmse = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rmse < 0.05);
}

#[test]
fn optimize_matches_single_trial_experiment_for_every_scheme() {
    let dir = tempfile::tempdir().unwrap();
    for scheme in [
        "upper_bound_ideal_ao",
        "practical_ao_quadratic",
        "practical_ao_1d",
        "ideal_design_practical_eval",
        "no_irs",
        "practical_discrete_b2",
        "ideal_discrete_b1_practical_eval",
    ] {
        let exp = dir.path().join(format!("{scheme}.csv"));
        let opt = dir.path().join(format!("{scheme}.opt.csv"));
        let common = ["--seed", "21", "--n", "8", "--d", "495"];
        let mut args = vec!["experiment", "--trials", "1", "--schemes", scheme, "--sweep-values", "495", "--out", p(&exp)];
        args.extend(common);
        assert_eq!(irs(&args).0, 0);
        let mean: f64 = fs::read_to_string(&exp).unwrap().lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();

        let mut args = vec!["optimize", "--scheme", scheme, "--out", p(&opt)];
        args.extend(common);
        let (code, stdout, stderr) = irs(&args);
        assert_eq!(code, 0, "{stderr}");
        let rate: f64 = stdout
            .lines()
            .find_map(|l| l.strip_prefix("# rate_bpshz = "))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(rate, mean, "{scheme}");
        if scheme != "no_irs" {
            let trace: Vec<f64> = stdout
                .lines()
                .skip_while(|l| *l != "sweep,objective")
                .skip(1)
                .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
                .collect();
            assert!(trace.len() >= 2);
            assert!(trace.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)));
        }
    }
}
