use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tsu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsu")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn fig4b_lossless_row_at_gain_two() {
    let o = tsu(&["curves", "fig4b", "--eta", "1.0", "--gain", "1:5:0.1"]);
    assert!(o.status.success());
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 41);
    let row = rows.iter().find(|r| (r[0] - 2.0).abs() < 1e-12).unwrap();
    assert!((row[1] - 0.942809).abs() < 1e-6);
}

#[test]
fn fig6_low_gain_does_not_beat_sql2_at_unit_weight() {
    let o = tsu(&["curves", "fig6", "--gain", "1.1", "--eta", "1.0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# params_g1.1_etap1_etac1"));
    let last = data_rows(&text).pop().unwrap();
    assert_eq!(last[0], 1.0);
    assert!((last[2] + 0.3075).abs() < 1e-3, "{last:?}");
    assert!((last[1] - last[2] - 3.0103).abs() < 1e-4);
}

#[test]
fn fig8_json_has_reference_and_lossless_columns() {
    let o = tsu(&["curves", "fig8", "--gain", "1.05:3:0.05", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["figure"], "fig8");
    let rows = v["rows"].as_array().unwrap();
    let g167 = rows.iter().find(|r| (r["gain"].as_f64().unwrap() - 1.65).abs() < 1e-9).unwrap();
    assert!(g167["lambda_opt_etap0.745_etac0.775"].as_f64().unwrap() < g167["lambda_opt_etap1_etac1"].as_f64().unwrap());
}

#[test]
fn missing_required_flag_is_a_usage_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = tsu(&["curves", "fig4b", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn lambda_opt_values_and_guards() {
    let o = tsu(&["lambda-opt", "--gain", "1", "--eta-p", "1", "--eta-c", "1"]);
    assert!(o.status.success());
    assert_eq!(data_rows(&stdout(&o)), vec![vec![0.0]]);

    let o = tsu(&["lambda-opt", "--gain", "1.67", "--eta-p", "0.76", "--eta-c", "0.79", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["lambda_opt"].as_f64().unwrap() - 0.796295).abs() < 1e-6);
    assert_eq!(v["eta_c"], 0.79);

    assert_eq!(tsu(&["lambda-opt", "--gain", "0.9"]).status.code(), Some(2));
}

#[test]
fn output_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig3.csv");
    let o = tsu(&["curves", "fig3", "--gain", "1:2:0.5", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# figure = fig3\n"));
    assert_eq!(data_rows(&text).len(), 3);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

fn write_config(dir: &Path, gain: f64) -> String {
    let path = dir.join(format!("g{gain}.conf"));
    fs::write(
        &path,
        format!("# test config\ngain = {gain}\neta_p = 0.745\neta_c = 0.775\nduration = 0.1048576\ntone_depth = 0\n"),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_then_fit_recovers_the_gain() {
    let dir = tempfile::tempdir().unwrap();
    let mut datasets = Vec::new();
    for (gain, seed) in [(1.3, "11"), (2.0, "12")] {
        let conf = write_config(dir.path(), gain);
        let out = dir.path().join(format!("noise_{gain}.csv"));
        let o = tsu(&["simulate", &conf, "--seed", seed, "-o", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.contains(&format!("# gain = {gain}")));
        assert!(text.contains(&format!("# rng_seed = {seed}")));
        datasets.push(out.to_str().unwrap().to_string());
    }

    let overlays = dir.path().join("overlays");
    let report = dir.path().join("fig8.csv");
    let mut args = vec!["fit", "--format", "json", "--overlay-dir", overlays.to_str().unwrap(), "--report", report.to_str().unwrap()];
    args.extend(datasets.iter().map(String::as_str));
    let o = tsu(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let fits = v["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for (fit, truth) in fits.iter().zip([1.3, 2.0]) {
        let r = &fit["result"];
        let (g, s) = (r["gain"].as_f64().unwrap(), r["sigma_gain"].as_f64().unwrap());
        assert!((g - truth).abs() <= 3.0 * s, "{g} ± {s} vs {truth}");
    }
    assert_eq!(fs::read_dir(&overlays).unwrap().count(), 4);
    let rep = fs::read_to_string(&report).unwrap();
    assert!(rep.contains("# figure = fig8"));
    let rows = data_rows(&rep);
    assert_eq!(rows.len(), 2);
    assert!(rows[1][1] > rows[0][1]);
}

#[test]
fn simulate_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "gain = 1.5\nwavelength = 795e-9\n").unwrap();
    let o = tsu(&["simulate", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn fit_of_unreadable_dataset_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,y\n1,2\n").unwrap();
    assert_eq!(tsu(&["fit", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_default_regime_passes() {
    let o = tsu(&["verify"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(!text.lines().any(|l| l.starts_with("FAIL")));
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() > 150);
}

#[test]
fn verify_low_cutoff_reports_truncation() {
    let o = tsu(&["verify", "--cutoff", "12", "--gain", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l.starts_with("WARN") && l.contains("norm deficit")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncates"));
}

#[test]
fn verify_pipeline_check() {
    let o = tsu(&["verify", "--gain", "1.5", "--alpha", "0", "--eta", "1", "--pipeline", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS,simulate -> fit gain"));
}
