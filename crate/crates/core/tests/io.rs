use std::fs;

use tsu_core::fit::{fit_noise_curve, load_noise_csv, DataSource, FitOptions, FitResult};
use tsu_core::metrology::curve_lambda_opt_vs_gain;
use tsu_core::simulator::{measure_noise_vs_lambda, SimConfig};
use tsu_core::{Error, InterferometerParams};

#[test]
fn simulated_dataset_survives_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::new(InterferometerParams::new(1.67, 0.76, 0.79, 0.0).unwrap());
    cfg.duration = (1 << 16) as f64 / cfg.sample_rate;
    cfg.rng_seed = 5;
    let ds = measure_noise_vs_lambda(&cfg, &[0.0, 0.25, 0.5, 0.75, 1.0], 1).unwrap();

    let path = dir.path().join("noise.csv");
    fs::write(&path, format!("{}{}", cfg.to_comment_header(), ds.to_csv())).unwrap();
    let back = load_noise_csv(&path).unwrap();
    assert_eq!(back.source(), DataSource::Measured);
    assert_eq!(back.rows(), ds.rows());
}

#[test]
fn malformed_files_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "# comment\nlambda,noise_db,sigma_db\n0.0,1.0,0.1\n0.5,abc,0.1\n").unwrap();
    assert!(matches!(load_noise_csv(&path), Err(Error::Parse { line: 4, .. })));
    assert!(matches!(load_noise_csv(dir.path().join("missing.csv")), Err(Error::Io(_))));
}

#[test]
fn fit_result_json_round_trips() {
    let p = InterferometerParams::new(1.67, 0.76, 0.79, 0.0).unwrap();
    let rows = (0..=10)
        .map(|i| {
            let l = i as f64 / 10.0;
            let v = tsu_core::metrology::joint_noise_power(&p, tsu_core::WeightedMeasurement::new(l).unwrap());
            format!("{l},{},0.05", v.variance_db)
        })
        .collect::<Vec<_>>()
        .join("\n");
    let ds = tsu_core::fit::NoiseDataset::from_csv_str(&format!("lambda,noise_db,sigma_db\n{rows}\n"), DataSource::Simulated).unwrap();
    let fit = fit_noise_curve(&ds, &FitOptions::default()).unwrap();
    let back: FitResult = serde_json::from_str(&fit.to_json().unwrap()).unwrap();
    assert_eq!(back, fit);
}

#[test]
fn curve_tables_export_consistently() {
    let t = curve_lambda_opt_vs_gain(&[(1.0, 1.0), (0.745, 0.775)], &[1.0, 1.5, 2.0]).unwrap();
    let csv = t.to_csv();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "gain,lambda_opt_etap1_etac1,lambda_opt_etap0.745_etac0.775");
    assert_eq!(data.len(), 4);
    assert!(!csv.contains('e') || csv.lines().all(|l| l.starts_with('#') || !l.contains('e') || l.starts_with("gain")));
    let json = t.to_json();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
    assert_eq!(json["rows"][2]["gain"], 2.0);
}
