use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};
use tsu_core::fit::{
    extract_lambda_opt, fit_noise_curve, lambda_opt_vs_gain_report, load_noise_csv, overlay_theory,
    FitOptions, NoiseDataset, REFERENCE_ETA_C, REFERENCE_ETA_P,
};
use tsu_core::grid::parse_grid;
use tsu_core::metrology::lambda_opt;
use tsu_core::simulator::{measure_noise_vs_lambda, simulate_stream, SimConfig};
use tsu_core::{Error, SqlKind};

use crate::output::{emit, render_table, write_atomic, Format};
use crate::{Failure, Globals};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// `key = value` simulation config.
    config: PathBuf,

    #[arg(long, default_value = "0:1:0.05")]
    lambda: String,

    /// Independent records per point; more than one gives error bars from
    /// the trial-to-trial scatter.
    #[arg(long, default_value_t = 1)]
    trials: usize,

    /// Also write the raw detector time series of the first trial.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn simulate(args: &SimulateArgs, g: &Globals) -> Result<(), Failure> {
    let mut cfg = SimConfig::from_kv_str(&read_text(&args.config)?)?;
    if let Some(seed) = g.seed {
        cfg.rng_seed = seed;
    }
    let grid = parse_grid(&args.lambda)?;
    g.log(1, format!("simulating {} samples x {} trials", cfg.sample_count(), args.trials));
    let ds = measure_noise_vs_lambda(&cfg, &grid, args.trials)?;

    if let Some(path) = &args.records {
        write_atomic(path, &simulate_stream(&cfg, 0)?.to_csv())?;
        g.log(1, format!("records written to {}", path.display()));
    }

    let text = match g.format {
        Format::Csv => {
            let mut out = cfg.to_comment_header();
            out.push_str(&format!("# trials = {}\n", args.trials));
            out.push_str(&format!("# lambda_opt_theory = {}\n", lambda_opt(&cfg.params)));
            out.push_str(&ds.to_csv());
            out
        }
        Format::Json => {
            let v = json!({
                "config": cfg,
                "trials": args.trials,
                "lambda_opt_theory": lambda_opt(&cfg.params),
                "dataset": ds,
            });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("plain JSON"))
        }
    };
    emit(g.output.as_deref(), &text)
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Noise-versus-lambda CSV files (`lambda,noise_db,sigma_db`).
    #[arg(required = true)]
    datasets: Vec<PathBuf>,

    /// Fixed conjugate-minus-probe transmission difference.
    #[arg(long, default_value_t = 0.03, conflicts_with = "free_losses")]
    loss_offset: f64,

    /// Fit both transmissions independently (poorly conditioned for a
    /// single curve).
    #[arg(long)]
    free_losses: bool,

    #[arg(long, default_value_t = 8)]
    starts: usize,

    /// Known electronic noise per detector, shot-noise units.
    #[arg(long, default_value_t = 0.0)]
    electronic_noise: f64,

    /// Directory for SNRI theory overlays, one pair per dataset.
    #[arg(long)]
    overlay_dir: Option<PathBuf>,

    #[arg(long, default_value = "0:1:0.01")]
    overlay_lambda: String,

    /// Lambda-opt versus gain report (needs two or more datasets); JSON if
    /// the name ends in `.json`, CSV otherwise.
    #[arg(long)]
    report: Option<PathBuf>,

    #[arg(long, default_value_t = REFERENCE_ETA_P)]
    reference_eta_p: f64,

    #[arg(long, default_value_t = REFERENCE_ETA_C)]
    reference_eta_c: f64,
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned())
}

pub fn fit(args: &FitArgs, g: &Globals) -> Result<(), Failure> {
    let mut opts = FitOptions {
        constrain_loss_offset: (!args.free_losses).then_some(args.loss_offset),
        starts: args.starts,
        electronic_noise_var: args.electronic_noise,
        ..FitOptions::default()
    };
    if let Some(seed) = g.seed {
        opts.seed = seed;
    }
    opts.validate()?;
    if args.report.is_some() && args.datasets.len() < 2 {
        return Err(Failure::Usage("--report needs at least two datasets".into()));
    }
    let overlay_grid = parse_grid(&args.overlay_lambda)?;

    let datasets: Vec<NoiseDataset> = args
        .datasets
        .iter()
        .map(|p| load_noise_csv(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))))
        .collect::<Result<_, _>>()?;

    let mut entries: Vec<Value> = Vec::new();
    let mut text = String::new();
    let mut failed = 0;
    for (path, ds) in args.datasets.iter().zip(&datasets) {
        let name = path.display().to_string();
        match fit_noise_curve(ds, &opts) {
            Ok(res) => {
                let est = extract_lambda_opt(ds, Some(&res));
                for w in res.warnings.iter().chain(&est.warnings) {
                    g.log(0, format!("warning: {name}: {w}"));
                }
                if let Some(dir) = &args.overlay_dir {
                    std::fs::create_dir_all(dir)?;
                    for kind in [SqlKind::Sql1, SqlKind::Sql2] {
                        let table = overlay_theory(&res, kind, &overlay_grid)?.with_meta("dataset", &name);
                        let file = dir.join(format!("{}_overlay_{}.csv", stem(path), kind.label()));
                        write_atomic(&file, &table.to_csv())?;
                        g.log(1, format!("overlay written to {}", file.display()));
                    }
                }
                text.push_str(&format!("# dataset = {name}\n{res}\n"));
                entries.push(json!({ "file": name, "result": res, "lambda_opt": est }));
            }
            Err(Error::FitFailure { message, best }) => {
                failed += 1;
                g.log(0, format!("error: {name}: {message}"));
                text.push_str(&format!("# dataset = {name}\nfit failed: {message}\n\n"));
                entries.push(json!({ "file": name, "error": message, "best_effort": best }));
            }
            Err(e) => return Err(e.into()),
        }
    }

    if let Some(path) = &args.report {
        let report = lambda_opt_vs_gain_report(&datasets, &opts, (args.reference_eta_p, args.reference_eta_c))?;
        let format = if path.extension().is_some_and(|e| e == "json") { Format::Json } else { Format::Csv };
        write_atomic(path, &render_table(&report.table, format))?;
        g.log(1, format!("report written to {}", path.display()));
    }

    let body = match g.format {
        Format::Json => {
            let v = json!({ "options": opts, "fits": Value::Array(entries) });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("plain JSON"))
        }
        Format::Csv => text,
    };
    emit(g.output.as_deref(), &body)?;
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} fits failed", datasets.len())));
    }
    Ok(())
}
