use std::fmt::Write as _;

use clap::Args;
use serde_json::json;
use tsu_core::fit::{fit_noise_curve, FitOptions};
use tsu_core::fock::{
    apply_loss_fock, build_seeded_tmss_fock, oracle_photon_moments, oracle_quadrature_stats,
    DEFAULT_CUTOFF,
};
use tsu_core::gaussian::{joint_quadrature_stats, lossy_state, photon_moments};
use tsu_core::grid::parse_grid;
use tsu_core::simulator::{measure_noise_vs_lambda, SimConfig};
use tsu_core::{Error, InterferometerParams, Mode, WeightedMeasurement};

use crate::output::{emit, Format};
use crate::{Failure, Globals};

const TOLERANCE: f64 = 1e-6;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Fock-space cutoff per mode.
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: usize,

    #[arg(long, default_value = "1,1.2,1.5,2")]
    gain: String,

    /// Seed amplitudes.
    #[arg(long, default_value = "0,0.5,1")]
    alpha: String,

    /// Transmissions, applied to both beams.
    #[arg(long, default_value = "0.76,1")]
    eta: String,

    #[arg(long, default_value = "0,0.5,1")]
    lambda: String,

    /// Also simulate and fit a dataset and check the recovered gain.
    #[arg(long)]
    pipeline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    /// Truncation made the comparison meaningless; reported, not counted.
    Truncated,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Truncated => "WARN",
        }
    }
}

struct Row {
    check: String,
    expected: f64,
    actual: f64,
    status: Status,
    note: String,
}

fn compare(check: String, gaussian: f64, fock: f64, deficit: f64) -> Row {
    let diff = (gaussian - fock).abs();
    let status = if diff <= TOLERANCE {
        Status::Pass
    } else if deficit > 1e-12 {
        Status::Truncated
    } else {
        Status::Fail
    };
    let note = if status == Status::Truncated {
        format!("norm deficit {deficit:.2e}")
    } else {
        String::new()
    };
    Row {
        check,
        expected: gaussian,
        actual: fock,
        status,
        note,
    }
}

fn oracle_rows(args: &VerifyArgs, g: &Globals) -> Result<Vec<Row>, Failure> {
    let gains = parse_grid(&args.gain)?;
    let alphas = parse_grid(&args.alpha)?;
    let etas = parse_grid(&args.eta)?;
    let lambdas = parse_grid(&args.lambda)?;
    let mut rows = Vec::new();
    for &gain in &gains {
        for &alpha in &alphas {
            for &eta in &etas {
                let params = InterferometerParams::new(gain, eta, eta, alpha)?;
                let tag = format!("G={gain} alpha={alpha} eta={eta}");
                let pure = match build_seeded_tmss_fock(gain, alpha, args.cutoff) {
                    Ok((s, _)) => s,
                    Err(Error::Truncation { deficit, cutoff, .. }) => {
                        g.log(0, format!("warning: {tag}: cutoff {cutoff} truncates {deficit:.2e} of the norm"));
                        rows.push(Row {
                            check: format!("{tag} build"),
                            expected: 1.0,
                            actual: 1.0 - deficit,
                            status: Status::Truncated,
                            note: format!("norm deficit {deficit:.2e}; raise --cutoff"),
                        });
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let fock = apply_loss_fock(&apply_loss_fock(&pure, eta, Mode::Probe)?, eta, Mode::Conjugate)?;
                let deficit = fock.report().norm_deficit;
                let state = lossy_state(&params);
                for &l in &lambdas {
                    let (gm, gv) = joint_quadrature_stats(&state, WeightedMeasurement::new(l)?);
                    let (fm, fv) = oracle_quadrature_stats(&fock, l)?;
                    rows.push(compare(format!("{tag} lambda={l} mean"), gm, fm, deficit));
                    rows.push(compare(format!("{tag} lambda={l} variance"), gv, fv, deficit));
                }
                let gp = photon_moments(&state, Mode::Probe);
                let fp = oracle_photon_moments(&fock, Mode::Probe)?;
                rows.push(compare(format!("{tag} probe <n>"), gp.mean_n, fp.mean_n, deficit));
                rows.push(compare(format!("{tag} probe var(n)"), gp.var_n, fp.var_n, deficit));
            }
        }
    }
    Ok(rows)
}

/// Simulates a noise sweep at G = 1.67, fits it and checks that the fitted
/// gain lies within two standard errors of the truth.
fn pipeline_row(seed: u64) -> Result<Row, Failure> {
    let truth = InterferometerParams::new(1.67, 0.76, 0.79, 0.0)?;
    let mut cfg = SimConfig::new(truth);
    cfg.rng_seed = seed;
    cfg.tone_depth = 0.0;
    let grid = parse_grid("0:1:0.05")?;
    let ds = measure_noise_vs_lambda(&cfg, &grid, 1)?;
    let fit = fit_noise_curve(&ds, &FitOptions::default())?;
    let ok = (fit.gain - truth.gain()).abs() <= 2.0 * fit.sigma_gain;
    Ok(Row {
        check: "simulate -> fit gain".into(),
        expected: truth.gain(),
        actual: fit.gain,
        status: if ok { Status::Pass } else { Status::Fail },
        note: format!("sigma {:.4}", fit.sigma_gain),
    })
}

pub fn run(args: &VerifyArgs, g: &Globals) -> Result<(), Failure> {
    let mut rows = oracle_rows(args, g)?;
    if args.pipeline {
        rows.push(pipeline_row(g.seed.unwrap_or(0))?);
    }
    let failures = rows.iter().filter(|r| r.status == Status::Fail).count();
    let warnings = rows.iter().filter(|r| r.status == Status::Truncated).count();

    let text = match g.format {
        Format::Csv => {
            let mut out = format!("# cutoff = {}\n# tolerance = {TOLERANCE}\n", args.cutoff);
            out.push_str("status,check,gaussian,fock,note\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{:.12},{:.12},{}", r.status.label(), r.check, r.expected, r.actual, r.note);
            }
            out
        }
        Format::Json => {
            let items: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "status": r.status.label(),
                        "check": r.check,
                        "gaussian": r.expected,
                        "fock": r.actual,
                        "note": r.note,
                    })
                })
                .collect();
            let v = json!({ "cutoff": args.cutoff, "tolerance": TOLERANCE, "checks": items });
            format!("{}\n", serde_json::to_string_pretty(&v).expect("plain JSON"))
        }
    };
    emit(g.output.as_deref(), &text)?;
    g.log(0, format!("{} checks: {} failed, {} truncated", rows.len(), failures, warnings));
    if failures > 0 {
        return Err(Failure::Runtime(format!("{failures} checks exceeded tolerance {TOLERANCE}")));
    }
    Ok(())
}
