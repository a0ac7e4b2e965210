use clap::Args;
use tsu_core::fit::{REFERENCE_ETA_C, REFERENCE_ETA_P};
use tsu_core::grid::parse_grid;
use tsu_core::metrology::{
    curve_lambda_opt_vs_gain, curve_noise_vs_lambda, curve_sensitivity_vs_gain,
    curve_snri_vs_lambda, DEFAULT_FIG3_ALPHA,
};
use tsu_core::{CurveTable, InterferometerParams};

use crate::output::{emit, render_table};
use crate::{Failure, Figure, Globals};

#[derive(Args, Debug)]
pub struct CurvesArgs {
    #[arg(value_enum)]
    figure: Figure,

    /// Gain grid (`start:stop:step`, a comma list or one value). For fig4a
    /// and fig6 each gain is its own curve.
    #[arg(long)]
    gain: String,

    /// Equal transmission on both beams; a comma list gives several curves.
    #[arg(long, conflicts_with_all = ["eta_p", "eta_c"])]
    eta: Option<String>,

    #[arg(long, requires = "eta_c")]
    eta_p: Option<f64>,

    #[arg(long, requires = "eta_p")]
    eta_c: Option<f64>,

    /// Weight grid for fig4a and fig6.
    #[arg(long, default_value = "0:1:0.01")]
    lambda: String,

    /// Seed amplitude for fig3.
    #[arg(long, default_value_t = DEFAULT_FIG3_ALPHA)]
    alpha: f64,
}

fn transmissions(args: &CurvesArgs, default: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, Failure> {
    if let (Some(p), Some(c)) = (args.eta_p, args.eta_c) {
        return Ok(vec![(p, c)]);
    }
    match &args.eta {
        Some(spec) => {
            let list = spec
                .split(',')
                .map(|s| s.trim().parse::<f64>().map(|e| (e, e)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Failure::Usage(format!("invalid --eta {spec:?}")))?;
            Ok(list)
        }
        None => Ok(default.to_vec()),
    }
}

fn param_sets(gains: &[f64], etas: &[(f64, f64)]) -> Result<Vec<InterferometerParams>, Failure> {
    let mut out = Vec::new();
    for &g in gains {
        for &(ep, ec) in etas {
            out.push(InterferometerParams::new(g, ep, ec, 0.0)?);
        }
    }
    Ok(out)
}

pub fn build(args: &CurvesArgs) -> Result<CurveTable, Failure> {
    let gains = parse_grid(&args.gain)?;
    let table = match args.figure {
        Figure::Fig3 => {
            if args.eta.is_some() || args.eta_p.is_some() {
                return Err(Failure::Usage("fig3 is defined for the lossless interferometer only".into()));
            }
            curve_sensitivity_vs_gain(args.alpha, &gains)?
        }
        Figure::Fig4a => {
            let params = param_sets(&gains, &transmissions(args, &[(1.0, 1.0)])?)?;
            curve_noise_vs_lambda(&params, &parse_grid(&args.lambda)?)?
        }
        Figure::Fig4b => curve_lambda_opt_vs_gain(&transmissions(args, &[(1.0, 1.0)])?, &gains)?,
        Figure::Fig6 => {
            let params = param_sets(&gains, &transmissions(args, &[(1.0, 1.0)])?)?;
            curve_snri_vs_lambda(&params, &parse_grid(&args.lambda)?)?
        }
        Figure::Fig8 => {
            let mut etas = transmissions(args, &[(REFERENCE_ETA_P, REFERENCE_ETA_C)])?;
            if !etas.contains(&(1.0, 1.0)) {
                etas.push((1.0, 1.0));
            }
            let mut t = curve_lambda_opt_vs_gain(&etas, &gains)?;
            t.figure = "fig8".into();
            t
        }
    };
    Ok(table)
}

pub fn run(args: &CurvesArgs, g: &Globals) -> Result<(), Failure> {
    let table = build(args)?;
    g.log(1, format!("{}: {} rows, {} columns", table.figure, table.rows.len(), table.columns.len()));
    emit(g.output.as_deref(), &render_table(&table, g.format))
}
