//! Figure-data generators. Grid points are evaluated in parallel and
//! collected in order, so output is identical to a sequential sweep.

use rayon::prelude::*;

use super::{
    joint_noise_power, lambda_opt, phase_sensitivity, qcrb, snri, SqlKind,
};
use crate::error::{domain, Result};
use crate::gaussian::{InterferometerParams, WeightedMeasurement};
use crate::table::CurveTable;

/// Seed amplitude used for the sensitivity-vs-gain curves. Large enough that
/// the gap between the optimal weighted measurement and the QCRB is below
/// `1e-3` relative over the plotted gains.
pub const DEFAULT_FIG3_ALPHA: f64 = 100.0;

fn check_grid(grid: &[f64], name: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(domain(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

fn weights(grid: &[f64]) -> Result<Vec<WeightedMeasurement>> {
    check_grid(grid, "lambda")?;
    grid.iter().map(|&l| WeightedMeasurement::new(l)).collect()
}

fn gains(grid: &[f64]) -> Result<()> {
    check_grid(grid, "gain")?;
    if let Some(g) = grid.iter().find(|&&g| g < 1.0) {
        return Err(domain(format!("gain must be >= 1, got {g}")));
    }
    Ok(())
}

fn tag(p: &InterferometerParams) -> String {
    format!("g{}_etap{}_etac{}", p.gain(), p.eta_p(), p.eta_c())
}

/// Joint noise of `M_λQ` against `λ`, one variance and one dB column per
/// parameter set.
pub fn curve_noise_vs_lambda(
    params: &[InterferometerParams],
    lambda_grid: &[f64],
) -> Result<CurveTable> {
    if params.is_empty() {
        return Err(domain("no parameter sets"));
    }
    let ws = weights(lambda_grid)?;
    let columns = params
        .iter()
        .flat_map(|p| [format!("variance_{}", tag(p)), format!("noise_db_{}", tag(p))])
        .collect();
    let rows = ws
        .par_iter()
        .map(|&m| {
            let ys = params
                .iter()
                .flat_map(|p| {
                    let n = joint_noise_power(p, m);
                    [n.variance, n.variance_db]
                })
                .collect();
            (m.lambda(), ys)
        })
        .collect();
    let mut table = CurveTable::new("fig4a", "lambda", columns, rows)?;
    for p in params {
        table = table.with_meta(format!("params_{}", tag(p)), describe(p));
    }
    Ok(table)
}

/// Optimal weight against gain, one column per `(η_p, η_c)` pair.
pub fn curve_lambda_opt_vs_gain(
    eta_list: &[(f64, f64)],
    gain_grid: &[f64],
) -> Result<CurveTable> {
    if eta_list.is_empty() {
        return Err(domain("no transmission pairs"));
    }
    gains(gain_grid)?;
    // Validate transmissions once up front.
    for &(ep, ec) in eta_list {
        InterferometerParams::new(1.0, ep, ec, 0.0)?;
    }
    let columns = eta_list
        .iter()
        .map(|(ep, ec)| format!("lambda_opt_etap{ep}_etac{ec}"))
        .collect();
    let rows = gain_grid
        .par_iter()
        .map(|&g| {
            let ys = eta_list
                .iter()
                .map(|&(ep, ec)| {
                    let p = InterferometerParams::new(g, ep, ec, 0.0).expect("validated");
                    lambda_opt(&p)
                })
                .collect();
            (g, ys)
        })
        .collect();
    let mut table = CurveTable::new("fig4b", "gain", columns, rows)?;
    for (ep, ec) in eta_list {
        table = table.with_meta("transmissions", format!("eta_p={ep} eta_c={ec}"));
    }
    Ok(table)
}

/// Lossless `Δφ·|α|` against gain for the balanced measurement, the optimal
/// weighted measurement and the QCRB.
pub fn curve_sensitivity_vs_gain(alpha: f64, gain_grid: &[f64]) -> Result<CurveTable> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(domain(format!("seed amplitude must be > 0, got {alpha}")));
    }
    gains(gain_grid)?;
    let rows: Result<Vec<_>> = gain_grid
        .par_iter()
        .map(|&g| {
            let p = InterferometerParams::lossless(g, alpha)?;
            let balanced = phase_sensitivity(&p, WeightedMeasurement::balanced())?.delta_phi;
            let weighted = phase_sensitivity(&p, WeightedMeasurement::new(lambda_opt(&p))?)?.delta_phi;
            let bound = qcrb(&p)?.delta_phi;
            Ok((g, vec![balanced * alpha, weighted * alpha, bound * alpha]))
        })
        .collect();
    let columns = vec![
        "dphi_alpha_balanced".to_string(),
        "dphi_alpha_weighted_opt".to_string(),
        "dphi_alpha_qcrb".to_string(),
    ];
    Ok(CurveTable::new("fig3", "gain", columns, rows?)?
        .with_meta("alpha", alpha)
        .with_meta("eta_p", 1.0)
        .with_meta("eta_c", 1.0))
}

/// SNR improvement over SQL1 and SQL2 against `λ`, two columns per parameter set.
pub fn curve_snri_vs_lambda(
    params_list: &[InterferometerParams],
    lambda_grid: &[f64],
) -> Result<CurveTable> {
    if params_list.is_empty() {
        return Err(domain("no parameter sets"));
    }
    let ws = weights(lambda_grid)?;
    let columns = params_list
        .iter()
        .flat_map(|p| [format!("snri_sql1_{}", tag(p)), format!("snri_sql2_{}", tag(p))])
        .collect();
    let rows = ws
        .par_iter()
        .map(|&m| {
            let ys = params_list
                .iter()
                .flat_map(|p| [snri(p, m, SqlKind::Sql1), snri(p, m, SqlKind::Sql2)])
                .collect();
            (m.lambda(), ys)
        })
        .collect();
    let mut table = CurveTable::new("fig6", "lambda", columns, rows)?;
    for p in params_list {
        table = table.with_meta(format!("params_{}", tag(p)), describe(p));
    }
    Ok(table)
}

fn describe(p: &InterferometerParams) -> String {
    format!(
        "gain={} eta_p={} eta_c={} lambda_opt={}",
        p.gain(),
        p.eta_p(),
        p.eta_c(),
        lambda_opt(p)
    )
}
