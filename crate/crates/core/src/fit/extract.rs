use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_noise_curve, FitOptions, FitResult, NoiseDataset};
use crate::error::{domain, Error, Result};
use crate::gaussian::{InterferometerParams, WeightedMeasurement};
use crate::metrology::{lambda_opt, snri, SqlKind};
use crate::table::CurveTable;

/// Reference transmissions for the theory column of the gain report.
pub const REFERENCE_ETA_P: f64 = 0.745;
pub const REFERENCE_ETA_C: f64 = 0.775;

const BOOTSTRAP_SAMPLES: usize = 1000;

/// Parabolic minimum through the three lowest-noise neighbouring points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectEstimate {
    pub lambda: f64,
    /// Bootstrap standard deviation.
    pub sigma: f64,
    /// The lowest point is the first or last sampled `λ`.
    pub at_boundary: bool,
}

/// Replicates at one `λ` merged into an inverse-variance weighted mean.
fn aggregate(data: &NoiseDataset) -> Vec<(f64, f64, f64)> {
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    let mut i = 0;
    let rows = data.rows();
    while i < rows.len() {
        let l = rows[i].lambda;
        let (mut sw, mut swy) = (0.0, 0.0);
        while i < rows.len() && rows[i].lambda == l {
            let w = 1.0 / (rows[i].sigma_db * rows[i].sigma_db);
            sw += w;
            swy += w * rows[i].noise_db;
            i += 1;
        }
        out.push((l, swy / sw, sw.recip().sqrt()));
    }
    out
}

/// Vertex of the parabola through the lowest point and its neighbours,
/// restricted to their span. Returns `(λ, at_boundary)`.
fn vertex(xs: &[f64], ys: &[f64]) -> (f64, bool) {
    let n = xs.len();
    let k = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(k, _)| k);
    let at_boundary = k == 0 || k == n - 1;
    if n < 3 {
        return (xs[k], at_boundary);
    }
    let c = k.clamp(1, n - 2);
    let (x0, x1, x2) = (xs[c - 1], xs[c], xs[c + 1]);
    let (y0, y1, y2) = (ys[c - 1], ys[c], ys[c + 1]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if at_boundary || den == 0.0 {
        return (xs[k], at_boundary);
    }
    let v = x1 - 0.5 * num / den;
    // A concave triple has its vertex at a maximum.
    let curvature = (y0 - y1) / (x0 - x1) - (y1 - y2) / (x1 - x2);
    if curvature >= 0.0 {
        return (xs[k], at_boundary);
    }
    (v.clamp(x0, x2), at_boundary)
}

/// Direct `λ_opt` estimate from the data alone, with a seeded bootstrap
/// that redraws every point from its quoted Gaussian error.
pub fn direct_minimum(data: &NoiseDataset, seed: u64) -> DirectEstimate {
    let agg = aggregate(data);
    let xs: Vec<f64> = agg.iter().map(|a| a.0).collect();
    let ys: Vec<f64> = agg.iter().map(|a| a.1).collect();
    let (lambda, at_boundary) = vertex(&xs, &ys);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(BOOTSTRAP_SAMPLES);
    let mut yb = ys.clone();
    for _ in 0..BOOTSTRAP_SAMPLES {
        for (y, a) in yb.iter_mut().zip(&agg) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *y = a.1 + a.2 * z;
        }
        draws.push(vertex(&xs, &yb).0);
    }
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    DirectEstimate {
        lambda,
        sigma: var.sqrt(),
        at_boundary,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaOptEstimate {
    /// Primary value: the model estimate when a fit is given, otherwise the
    /// direct one.
    pub lambda_opt: f64,
    pub uncertainty: f64,
    /// `(value, sigma)` from the fitted parameters.
    pub fit: Option<(f64, f64)>,
    /// `(value, sigma)` from the parabolic minimum.
    pub direct: (f64, f64),
    pub warnings: Vec<String>,
}

pub fn extract_lambda_opt(data: &NoiseDataset, fit: Option<&FitResult>) -> LambdaOptEstimate {
    let seed = FitOptions::default().seed;
    let d = direct_minimum(data, seed);
    let mut warnings = Vec::new();
    if d.at_boundary {
        warnings.push(
            "noise minimum at the edge of the sampled lambda range; lambda_opt may lie outside it".into(),
        );
    }
    let fit_pair = fit.map(|f| (f.lambda_opt_fit, f.lambda_opt_fit_sigma));
    let (lambda_opt, uncertainty) = fit_pair.unwrap_or((d.lambda, d.sigma));
    LambdaOptEstimate {
        lambda_opt,
        uncertainty,
        fit: fit_pair,
        direct: (d.lambda, d.sigma),
        warnings,
    }
}

/// SNRI over an SQL baseline at the fitted gain and transmissions. The scale
/// offset is left out, so this is the best achievable improvement for the
/// fitted state.
pub fn overlay_theory(fit: &FitResult, kind: SqlKind, lambda_grid: &[f64]) -> Result<CurveTable> {
    let params = fit.params();
    let rows = lambda_grid
        .iter()
        .map(|&l| {
            let m = WeightedMeasurement::new(l)?;
            Ok((l, vec![snri(&params, m, kind)]))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = CurveTable::new(
        format!("overlay_{}", kind.label()),
        "lambda",
        vec![format!("snri_{}_theory", kind.label())],
        rows,
    )?;
    Ok(table
        .with_meta("gain", fit.gain)
        .with_meta("eta_p", fit.eta_p)
        .with_meta("eta_c", fit.eta_c)
        .with_meta("scale_db", "excluded"))
}

/// `λ_opt` against fitted gain, one row per successfully fitted dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    /// Columns: `lambda_opt_fit`, `lambda_opt_fit_sigma`, `lambda_opt_direct`,
    /// `lambda_opt_direct_sigma`, `gain_sigma`, `lambda_opt_theory`.
    pub table: CurveTable,
    /// `(dataset index, message)` for every dataset whose fit failed.
    pub failures: Vec<(usize, String)>,
}

pub fn lambda_opt_vs_gain_report(
    datasets: &[NoiseDataset],
    opts: &FitOptions,
    reference: (f64, f64),
) -> Result<GainReport> {
    if datasets.len() < 2 {
        return Err(domain(format!("need at least 2 datasets, got {}", datasets.len())));
    }
    let (ref_p, ref_c) = reference;
    InterferometerParams::new(1.0, ref_p, ref_c, 0.0)?;

    let outcomes: Vec<Result<FitResult>> = datasets.par_iter().map(|d| fit_noise_curve(d, opts)).collect();
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for (i, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(f) => fits.push(f),
            Err(Error::FitFailure { message, .. }) => failures.push((i, message)),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    fits.sort_by(|a, b| a.gain.total_cmp(&b.gain));
    if fits.windows(2).any(|w| w[1].gain <= w[0].gain) {
        return Err(domain("datasets must have distinct fitted gains"));
    }
    let rows = fits
        .iter()
        .map(|f| {
            let theory = lambda_opt(&InterferometerParams::new(f.gain, ref_p, ref_c, 0.0)?);
            Ok((
                f.gain,
                vec![
                    f.lambda_opt_fit,
                    f.lambda_opt_fit_sigma,
                    f.lambda_opt_direct,
                    f.lambda_opt_direct_sigma,
                    f.sigma_gain,
                    theory,
                ],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let columns = [
        "lambda_opt_fit",
        "lambda_opt_fit_sigma",
        "lambda_opt_direct",
        "lambda_opt_direct_sigma",
        "gain_sigma",
        "lambda_opt_theory",
    ]
    .map(String::from)
    .to_vec();
    let mut table = CurveTable::new("fig8", "gain", columns, rows)?
        .with_meta("reference_eta_p", ref_p)
        .with_meta("reference_eta_c", ref_c)
        .with_meta("datasets", datasets.len())
        .with_meta("failed", failures.len());
    for (i, msg) in &failures {
        table = table.with_meta(format!("failure_{i}"), msg);
    }
    Ok(GainReport { table, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{DataSource, NoisePoint};
    use crate::grid::range;
    use crate::metrology::joint_noise_power;

    fn synthetic(params: &InterferometerParams, n: usize) -> NoiseDataset {
        let rows = range(0.0, 1.0, 1.0 / (n - 1) as f64)
            .unwrap()
            .into_iter()
            .map(|l| NoisePoint {
                lambda: l,
                noise_db: joint_noise_power(params, WeightedMeasurement::new(l).unwrap()).variance_db,
                sigma_db: 0.05,
            })
            .collect();
        NoiseDataset::new(rows, DataSource::Simulated).unwrap()
    }

    #[test]
    fn noiseless_lossless_fit_gives_closed_form() {
        let p = InterferometerParams::lossless(2.0, 0.0).unwrap();
        let ds = synthetic(&p, 21);
        let opts = FitOptions { constrain_loss_offset: Some(0.0), ..FitOptions::default() };
        let fit = fit_noise_curve(&ds, &opts).unwrap();
        let est = extract_lambda_opt(&ds, Some(&fit));
        assert!((est.lambda_opt - 0.942809).abs() < 1e-5, "{est:?}");
        assert!((est.direct.0 - 0.942809).abs() < 0.02, "{est:?}");
    }

    #[test]
    fn decreasing_data_warns_at_boundary() {
        let rows = (0..6)
            .map(|i| NoisePoint { lambda: i as f64 * 0.2, noise_db: -(i as f64), sigma_db: 0.1 })
            .collect();
        let ds = NoiseDataset::new(rows, DataSource::Measured).unwrap();
        let est = extract_lambda_opt(&ds, None);
        assert_eq!(est.direct.0, 1.0);
        assert!(!est.warnings.is_empty());
    }

    #[test]
    fn overlay_offsets_and_ordering() {
        let p = InterferometerParams::new(1.67, 0.76, 0.79, 0.0).unwrap();
        let fit = fit_noise_curve(&synthetic(&p, 21), &FitOptions::default()).unwrap();
        let lo = fit.lambda_opt_fit;
        let grid = [0.5, lo, 1.0];
        let s2 = overlay_theory(&fit, SqlKind::Sql2, &grid).unwrap();
        let s1 = overlay_theory(&fit, SqlKind::Sql1, &grid).unwrap();
        let c2 = s2.column("snri_sql2_theory").unwrap();
        let c1 = s1.column("snri_sql1_theory").unwrap();
        assert!((c2[1] - 1.468).abs() < 1e-3, "{}", c2[1]);
        assert!(c2[1] > c2[2]);
        for (a, b) in c1.iter().zip(&c2) {
            assert!((a - b - 3.0103).abs() < 1e-4);
        }
    }

    #[test]
    fn reference_theory_value() {
        let p = InterferometerParams::new(1.67, REFERENCE_ETA_P, REFERENCE_ETA_C, 0.0).unwrap();
        assert!((lambda_opt(&p) - 0.788577).abs() < 1e-6);
    }

    #[test]
    fn gain_report_rows_and_guard() {
        let a = synthetic(&InterferometerParams::new(1.2, 0.73, 0.76, 0.0).unwrap(), 21);
        let b = synthetic(&InterferometerParams::new(1.67, 0.76, 0.79, 0.0).unwrap(), 21);
        let rep = lambda_opt_vs_gain_report(&[b.clone(), a], &FitOptions::default(), (REFERENCE_ETA_P, REFERENCE_ETA_C)).unwrap();
        assert_eq!(rep.table.rows.len(), 2);
        assert!(rep.failures.is_empty());
        let l = rep.table.column("lambda_opt_fit").unwrap();
        assert!(l[1] > l[0]);
        let theory = rep.table.column("lambda_opt_theory").unwrap();
        let expect = lambda_opt(&InterferometerParams::new(rep.table.rows[1].0, 0.745, 0.775, 0.0).unwrap());
        assert!((theory[1] - expect).abs() < 1e-12);
        assert!(lambda_opt_vs_gain_report(&[b], &FitOptions::default(), (0.745, 0.775)).is_err());
    }
}
