//! Optimal weighting, noise, phase sensitivity and SQL comparisons.

mod curves;

pub use curves::{
    curve_lambda_opt_vs_gain, curve_noise_vs_lambda, curve_sensitivity_vs_gain,
    curve_snri_vs_lambda, DEFAULT_FIG3_ALPHA,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gaussian::{
    joint_quadrature_stats, lossy_state, photon_moments, seeded_tmss, InterferometerParams, Mode,
    WeightedMeasurement,
};

/// `10 log10 2`, the offset between the two SQL baselines.
pub const SQL_OFFSET_DB: f64 = 3.010299956639812;

/// Variance of `M_λQ` relative to one detector's shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseResult {
    pub variance: f64,
    pub variance_db: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    /// Minimum detectable phase in radians.
    pub delta_phi: f64,
    pub snr_db: Option<f64>,
}

/// Coherent-light baselines.
///
/// `Sql1` reads both beams with two homodyne detectors and sums them;
/// `Sql2` keeps only the detector on the beam that crosses the phase object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SqlKind {
    Sql1,
    Sql2,
}

impl SqlKind {
    /// Shot-noise variance of the baseline measurement.
    pub fn variance(self) -> f64 {
        match self {
            SqlKind::Sql1 => 2.0,
            SqlKind::Sql2 => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SqlKind::Sql1 => "sql1",
            SqlKind::Sql2 => "sql2",
        }
    }
}

pub fn to_db(power_ratio: f64) -> f64 {
    10.0 * power_ratio.log10()
}

/// Unconstrained minimizer of the joint noise,
/// `sqrt(η_p η_c) sinh 2r / (1 - η_c + η_c cosh 2r)`.
///
/// With strongly unequal transmissions (`η_p ≫ η_c`) this can exceed 1.
pub fn lambda_opt_unclamped(params: &InterferometerParams) -> f64 {
    let (ep, ec) = (params.eta_p(), params.eta_c());
    (ep * ec).sqrt() * params.sinh_2r() / (1.0 - ec + ec * params.cosh_2r())
}

/// Optimal weight restricted to the realizable range `[0, 1]`.
pub fn lambda_opt(params: &InterferometerParams) -> f64 {
    lambda_opt_unclamped(params).clamp(0.0, 1.0)
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
///
/// Returns the midpoint of the final bracket.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Numeric minimizer of the joint variance over `λ ∈ [0, 1]`.
///
/// Golden-section search alone cannot locate a quadratic minimum closer than
/// about `sqrt(ε)` because function values stop resolving there, so the
/// bracket result is polished by one parabolic step through three
/// well-separated samples of the same objective.
pub fn lambda_opt_numeric(params: &InterferometerParams) -> f64 {
    let state = lossy_state(params);
    let objective = |l: f64| joint_quadrature_stats(&state, WeightedMeasurement::new_unchecked(l)).1;
    let coarse = golden_section_min(objective, 0.0, 1.0, 1e-10);

    let h = 1e-2;
    let mid = coarse.clamp(h, 1.0 - h);
    let (fa, fb, fc) = (objective(mid - h), objective(mid), objective(mid + h));
    let curvature = fa - 2.0 * fb + fc;
    if curvature <= 0.0 {
        return coarse;
    }
    let vertex = mid + 0.5 * h * (fa - fc) / curvature;
    let polished = vertex.clamp(0.0, 1.0);
    // The bracket has already located the minimum to about sqrt(ε); the
    // parabola may only refine it, never move it somewhere else.
    if (polished - coarse).abs() <= 1e-6 {
        polished
    } else {
        coarse
    }
}

/// Joint noise power of `M_λQ` for the lossy seeded state.
pub fn joint_noise_power(params: &InterferometerParams, m: WeightedMeasurement) -> NoiseResult {
    joint_noise_power_with(params, m, 0.0)
}

/// As [`joint_noise_power`], plus an uncorrelated electronic-noise variance
/// `electronic_var` on each detector (scaled by `λ²` on the conjugate).
pub fn joint_noise_power_with(
    params: &InterferometerParams,
    m: WeightedMeasurement,
    electronic_var: f64,
) -> NoiseResult {
    let (_, var) = joint_quadrature_stats(&lossy_state(params), m);
    let l = m.lambda();
    let variance = var + electronic_var * (1.0 + l * l);
    NoiseResult {
        variance,
        variance_db: to_db(variance),
        lambda: l,
    }
}

/// Minimum detectable phase, `Δφ² = Var(M_λQ) / (∂_φ<M>)²`.
pub fn phase_sensitivity(
    params: &InterferometerParams,
    m: WeightedMeasurement,
) -> Result<SensitivityResult> {
    let slope = params.signal_slope();
    if slope <= 0.0 {
        return Err(domain("no signal: seed amplitude and probe transmission must be > 0"));
    }
    let var = joint_noise_power(params, m).variance;
    Ok(SensitivityResult {
        delta_phi: (var / (slope * slope)).sqrt(),
        snr_db: None,
    })
}

/// Signal-to-noise ratio of a phase excursion `dphi`,
/// `(∂_φ<M>)² dphi² / Var(M)`, as a plain ratio.
pub fn snr(params: &InterferometerParams, m: WeightedMeasurement, dphi: f64) -> f64 {
    let slope = params.signal_slope();
    slope * slope * dphi * dphi / joint_noise_power(params, m).variance
}

/// Quantum Fisher information of the pure seeded state for a phase on the
/// probe, `4 Var(n_p) = 4 G |α|² cosh 2r + sinh² 2r`.
pub fn quantum_fisher_information(params: &InterferometerParams) -> Result<f64> {
    if !params.is_lossless() {
        return Err(Error::Unsupported(
            "the QCRB is only modeled for the lossless state".into(),
        ));
    }
    Ok(4.0 * photon_moments(&seeded_tmss(params), Mode::Probe).var_n)
}

/// Quantum Cramér-Rao bound `Δφ = 1 / sqrt(F_Q)` for the lossless state.
pub fn qcrb(params: &InterferometerParams) -> Result<SensitivityResult> {
    let fq = quantum_fisher_information(params)?;
    if fq <= 0.0 {
        return Err(domain("vanishing Fisher information (no light in the probe)"));
    }
    Ok(SensitivityResult {
        delta_phi: 1.0 / fq.sqrt(),
        snr_db: None,
    })
}

/// Coherent baseline carrying the probe's photon number through the same
/// probe-arm transmission.
pub fn sql_sensitivity(kind: SqlKind, params: &InterferometerParams) -> Result<SensitivityResult> {
    let slope = params.signal_slope();
    if slope <= 0.0 {
        return Err(domain("no signal: seed amplitude and probe transmission must be > 0"));
    }
    Ok(SensitivityResult {
        delta_phi: (kind.variance() / (slope * slope)).sqrt(),
        snr_db: None,
    })
}

/// Improvement in SNR over an SQL baseline, `10 log10 (Δφ_SQL / Δφ)²`.
///
/// The signal slopes are identical and cancel, leaving a variance ratio, so
/// this is defined even without a seed.
pub fn snri(params: &InterferometerParams, m: WeightedMeasurement, kind: SqlKind) -> f64 {
    let var = joint_noise_power(params, m).variance;
    let base = -to_db(var);
    match kind {
        SqlKind::Sql2 => base,
        SqlKind::Sql1 => base + SQL_OFFSET_DB,
    }
}
