//! Synthetic dual-homodyne records and spectrum-analyzer emulation.
//!
//! Each sample is an independent draw of the (probe, conjugate) phase
//! quadratures of the lossy seeded state, i.e. a flat squeezing spectrum
//! over the analysis band. A phase modulation tone rides on the probe.
//! Lock jitter rotates each detector's quadrature angle by a block-constant
//! random error, which mixes in the orthogonal (anti-squeezed) quadrature.

mod config;
pub mod spectrum;

pub use config::SimConfig;
pub use spectrum::{spectrum_power, tone_and_floor, SpectrumResult, ToneReading, Welch};

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fit::{DataSource, NoiseDataset, NoisePoint};
use crate::gaussian::{lossy_state, GaussianState, InterferometerParams, WeightedMeasurement};
use crate::metrology::to_db;

/// Dual-homodyne time series in shot-noise units.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub probe: Vec<f64>,
    pub conjugate: Vec<f64>,
    pub config: SimConfig,
}

impl MeasurementRecord {
    pub fn len(&self) -> usize {
        self.probe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probe.is_empty()
    }

    /// `t,probe,conjugate` CSV with a commented parameter header.
    pub fn to_csv(&self) -> String {
        let mut out = self.config.to_comment_header();
        out.push_str("t,probe,conjugate\n");
        let dt = 1.0 / self.config.sample_rate;
        for (i, (p, c)) in self.probe.iter().zip(&self.conjugate).enumerate() {
            let _ = writeln!(out, "{:e},{p},{c}", i as f64 * dt);
        }
        out
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Covariance of the two detector outputs when each detector reads the phase
/// quadrature rotated by its lock error.
fn detector_covariance(state: &GaussianState, eps_p: f64, eps_c: f64) -> (f64, f64, f64) {
    let (sp, cp) = eps_p.sin_cos();
    let (sc, cc) = eps_c.sin_cos();
    let up = Vector4::new(sp, cp, 0.0, 0.0);
    let uc = Vector4::new(0.0, 0.0, sc, cc);
    let cov = state.cov();
    (up.dot(&(cov * up)), uc.dot(&(cov * uc)), up.dot(&(cov * uc)))
}

/// One record on RNG stream 0.
pub fn simulate_records(config: &SimConfig) -> Result<MeasurementRecord> {
    simulate_stream(config, 0)
}

/// One record on an explicit RNG stream of `config.rng_seed`.
pub fn simulate_stream(config: &SimConfig, stream: u64) -> Result<MeasurementRecord> {
    config.validate()?;
    let mut rng = stream_rng(config.rng_seed, stream);
    let n = config.sample_count();
    let state = lossy_state(&config.params);
    let tone_amp = config.params.signal_slope() * config.tone_depth;
    let omega = 2.0 * PI * config.tone_freq / config.sample_rate;
    let block = config.jitter_block_samples();
    let e_sd = config.electronic_noise_var.sqrt();

    let mut probe = Vec::with_capacity(n);
    let mut conjugate = Vec::with_capacity(n);
    let mut chol = (0.0, 0.0, 0.0);
    for i in 0..n {
        if i % block == 0 {
            let (eps_p, eps_c) = if config.lock_jitter_rms > 0.0 {
                (config.lock_jitter_rms * normal(&mut rng), config.lock_jitter_rms * normal(&mut rng))
            } else {
                (0.0, 0.0)
            };
            let (vp, vc, cpc) = detector_covariance(&state, eps_p, eps_c);
            let l11 = vp.sqrt();
            let l21 = cpc / l11;
            let l22 = (vc - l21 * l21).max(0.0).sqrt();
            chol = (l11, l21, l22);
        }
        let (z1, z2) = (normal(&mut rng), normal(&mut rng));
        let mut p = chol.0 * z1;
        let mut c = chol.1 * z1 + chol.2 * z2;
        if e_sd > 0.0 {
            p += e_sd * normal(&mut rng);
            c += e_sd * normal(&mut rng);
        }
        if tone_amp != 0.0 {
            p += tone_amp * (omega * i as f64).sin();
        }
        probe.push(p);
        conjugate.push(c);
    }
    Ok(MeasurementRecord {
        probe,
        conjugate,
        config: config.clone(),
    })
}

/// `probe + λ · conjugate`, sample by sample.
pub fn combine_weighted(record: &MeasurementRecord, m: WeightedMeasurement) -> Vec<f64> {
    let l = m.lambda();
    record
        .probe
        .iter()
        .zip(&record.conjugate)
        .map(|(p, c)| p + l * c)
        .collect()
}

/// Linear noise floor (shot-noise units) and its per-segment standard error.
fn floor_of(series: &[f64], config: &SimConfig) -> Result<(f64, f64)> {
    let (center, rbw, fs) = (config.analysis_freq, config.rbw, config.sample_rate);
    let welch = Welch::for_rbw(rbw, fs, series.len())?;
    let bins = welch.band_bins(center, rbw)?;
    let tone_in_band = config.tone_depth > 0.0 && (config.tone_freq - center).abs() <= rbw / 2.0;
    let bins = if tone_in_band {
        let tone_bin = (config.tone_freq / welch.bin_width()).round() as usize;
        let floor: Vec<usize> = bins.into_iter().filter(|k| k.abs_diff(tone_bin) > 3).collect();
        if floor.is_empty() {
            return Err(domain("analysis band too narrow to exclude the tone"));
        }
        floor
    } else {
        bins
    };
    let segs = spectrum::band_power_segments(&welch, series, &bins);
    let k = segs.len() as f64;
    if segs.len() < 2 {
        return Err(domain("record too short for an error estimate"));
    }
    let mean = segs.iter().sum::<f64>() / k;
    let var = segs.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
    // Neighbouring segments overlap by half and are not independent.
    let inflation = 1.0 + 2.0 * welch.overlap_correlation() * (k - 1.0) / k;
    Ok((mean, (var * inflation / k).sqrt()))
}

/// Measured joint noise against `λ` at the configured analysis frequency
/// and RBW. Every (trial, `λ`) reading comes from its own record on stream
/// `trial * grid_len + index`, like separate spectrum-analyzer sweeps.
///
/// With several trials the error bar is the standard error of the per-trial
/// dB readings; with one trial it comes from segment-to-segment scatter.
pub fn measure_noise_vs_lambda(
    config: &SimConfig,
    lambda_grid: &[f64],
    trials: usize,
) -> Result<NoiseDataset> {
    if lambda_grid.is_empty() {
        return Err(domain("lambda grid is empty"));
    }
    if trials == 0 {
        return Err(domain("at least one trial is required"));
    }
    let weights: Vec<WeightedMeasurement> = lambda_grid
        .iter()
        .map(|&l| WeightedMeasurement::new(l))
        .collect::<Result<_>>()?;
    config.validate()?;

    let n = weights.len() as u64;
    let readings: Vec<(f64, f64)> = (0..trials as u64 * n)
        .into_par_iter()
        .map(|idx| {
            let rec = simulate_stream(config, idx)?;
            floor_of(&combine_weighted(&rec, weights[(idx % n) as usize]), config)
        })
        .collect::<Result<_>>()?;
    let per_trial: Vec<&[(f64, f64)]> = readings.chunks(weights.len()).collect();

    let rows = weights
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let readings: Vec<(f64, f64)> = per_trial.iter().map(|t| t[j]).collect();
            let (noise_db, sigma_db) = if trials == 1 {
                let (mean, se) = readings[0];
                (to_db(mean), 10.0 / std::f64::consts::LN_10 * se / mean)
            } else {
                let dbs: Vec<f64> = readings.iter().map(|(p, _)| to_db(*p)).collect();
                let k = dbs.len() as f64;
                let mean = dbs.iter().sum::<f64>() / k;
                let var = dbs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (mean, (var / k).sqrt())
            };
            NoisePoint {
                lambda: m.lambda(),
                noise_db,
                sigma_db,
            }
        })
        .collect();
    NoiseDataset::new(rows, DataSource::Simulated)
}

/// Coherent reference for `config`: amplifier off, seed raised to the
/// probe's power, same optics and analysis settings.
pub fn coherent_baseline_config(config: &SimConfig) -> Result<SimConfig> {
    let p = config.params;
    let params = InterferometerParams::new(1.0, p.eta_p(), p.eta_c(), p.alpha() * p.gain().sqrt())?;
    Ok(SimConfig {
        params,
        ..config.clone()
    })
}

/// Squeezed-versus-coherent comparison of one weighted measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentComparison {
    pub lambda: f64,
    pub squeezed: ToneReading,
    pub coherent: ToneReading,
    /// Noise-floor reduction of the squeezed trace, dB.
    pub floor_improvement_db: f64,
    /// Ratio of squeezed to coherent tone power.
    pub tone_ratio: f64,
}

/// Measures tone and floor at the tone frequency for the squeezed state and
/// for its coherent baseline. The coherent trace always sums both detectors
/// (`λ = 1`), i.e. the two-detector baseline.
pub fn compare_with_coherent(config: &SimConfig, m: WeightedMeasurement) -> Result<CoherentComparison> {
    let squeezed_rec = simulate_records(config)?;
    let coherent_cfg = coherent_baseline_config(config)?;
    // Independent noise for the reference trace.
    let coherent_rec = simulate_stream(&coherent_cfg, 1)?;
    let fs = config.sample_rate;
    let squeezed = tone_and_floor(&combine_weighted(&squeezed_rec, m), config.tone_freq, config.rbw, fs)?;
    let coherent = tone_and_floor(
        &combine_weighted(&coherent_rec, WeightedMeasurement::balanced()),
        config.tone_freq,
        config.rbw,
        fs,
    )?;
    Ok(CoherentComparison {
        lambda: m.lambda(),
        floor_improvement_db: coherent.floor.power_db - squeezed.floor.power_db,
        tone_ratio: squeezed.tone_power / coherent.tone_power,
        squeezed,
        coherent,
    })
}
