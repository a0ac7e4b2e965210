//! Welch-averaged periodogram and spectrum-analyzer style band powers.
//!
//! Band powers are normalized to what a unit-variance white series puts in
//! the same bins, so shot noise of a single detector reads 0 dB.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// One spectrum-analyzer reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub center_freq: f64,
    pub rbw: f64,
    /// dB relative to single-detector shot noise in the same band.
    pub power_db: f64,
    /// True when this reading is the integrated tone rather than a noise floor.
    pub is_peak: bool,
}

/// Half-width, in bins, of the region around a tone that is attributed to
/// the tone. The Hann main lobe spans ±2 bins; one more covers scalloping.
const TONE_HALF_WIDTH_BINS: usize = 3;

/// Welch estimator with a Hann window and 50 % overlap.
pub struct Welch {
    seg_len: usize,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
    sample_rate: f64,
}

impl Welch {
    pub fn new(seg_len: usize, sample_rate: f64) -> Result<Self> {
        if seg_len < 16 {
            return Err(domain(format!("segment length {seg_len} is too short")));
        }
        if !(sample_rate > 0.0) {
            return Err(domain("sample rate must be > 0"));
        }
        // Periodic Hann.
        let window: Vec<f64> = (0..seg_len)
            .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / seg_len as f64).cos())
            .collect();
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(seg_len);
        Ok(Self {
            seg_len,
            window,
            window_power,
            fft,
            sample_rate,
        })
    }

    /// Segment length giving at least eight bins per resolution bandwidth,
    /// capped by the series length.
    pub fn for_rbw(rbw: f64, sample_rate: f64, series_len: usize) -> Result<Self> {
        if !(rbw > 0.0 && rbw <= sample_rate) {
            return Err(domain(format!("resolution bandwidth {rbw} Hz is out of range")));
        }
        let wanted = (8.0 * sample_rate / rbw).ceil() as usize;
        let seg_len = wanted.next_power_of_two().min(prev_power_of_two(series_len));
        Self::new(seg_len, sample_rate)
    }

    pub fn seg_len(&self) -> usize {
        self.seg_len
    }

    /// Correlation between periodogram values of neighbouring half-overlapping
    /// segments for white noise, `(Σ w[n] w[n+L/2])² / (Σ w²)²`.
    pub fn overlap_correlation(&self) -> f64 {
        let hop = self.seg_len / 2;
        let cross: f64 = self.window[..self.seg_len - hop]
            .iter()
            .zip(&self.window[hop..])
            .map(|(a, b)| a * b)
            .sum();
        (cross / self.window_power).powi(2)
    }

    pub fn bin_width(&self) -> f64 {
        self.sample_rate / self.seg_len as f64
    }

    /// Frequency of one-sided bin `k`.
    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.bin_width()
    }

    /// One-sided periodogram of every segment, scaled so that the sum over
    /// bins times the bin width equals the segment's variance.
    pub fn segment_psds(&self, series: &[f64]) -> Vec<Vec<f64>> {
        let hop = self.seg_len / 2;
        let n_bins = self.seg_len / 2 + 1;
        let scale = 1.0 / (self.sample_rate * self.window_power);
        let mut buf = vec![Complex::new(0.0, 0.0); self.seg_len];
        let mut out = Vec::new();
        let mut start = 0;
        while start + self.seg_len <= series.len() {
            for (b, (x, w)) in buf
                .iter_mut()
                .zip(series[start..start + self.seg_len].iter().zip(&self.window))
            {
                *b = Complex::new(x * w, 0.0);
            }
            self.fft.process(&mut buf);
            let psd: Vec<f64> = (0..n_bins)
                .map(|k| {
                    let p = buf[k].norm_sqr() * scale;
                    if k == 0 || (self.seg_len.is_multiple_of(2) && k == n_bins - 1) {
                        p
                    } else {
                        2.0 * p
                    }
                })
                .collect();
            out.push(psd);
            start += hop;
        }
        out
    }

    /// Averaged one-sided PSD.
    pub fn psd(&self, series: &[f64]) -> Vec<f64> {
        average(&self.segment_psds(series))
    }

    /// Bins whose centre lies within `rbw / 2` of `center`.
    pub fn band_bins(&self, center: f64, rbw: f64) -> Result<Vec<usize>> {
        let nyquist = self.sample_rate / 2.0;
        if !(rbw > 0.0) || center - rbw / 2.0 < 0.0 || center + rbw / 2.0 >= nyquist {
            return Err(domain(format!(
                "band {center} Hz ± {} Hz is outside (0, {nyquist}) Hz",
                rbw / 2.0
            )));
        }
        let bins: Vec<usize> = (0..=self.seg_len / 2)
            .filter(|&k| (self.freq(k) - center).abs() <= rbw / 2.0)
            .collect();
        if bins.is_empty() {
            return Err(domain("resolution bandwidth narrower than one bin"));
        }
        Ok(bins)
    }
}

fn prev_power_of_two(n: usize) -> usize {
    if n == 0 {
        0
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}

fn average(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len().max(1) as f64;
    let width = rows.first().map_or(0, Vec::len);
    let mut out = vec![0.0; width];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// PSD of unit-variance white noise, per Hz, one-sided.
fn white_level(sample_rate: f64) -> f64 {
    2.0 / sample_rate
}

/// Per-segment band powers in units of unit-variance white noise, for
/// averaging and error estimation.
pub(crate) fn band_power_segments(
    welch: &Welch,
    series: &[f64],
    bins: &[usize],
) -> Vec<f64> {
    let level = white_level(welch.sample_rate);
    welch
        .segment_psds(series)
        .iter()
        .map(|psd| bins.iter().map(|&k| psd[k]).sum::<f64>() / (bins.len() as f64 * level))
        .collect()
}

/// Noise power in an RBW-wide window at `center_freq`.
pub fn spectrum_power(
    series: &[f64],
    center_freq: f64,
    rbw: f64,
    sample_rate: f64,
) -> Result<SpectrumResult> {
    let welch = Welch::for_rbw(rbw, sample_rate, series.len())?;
    let bins = welch.band_bins(center_freq, rbw)?;
    let segs = band_power_segments(&welch, series, &bins);
    if segs.is_empty() {
        return Err(domain("series shorter than one analysis segment"));
    }
    let mean = segs.iter().sum::<f64>() / segs.len() as f64;
    Ok(SpectrumResult {
        center_freq,
        rbw,
        power_db: 10.0 * mean.log10(),
        is_peak: false,
    })
}

/// Tone and floor readings for an analysis band containing a tone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneReading {
    pub tone: SpectrumResult,
    pub floor: SpectrumResult,
    /// Integrated tone power in variance units (`A²/2` for amplitude `A`).
    pub tone_power: f64,
    /// Noise floor as a linear ratio to shot noise.
    pub floor_power: f64,
}

/// Splits an RBW-wide band around `tone_freq` into the tone's main lobe and
/// the remaining noise floor. The floor is the mean level of the off-tone
/// bins; the tone power is what the main lobe carries above that floor.
pub fn tone_and_floor(
    series: &[f64],
    tone_freq: f64,
    rbw: f64,
    sample_rate: f64,
) -> Result<ToneReading> {
    let welch = Welch::for_rbw(rbw, sample_rate, series.len())?;
    let bins = welch.band_bins(tone_freq, rbw)?;
    let tone_bin = (tone_freq / welch.bin_width()).round() as usize;
    let (tone_bins, floor_bins): (Vec<usize>, Vec<usize>) = bins
        .iter()
        .partition(|&&k| k.abs_diff(tone_bin) <= TONE_HALF_WIDTH_BINS);
    if floor_bins.is_empty() {
        return Err(domain("resolution bandwidth too narrow to separate tone and floor"));
    }
    let psd = welch.psd(series);
    let level = white_level(sample_rate);
    let floor_psd = floor_bins.iter().map(|&k| psd[k]).sum::<f64>() / floor_bins.len() as f64;
    let tone_power = tone_bins
        .iter()
        .map(|&k| psd[k] - floor_psd)
        .sum::<f64>()
        * welch.bin_width();
    let floor_power = floor_psd / level;
    // Shot-noise power in the RBW is `level * rbw`.
    let tone_db = 10.0 * (tone_power.max(f64::MIN_POSITIVE) / (level * rbw)).log10();
    Ok(ToneReading {
        tone: SpectrumResult {
            center_freq: tone_freq,
            rbw,
            power_db: tone_db,
            is_peak: true,
        },
        floor: SpectrumResult {
            center_freq: tone_freq,
            rbw,
            power_db: 10.0 * floor_power.log10(),
            is_peak: false,
        },
        tone_power,
        floor_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn white(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); sigma * z }).collect()
    }

    #[test]
    fn psd_integrates_to_variance() {
        let x = white(1 << 16, 2.0, 1);
        let w = Welch::new(1024, 1.0e6).unwrap();
        let total: f64 = w.psd(&x).iter().sum::<f64>() * w.bin_width();
        assert!((total - 4.0).abs() < 0.1, "{total}");
    }

    #[test]
    fn white_noise_reads_zero_db() {
        let x = white(1 << 20, 1.0, 7);
        let s = spectrum_power(&x, 1.0e6, 1.0e5, 2.5e6).unwrap();
        assert!(s.power_db.abs() < 0.2, "{}", s.power_db);
        assert!(!s.is_peak);
    }

    #[test]
    fn scaled_noise_reads_its_variance() {
        let x = white(1 << 19, 0.5f64.sqrt(), 3);
        let s = spectrum_power(&x, 1.0e6, 1.0e5, 2.5e6).unwrap();
        assert!((s.power_db + 3.0103).abs() < 0.2, "{}", s.power_db);
    }

    #[test]
    fn hann_half_overlap_correlation() {
        let w = Welch::new(1024, 1.0).unwrap();
        assert!((w.overlap_correlation() - 1.0 / 36.0).abs() < 1e-9, "{}", w.overlap_correlation());
    }

    #[test]
    fn band_outside_nyquist_rejected() {
        let x = white(1 << 14, 1.0, 1);
        assert!(spectrum_power(&x, 1.2e6, 1.0e5, 2.5e6).is_err());
        assert!(spectrum_power(&x, 1.0e6, 0.0, 2.5e6).is_err());
    }

    #[test]
    fn tone_power_recovered_over_noise() {
        let fs = 2.5e6;
        let amp = 0.5;
        let mut x = white(1 << 20, 1.0, 11);
        for (i, v) in x.iter_mut().enumerate() {
            *v += amp * (2.0 * PI * 1.0e6 * i as f64 / fs).sin();
        }
        let r = tone_and_floor(&x, 1.0e6, 1.0e5, fs).unwrap();
        assert!((r.tone_power / (amp * amp / 2.0) - 1.0).abs() < 0.05, "{}", r.tone_power);
        assert!(r.floor.power_db.abs() < 0.3, "{}", r.floor.power_db);
        assert!(r.tone.is_peak);
    }
}
