use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gaussian::InterferometerParams;

/// Simulation settings. Frequencies in Hz, durations in seconds, noise in
/// shot-noise units, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: InterferometerParams,
    pub sample_rate: f64,
    pub duration: f64,
    pub tone_freq: f64,
    /// Peak phase excursion of the modulation.
    pub tone_depth: f64,
    /// RMS quadrature-angle error per detector.
    pub lock_jitter_rms: f64,
    /// Time over which a lock error stays constant.
    pub jitter_block: f64,
    /// Extra white noise per detector.
    pub electronic_noise_var: f64,
    pub rng_seed: u64,
    /// Spectrum-analyzer centre frequency for noise readings.
    pub analysis_freq: f64,
    /// Spectrum-analyzer resolution bandwidth.
    pub rbw: f64,
}

pub const MIN_SAMPLES: usize = 1 << 14;

const KEYS: &[&str] = &[
    "gain",
    "eta_p",
    "eta_c",
    "alpha",
    "sample_rate",
    "duration",
    "tone_freq",
    "tone_depth",
    "lock_jitter_rms",
    "jitter_block",
    "electronic_noise_var",
    "rng_seed",
    "analysis_freq",
    "rbw",
];

impl SimConfig {
    /// Defaults: 2.5 MS/s, 2²⁰ samples, 1 MHz tone and analysis frequency,
    /// 100 kHz RBW, no jitter or electronic noise, 1 ms jitter blocks.
    pub fn new(params: InterferometerParams) -> Self {
        let sample_rate = 2.5e6;
        Self {
            params,
            sample_rate,
            duration: (1u64 << 20) as f64 / sample_rate,
            tone_freq: 1.0e6,
            tone_depth: 1.0e-3,
            lock_jitter_rms: 0.0,
            jitter_block: 1.0e-3,
            electronic_noise_var: 0.0,
            rng_seed: 0,
            analysis_freq: 1.0e6,
            rbw: 1.0e5,
        }
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    pub fn jitter_block_samples(&self) -> usize {
        ((self.jitter_block * self.sample_rate).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(domain(format!("{name} must be > 0, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(domain(format!("{name} must be >= 0, got {v}")))
            }
        };
        positive("sample_rate", self.sample_rate)?;
        positive("duration", self.duration)?;
        positive("tone_freq", self.tone_freq)?;
        positive("jitter_block", self.jitter_block)?;
        positive("rbw", self.rbw)?;
        positive("analysis_freq", self.analysis_freq)?;
        non_negative("tone_depth", self.tone_depth)?;
        non_negative("lock_jitter_rms", self.lock_jitter_rms)?;
        non_negative("electronic_noise_var", self.electronic_noise_var)?;
        if self.sample_rate <= 2.0 * self.tone_freq {
            return Err(domain(format!(
                "sample_rate {} Hz must exceed twice the tone frequency {} Hz",
                self.sample_rate, self.tone_freq
            )));
        }
        if self.analysis_freq + self.rbw / 2.0 >= self.sample_rate / 2.0 {
            return Err(domain("analysis band extends past the Nyquist frequency"));
        }
        if self.sample_count() < MIN_SAMPLES {
            return Err(domain(format!(
                "duration * sample_rate = {} samples, need at least {MIN_SAMPLES}",
                self.sample_count()
            )));
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment. `gain` is
    /// required, everything else falls back to [`SimConfig::new`].
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut values: Vec<(&str, &str, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown key {key:?}"),
                });
            }
            if values.iter().any(|(k, _, _)| *k == key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate key {key:?}"),
                });
            }
            values.push((key, value.trim(), line_no));
        }
        let get = |k: &str| -> Result<Option<f64>> {
            let Some((_, raw, line)) = values.iter().find(|(key, _, _)| *key == k) else {
                return Ok(None);
            };
            raw.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                message: format!("invalid number for {k}: {raw:?}"),
            })
        };
        let gain = get("gain")?.ok_or_else(|| domain("config is missing required key \"gain\""))?;
        let params = InterferometerParams::new(
            gain,
            get("eta_p")?.unwrap_or(1.0),
            get("eta_c")?.unwrap_or(1.0),
            get("alpha")?.unwrap_or(0.0),
        )?;
        let mut cfg = Self::new(params);
        let fields: [(&str, &mut f64); 9] = [
            ("sample_rate", &mut cfg.sample_rate),
            ("duration", &mut cfg.duration),
            ("tone_freq", &mut cfg.tone_freq),
            ("tone_depth", &mut cfg.tone_depth),
            ("lock_jitter_rms", &mut cfg.lock_jitter_rms),
            ("jitter_block", &mut cfg.jitter_block),
            ("electronic_noise_var", &mut cfg.electronic_noise_var),
            ("analysis_freq", &mut cfg.analysis_freq),
            ("rbw", &mut cfg.rbw),
        ];
        for (k, slot) in fields {
            if let Some(v) = get(k)? {
                *slot = v;
            }
        }
        if let Some((_, raw, line)) = values.iter().find(|(k, _, _)| *k == "rng_seed") {
            cfg.rng_seed = raw.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("rng_seed must be a non-negative integer, got {raw:?}"),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Writes the config back in the same `key = value` format.
    pub fn to_kv_string(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        for (k, v) in [
            ("gain", p.gain()),
            ("eta_p", p.eta_p()),
            ("eta_c", p.eta_c()),
            ("alpha", p.alpha()),
            ("sample_rate", self.sample_rate),
            ("duration", self.duration),
            ("tone_freq", self.tone_freq),
            ("tone_depth", self.tone_depth),
            ("lock_jitter_rms", self.lock_jitter_rms),
            ("jitter_block", self.jitter_block),
            ("electronic_noise_var", self.electronic_noise_var),
            ("analysis_freq", self.analysis_freq),
            ("rbw", self.rbw),
        ] {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "rng_seed = {}", self.rng_seed);
        out
    }

    /// The same pairs as `#`-prefixed comment lines.
    pub fn to_comment_header(&self) -> String {
        self.to_kv_string().lines().map(|l| format!("# {l}\n")).collect()
    }
}
