//! Two-mode Gaussian states in the covariance-matrix picture.
//!
//! Quadratures are `X = a + a†` (amplitude) and `Y = -i(a - a†)` (phase), so
//! the vacuum has unit variance and a coherent state `|α⟩` with real `α` has
//! amplitude mean `2α`. Vector ordering is
//! `(amplitude_probe, phase_probe, amplitude_conjugate, phase_conjugate)`.

use nalgebra::{Matrix2, Matrix4, SMatrix, SymmetricEigen, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Index of the probe amplitude quadrature.
pub const AMP_P: usize = 0;
/// Index of the probe phase quadrature.
pub const PHASE_P: usize = 1;
/// Index of the conjugate amplitude quadrature.
pub const AMP_C: usize = 2;
/// Index of the conjugate phase quadrature.
pub const PHASE_C: usize = 3;

/// Eigenvalue floor used when testing `cov + iΩ ⪰ 0`.
pub const PHYSICALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Probe,
    Conjugate,
}

impl Mode {
    fn offset(self) -> usize {
        match self {
            Mode::Probe => 0,
            Mode::Conjugate => 2,
        }
    }
}

/// Gain, transmissions and seed amplitude of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerParams {
    gain: f64,
    eta_p: f64,
    eta_c: f64,
    alpha: f64,
}

impl InterferometerParams {
    pub fn new(gain: f64, eta_p: f64, eta_c: f64, alpha: f64) -> Result<Self> {
        if !gain.is_finite() || gain < 1.0 {
            return Err(domain(format!("gain must be finite and >= 1, got {gain}")));
        }
        check_transmission("eta_p", eta_p)?;
        check_transmission("eta_c", eta_c)?;
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(domain(format!("seed amplitude must be >= 0, got {alpha}")));
        }
        Ok(Self { gain, eta_p, eta_c, alpha })
    }

    /// Lossless interferometer.
    pub fn lossless(gain: f64, alpha: f64) -> Result<Self> {
        Self::new(gain, 1.0, 1.0, alpha)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn eta_p(&self) -> f64 {
        self.eta_p
    }

    pub fn eta_c(&self) -> f64 {
        self.eta_c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Squeezing parameter `r = acosh(sqrt(G))`.
    pub fn r(&self) -> f64 {
        self.gain.sqrt().acosh()
    }

    /// `cosh 2r = 2G - 1`.
    pub fn cosh_2r(&self) -> f64 {
        2.0 * self.gain - 1.0
    }

    /// `sinh 2r = 2 sqrt(G (G - 1))`.
    pub fn sinh_2r(&self) -> f64 {
        2.0 * (self.gain * (self.gain - 1.0)).sqrt()
    }

    pub fn is_lossless(&self) -> bool {
        self.eta_p == 1.0 && self.eta_c == 1.0
    }

    /// Phase-quadrature slope `d<X_p>/dφ` at the operating point, `2 sqrt(η_p G) |α|`.
    pub fn signal_slope(&self) -> f64 {
        2.0 * (self.eta_p * self.gain).sqrt() * self.alpha
    }

    pub fn with_gain(self, gain: f64) -> Result<Self> {
        Self::new(gain, self.eta_p, self.eta_c, self.alpha)
    }

    pub fn with_transmissions(self, eta_p: f64, eta_c: f64) -> Result<Self> {
        Self::new(self.gain, eta_p, eta_c, self.alpha)
    }

    pub fn with_alpha(self, alpha: f64) -> Result<Self> {
        Self::new(self.gain, self.eta_p, self.eta_c, alpha)
    }
}

fn check_transmission(name: &str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("{name} must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// The weight `λ` of the joint operator `X_p + λ X_c`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct WeightedMeasurement(f64);

impl WeightedMeasurement {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(domain(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(Self(lambda))
    }

    /// Balanced measurement, `λ = 1`.
    pub fn balanced() -> Self {
        Self(1.0)
    }

    pub(crate) fn new_unchecked(lambda: f64) -> Self {
        Self(lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.0
    }
}

/// Photon-number mean and variance of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean_n: f64,
    pub var_n: f64,
}

/// Mean vector and covariance matrix of the probe/conjugate pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: Vector4<f64>,
    cov: Matrix4<f64>,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        Self {
            mean: Vector4::zeros(),
            cov: Matrix4::identity(),
        }
    }

    /// Builds a state from raw moments. The covariance must be symmetric and
    /// satisfy the uncertainty relation.
    pub fn from_moments(mean: Vector4<f64>, cov: Matrix4<f64>) -> Result<Self> {
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(domain("non-finite moment"));
        }
        if cov != cov.transpose() {
            return Err(domain("covariance matrix is not symmetric"));
        }
        let state = Self { mean, cov };
        if !state.is_physical() {
            return Err(domain("covariance violates the uncertainty relation"));
        }
        Ok(state)
    }

    pub fn mean(&self) -> &Vector4<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix4<f64> {
        &self.cov
    }

    /// Smallest eigenvalue of `cov + iΩ`.
    pub fn uncertainty_margin(&self) -> f64 {
        // Hermitian A + iB is represented by the real symmetric [[A, -B], [B, A]],
        // which has the same spectrum with doubled multiplicity.
        let omega = symplectic_form();
        let mut real = SMatrix::<f64, 8, 8>::zeros();
        for i in 0..4 {
            for j in 0..4 {
                real[(i, j)] = self.cov[(i, j)];
                real[(i + 4, j + 4)] = self.cov[(i, j)];
                real[(i, j + 4)] = -omega[(i, j)];
                real[(i + 4, j)] = omega[(i, j)];
            }
        }
        SymmetricEigen::new(real).eigenvalues.min()
    }

    pub fn is_physical(&self) -> bool {
        self.uncertainty_margin() >= -PHYSICALITY_TOL
    }

    /// Mean and covariance of one mode's `(amplitude, phase)` pair.
    pub fn reduced(&self, mode: Mode) -> (Vector2<f64>, Matrix2<f64>) {
        let o = mode.offset();
        let d = Vector2::new(self.mean[o], self.mean[o + 1]);
        let v = self.cov.fixed_view::<2, 2>(o, o).into_owned();
        (d, v)
    }

    /// Adds classical Gaussian noise of variance `var` to both quadratures
    /// of a mode, as an uncorrelated detector-noise floor.
    pub fn add_detector_noise(&self, mode: Mode, var: f64) -> Result<Self> {
        if !var.is_finite() || var < 0.0 {
            return Err(domain(format!("detector noise variance must be >= 0, got {var}")));
        }
        let mut out = self.clone();
        let o = mode.offset();
        out.cov[(o, o)] += var;
        out.cov[(o + 1, o + 1)] += var;
        Ok(out)
    }
}

/// `Ω = diag(J, J)` with `J = [[0, 1], [-1, 0]]`.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut omega = Matrix4::zeros();
    omega[(0, 1)] = 1.0;
    omega[(1, 0)] = -1.0;
    omega[(2, 3)] = 1.0;
    omega[(3, 2)] = -1.0;
    omega
}

/// State after the amplifier: the displaced two-mode squeezed vacuum produced
/// by seeding the probe with `|α⟩`. Transmissions in `params` are ignored here.
pub fn seeded_tmss(params: &InterferometerParams) -> GaussianState {
    let g = params.gain();
    let c = params.cosh_2r();
    let s = params.sinh_2r();
    let alpha = params.alpha();

    let mean = Vector4::new(2.0 * g.sqrt() * alpha, 0.0, 2.0 * (g - 1.0).sqrt() * alpha, 0.0);
    #[rustfmt::skip]
    let cov = Matrix4::new(
        c,   0.0, s,   0.0,
        0.0, c,   0.0, -s,
        s,   0.0, c,   0.0,
        0.0, -s,  0.0, c,
    );
    GaussianState { mean, cov }
}

/// Independent pure-loss channels on the two modes.
pub fn apply_loss(state: &GaussianState, eta_p: f64, eta_c: f64) -> Result<GaussianState> {
    check_transmission("eta_p", eta_p)?;
    check_transmission("eta_c", eta_c)?;
    let k = Vector4::new(eta_p.sqrt(), eta_p.sqrt(), eta_c.sqrt(), eta_c.sqrt());
    let noise = Vector4::new(1.0 - eta_p, 1.0 - eta_p, 1.0 - eta_c, 1.0 - eta_c);

    let mean = state.mean.component_mul(&k);
    let mut cov = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            cov[(i, j)] = k[i] * k[j] * state.cov[(i, j)];
        }
        cov[(i, i)] += noise[i];
    }
    Ok(GaussianState { mean, cov })
}

/// Rotates the probe quadratures by `dphi`, i.e. `a → a e^{i dphi}`.
pub fn apply_phase_shift(state: &GaussianState, dphi: f64) -> GaussianState {
    let (sin, cos) = dphi.sin_cos();
    let mut rot = Matrix4::identity();
    rot[(0, 0)] = cos;
    rot[(0, 1)] = -sin;
    rot[(1, 0)] = sin;
    rot[(1, 1)] = cos;
    let cov = rot * state.cov * rot.transpose();
    // Keep exact symmetry after the product.
    let cov = (cov + cov.transpose()) * 0.5;
    GaussianState {
        mean: rot * state.mean,
        cov,
    }
}

/// Mean and variance of `X_p + λ X_c` on the phase quadratures.
pub fn joint_quadrature_stats(state: &GaussianState, m: WeightedMeasurement) -> (f64, f64) {
    let l = m.lambda();
    let mean = state.mean[PHASE_P] + l * state.mean[PHASE_C];
    let var = state.cov[(PHASE_P, PHASE_P)]
        + l * l * state.cov[(PHASE_C, PHASE_C)]
        + 2.0 * l * state.cov[(PHASE_P, PHASE_C)];
    (mean, var)
}

/// Photon-number statistics of the reduced single-mode state.
pub fn photon_moments(state: &GaussianState, mode: Mode) -> MomentSummary {
    let (d, v) = state.reduced(mode);
    let mean_n = (v.trace() - 2.0) / 4.0 + d.norm_squared() / 4.0;
    let var_n = ((v * v).trace() - 2.0) / 8.0 + d.dot(&(v * d)) / 4.0;
    MomentSummary { mean_n, var_n }
}

/// The lossy seeded state for a parameter set: squeeze, then apply loss.
pub fn lossy_state(params: &InterferometerParams) -> GaussianState {
    let state = seeded_tmss(params);
    apply_loss(&state, params.eta_p(), params.eta_c())
        .expect("transmissions validated by InterferometerParams")
}
