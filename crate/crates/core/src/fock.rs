//! Brute-force truncated Fock-space model of the seeded, lossy two-mode
//! squeezed state. Used as an independent check on the Gaussian formulas.
//!
//! The squeezer is applied by exponentiating the truncated generator
//! `r (a†b† - ab)` directly on the seed vector, so nothing here relies on the
//! closed-form Schmidt expansion. Mixed states after loss are kept as an
//! ensemble of unnormalized pure branches, `ρ = Σ_k |φ_k⟩⟨φ_k|`.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::gaussian::{MomentSummary, Mode};

pub const DEFAULT_CUTOFF: usize = 40;
pub const MIN_CUTOFF: usize = 10;
/// Largest norm deficit accepted before refusing to answer.
pub const MAX_NORM_DEFICIT: f64 = 1e-4;

/// Branches lighter than this are dropped during loss.
const PRUNE_WEIGHT: f64 = 1e-32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    /// Probability mass that fell outside the cutoff.
    pub norm_deficit: f64,
    pub cutoff: usize,
}

/// Two-mode state on `|n_p, n_c⟩` with `n_p, n_c ≤ cutoff`.
#[derive(Debug, Clone)]
pub struct FockState {
    cutoff: usize,
    branches: Vec<Vec<Complex64>>,
    norm_deficit: f64,
}

impl FockState {
    pub fn vacuum(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let mut v = vec![Complex64::new(0.0, 0.0); (cutoff + 1).pow(2)];
        v[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            cutoff,
            branches: vec![v],
            norm_deficit: 0.0,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn report(&self) -> TruncationReport {
        TruncationReport {
            norm_deficit: self.norm_deficit,
            cutoff: self.cutoff,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.branches.len() == 1
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Amplitude `⟨n_p, n_c|ψ⟩` of a pure state.
    pub fn amplitude(&self, n_p: usize, n_c: usize) -> Option<Complex64> {
        if !self.is_pure() || n_p > self.cutoff || n_c > self.cutoff {
            return None;
        }
        Some(self.branches[0][n_p * (self.cutoff + 1) + n_c])
    }

    /// `Tr ρ`, which is `1 - norm_deficit` up to rounding.
    pub fn trace(&self) -> f64 {
        self.branches.iter().map(|b| norm_sqr(b)).sum()
    }

    fn dim(&self) -> usize {
        self.cutoff + 1
    }

    fn check_deficit(&self) -> Result<()> {
        if self.norm_deficit > MAX_NORM_DEFICIT {
            return Err(Error::Truncation {
                deficit: self.norm_deficit,
                cutoff: self.cutoff,
                limit: MAX_NORM_DEFICIT,
            });
        }
        Ok(())
    }

    /// Materialized density matrix. Size is `(cutoff+1)^4`, so keep the
    /// cutoff small.
    pub fn density_matrix(&self) -> DMatrix<Complex64> {
        let n = self.dim() * self.dim();
        let mut rho = DMatrix::zeros(n, n);
        for b in &self.branches {
            for i in 0..n {
                if b[i] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    rho[(i, j)] += b[i] * b[j].conj();
                }
            }
        }
        rho
    }

    /// Photon-number distribution of one mode.
    pub fn number_distribution(&self, mode: Mode) -> Vec<f64> {
        let d = self.dim();
        let mut p = vec![0.0; d];
        for b in &self.branches {
            for np in 0..d {
                for nc in 0..d {
                    let n = if mode == Mode::Probe { np } else { nc };
                    p[n] += b[np * d + nc].norm_sqr();
                }
            }
        }
        p
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < MIN_CUTOFF {
        return Err(domain(format!("cutoff must be >= {MIN_CUTOFF}, got {cutoff}")));
    }
    Ok(())
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `|α⟩` amplitudes up to `n_max`, for real `α ≥ 0`.
fn coherent_amplitudes(alpha: f64, n_max: usize) -> Vec<f64> {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = (-0.5 * alpha * alpha).exp();
    amps.push(c);
    for n in 1..=n_max {
        c *= alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

/// `y = (a†b† - ab) x` on a `d × d` two-mode grid.
fn apply_generator(x: &[Complex64], y: &mut [Complex64], d: usize) {
    for np in 0..d {
        for nc in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            if np > 0 && nc > 0 {
                acc += x[(np - 1) * d + nc - 1] * ((np * nc) as f64).sqrt();
            }
            if np + 1 < d && nc + 1 < d {
                acc -= x[(np + 1) * d + nc + 1] * (((np + 1) * (nc + 1)) as f64).sqrt();
            }
            y[np * d + nc] = acc;
        }
    }
}

/// `exp(t K) v` by scaling and squaring of the Taylor series, applied to a
/// vector. `K` is real antisymmetric, so every sub-step is norm preserving up
/// to series truncation, which is driven below `1e-17` per step.
fn expm_generator_apply(v: &[Complex64], t: f64, d: usize) -> Vec<Complex64> {
    if t == 0.0 {
        return v.to_vec();
    }
    // Gershgorin bound on ||K||: two entries per row, each at most d.
    let k_norm = 2.0 * d as f64;
    let steps = (t.abs() * k_norm).ceil().max(1.0) as usize;
    let h = t / steps as f64;

    let mut cur = v.to_vec();
    let mut term = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
    for _ in 0..steps {
        term.copy_from_slice(&cur);
        let mut acc = cur.clone();
        for k in 1..60 {
            apply_generator(&term, &mut next, d);
            let scale = h / k as f64;
            for (tn, nx) in term.iter_mut().zip(&next) {
                *tn = nx * scale;
            }
            for (a, tn) in acc.iter_mut().zip(&term) {
                *a += tn;
            }
            if norm_sqr(&term).sqrt() < 1e-17 {
                break;
            }
        }
        cur = acc;
    }
    cur
}

/// Seeded two-mode squeezed state `S(r) |α⟩|0⟩` with `cosh² r = G`.
///
/// The evolution runs on an enlarged grid and is then projected onto
/// `n ≤ cutoff`; the discarded weight is reported as the norm deficit.
pub fn build_seeded_tmss_fock(
    gain: f64,
    alpha: f64,
    cutoff: usize,
) -> Result<(FockState, TruncationReport)> {
    if !gain.is_finite() || gain < 1.0 {
        return Err(domain(format!("gain must be >= 1, got {gain}")));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(domain(format!("seed amplitude must be >= 0, got {alpha}")));
    }
    check_cutoff(cutoff)?;

    let ext = 2 * cutoff + 10;
    let de = ext + 1;
    let seed = coherent_amplitudes(alpha, ext);
    let mut v = vec![Complex64::new(0.0, 0.0); de * de];
    for (n, a) in seed.iter().enumerate() {
        v[n * de] = Complex64::new(*a, 0.0);
    }
    let r = gain.sqrt().acosh();
    let evolved = expm_generator_apply(&v, r, de);

    let d = cutoff + 1;
    let mut amps = vec![Complex64::new(0.0, 0.0); d * d];
    for np in 0..d {
        for nc in 0..d {
            amps[np * d + nc] = evolved[np * de + nc];
        }
    }
    let norm_deficit = (1.0 - norm_sqr(&amps)).max(0.0);
    let state = FockState {
        cutoff,
        branches: vec![amps],
        norm_deficit,
    };
    let report = state.report();
    state.check_deficit()?;
    Ok((state, report))
}

/// Amplitude-damping channel with transmission `eta` on one mode, with Kraus
/// operators `E_k = Σ_n sqrt(C(n,k) η^{n-k} (1-η)^k) |n-k⟩⟨n|`.
pub fn apply_loss_fock(state: &FockState, eta: f64, mode: Mode) -> Result<FockState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(domain(format!("transmission must lie in [0, 1], got {eta}")));
    }
    state.check_deficit()?;
    if eta == 1.0 {
        return Ok(state.clone());
    }
    let d = state.dim();
    let kraus = |n: usize, k: usize| -> f64 {
        (binomial(n, k) * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
    };

    let mut branches = Vec::new();
    let mut pruned = 0.0;
    for b in &state.branches {
        for k in 0..d {
            let mut out = vec![Complex64::new(0.0, 0.0); d * d];
            for np in 0..d {
                for nc in 0..d {
                    let n = if mode == Mode::Probe { np } else { nc };
                    if n < k {
                        continue;
                    }
                    let amp = b[np * d + nc];
                    if amp == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let (tp, tc) = if mode == Mode::Probe { (np - k, nc) } else { (np, nc - k) };
                    out[tp * d + tc] += amp * kraus(n, k);
                }
            }
            let w = norm_sqr(&out);
            if w > PRUNE_WEIGHT {
                branches.push(out);
            } else {
                pruned += w;
            }
        }
    }
    Ok(FockState {
        cutoff: state.cutoff,
        branches,
        norm_deficit: state.norm_deficit + pruned,
    })
}

/// Phase shift `exp(i dphi n_p)` on the probe.
pub fn apply_phase_shift_fock(state: &FockState, dphi: f64) -> FockState {
    let d = state.dim();
    let branches = state
        .branches
        .iter()
        .map(|b| {
            let mut out = b.clone();
            for np in 0..d {
                let phase = Complex64::from_polar(1.0, dphi * np as f64);
                for nc in 0..d {
                    out[np * d + nc] *= phase;
                }
            }
            out
        })
        .collect();
    FockState {
        cutoff: state.cutoff,
        branches,
        norm_deficit: state.norm_deficit,
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Applies quadrature `q` (0..4 in Gaussian ordering) to `x` on a `d × d`
/// grid, writing onto a `(d+1) × (d+1)` grid so that `a†` never truncates.
fn apply_quadrature(q: usize, x: &[Complex64], d: usize) -> Vec<Complex64> {
    let dp = d + 1;
    let mut y = vec![Complex64::new(0.0, 0.0); dp * dp];
    let on_probe = q < 2;
    // X = a + a†, Y = -i a + i a†.
    let (c_lower, c_raise) = if q.is_multiple_of(2) {
        (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    } else {
        (Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0))
    };
    for np in 0..d {
        for nc in 0..d {
            let amp = x[np * d + nc];
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let n = if on_probe { np } else { nc };
            let at = |m: usize| if on_probe { m * dp + nc } else { np * dp + m };
            if n > 0 {
                y[at(n - 1)] += c_lower * amp * (n as f64).sqrt();
            }
            y[at(n + 1)] += c_raise * amp * ((n + 1) as f64).sqrt();
        }
    }
    y
}

fn embed(x: &[Complex64], d: usize) -> Vec<Complex64> {
    let dp = d + 1;
    let mut y = vec![Complex64::new(0.0, 0.0); dp * dp];
    for np in 0..d {
        for nc in 0..d {
            y[np * dp + nc] = x[np * d + nc];
        }
    }
    y
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Quadrature means and symmetrized covariance, normalized by `Tr ρ`.
pub fn oracle_quadrature_moments(state: &FockState) -> Result<(Vector4<f64>, Matrix4<f64>)> {
    state.check_deficit()?;
    let d = state.dim();
    let mut first = Vector4::zeros();
    let mut second = Matrix4::zeros();
    for b in &state.branches {
        let psi = embed(b, d);
        let qs: Vec<Vec<Complex64>> = (0..4).map(|q| apply_quadrature(q, b, d)).collect();
        for i in 0..4 {
            first[i] += inner(&psi, &qs[i]).re;
            for j in 0..4 {
                second[(i, j)] += inner(&qs[i], &qs[j]).re;
            }
        }
    }
    let tr = state.trace();
    let mean = first / tr;
    let cov = second / tr - mean * mean.transpose();
    Ok((mean, cov))
}

/// Mean and variance of `Y_p + λ Y_c`.
pub fn oracle_quadrature_stats(state: &FockState, lambda: f64) -> Result<(f64, f64)> {
    let (mean, cov) = oracle_quadrature_moments(state)?;
    let m = mean[1] + lambda * mean[3];
    let v = cov[(1, 1)] + lambda * lambda * cov[(3, 3)] + 2.0 * lambda * cov[(1, 3)];
    Ok((m, v))
}

pub fn oracle_quadrature_variance(state: &FockState, lambda: f64) -> Result<f64> {
    Ok(oracle_quadrature_stats(state, lambda)?.1)
}

/// Photon-number mean and variance of one mode.
pub fn oracle_photon_moments(state: &FockState, mode: Mode) -> Result<MomentSummary> {
    state.check_deficit()?;
    let p = state.number_distribution(mode);
    let tr: f64 = p.iter().sum();
    let mean_n = p.iter().enumerate().map(|(n, w)| n as f64 * w).sum::<f64>() / tr;
    let second = p.iter().enumerate().map(|(n, w)| (n * n) as f64 * w).sum::<f64>() / tr;
    Ok(MomentSummary {
        mean_n,
        var_n: second - mean_n * mean_n,
    })
}

pub fn oracle_photon_variance(state: &FockState, mode: Mode) -> Result<f64> {
    Ok(oracle_photon_moments(state, mode)?.var_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_gain_is_product_state() {
        let (s, rep) = build_seeded_tmss_fock(1.0, 0.7, 20).unwrap();
        assert!(rep.norm_deficit < 1e-14);
        let m = oracle_photon_moments(&s, Mode::Probe).unwrap();
        assert_abs_diff_eq!(m.mean_n, 0.49, epsilon = 1e-12);
        assert_abs_diff_eq!(m.var_n, 0.49, epsilon = 1e-12);
        let c = oracle_photon_moments(&s, Mode::Conjugate).unwrap();
        assert_abs_diff_eq!(c.mean_n, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn unseeded_matches_schmidt_form() {
        let (s, _) = build_seeded_tmss_fock(2.0, 0.0, DEFAULT_CUTOFF).unwrap();
        let r = 2f64.sqrt().acosh();
        assert_abs_diff_eq!(s.amplitude(0, 0).unwrap().re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        for n in 0..=DEFAULT_CUTOFF {
            let expected = r.tanh().powi(n as i32) / r.cosh();
            assert_abs_diff_eq!(s.amplitude(n, n).unwrap().re, expected, epsilon = 1e-11);
            if n > 0 {
                assert_abs_diff_eq!(s.amplitude(n, n - 1).unwrap().norm(), 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn seeded_probe_photon_number() {
        let (s, _) = build_seeded_tmss_fock(1.5, 0.5, DEFAULT_CUTOFF).unwrap();
        let m = oracle_photon_moments(&s, Mode::Probe).unwrap();
        assert_abs_diff_eq!(m.mean_n, 0.875, epsilon = 1e-9);
    }

    #[test]
    fn photon_variance_gain_two() {
        let (s, _) = build_seeded_tmss_fock(2.0, 1.0, DEFAULT_CUTOFF).unwrap();
        assert_abs_diff_eq!(oracle_photon_variance(&s, Mode::Probe).unwrap(), 8.0, epsilon = 1e-5);
    }

    #[test]
    fn loss_limits_and_example() {
        let (s, _) = build_seeded_tmss_fock(2.0, 0.0, 60).unwrap();
        let same = apply_loss_fock(&s, 1.0, Mode::Probe).unwrap();
        assert!(same.is_pure());
        let gone = apply_loss_fock(&s, 0.0, Mode::Probe).unwrap();
        let m = oracle_photon_moments(&gone, Mode::Probe).unwrap();
        assert_abs_diff_eq!(m.mean_n, 0.0, epsilon = 1e-14);
        let lossy = apply_loss_fock(&s, 0.76, Mode::Probe).unwrap();
        let (_, cov) = oracle_quadrature_moments(&lossy).unwrap();
        assert_abs_diff_eq!(cov[(0, 0)], 2.52, epsilon = 1e-9);
        assert_abs_diff_eq!(cov[(1, 1)], 2.52, epsilon = 1e-9);
        assert_abs_diff_eq!(lossy.trace(), 1.0, epsilon = 1e-12);
        assert!(apply_loss_fock(&s, 1.5, Mode::Probe).is_err());
    }

    #[test]
    fn vacuum_joint_variance() {
        let v = FockState::vacuum(12).unwrap();
        assert_abs_diff_eq!(oracle_quadrature_variance(&v, 1.0).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn low_gain_balanced_variance() {
        let (s, _) = build_seeded_tmss_fock(1.1, 0.0, DEFAULT_CUTOFF).unwrap();
        assert_abs_diff_eq!(oracle_quadrature_variance(&s, 1.0).unwrap(), 1.07335, epsilon = 1e-5);
    }

    #[test]
    fn truncation_refused_and_reported() {
        assert!(matches!(build_seeded_tmss_fock(10.0, 3.0, 10), Err(Error::Truncation { .. })));
        assert!(build_seeded_tmss_fock(2.0, 1.0, 9).is_err());
        let (_, small) = build_seeded_tmss_fock(1.5, 0.5, 15).unwrap();
        let (_, large) = build_seeded_tmss_fock(1.5, 0.5, 25).unwrap();
        assert!(small.norm_deficit > large.norm_deficit);
    }

    #[test]
    fn density_matrix_is_hermitian_and_positive() {
        let (s, _) = build_seeded_tmss_fock(1.2, 0.3, 10).unwrap();
        let lossy = apply_loss_fock(&apply_loss_fock(&s, 0.7, Mode::Probe).unwrap(), 0.8, Mode::Conjugate).unwrap();
        let rho = lossy.density_matrix();
        let diff = &rho - rho.adjoint();
        assert!(diff.iter().all(|c| c.norm() < 1e-14));
        let eig = rho.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > -1e-12));
        assert_abs_diff_eq!(eig.iter().sum::<f64>(), lossy.trace(), epsilon = 1e-12);
    }

    #[test]
    fn phase_shift_rotates_probe_mean() {
        let (s, _) = build_seeded_tmss_fock(1.0, 1.0, 20).unwrap();
        let rotated = apply_phase_shift_fock(&s, 0.3);
        let (mean, _) = oracle_quadrature_moments(&rotated).unwrap();
        assert_abs_diff_eq!(mean[0], 2.0 * 0.3f64.cos(), epsilon = 1e-10);
        assert_abs_diff_eq!(mean[1], 2.0 * 0.3f64.sin(), epsilon = 1e-10);
    }
}
