//! Box-bounded Levenberg-Marquardt for small weighted least-squares problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    /// Relative chi-square change that counts as converged.
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub x: Vec<f64>,
    pub chi_square: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Forward-difference Jacobian of `residuals` at `x`, stepping inward at an
/// upper bound.
pub(crate) fn jacobian<F>(residuals: &F, x: &[f64], r0: &[f64], hi: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = r0.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-7 * x[j].abs().max(1.0);
        let step = if x[j] + h > hi[j] { -h } else { h };
        xp[j] = x[j] + step;
        let r = residuals(&xp);
        for i in 0..m {
            jac[(i, j)] = (r[i] - r0[i]) / step;
        }
        xp[j] = x[j];
    }
    jac
}

fn chi2(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Minimizes `Σ r_i(x)²` subject to `lo ≤ x ≤ hi`. Trial steps are
/// projected onto the box.
pub(crate) fn minimize<F>(residuals: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &LmOptions) -> LmOutcome
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    clamp_into(&mut x, lo, hi);
    let mut r = residuals(&x);
    let mut cost = chi2(&r);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&residuals, &x, &r, hi);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);

        // Coordinates pinned at a bound with the gradient pushing outward are
        // held fixed for this iteration.
        let active: Vec<bool> = (0..n)
            .map(|j| (x[j] <= lo[j] && grad[j] > 0.0) || (x[j] >= hi[j] && grad[j] < 0.0))
            .collect();
        let mut rhs = -&grad;
        for j in (0..n).filter(|&j| active[j]) {
            rhs[j] = 0.0;
        }
        if rhs.amax() == 0.0 {
            converged = true;
            break;
        }

        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            for j in (0..n).filter(|&j| active[j]) {
                a.row_mut(j).fill(0.0);
                a.column_mut(j).fill(0.0);
                a[(j, j)] = 1.0;
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&rhs)) else {
                mu *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(v, d)| v + d).collect();
            clamp_into(&mut trial, lo, hi);
            let r_trial = residuals(&trial);
            let c_trial = chi2(&r_trial);
            if c_trial.is_finite() && c_trial < cost {
                let rel = (cost - c_trial) / cost.max(f64::MIN_POSITIVE);
                let step: f64 = trial
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| ((a - b) / b.abs().max(1.0)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                x = trial;
                r = r_trial;
                cost = c_trial;
                mu = (mu * 0.3).max(1e-12);
                improved = true;
                if rel < opts.tolerance || step < 1e-12 {
                    converged = true;
                }
                break;
            }
            mu *= 10.0;
            if mu > 1e12 {
                break;
            }
        }
        if !improved {
            // No downhill step at any damping: a (possibly bounded) minimum.
            converged = true;
        }
        if converged {
            break;
        }
    }
    LmOutcome {
        x,
        chi_square: cost,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let ts: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let res = |p: &[f64]| ts.iter().zip(&ys).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect();
        let out = minimize(res, &[1.0, 0.1], &[0.0, 0.0], &[10.0, 10.0], &LmOptions { max_iterations: 200, tolerance: 1e-15 });
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-6 && (out.x[1] - 0.7).abs() < 1e-6, "{:?}", out.x);
    }

    #[test]
    fn respects_bounds() {
        let res = |p: &[f64]| vec![p[0] - 5.0];
        let out = minimize(res, &[0.5], &[0.0], &[1.0], &LmOptions { max_iterations: 50, tolerance: 1e-12 });
        assert_eq!(out.x[0], 1.0);
    }
}
