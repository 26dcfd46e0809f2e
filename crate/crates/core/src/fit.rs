//! Weighted least-squares fits for the experiment harness: Rabi sin²,
//! Ramsey cosine, exponential decay and Gaussian decay.
//!
//! Each model is linear in its amplitude and offset once the nonlinear
//! parameter (frequency or decay time) is fixed, so fitting is a 1-D scan
//! over the nonlinear parameter with the linear ones solved exactly,
//! followed by a Gauss-Newton polish of everything. That avoids the usual
//! sensitivity of sinusoid fits to the initial frequency guess.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("singular normal equations; data does not constrain the model")]
    Singular,
    #[error("reduced chi² {reduced_chi2:.2} exceeds the acceptance bound {bound:.2}")]
    ResidualTooLarge { reduced_chi2: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub params: Vec<FitParam>,
    pub reduced_chi2: f64,
    pub n_points: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Reject fits whose weighted residuals exceed `bound`.
    pub fn check_residual(&self, bound: f64) -> Result<(), FitError> {
        if self.reduced_chi2 > bound {
            Err(FitError::ResidualTooLarge {
                reduced_chi2: self.reduced_chi2,
                bound,
            })
        } else {
            Ok(())
        }
    }
}

/// Solve the small dense system A·x = b in place. Sizes are ≤ 5.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>, FitError> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return Err(FitError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in (col + 1)..n {
            sum -= a[col][k] * x[k];
        }
        x[col] = sum / a[col][col];
    }
    Ok(x)
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(x: &'a [f64], y: &'a [f64], sigma: Option<&[f64]>) -> Self {
        let w = match sigma {
            Some(s) => s.iter().map(|&si| 1.0 / (si * si).max(1e-300)).collect(),
            None => vec![1.0; x.len()],
        };
        Self { x, y, w }
    }

    /// Weighted linear least squares of y against the given basis columns.
    fn linear_fit(&self, basis: &dyn Fn(f64) -> Vec<f64>) -> Result<(Vec<f64>, f64), FitError> {
        let p = basis(self.x[0]).len();
        let mut ata = vec![vec![0.0; p]; p];
        let mut atb = vec![0.0; p];
        for ((&x, &y), &w) in self.x.iter().zip(self.y).zip(&self.w) {
            let row = basis(x);
            for i in 0..p {
                atb[i] += w * row[i] * y;
                for j in 0..p {
                    ata[i][j] += w * row[i] * row[j];
                }
            }
        }
        let coef = solve_dense(&mut ata, &mut atb)?;
        let mut sse = 0.0;
        for ((&x, &y), &w) in self.x.iter().zip(self.y).zip(&self.w) {
            let row = basis(x);
            let fit: f64 = row.iter().zip(&coef).map(|(r, c)| r * c).sum();
            sse += w * (y - fit) * (y - fit);
        }
        Ok((coef, sse))
    }

    fn chi2(&self, f: &dyn Fn(f64) -> f64) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&x, &y), &w)| {
                let d = y - f(x);
                w * d * d
            })
            .sum()
    }
}

/// Gauss-Newton polish with numeric Jacobian and simple step damping.
/// Returns (params, covariance diagonal, chi²).
fn polish(
    problem: &Problem,
    mut params: Vec<f64>,
    model: &dyn Fn(&[f64], f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>, f64), FitError> {
    let p = params.len();
    let mut chi2 = problem.chi2(&|x| model(&params, x));
    for _ in 0..60 {
        // Jacobian by central differences.
        let mut jtj = vec![vec![0.0; p]; p];
        let mut jtr = vec![0.0; p];
        let steps: Vec<f64> = params
            .iter()
            .map(|&v| (v.abs() * 1e-6).max(1e-12))
            .collect();
        for ((&x, &y), &w) in problem.x.iter().zip(problem.y).zip(&problem.w) {
            let mut grad = vec![0.0; p];
            for k in 0..p {
                let mut hi = params.clone();
                hi[k] += steps[k];
                let mut lo = params.clone();
                lo[k] -= steps[k];
                grad[k] = (model(&hi, x) - model(&lo, x)) / (2.0 * steps[k]);
            }
            let r = y - model(&params, x);
            for i in 0..p {
                jtr[i] += w * grad[i] * r;
                for j in 0..p {
                    jtj[i][j] += w * grad[i] * grad[j];
                }
            }
        }
        let mut damped = jtj.clone();
        for (i, row) in damped.iter_mut().enumerate() {
            row[i] *= 1.0 + 1e-10;
        }
        let delta = solve_dense(&mut damped, &mut jtr.clone())?;
        // Backtracking line search keeps the step from overshooting.
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let trial: Vec<f64> = params
                .iter()
                .zip(&delta)
                .map(|(v, d)| v + scale * d)
                .collect();
            let trial_chi2 = problem.chi2(&|x| model(&trial, x));
            if trial_chi2 <= chi2 {
                let rel = (chi2 - trial_chi2) / chi2.max(1e-300);
                params = trial;
                chi2 = trial_chi2;
                improved = true;
                if rel < 1e-12 {
                    break;
                }
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }

    // Covariance from the final normal equations.
    let mut jtj = vec![vec![0.0; p]; p];
    let steps: Vec<f64> = params
        .iter()
        .map(|&v| (v.abs() * 1e-6).max(1e-12))
        .collect();
    for (&x, &w) in problem.x.iter().zip(&problem.w) {
        let mut grad = vec![0.0; p];
        for k in 0..p {
            let mut hi = params.clone();
            hi[k] += steps[k];
            let mut lo = params.clone();
            lo[k] -= steps[k];
            grad[k] = (model(&hi, x) - model(&lo, x)) / (2.0 * steps[k]);
        }
        for i in 0..p {
            for j in 0..p {
                jtj[i][j] += w * grad[i] * grad[j];
            }
        }
    }
    let mut var = vec![0.0; p];
    for k in 0..p {
        // Invert by solving JᵀWJ · e_k.
        let mut rhs = vec![0.0; p];
        rhs[k] = 1.0;
        let mut a = jtj.clone();
        match solve_dense(&mut a, &mut rhs) {
            Ok(col) => var[k] = col[k].max(0.0),
            Err(_) => var[k] = f64::NAN,
        }
    }
    Ok((params, var, chi2))
}

fn finish(
    model: &'static str,
    names: &[&'static str],
    params: Vec<f64>,
    var: Vec<f64>,
    chi2: f64,
    n: usize,
) -> FitResult {
    let dof = (n as f64 - params.len() as f64).max(1.0);
    FitResult {
        model: model.to_string(),
        params: names
            .iter()
            .zip(params.iter().zip(var.iter()))
            .map(|(&name, (&value, &v))| FitParam {
                name: name.to_string(),
                value,
                stderr: v.sqrt(),
            })
            .collect(),
        reduced_chi2: chi2 / dof,
        n_points: n,
    }
}

fn check_len(x: &[f64], y: &[f64], needed: usize) -> Result<(), FitError> {
    if x.len() != y.len() || x.len() < needed {
        return Err(FitError::TooFewPoints {
            needed,
            got: x.len().min(y.len()),
        });
    }
    Ok(())
}

/// Fit y = A·sin²(ω·x/2) + c. Reports `amplitude`, `omega` (rad/s when x is
/// seconds) and `offset`.
pub fn fit_rabi(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    omega_hint: Option<f64>,
) -> Result<FitResult, FitError> {
    check_len(x, y, 5)?;
    let problem = Problem::new(x, y, sigma);
    let span = x.iter().cloned().fold(f64::MIN, f64::max)
        - x.iter().cloned().fold(f64::MAX, f64::min);
    if span <= 0.0 {
        return Err(FitError::Singular);
    }
    // sin²(ωx/2) = (1 − cos ωx)/2: linear in (A, c) at fixed ω.
    let scan = |omega: f64| -> Result<(Vec<f64>, f64), FitError> {
        problem.linear_fit(&|xv| vec![(omega * xv / 2.0).sin().powi(2), 1.0])
    };
    let (lo, hi) = match omega_hint {
        Some(h) => (h * 0.5, h * 2.0),
        // From "well under one cycle" to the sampling limit.
        None => (std::f64::consts::PI / span, std::f64::consts::PI * x.len() as f64 / span),
    };
    let mut best = (f64::INFINITY, lo);
    let n_scan = 600;
    for k in 0..=n_scan {
        let omega = lo * (hi / lo).powf(k as f64 / n_scan as f64);
        if let Ok((_, sse)) = scan(omega) {
            if sse < best.0 {
                best = (sse, omega);
            }
        }
    }
    let (coef, _) = scan(best.1)?;
    let start = vec![coef[0], best.1, coef[1]];
    let model = |p: &[f64], xv: f64| p[0] * (p[1] * xv / 2.0).sin().powi(2) + p[2];
    let (params, var, chi2) = polish(&problem, start, &model)?;
    Ok(finish(
        "rabi_sin2",
        &["amplitude", "omega", "offset"],
        params,
        var,
        chi2,
        x.len(),
    ))
}

/// Fit y = A·cos(ω·x + φ) + c. Reports `amplitude`, `omega`, `phase`,
/// `offset`.
pub fn fit_cosine(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
    omega_hint: Option<f64>,
) -> Result<FitResult, FitError> {
    check_len(x, y, 6)?;
    let problem = Problem::new(x, y, sigma);
    let span = x.iter().cloned().fold(f64::MIN, f64::max)
        - x.iter().cloned().fold(f64::MAX, f64::min);
    if span <= 0.0 {
        return Err(FitError::Singular);
    }
    let scan = |omega: f64| -> Result<(Vec<f64>, f64), FitError> {
        problem.linear_fit(&|xv| vec![(omega * xv).cos(), (omega * xv).sin(), 1.0])
    };
    let (lo, hi) = match omega_hint {
        Some(h) => (h * 0.5, h * 2.0),
        None => (
            std::f64::consts::PI / span,
            std::f64::consts::PI * x.len() as f64 / span,
        ),
    };
    let mut best = (f64::INFINITY, lo);
    let n_scan = 800;
    for k in 0..=n_scan {
        let omega = lo * (hi / lo).powf(k as f64 / n_scan as f64);
        if let Ok((_, sse)) = scan(omega) {
            if sse < best.0 {
                best = (sse, omega);
            }
        }
    }
    let (coef, _) = scan(best.1)?;
    let amplitude = (coef[0] * coef[0] + coef[1] * coef[1]).sqrt();
    let phase = (-coef[1]).atan2(coef[0]);
    let start = vec![amplitude, best.1, phase, coef[2]];
    let model = |p: &[f64], xv: f64| p[0] * (p[1] * xv + p[2]).cos() + p[3];
    let (params, var, chi2) = polish(&problem, start, &model)?;
    Ok(finish(
        "cosine",
        &["amplitude", "omega", "phase", "offset"],
        params,
        var,
        chi2,
        x.len(),
    ))
}

/// Fit y = A·exp(−x/τ) + c. Reports `amplitude`, `tau`, `offset`.
pub fn fit_exponential(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
) -> Result<FitResult, FitError> {
    check_len(x, y, 4)?;
    let problem = Problem::new(x, y, sigma);
    let span = x.iter().cloned().fold(f64::MIN, f64::max)
        - x.iter().cloned().fold(f64::MAX, f64::min);
    if span <= 0.0 {
        return Err(FitError::Singular);
    }
    let scan = |tau: f64| -> Result<(Vec<f64>, f64), FitError> {
        problem.linear_fit(&|xv| vec![(-xv / tau).exp(), 1.0])
    };
    let (lo, hi) = (span * 1e-2, span * 1e2);
    let mut best = (f64::INFINITY, lo);
    for k in 0..=400 {
        let tau = lo * (hi / lo).powf(k as f64 / 400.0);
        if let Ok((_, sse)) = scan(tau) {
            if sse < best.0 {
                best = (sse, tau);
            }
        }
    }
    let (coef, _) = scan(best.1)?;
    let start = vec![coef[0], best.1, coef[1]];
    let model = |p: &[f64], xv: f64| p[0] * (-xv / p[1]).exp() + p[2];
    let (params, var, chi2) = polish(&problem, start, &model)?;
    Ok(finish(
        "exponential",
        &["amplitude", "tau", "offset"],
        params,
        var,
        chi2,
        x.len(),
    ))
}

/// Fit y = A·exp(−(x/T)²) + c. Reports `amplitude`, `t_1e` (the 1/e time of
/// the Gaussian envelope) and `offset`.
pub fn fit_gaussian_decay(
    x: &[f64],
    y: &[f64],
    sigma: Option<&[f64]>,
) -> Result<FitResult, FitError> {
    check_len(x, y, 4)?;
    let problem = Problem::new(x, y, sigma);
    let span = x.iter().cloned().fold(f64::MIN, f64::max)
        - x.iter().cloned().fold(f64::MAX, f64::min);
    if span <= 0.0 {
        return Err(FitError::Singular);
    }
    let scan = |t: f64| -> Result<(Vec<f64>, f64), FitError> {
        problem.linear_fit(&|xv| vec![(-(xv / t) * (xv / t)).exp(), 1.0])
    };
    let (lo, hi) = (span * 3e-2, span * 3e1);
    let mut best = (f64::INFINITY, lo);
    for k in 0..=400 {
        let t = lo * (hi / lo).powf(k as f64 / 400.0);
        if let Ok((_, sse)) = scan(t) {
            if sse < best.0 {
                best = (sse, t);
            }
        }
    }
    let (coef, _) = scan(best.1)?;
    let start = vec![coef[0], best.1, coef[1]];
    let model = |p: &[f64], xv: f64| p[0] * (-(xv / p[1]) * (xv / p[1])).exp() + p[2];
    let (params, var, chi2) = polish(&problem, start, &model)?;
    Ok(finish(
        "gaussian_decay",
        &["amplitude", "t_1e", "offset"],
        params,
        var,
        chi2,
        x.len(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn noisy<F: Fn(f64) -> f64>(f: F, x: &[f64], noise: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        x.iter()
            .map(|&xi| f(xi) + noise * rng.gen_range(-1.0..1.0))
            .collect()
    }

    #[test]
    fn rabi_fit_recovers_frequency_without_a_hint() {
        let omega = TAU * 1.9e3;
        let x: Vec<f64> = (0..48).map(|k| k as f64 * 1.6e-3 / 48.0).collect();
        let y = noisy(|t| 0.95 * (omega * t / 2.0).sin().powi(2) + 0.02, &x, 0.02, 1);
        let fit = fit_rabi(&x, &y, None, None).unwrap();
        let got = fit.param("omega").unwrap().value;
        assert!((got - omega).abs() / omega < 0.01, "ω = {got}");
        assert!(fit.param("amplitude").unwrap().value > 0.9);
    }

    #[test]
    fn cosine_fit_recovers_fringe_frequency_and_phase() {
        let omega = TAU * 160.0;
        let x: Vec<f64> = (0..40).map(|k| k as f64 * 12.5e-3 / 40.0).collect();
        let y = noisy(|t| 0.45 * (omega * t + 0.8).cos() + 0.5, &x, 0.02, 2);
        let fit = fit_cosine(&x, &y, None, None).unwrap();
        let got = fit.param("omega").unwrap().value;
        assert!((got - omega).abs() / omega < 0.01, "ω = {got}");
        let phase = fit.param("phase").unwrap().value;
        assert!((phase - 0.8).abs() < 0.1, "φ = {phase}");
    }

    #[test]
    fn exponential_fit_recovers_lifetime() {
        let tau = 5.5e-3;
        let x: Vec<f64> = (0..24).map(|k| k as f64 * 20e-3 / 24.0).collect();
        let y = noisy(|t| 0.8 * (-t / tau).exp() + 0.15, &x, 0.01, 3);
        let fit = fit_exponential(&x, &y, None).unwrap();
        let got = fit.param("tau").unwrap().value;
        assert!((got - tau).abs() / tau < 0.05, "τ = {got}");
    }

    #[test]
    fn gaussian_fit_recovers_coherence_time() {
        let t2 = 40e-3;
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 90e-3 / 20.0).collect();
        let y = noisy(|t| 0.5 * (-(t / t2) * (t / t2)).exp() + 0.5, &x, 0.008, 4);
        let fit = fit_gaussian_decay(&x, &y, None).unwrap();
        let got = fit.param("t_1e").unwrap().value;
        assert!((got - t2).abs() / t2 < 0.05, "T = {got}");
    }

    #[test]
    fn uncertainties_shrink_with_smaller_noise() {
        let omega = TAU * 1.0e3;
        let x: Vec<f64> = (0..64).map(|k| k as f64 * 3e-3 / 64.0).collect();
        let loud = noisy(|t| (omega * t / 2.0).sin().powi(2), &x, 0.05, 5);
        let quiet = noisy(|t| (omega * t / 2.0).sin().powi(2), &x, 0.005, 6);
        let sl = vec![0.05; x.len()];
        let sq = vec![0.005; x.len()];
        let fl = fit_rabi(&x, &loud, Some(&sl), None).unwrap();
        let fq = fit_rabi(&x, &quiet, Some(&sq), None).unwrap();
        assert!(
            fq.param("omega").unwrap().stderr < fl.param("omega").unwrap().stderr,
            "{} !< {}",
            fq.param("omega").unwrap().stderr,
            fl.param("omega").unwrap().stderr
        );
    }

    #[test]
    fn residual_bound_rejects_wrong_models() {
        // A linear ramp is a bad Rabi oscillation.
        let x: Vec<f64> = (0..30).map(|k| k as f64 / 30.0).collect();
        let y: Vec<f64> = x.iter().map(|&xi| 3.0 * xi).collect();
        let sigma = vec![0.01; x.len()];
        let fit = fit_rabi(&x, &y, Some(&sigma), None).unwrap();
        assert!(fit.check_residual(4.0).is_err());
    }

    #[test]
    fn too_few_points_is_an_error() {
        let x = [0.0, 1.0];
        let y = [0.0, 1.0];
        assert!(matches!(
            fit_rabi(&x, &y, None, None),
            Err(FitError::TooFewPoints { .. })
        ));
    }
}
