//! Magnetic-field deviation δB(t): quasi-static, Ornstein–Uhlenbeck and
//! mains-synchronous components, plus calibration of the quasi-static
//! strength against a target coherence time.
//!
//! The paper-level facts are qualitative (field noise dominates dephasing,
//! shots start at a fixed mains phase), so the spectral composition here is
//! a modeling choice: the quasi-static part reproduces the bare-qubit T2,
//! the OU part provides tunable spectral density at the dressing gap, and
//! the mains part is phase-locked across shots.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, Stream};
use crate::scalar::Float;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel<T: Float> {
    /// Std-dev of the per-shot constant field offset, gauss.
    pub quasi_static_sigma: T,
    /// Stationary std-dev of the OU component, gauss.
    pub ou_sigma: T,
    /// OU correlation time, seconds.
    pub ou_tau: T,
    /// Mains pickup amplitude, gauss.
    pub mains_amplitude: T,
    /// Mains frequency, Hz.
    pub mains_freq: T,
    /// Mains phase at t = 0. Fixed per run: every shot starts at the same
    /// phase of the mains cycle.
    pub mains_phase: T,
    pub seed: u64,
}

impl<T: Float> NoiseModel<T> {
    pub fn quiet(seed: u64) -> Self {
        Self {
            quasi_static_sigma: T::zero(),
            ou_sigma: T::zero(),
            ou_tau: T::of(1e-3),
            mains_amplitude: T::zero(),
            mains_freq: T::of(50.0),
            mains_phase: T::zero(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("quasi_static_sigma", self.quasi_static_sigma),
            ("ou_sigma", self.ou_sigma),
            ("mains_amplitude", self.mains_amplitude),
        ] {
            if v < T::zero() {
                return Err(format!("noise amplitude {name} must be ≥ 0"));
            }
        }
        if self.ou_sigma > T::zero() && self.ou_tau <= T::zero() {
            return Err("ou_tau must be > 0 when the OU component is active".into());
        }
        if self.mains_amplitude > T::zero() && self.mains_freq <= T::zero() {
            return Err("mains_freq must be > 0 when the mains component is active".into());
        }
        Ok(())
    }

    /// True when every component is off; the propagator then reuses one
    /// trajectory for all shots.
    pub fn is_quiet(&self) -> bool {
        self.quasi_static_sigma == T::zero()
            && self.ou_sigma == T::zero()
            && self.mains_amplitude == T::zero()
    }

    /// Largest sample spacing that resolves the active components.
    fn max_spacing(&self, requested: T) -> T {
        let mut dt = requested;
        if self.ou_sigma > T::zero() {
            dt = dt.min(self.ou_tau / T::of(10.0));
        }
        if self.mains_amplitude > T::zero() {
            dt = dt.min(T::one() / (T::of(20.0) * self.mains_freq));
        }
        dt
    }
}

impl<T: Float> Default for NoiseModel<T> {
    fn default() -> Self {
        Self::quiet(0)
    }
}

/// One realization of δB(t) on a uniform grid, covering a whole shot.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory<T: Float> {
    pub dt: T,
    pub values: Vec<T>,
}

impl<T: Float> NoiseTrajectory<T> {
    pub fn zero(duration: T, dt: T) -> Self {
        let n = (duration / dt).ceil().to_f64().unwrap_or(0.0) as usize + 2;
        Self {
            dt,
            values: vec![T::zero(); n],
        }
    }

    pub fn duration(&self) -> T {
        self.dt * T::of(self.values.len().saturating_sub(1) as f64)
    }

    /// δB at time `t`, linearly interpolated between grid samples.
    pub fn value_at(&self, t: T) -> T {
        if self.values.is_empty() {
            return T::zero();
        }
        let pos = (t / self.dt).max(T::zero());
        let idx = pos.floor().to_f64().unwrap_or(0.0) as usize;
        if idx + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = pos - T::of(idx as f64);
        self.values[idx] * (T::one() - frac) + self.values[idx + 1] * frac
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// Generate the δB(t) realization for one shot.
///
/// The OU component uses the exact one-step discretization
/// b(t+dt) = b(t)·e^{−dt/τ} + σ·√(1 − e^{−2dt/τ})·ξ with a stationary
/// initial draw, so its ensemble statistics are independent of `dt`.
/// Gaussian draws happen in `f64` and are cast once, so a given key yields
/// the same trajectory for every scalar type.
pub fn sample_trajectory<T: Float>(
    model: &NoiseModel<T>,
    duration: T,
    dt: T,
    shot_index: u64,
) -> NoiseTrajectory<T> {
    assert!(
        duration >= T::zero() && dt > T::zero(),
        "duration must be ≥ 0 and dt > 0"
    );
    let dt = model.max_spacing(dt);
    let n = (duration / dt).ceil().to_f64().unwrap_or(0.0) as usize + 2;

    let normal = Normal::new(0.0f64, 1.0).unwrap();

    let b_qs = if model.quasi_static_sigma > T::zero() {
        let mut rng = stream_rng(model.seed, shot_index, Stream::QuasiStaticNoise);
        model.quasi_static_sigma * T::of(normal.sample(&mut rng))
    } else {
        T::zero()
    };

    let mut values = Vec::with_capacity(n);
    if model.ou_sigma > T::zero() {
        let mut rng = stream_rng(model.seed, shot_index, Stream::OuNoise);
        let decay = (-(dt / model.ou_tau)).exp();
        let kick = model.ou_sigma * (T::one() - decay * decay).sqrt();
        let mut b_ou = model.ou_sigma * T::of(normal.sample(&mut rng));
        for _ in 0..n {
            values.push(b_ou);
            b_ou = b_ou * decay + kick * T::of(normal.sample(&mut rng));
        }
    } else {
        values.resize(n, T::zero());
    }

    for (k, v) in values.iter_mut().enumerate() {
        let mut total = *v + b_qs;
        if model.mains_amplitude > T::zero() {
            let t = dt * T::of(k as f64);
            let arg = T::tau() * model.mains_freq * t + model.mains_phase;
            total = total + model.mains_amplitude * arg.sin();
        }
        *v = total;
    }

    NoiseTrajectory { dt, values }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("quasi-static calibration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("target coherence time must be positive")]
    BadTarget,
}

/// Monte-Carlo Ramsey contrast of the bare field-sensitive qubit at delay
/// `t` under a quasi-static deviation of std-dev `sigma`: E[cos(s1·δB·t)].
fn quasi_static_contrast(sigma: f64, s1: f64, t: f64, seed: u64, shots: usize) -> f64 {
    let normal = Normal::new(0.0f64, sigma).unwrap();
    let mut acc = 0.0;
    for shot in 0..shots {
        let mut rng = stream_rng(seed, shot as u64, Stream::QuasiStaticNoise);
        let db: f64 = normal.sample(&mut rng);
        acc += (s1 * db * t).cos();
    }
    acc / shots as f64
}

/// Find the quasi-static σ_B whose simulated bare-qubit Ramsey contrast
/// falls to 1/e at `target_t2`.
///
/// The analytic seed √2/(s1·T2) comes from the Gaussian dephasing law
/// contrast(t) = exp(−(s1·σ·t)²/2); bisection against the Monte-Carlo
/// contrast then absorbs the sampling realization.
pub fn calibrate_quasi_static(
    target_t2: f64,
    s1: f64,
    seed: u64,
    shots: usize,
) -> Result<f64, CalibrationError> {
    if !(target_t2 > 0.0) {
        return Err(CalibrationError::BadTarget);
    }
    let target = (-1.0f64).exp();
    let seed_sigma = 2.0f64.sqrt() / (s1 * target_t2);
    let mut lo = seed_sigma / 4.0;
    let mut hi = seed_sigma * 4.0;
    // Contrast is monotone decreasing in σ at fixed delay.
    if quasi_static_contrast(lo, s1, target_t2, seed, shots) < target
        || quasi_static_contrast(hi, s1, target_t2, seed, shots) > target
    {
        return Err(CalibrationError::NoConvergence(0));
    }
    const MAX_ITERS: usize = 50;
    for iter in 0..MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        let c = quasi_static_contrast(mid, s1, target_t2, seed, shots);
        if c > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) / mid < 1e-6 {
            let _ = iter;
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(CalibrationError::NoConvergence(MAX_ITERS))
}
