//! Time-ordered integration of the Schrödinger equation over a schedule
//! with an injected noise trajectory, plus Monte-Carlo shot ensembles.
//!
//! The default method exponentiates the midpoint-sampled Hamiltonian per
//! step, which is exact for piecewise-constant segments and keeps the norm
//! at roundoff level for arbitrarily stiff dressing gaps. Norm drift is a
//! diagnostic: the state is never renormalized, and drift past the
//! configured tolerance aborts the shot with the offending segment named.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{h_total, RfMode};
use crate::linalg::unitary_step;
use crate::measure::{detect, prepare, DetectorModel, PrepModel};
use crate::noise::{sample_trajectory, NoiseModel, NoiseTrajectory};
use crate::pulses::{Schedule, Segment, SegmentKind};
use crate::rng::{stream_rng, Stream};
use crate::scalar::{c_im, c_re, Float, C};
use crate::statespace::{to_dressed, StateError, StateVector, DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PiecewiseExponential,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig<T: Float> {
    pub method: Method,
    /// Absolute step cap, seconds. The frequency rule below usually binds
    /// first.
    pub dt_max: T,
    /// Allowed |norm − 1| before a shot is declared an integration failure.
    pub norm_tolerance: T,
    /// Steps per period of the fastest frequency scale in a segment.
    pub oversample: T,
    /// Minimum number of steps across a segment with time-varying
    /// envelopes (the STIRAP ramps).
    pub min_ramp_steps: usize,
}

impl<T: Float> Default for PropagatorConfig<T> {
    fn default() -> Self {
        Self {
            method: Method::PiecewiseExponential,
            dt_max: T::of(1.0),
            norm_tolerance: T::of(1e-9),
            oversample: T::of(20.0),
            min_ramp_steps: 2048,
        }
    }
}

/// Calibration bundle threaded through every Hamiltonian evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physics<T: Float> {
    pub constants: crate::hamiltonian::PhysicalConstants<T>,
    pub calibration: crate::hamiltonian::SpeciesCalibration<T>,
}

impl<T: Float> Physics<T> {
    pub fn at_field(b_gauss: T) -> Self {
        let constants = crate::hamiltonian::PhysicalConstants::ytterbium171();
        let calibration = crate::hamiltonian::SpeciesCalibration::from_field(b_gauss, &constants);
        Self {
            constants,
            calibration,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationRecord<T: Float> {
    pub t: T,
    pub bare: [T; DIM],
    pub dressed: [T; DIM],
}

/// Outcome of propagating one shot (before measurement).
#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult<T: Float> {
    pub final_state: StateVector<T>,
    /// Populations at the schedule start and after every segment.
    pub records: Vec<PopulationRecord<T>>,
    pub shot_index: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropagateError {
    #[error(
        "norm drifted by {drift:.3e} in segment {segment} ({label}): integration failure, \
         reduce the step size"
    )]
    NormDrift {
        segment: usize,
        label: &'static str,
        drift: f64,
    },
    #[error("noise trajectory covers {covers:.3e} s but the schedule runs for {needs:.3e} s")]
    TrajectoryTooShort { covers: f64, needs: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

fn kind_label<T: Float>(seg: &Segment<T>) -> &'static str {
    match seg.kind {
        SegmentKind::MwPulse { .. } => "mw_pulse",
        SegmentKind::StirapHalf {
            direction: crate::pulses::StirapDirection::Enter,
            ..
        } => "stirap_enter",
        SegmentKind::StirapHalf {
            direction: crate::pulses::StirapDirection::Exit,
            ..
        } => "stirap_exit",
        SegmentKind::Hold { .. } => "hold",
        SegmentKind::Idle => "idle",
        SegmentKind::Custom => "custom",
    }
}

/// Steps and step size for one segment, honoring the frequency rule
/// dt ≤ 1/(oversample·f_max), the trajectory grid and the ramp floor.
fn segment_steps<T: Float>(
    seg: &Segment<T>,
    physics: &Physics<T>,
    noise_scale_hz: T,
    traj_dt: Option<T>,
    cfg: &PropagatorConfig<T>,
) -> (usize, T) {
    let tau = T::tau();
    let mut f_max = seg.max_control_hz();
    let delta_omega_hz = physics.calibration.delta_omega / tau;
    for w in &seg.rf_windows {
        let beat = match w.mode {
            RfMode::SinglePlus => (w.detune_hz + delta_omega_hz).abs(),
            RfMode::SingleMinus => (w.detune_hz - delta_omega_hz).abs(),
            RfMode::DualResonant => w.detune_hz.abs(),
        };
        f_max = f_max.max(beat);
    }
    f_max = f_max.max(noise_scale_hz);

    let mut dt = cfg.dt_max;
    if f_max > T::zero() {
        dt = dt.min(T::one() / (cfg.oversample * f_max));
    }
    if let Some(td) = traj_dt {
        dt = dt.min(td);
    }
    if seg.has_ramps() {
        dt = dt.min(seg.duration / T::of(cfg.min_ramp_steps as f64));
    }
    dt = dt.min(seg.duration);
    let n = (seg.duration / dt)
        .ceil()
        .to_f64()
        .map(|x| x as usize)
        .unwrap_or(1)
        .max(1);
    (n, seg.duration / T::of(n as f64))
}

fn axpy<T: Float>(y: &mut [C<T>; DIM], a: C<T>, x: &[C<T>; DIM]) {
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi = *yi + a * *xi;
    }
}

/// Propagate `state` through `schedule` with δB(t) taken from `trajectory`,
/// calling `observer` with the running global time after every step.
pub fn evolve_with_observer<T: Float>(
    state: &StateVector<T>,
    schedule: &Schedule<T>,
    trajectory: &NoiseTrajectory<T>,
    physics: &Physics<T>,
    cfg: &PropagatorConfig<T>,
    shot_index: u64,
    mut observer: impl FnMut(T, &StateVector<T>),
) -> Result<ShotResult<T>, PropagateError> {
    state.check_norm(T::of(1e-6))?;
    let total = schedule.total_duration();
    let covers = trajectory.duration();
    if covers < total - trajectory.dt {
        return Err(PropagateError::TrajectoryTooShort {
            covers: covers.to_f64().unwrap_or(0.0),
            needs: total.to_f64().unwrap_or(0.0),
        });
    }

    let noise_scale_hz = physics.constants.s1 * trajectory.max_abs() / T::tau();
    let traj_dt = if trajectory.values.windows(2).any(|w| w[0] != w[1]) {
        Some(trajectory.dt)
    } else {
        None
    };

    let mut psi = state.clone();
    let mut records = Vec::with_capacity(schedule.segments.len() + 1);
    let record = |t: T, psi: &StateVector<T>, records: &mut Vec<PopulationRecord<T>>| {
        let dressed = to_dressed(psi)
            .map(|d| d.populations())
            .unwrap_or([T::zero(); DIM]);
        records.push(PopulationRecord {
            t,
            bare: psi.populations(),
            dressed,
        });
    };
    record(T::zero(), &psi, &mut records);

    let mut t_global = T::zero();
    for (seg_idx, seg) in schedule.segments.iter().enumerate() {
        let (n, dt) = segment_steps(seg, physics, noise_scale_hz, traj_dt, cfg);
        match cfg.method {
            Method::PiecewiseExponential => {
                for k in 0..n {
                    let local_mid = dt * (T::of(k as f64) + T::of(0.5));
                    let t_mid = t_global + local_mid;
                    let cfg_fields = seg.field_config_at(local_mid);
                    let h = h_total(
                        &cfg_fields,
                        &physics.calibration,
                        &physics.constants,
                        trajectory.value_at(t_mid),
                        t_mid,
                    );
                    let u = unitary_step(&h, dt);
                    psi.amps = u.mul_vec(&psi.amps);
                    observer(t_global + dt * T::of((k + 1) as f64), &psi);
                }
            }
            Method::Rk4 => {
                for k in 0..n {
                    let local = dt * T::of(k as f64);
                    let half = dt * T::of(0.5);
                    let at = |tl: T| {
                        let cfg_fields = seg.field_config_at(tl);
                        let tg = t_global + tl;
                        h_total(
                            &cfg_fields,
                            &physics.calibration,
                            &physics.constants,
                            trajectory.value_at(tg),
                            tg,
                        )
                    };
                    let h1 = at(local);
                    let h2 = at(local + half);
                    let h3 = at(local + dt);

                    let minus_i = c_im(-T::one());
                    let k1 = {
                        let hv = h1.mul_vec(&psi.amps);
                        hv.map(|z| minus_i * z)
                    };
                    let mut y = psi.amps;
                    axpy(&mut y, c_re(half), &k1);
                    let k2 = h2.mul_vec(&y).map(|z| minus_i * z);
                    let mut y = psi.amps;
                    axpy(&mut y, c_re(half), &k2);
                    let k3 = h2.mul_vec(&y).map(|z| minus_i * z);
                    let mut y = psi.amps;
                    axpy(&mut y, c_re(dt), &k3);
                    let k4 = h3.mul_vec(&y).map(|z| minus_i * z);

                    let sixth = dt / T::of(6.0);
                    let third = dt / T::of(3.0);
                    axpy(&mut psi.amps, c_re(sixth), &k1);
                    axpy(&mut psi.amps, c_re(third), &k2);
                    axpy(&mut psi.amps, c_re(third), &k3);
                    axpy(&mut psi.amps, c_re(sixth), &k4);
                    observer(t_global + dt * T::of((k + 1) as f64), &psi);
                }
            }
        }
        t_global = t_global + seg.duration;
        let drift = (psi.norm() - T::one()).abs();
        if drift > cfg.norm_tolerance {
            return Err(PropagateError::NormDrift {
                segment: seg_idx,
                label: kind_label(seg),
                drift: drift.to_f64().unwrap_or(f64::NAN),
            });
        }
        record(t_global, &psi, &mut records);
    }

    Ok(ShotResult {
        final_state: psi,
        records,
        shot_index,
    })
}

/// Propagate without observation.
pub fn evolve<T: Float>(
    state: &StateVector<T>,
    schedule: &Schedule<T>,
    trajectory: &NoiseTrajectory<T>,
    physics: &Physics<T>,
    cfg: &PropagatorConfig<T>,
    shot_index: u64,
) -> Result<ShotResult<T>, PropagateError> {
    evolve_with_observer(state, schedule, trajectory, physics, cfg, shot_index, |_, _| {})
}

/// Squared amplitudes of the final state in the dressed basis.
pub fn dressed_populations<T: Float>(result: &ShotResult<T>) -> Result<[T; DIM], StateError> {
    Ok(to_dressed(&result.final_state)?.populations())
}

/// Everything a Monte-Carlo run needs besides the schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimContext<T: Float> {
    pub physics: Physics<T>,
    pub noise: NoiseModel<T>,
    pub detector: DetectorModel<T>,
    pub prep: PrepModel<T>,
    pub propagator: PropagatorConfig<T>,
}

impl<T: Float> SimContext<T> {
    pub fn noiseless(b_gauss: T) -> Self {
        Self {
            physics: Physics::at_field(b_gauss),
            noise: NoiseModel::quiet(0),
            detector: DetectorModel::ideal(),
            prep: PrepModel::ideal(),
            propagator: PropagatorConfig::default(),
        }
    }
}

/// Aggregate outcome of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub x: f64,
    pub bright: u64,
    pub shots: u64,
    pub p_bright: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// 95% Wilson score interval.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub const WILSON_Z95: f64 = 1.959963984540054;

fn one_shot<T: Float>(
    schedule: &Schedule<T>,
    ctx: &SimContext<T>,
    seed: u64,
    global_shot: u64,
) -> Result<bool, PropagateError> {
    let duration = schedule.total_duration().max(T::of(1e-9));
    let mut noise = ctx.noise;
    noise.seed = seed;
    let trajectory = sample_trajectory(&noise, duration, duration, global_shot);
    let mut prep_rng = stream_rng(seed, global_shot, Stream::Prepare);
    let initial = prepare(&ctx.prep, &mut prep_rng);
    let shot = evolve(
        &initial,
        schedule,
        &trajectory,
        &ctx.physics,
        &ctx.propagator,
        global_shot,
    )?;
    let mut det_rng = stream_rng(seed, global_shot, Stream::Detect);
    let (_, bright) = detect(&shot.final_state, &ctx.detector, &mut det_rng)?;
    Ok(bright)
}

/// Run `shots` shots at every sweep point: sample noise, prepare, evolve,
/// detect and aggregate bright fractions with a Wilson 95% interval.
///
/// Outcomes are keyed by a global shot index, so the aggregate is identical
/// for any worker count and any shot ordering. When the noise model is
/// quiet every shot of a point propagates the same trajectory, so the
/// evolution is shared and only preparation and detection are re-drawn
/// (bit-identical to the general path, since prep errors put the shot into
/// a basis state that the detector resolves without evolving).
pub fn run_ensemble<T: Float>(
    points: &[(f64, Schedule<T>)],
    ctx: &SimContext<T>,
    seed: u64,
    shots: usize,
) -> Result<Vec<PointStats>, PropagateError> {
    let shots_u = shots as u64;
    let quiet = ctx.noise.is_quiet() && ctx.prep.p_prep_error == T::zero();

    let bright_flags: Vec<bool> = if quiet {
        // One propagation per point; detection stays per-shot.
        let finals: Vec<StateVector<T>> = points
            .par_iter()
            .map(|(_, schedule)| {
                let duration = schedule.total_duration().max(T::of(1e-9));
                let trajectory = NoiseTrajectory::zero(duration, duration);
                let initial = StateVector::bare(crate::statespace::BareLevel::Zero);
                evolve(
                    &initial,
                    schedule,
                    &trajectory,
                    &ctx.physics,
                    &ctx.propagator,
                    0,
                )
                .map(|r| r.final_state)
            })
            .collect::<Result<_, _>>()?;
        (0..points.len() as u64 * shots_u)
            .into_par_iter()
            .map(|gid| {
                let point = (gid / shots_u) as usize;
                let mut det_rng = stream_rng(seed, gid, Stream::Detect);
                detect(&finals[point], &ctx.detector, &mut det_rng)
                    .map(|(_, bright)| bright)
                    .map_err(PropagateError::from)
            })
            .collect::<Result<_, _>>()?
    } else {
        (0..points.len() as u64 * shots_u)
            .into_par_iter()
            .map(|gid| {
                let point = (gid / shots_u) as usize;
                one_shot(&points[point].1, ctx, seed, gid)
            })
            .collect::<Result<_, _>>()?
    };

    let mut stats = Vec::with_capacity(points.len());
    for (i, (x, _)) in points.iter().enumerate() {
        let counts = bright_flags[i * shots..(i + 1) * shots]
            .iter()
            .filter(|&&b| b)
            .count() as u64;
        let p = counts as f64 / shots_u as f64;
        let (lo, hi) = wilson_interval(counts, shots_u, WILSON_Z95);
        stats.push(PointStats {
            x: *x,
            bright: counts,
            shots: shots_u,
            p_bright: p,
            ci_low: lo,
            ci_high: hi,
        });
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::{hold, mw_pi_pulse, ScheduleBuilder, Transition};
    use crate::statespace::BareLevel;

    fn quiet_ctx() -> SimContext<f64> {
        SimContext::noiseless(9.80)
    }

    #[test]
    fn zero_hamiltonian_leaves_state_unchanged() {
        let ctx = quiet_ctx();
        let mut b = ScheduleBuilder::new();
        b.push(crate::pulses::Segment::idle(5e-3));
        let schedule = b.build();
        let traj = NoiseTrajectory::zero(5e-3, 1.0);
        let initial = StateVector::<f64>::bare(BareLevel::PlusOne);
        let out = evolve(&initial, &schedule, &traj, &ctx.physics, &ctx.propagator, 0).unwrap();
        for (a, b) in initial.amps.iter().zip(out.final_state.amps.iter()) {
            assert!((*a - *b).norm() < 1e-15);
        }
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn empty_schedule_is_a_no_op() {
        let ctx = quiet_ctx();
        let schedule = Schedule::<f64>::default();
        let traj = NoiseTrajectory::zero(1.0, 1.0);
        let initial = StateVector::<f64>::bare(BareLevel::Zero);
        let out = evolve(&initial, &schedule, &traj, &ctx.physics, &ctx.propagator, 0).unwrap();
        assert_eq!(out.final_state.amps, initial.amps);
    }

    #[test]
    fn norm_drift_names_the_offending_segment() {
        let ctx = quiet_ctx();
        let mut cfg = ctx.propagator;
        // Sabotage the step rule so rk4 takes one giant step through a fast
        // π pulse; rk4 does not preserve the norm at such step sizes.
        cfg.method = Method::Rk4;
        cfg.oversample = 1e-3;
        cfg.min_ramp_steps = 1;
        let mut b = ScheduleBuilder::new();
        b.push(mw_pi_pulse(Transition::Clock, 342e3).unwrap());
        let schedule = b.build();
        let traj = NoiseTrajectory::zero(1e-4, 1.0);
        let initial = StateVector::<f64>::bare(BareLevel::Zero);
        let err = evolve(&initial, &schedule, &traj, &ctx.physics, &cfg, 0).unwrap_err();
        match err {
            PropagateError::NormDrift { segment, label, .. } => {
                assert_eq!(segment, 0);
                assert_eq!(label, "mw_pulse");
            }
            other => panic!("expected NormDrift, got {other:?}"),
        }
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let ctx = quiet_ctx();
        let mut b = ScheduleBuilder::new();
        b.push(hold(10e-3, 16e3).unwrap());
        let schedule = b.build();
        let traj = NoiseTrajectory {
            dt: 1e-4,
            values: vec![0.0; 5],
        };
        let initial = StateVector::<f64>::bare(BareLevel::Zero);
        assert!(matches!(
            evolve(&initial, &schedule, &traj, &ctx.physics, &ctx.propagator, 0),
            Err(PropagateError::TrajectoryTooShort { .. })
        ));
    }

    #[test]
    fn wilson_interval_behaves() {
        let (lo, hi) = wilson_interval(50, 100, WILSON_Z95);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(hi - lo < 0.25);
        let (lo, hi) = wilson_interval(0, 100, WILSON_Z95);
        assert!(lo < 1e-12);
        assert!(hi < 0.06);
        let (lo, hi) = wilson_interval(100, 100, WILSON_Z95);
        assert!(lo > 0.94 && hi > 0.9999);
    }

    #[test]
    fn single_shot_ensemble_equals_single_outcome() {
        let ctx = quiet_ctx();
        let mut b = ScheduleBuilder::new();
        b.push(mw_pi_pulse(Transition::Plus, 42e3).unwrap());
        let schedule = b.build();
        let stats = run_ensemble(&[(0.0, schedule)], &ctx, 7, 1).unwrap();
        // π pulse to |+1⟩, ideal detector: the one shot is bright.
        assert_eq!(stats[0].bright, 1);
        assert_eq!(stats[0].shots, 1);
        assert_eq!(stats[0].p_bright, 1.0);
    }

    #[test]
    fn aggregates_are_identical_for_any_worker_count() {
        let mut ctx = quiet_ctx();
        ctx.noise.quasi_static_sigma = 4e-6;
        ctx.detector = DetectorModel::standard();
        let mut points = Vec::new();
        for k in 0..4 {
            let mut b = ScheduleBuilder::new();
            b.push(mw_pi_pulse(Transition::Plus, 42e3).unwrap());
            b.push(crate::pulses::Segment::idle(1e-3 * (k + 1) as f64));
            points.push((k as f64, b.build()));
        }
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_ensemble(&points, &ctx, 99, 40).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
    }

    #[test]
    fn quiet_fast_path_matches_general_path() {
        let ctx = quiet_ctx();
        let mut b = ScheduleBuilder::new();
        b.push(mw_pi_pulse(Transition::Plus, 42e3).unwrap());
        let points = vec![(0.0, b.build())];
        let fast = run_ensemble(&points, &ctx, 5, 25).unwrap();
        // Forcing the general path by a vanishing prep error changes nothing:
        // the noise model is still quiet, so trajectories are all zero.
        let mut ctx2 = ctx.clone();
        ctx2.prep.p_prep_error = 1e-300;
        let slow = run_ensemble(&points, &ctx2, 5, 25).unwrap();
        assert_eq!(fast, slow);
    }
}
