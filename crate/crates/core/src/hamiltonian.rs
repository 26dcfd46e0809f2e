//! Assembles the time-dependent interaction-picture Hamiltonian (divided by
//! ħ, entries in rad/s) in the bare basis from field configurations,
//! calibration constants and the instantaneous magnetic-field deviation.
//!
//! All Hamiltonians are written in a frame co-rotating with each applied
//! field's programmed frequency, after the rotating wave approximation.
//! Off-resonant microwave cross-couplings (detuned by ≳ the Zeeman splitting,
//! three orders of magnitude above the Rabi frequencies used here) are
//! dropped entirely.

use serde::{Deserialize, Serialize};

use crate::scalar::{c_re, Float, C};
use crate::statespace::Operator;

/// Atomic constants of the ground-state manifold.
///
/// `s1` and `c2` are the first- and second-order sensitivities of the Zeeman
/// splittings to the static field. `s1` comes from the measured splitting
/// (13.7 MHz at 9.80 G) rather than from atomic constants, so all derived
/// numbers stay consistent with the experiment's own calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants<T: Float> {
    /// Hyperfine splitting ω₀, rad/s.
    pub omega0: T,
    /// First-order Zeeman slope, rad/s per gauss.
    pub s1: T,
    /// Second-order Zeeman coefficient, rad/s per gauss² (negative).
    pub c2: T,
}

impl<T: Float> PhysicalConstants<T> {
    /// Measured values for ¹⁷¹Yb⁺: ω₀ = 2π×12.6 GHz, s1 from 13.7 MHz at
    /// 9.80 G, c2 = −2π×0.31 kHz/G².
    pub fn ytterbium171() -> Self {
        let tau = T::tau();
        Self {
            omega0: tau * T::of(12.6e9),
            s1: tau * T::of(13.7e6 / 9.8),
            c2: -(tau * T::of(310.0)),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.omega0 <= T::zero() {
            return Err("hyperfine splitting omega0 must be positive".into());
        }
        if self.c2 >= T::zero() {
            return Err("second-order Zeeman coefficient c2 must be negative".into());
        }
        Ok(())
    }
}

impl<T: Float> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self::ytterbium171()
    }
}

/// Second-order Zeeman splitting difference δω = ω_B⁺ − ω_B⁻ = c2·B².
pub fn second_order_zeeman<T: Float>(b_gauss: T, k: &PhysicalConstants<T>) -> T {
    k.c2 * b_gauss * b_gauss
}

/// Both F=1 Zeeman splittings at field `b_gauss`.
///
/// The quadratic shift is apportioned symmetrically (±c2·B²/2) around the
/// first-order value; only the difference δω enters the dynamics in the
/// rotating frame, so the split convention is free.
pub fn zeeman_splittings<T: Float>(b_gauss: T, k: &PhysicalConstants<T>) -> (T, T) {
    let linear = k.s1 * b_gauss;
    let half_quad = k.c2 * b_gauss * b_gauss / T::of(2.0);
    (linear + half_quad, linear - half_quad)
}

/// Static-field calibration: B magnitude and the derived splittings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesCalibration<T: Float> {
    /// Static field magnitude, gauss.
    pub b0: T,
    /// ω_B⁺, rad/s.
    pub omega_b_plus: T,
    /// ω_B⁻, rad/s.
    pub omega_b_minus: T,
    /// δω = ω_B⁺ − ω_B⁻, rad/s. Negative at the fields used here.
    pub delta_omega: T,
}

impl<T: Float> SpeciesCalibration<T> {
    pub fn from_field(b_gauss: T, k: &PhysicalConstants<T>) -> Self {
        let (plus, minus) = zeeman_splittings(b_gauss, k);
        Self {
            b0: b_gauss,
            omega_b_plus: plus,
            omega_b_minus: minus,
            delta_omega: plus - minus,
        }
    }
}

/// Which rf drive configuration is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RfMode {
    /// One rf field resonant with |0′⟩↔|+1⟩; the |0′⟩↔|−1⟩ leg is carried
    /// with its explicit δω beat so the off-resonant neglect is testable.
    SinglePlus,
    /// One rf field resonant with |0′⟩↔|−1⟩.
    SingleMinus,
    /// Both rf transitions driven resonantly (δω treated as zero): the
    /// looped configuration where the rf phase controls the coupling.
    DualResonant,
}

/// Instantaneous field configuration. All Rabi frequencies, phases and
/// detunings in rad/s and rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig<T: Float> {
    pub omega_mw_plus: T,
    pub phi_mw_plus: T,
    pub omega_mw_minus: T,
    pub phi_mw_minus: T,
    /// Drive on the |0⟩↔|0′⟩ clock transition, used for state transfer and
    /// the bare Rabi experiments.
    pub omega_mw_clock: T,
    pub phi_mw_clock: T,
    pub omega_rf: T,
    pub phi_rf: T,
    /// rf detuning from the |0′⟩↔|+1⟩ resonance (or the |0′⟩↔|−1⟩ one in
    /// `SingleMinus` mode), rad/s.
    pub delta_rf: T,
    pub rf_mode: RfMode,
}

impl<T: Float> FieldConfig<T> {
    pub fn off() -> Self {
        Self {
            omega_mw_plus: T::zero(),
            phi_mw_plus: T::zero(),
            omega_mw_minus: T::zero(),
            phi_mw_minus: T::zero(),
            omega_mw_clock: T::zero(),
            phi_mw_clock: T::zero(),
            omega_rf: T::zero(),
            phi_rf: T::zero(),
            delta_rf: T::zero(),
            rf_mode: RfMode::SinglePlus,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("omega_mw_plus", self.omega_mw_plus),
            ("omega_mw_minus", self.omega_mw_minus),
            ("omega_mw_clock", self.omega_mw_clock),
            ("omega_rf", self.omega_rf),
        ] {
            if v < T::zero() {
                return Err(format!("Rabi frequency {name} must be ≥ 0"));
            }
        }
        Ok(())
    }
}

impl<T: Float> Default for FieldConfig<T> {
    fn default() -> Self {
        Self::off()
    }
}

fn phase<T: Float>(angle: T) -> C<T> {
    C::new(angle.cos(), angle.sin())
}

/// Microwave part: resonant σ⁺/σ⁻ dressing drives plus the clock drive.
///
/// H/ħ = (Ω⁺/2)(e^{−iφ⁺}|+1⟩⟨0| + h.c.) + (Ω⁻/2)(e^{−iφ⁻}|−1⟩⟨0| + h.c.)
///     + (Ω_c/2)(e^{−iφ_c}|0′⟩⟨0| + h.c.)
pub fn h_dressing<T: Float>(cfg: &FieldConfig<T>) -> Operator<T> {
    let half = T::of(0.5);
    let mut h = Operator::zero();
    let plus = c_re(cfg.omega_mw_plus * half) * phase(-cfg.phi_mw_plus);
    h.m[3][0] = plus;
    h.m[0][3] = plus.conj();
    let minus = c_re(cfg.omega_mw_minus * half) * phase(-cfg.phi_mw_minus);
    h.m[1][0] = minus;
    h.m[0][1] = minus.conj();
    let clock = c_re(cfg.omega_mw_clock * half) * phase(-cfg.phi_mw_clock);
    h.m[2][0] = clock;
    h.m[0][2] = clock.conj();
    h
}

/// rf part at global time `t` (seconds).
///
/// In the single-field modes the co-rotating frame is tied to the driven
/// transition; the counter transition keeps an explicit beat at δω so its
/// off-resonant suppression is a prediction of the model, not an input.
pub fn h_rf<T: Float>(cfg: &FieldConfig<T>, cal: &SpeciesCalibration<T>, t: T) -> Operator<T> {
    let mut h = Operator::zero();
    if cfg.omega_rf == T::zero() {
        return h;
    }
    let half_rabi = c_re(cfg.omega_rf * T::of(0.5));
    // Beat frequencies of the (+, −) transitions relative to the applied field.
    let (beat_plus, beat_minus) = match cfg.rf_mode {
        RfMode::SinglePlus => (cfg.delta_rf, cfg.delta_rf + cal.delta_omega),
        RfMode::SingleMinus => (cfg.delta_rf - cal.delta_omega, cfg.delta_rf),
        RfMode::DualResonant => (cfg.delta_rf, cfg.delta_rf),
    };
    let plus = half_rabi * phase(-cfg.phi_rf) * phase(-beat_plus * t);
    h.m[3][2] = plus;
    h.m[2][3] = plus.conj();
    let minus = half_rabi * phase(cfg.phi_rf) * phase(-beat_minus * t);
    h.m[1][2] = minus;
    h.m[2][1] = minus.conj();
    h
}

/// First-order Zeeman response to a field deviation δB: opposite shifts of
/// the m_F = ±1 levels, |0⟩ and |0′⟩ untouched.
pub fn h_noise<T: Float>(delta_b_gauss: T, k: &PhysicalConstants<T>) -> Operator<T> {
    let shift = k.s1 * delta_b_gauss;
    let mut h = Operator::zero();
    h.m[3][3] = c_re(shift);
    h.m[1][1] = c_re(-shift);
    h
}

/// Full Hamiltonian: dressing + rf + noise.
pub fn h_total<T: Float>(
    cfg: &FieldConfig<T>,
    cal: &SpeciesCalibration<T>,
    k: &PhysicalConstants<T>,
    delta_b_gauss: T,
    t: T,
) -> Operator<T> {
    let mut h = h_dressing(cfg);
    if cfg.omega_rf != T::zero() {
        h = h.add(&h_rf(cfg, cal, t));
    }
    if delta_b_gauss != T::zero() {
        h = h.add(&h_noise(delta_b_gauss, k));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use crate::scalar::c_zero;
    use crate::statespace::{dressed_transform, DIM};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn constants() -> PhysicalConstants<f64> {
        PhysicalConstants::ytterbium171()
    }

    fn symmetric_dressing(omega: f64) -> FieldConfig<f64> {
        FieldConfig {
            omega_mw_plus: omega,
            omega_mw_minus: omega,
            ..FieldConfig::off()
        }
    }

    #[test]
    fn second_order_zeeman_matches_measurement() {
        let k = constants();
        let dw = second_order_zeeman(9.80, &k) / TAU;
        // −29.8 kHz, inside the measured −29(1) kHz band.
        assert!((dw - (-29772.4)).abs() < 1.0, "δω/2π = {dw}");
        assert!(dw / 1e3 > -30.0 && dw / 1e3 < -28.0);
        assert_eq!(second_order_zeeman(0.0, &k), 0.0);
        assert!((second_order_zeeman(1.0, &k) / TAU - (-310.0)).abs() < 1e-9);
    }

    #[test]
    fn zeeman_splittings_are_consistent() {
        let k = constants();
        let (plus, minus) = zeeman_splittings(9.80, &k);
        // 13.7 MHz first-order value minus half the −29.8 kHz quadratic shift.
        assert!((plus / TAU / 1e6 - 13.7).abs() < 0.02, "ω_B⁺ = {plus}");
        let diff = plus - minus;
        let direct = second_order_zeeman(9.80, &k);
        assert!(((diff - direct) / direct).abs() < 1e-12);
        assert_eq!(zeeman_splittings(0.0, &k), (0.0, 0.0));
    }

    #[test]
    fn calibration_difference_is_exact() {
        let cal = SpeciesCalibration::from_field(9.80, &constants());
        assert_eq!(cal.delta_omega, cal.omega_b_plus - cal.omega_b_minus);
        assert!(cal.delta_omega < 0.0);
    }

    #[test]
    fn dressing_eigenvalues_are_zero_zero_plus_minus() {
        for omega_khz in [1.0, 16.0, 25.0, 1000.0] {
            let omega = TAU * omega_khz * 1e3;
            let h = h_dressing(&symmetric_dressing(omega));
            let (vals, _) = eigh(&h);
            let gap = omega / 2.0_f64.sqrt();
            assert!((vals[0] + gap).abs() / gap < 1e-12, "Ω = {omega_khz} kHz");
            assert!(vals[1].abs() / gap < 1e-12);
            assert!(vals[2].abs() / gap < 1e-12);
            assert!((vals[3] - gap).abs() / gap < 1e-12);
        }
    }

    #[test]
    fn quoted_gap_for_sixteen_khz_dressing() {
        let h = h_dressing(&symmetric_dressing(TAU * 16e3));
        let (vals, _) = eigh(&h);
        // Ω/√2 = 2π×11.31 kHz
        assert!((vals[3] / TAU / 1e3 - 11.3137).abs() < 1e-3);
    }

    #[test]
    fn dressing_is_diagonal_in_dressed_basis() {
        let omega = TAU * 16e3;
        let h = h_dressing(&symmetric_dressing(omega));
        let u = dressed_transform::<f64>();
        let hd = u.matmul(&h).matmul(&u.adjoint());
        let gap = omega / 2.0_f64.sqrt();
        // Dressed order (0′, D, u, d) → diag(0, 0, +Ω/√2, −Ω/√2).
        let expect = [0.0, 0.0, gap, -gap];
        for i in 0..DIM {
            for j in 0..DIM {
                let want = if i == j { expect[i] } else { 0.0 };
                assert!(
                    (hd.m[i][j] - c_re(want)).norm() < 1e-12 * gap,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn dark_state_of_asymmetric_dressing() {
        // Dark eigenvector ∝ Ω⁻|+1⟩ − Ω⁺|−1⟩ with eigenvalue 0.
        let cfg = FieldConfig {
            omega_mw_plus: 2.0,
            omega_mw_minus: 1.0,
            ..FieldConfig::off()
        };
        let h = h_dressing(&cfg);
        let norm = 5.0_f64.sqrt();
        let dark = [
            c_zero::<f64>(),
            c_re(-2.0 / norm),
            c_zero(),
            c_re(1.0 / norm),
        ];
        let hv = h.mul_vec(&dark);
        for e in hv {
            assert!(e.norm() < 1e-15);
        }
    }

    #[test]
    fn zero_fields_give_zero_operator() {
        let h = h_dressing(&FieldConfig::<f64>::off());
        assert_eq!(h.max_abs(), 0.0);
        let cal = SpeciesCalibration::from_field(9.8, &constants());
        let h = h_rf(&FieldConfig::off(), &cal, 0.1);
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn dark_state_annihilated_for_all_drive_strengths() {
        let dark = [
            c_zero::<f64>(),
            c_re(-1.0 / 2.0_f64.sqrt()),
            c_zero(),
            c_re(1.0 / 2.0_f64.sqrt()),
        ];
        for omega_khz in [1.0, 16.0, 25.0, 320.0] {
            let omega = TAU * omega_khz * 1e3;
            let h = h_dressing(&symmetric_dressing(omega));
            let hv = h.mul_vec(&dark);
            let worst = hv.iter().map(|e| e.norm()).fold(0.0, f64::max);
            assert!(worst < 1e-12 * omega);
        }
    }

    #[test]
    fn dual_resonant_at_half_pi_couples_only_dark() {
        let omega_rf = TAU * 2.0e3;
        let cal = SpeciesCalibration::from_field(9.8, &constants());
        let cfg = FieldConfig {
            omega_rf,
            phi_rf: std::f64::consts::FRAC_PI_2,
            rf_mode: RfMode::DualResonant,
            ..FieldConfig::off()
        };
        let u = dressed_transform::<f64>();
        let hd = u.matmul(&h_rf(&cfg, &cal, 0.0)).matmul(&u.adjoint());
        // Dressed order (0′, D, u, d): pure |D⟩⟨0′| coupling of size Ω/√2.
        let want = omega_rf / 2.0_f64.sqrt();
        assert!((hd.m[1][0].norm() - want).abs() < 1e-9);
        assert!(hd.m[2][0].norm() < 1e-12);
        assert!(hd.m[3][0].norm() < 1e-12);
    }

    #[test]
    fn dual_resonant_couplings_follow_rf_phase() {
        let omega_rf = TAU * 1.7e3;
        let cal = SpeciesCalibration::from_field(9.8, &constants());
        let u = dressed_transform::<f64>();
        for k in 0..64 {
            let phi = TAU * (k as f64) / 64.0;
            let cfg = FieldConfig {
                omega_rf,
                phi_rf: phi,
                rf_mode: RfMode::DualResonant,
                ..FieldConfig::off()
            };
            let hd = u.matmul(&h_rf(&cfg, &cal, 0.0)).matmul(&u.adjoint());
            let dark = omega_rf / 2.0_f64.sqrt() * phi.sin().abs();
            let bright = omega_rf / 2.0 * phi.cos().abs();
            assert!((hd.m[1][0].norm() - dark).abs() < 1e-9, "φ = {phi}");
            assert!((hd.m[2][0].norm() - bright).abs() < 1e-9);
            assert!((hd.m[3][0].norm() - bright).abs() < 1e-9);
        }
    }

    #[test]
    fn single_plus_driven_leg_decomposes_as_expected() {
        // The driven |+1⟩⟨0′| leg alone decomposes in the dressed basis as
        // ⟨D|H|0′⟩ = (Ω′/2)e^{−iφ} and ⟨u|H|0′⟩ = ⟨d|H|0′⟩ = (Ω′/2√2)e^{−iφ}
        // with Ω′ = Ω_rf/√2. The counter leg flips sign after half a beat
        // period, so averaging H(0) with H(π/|δω|) isolates the driven leg.
        let omega_rf = TAU * 2.687e3;
        let omega_prime = omega_rf / 2.0_f64.sqrt();
        let phi = 0.77;
        let cal = SpeciesCalibration::from_field(9.8, &constants());
        let cfg = FieldConfig {
            omega_rf,
            phi_rf: phi,
            rf_mode: RfMode::SinglePlus,
            ..FieldConfig::off()
        };
        let t_half_beat = std::f64::consts::PI / cal.delta_omega.abs();
        let h_avg = h_rf(&cfg, &cal, 0.0)
            .add(&h_rf(&cfg, &cal, t_half_beat))
            .scale(c_re(0.5));
        let u = dressed_transform::<f64>();
        let hd = u.matmul(&h_avg).matmul(&u.adjoint());
        let want_d = c_re(omega_prime / 2.0) * C::new(phi.cos(), -phi.sin());
        assert!((hd.m[1][0] - want_d).norm() < 1e-9);
        let want_ud = c_re(omega_prime / (2.0 * 2.0_f64.sqrt())) * C::new(phi.cos(), -phi.sin());
        assert!((hd.m[2][0] - want_ud).norm() < 1e-9);
        assert!((hd.m[3][0] - want_ud).norm() < 1e-9);
    }

    #[test]
    fn single_plus_at_t_zero_matches_full_two_leg_form() {
        // At t = 0 both legs contribute; the |D⟩⟨0′| element is the dual-mode
        // value −i(Ω/√2)sinφ rather than the driven-leg (Ω′/2)e^{−iφ}.
        let omega_rf = TAU * 2.0e3;
        let phi = 0.6;
        let cal = SpeciesCalibration::from_field(9.8, &constants());
        let cfg = FieldConfig {
            omega_rf,
            phi_rf: phi,
            rf_mode: RfMode::SinglePlus,
            ..FieldConfig::off()
        };
        let u = dressed_transform::<f64>();
        let hd = u.matmul(&h_rf(&cfg, &cal, 0.0)).matmul(&u.adjoint());
        let want = omega_rf / 2.0_f64.sqrt() * phi.sin().abs();
        assert!((hd.m[1][0].norm() - want).abs() < 1e-9);
    }

    #[test]
    fn noise_shifts_are_opposite_and_traceless() {
        let k = constants();
        let h = h_noise(0.0, &k);
        assert_eq!(h.max_abs(), 0.0);

        let h = h_noise(1e-6, &k);
        // 1 µG → +1.398 Hz on |+1⟩.
        assert!((h.m[3][3].re / TAU - 1.39796).abs() < 1e-3);
        assert!((h.m[1][1].re + h.m[3][3].re).abs() < 1e-18);
        let trace: f64 = (0..DIM).map(|i| h.m[i][i].re).sum();
        assert!(trace.abs() < 1e-18);
    }

    #[test]
    fn total_hamiltonian_is_hermitian_for_random_configs() {
        let k = constants();
        let cal = SpeciesCalibration::from_field(9.8, &k);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let cfg = FieldConfig {
                omega_mw_plus: rng.gen_range(0.0..1e6),
                phi_mw_plus: rng.gen_range(-7.0..7.0),
                omega_mw_minus: rng.gen_range(0.0..1e6),
                phi_mw_minus: rng.gen_range(-7.0..7.0),
                omega_mw_clock: rng.gen_range(0.0..1e6),
                phi_mw_clock: rng.gen_range(-7.0..7.0),
                omega_rf: rng.gen_range(0.0..1e5),
                phi_rf: rng.gen_range(-7.0..7.0),
                delta_rf: rng.gen_range(-1e4..1e4),
                rf_mode: match rng.gen_range(0..3) {
                    0 => RfMode::SinglePlus,
                    1 => RfMode::SingleMinus,
                    _ => RfMode::DualResonant,
                },
            };
            let t = rng.gen_range(0.0..1e-2);
            let db = rng.gen_range(-1e-3..1e-3);
            let h = h_total(&cfg, &cal, &k, db, t);
            let scale = h.max_abs().max(1.0);
            assert!(h.hermiticity_defect() < 1e-12 * scale);
        }
    }

    #[test]
    fn total_is_zero_when_everything_is_off() {
        let k = constants();
        let cal = SpeciesCalibration::from_field(9.8, &k);
        let h = h_total(&FieldConfig::off(), &cal, &k, 0.0, 0.0);
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn constants_validate() {
        assert!(constants().validate().is_ok());
        let mut bad = constants();
        bad.c2 = 1.0;
        assert!(bad.validate().is_err());
    }
}
