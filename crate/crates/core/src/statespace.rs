//! The four-dimensional state space of the ground-state hyperfine manifold,
//! its bare and dressed bases, and the elementary operator algebra used by
//! the rest of the simulator.
//!
//! Canonical index order is fixed so serialized states are comparable across
//! runs: bare `(|0⟩, |−1⟩, |0′⟩, |+1⟩)` and dressed `(|0′⟩, |D⟩, |u⟩, |d⟩)`.

use serde::{Deserialize, Serialize};

use crate::scalar::{c_re, c_zero, Float, C};

pub const DIM: usize = 4;

/// Bare (undressed) level of the four-level system.
///
/// `Zero` is the F=0 state; the other three are the F=1 states labeled by
/// their m_F value. `ZeroPrime` is the m_F = 0 clock state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BareLevel {
    Zero,
    MinusOne,
    ZeroPrime,
    PlusOne,
}

impl BareLevel {
    pub const ALL: [BareLevel; DIM] = [
        BareLevel::Zero,
        BareLevel::MinusOne,
        BareLevel::ZeroPrime,
        BareLevel::PlusOne,
    ];

    pub fn index(self) -> usize {
        match self {
            BareLevel::Zero => 0,
            BareLevel::MinusOne => 1,
            BareLevel::ZeroPrime => 2,
            BareLevel::PlusOne => 3,
        }
    }

    /// True for the three F=1 levels, which fluoresce under detection.
    pub fn is_f1(self) -> bool {
        !matches!(self, BareLevel::Zero)
    }
}

/// Eigenstate of the dressed (microwave-coupled) system.
///
/// `ZeroPrime` is shared with the bare basis: it is the same physical state
/// and does not participate in the dressing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DressedLevel {
    ZeroPrime,
    Dark,
    Up,
    Down,
}

impl DressedLevel {
    pub const ALL: [DressedLevel; DIM] = [
        DressedLevel::ZeroPrime,
        DressedLevel::Dark,
        DressedLevel::Up,
        DressedLevel::Down,
    ];

    pub fn index(self) -> usize {
        match self {
            DressedLevel::ZeroPrime => 0,
            DressedLevel::Dark => 1,
            DressedLevel::Up => 2,
            DressedLevel::Down => 3,
        }
    }
}

/// Basis tag carried by every [`StateVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Bare,
    Dressed,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("state is in the {found:?} basis, expected {expected:?}")]
    WrongBasis { expected: Basis, found: Basis },
    #[error("state norm {norm} deviates from 1 beyond tolerance")]
    NotNormalized { norm: f64 },
}

/// Pure state: 4 complex amplitudes plus the basis they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Float> {
    pub amps: [C<T>; DIM],
    pub basis: Basis,
}

impl<T: Float> StateVector<T> {
    pub fn new(amps: [C<T>; DIM], basis: Basis) -> Self {
        Self { amps, basis }
    }

    /// Basis state |level⟩ in the bare basis.
    pub fn bare(level: BareLevel) -> Self {
        let mut amps = [c_zero(); DIM];
        amps[level.index()] = c_re(T::one());
        Self::new(amps, Basis::Bare)
    }

    /// Basis state |level⟩ in the dressed basis.
    pub fn dressed(level: DressedLevel) -> Self {
        let mut amps = [c_zero(); DIM];
        amps[level.index()] = c_re(T::one());
        Self::new(amps, Basis::Dressed)
    }

    pub fn norm_sqr(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Squared amplitudes, in canonical index order of the current basis.
    pub fn populations(&self) -> [T; DIM] {
        let mut p = [T::zero(); DIM];
        for (pi, a) in p.iter_mut().zip(self.amps.iter()) {
            *pi = a.norm_sqr();
        }
        p
    }

    /// Total population in the three F=1 levels. Bare basis only.
    pub fn f1_population(&self) -> Result<T, StateError> {
        if self.basis != Basis::Bare {
            return Err(StateError::WrongBasis {
                expected: Basis::Bare,
                found: self.basis,
            });
        }
        let p = self.populations();
        Ok(p[1] + p[2] + p[3])
    }

    pub fn check_norm(&self, tol: T) -> Result<(), StateError> {
        let n = self.norm();
        if (n - T::one()).abs() > tol {
            Err(StateError::NotNormalized {
                norm: n.to_f64().unwrap_or(f64::NAN),
            })
        } else {
            Ok(())
        }
    }

    /// Inner product ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> C<T> {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .fold(c_zero(), |acc, (a, b)| acc + a.conj() * *b)
    }

    /// |⟨self|other⟩|², the overlap probability.
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    /// Flatten to 8 reals, interleaved re/im in canonical order.
    pub fn to_flat(&self) -> [T; 2 * DIM] {
        let mut out = [T::zero(); 2 * DIM];
        for (i, a) in self.amps.iter().enumerate() {
            out[2 * i] = a.re;
            out[2 * i + 1] = a.im;
        }
        out
    }

    pub fn from_flat(flat: [T; 2 * DIM], basis: Basis) -> Self {
        let mut amps = [c_zero(); DIM];
        for (i, a) in amps.iter_mut().enumerate() {
            *a = C::new(flat[2 * i], flat[2 * i + 1]);
        }
        Self::new(amps, basis)
    }
}

/// 4×4 complex operator. Entries are in rad/s when the operator plays the
/// role of H/ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T: Float> {
    pub m: [[C<T>; DIM]; DIM],
}

impl<T: Float> Operator<T> {
    pub fn zero() -> Self {
        Self {
            m: [[c_zero(); DIM]; DIM],
        }
    }

    pub fn identity() -> Self {
        let mut op = Self::zero();
        for i in 0..DIM {
            op.m[i][i] = c_re(T::one());
        }
        op
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..DIM {
            for j in 0..DIM {
                out.m[i][j] = self.m[j][i].conj();
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..DIM {
            for k in 0..DIM {
                let a = self.m[i][k];
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                for j in 0..DIM {
                    out.m[i][j] = out.m[i][j] + a * rhs.m[k][j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C<T>; DIM]) -> [C<T>; DIM] {
        let mut out = [c_zero(); DIM];
        for i in 0..DIM {
            let mut acc = c_zero();
            for j in 0..DIM {
                acc = acc + self.m[i][j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..DIM {
            for j in 0..DIM {
                out.m[i][j] = out.m[i][j] + rhs.m[i][j];
            }
        }
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = self.clone();
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e = *e * s;
            }
        }
        out
    }

    /// Largest entry magnitude of (A − A†); zero for a Hermitian operator.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..DIM {
            for j in 0..DIM {
                let d = (self.m[i][j] - self.m[j][i].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> T {
        let mut worst = T::zero();
        for row in self.m.iter() {
            for e in row.iter() {
                let d = e.norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Unitary mapping bare-basis amplitudes to dressed-basis amplitudes.
///
/// Row r of the returned operator is the dressed state ⟨r| written in the
/// bare basis, in canonical order, with the explicit sign convention
/// |D⟩ = (|+1⟩ − |−1⟩)/√2, |u,d⟩ = (|+1⟩ + |−1⟩)/2 ± |0⟩/√2, |0′⟩ = |0′⟩.
pub fn dressed_transform<T: Float>() -> Operator<T> {
    let rt2inv = T::one() / T::of(2.0).sqrt();
    let half = T::of(0.5);
    let mut u = Operator::zero();
    // ⟨0′| row: bare order (|0⟩, |−1⟩, |0′⟩, |+1⟩)
    u.m[0][2] = c_re(T::one());
    // ⟨D|
    u.m[1][1] = c_re(-rt2inv);
    u.m[1][3] = c_re(rt2inv);
    // ⟨u|
    u.m[2][0] = c_re(rt2inv);
    u.m[2][1] = c_re(half);
    u.m[2][3] = c_re(half);
    // ⟨d|
    u.m[3][0] = c_re(-rt2inv);
    u.m[3][1] = c_re(half);
    u.m[3][3] = c_re(half);
    u
}

/// Change a bare-basis state into the dressed basis. Norm is preserved.
pub fn to_dressed<T: Float>(state: &StateVector<T>) -> Result<StateVector<T>, StateError> {
    if state.basis != Basis::Bare {
        return Err(StateError::WrongBasis {
            expected: Basis::Bare,
            found: state.basis,
        });
    }
    let u = dressed_transform();
    Ok(StateVector::new(u.mul_vec(&state.amps), Basis::Dressed))
}

/// Change a dressed-basis state back into the bare basis.
pub fn to_bare<T: Float>(state: &StateVector<T>) -> Result<StateVector<T>, StateError> {
    if state.basis != Basis::Dressed {
        return Err(StateError::WrongBasis {
            expected: Basis::Dressed,
            found: state.basis,
        });
    }
    let u = dressed_transform::<T>().adjoint();
    Ok(StateVector::new(u.mul_vec(&state.amps), Basis::Bare))
}
