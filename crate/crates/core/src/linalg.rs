//! Dense 4×4 complex linear algebra: matrix exponential and Hermitian
//! eigendecomposition. Sized for the hot loop of the propagator, so
//! everything works on fixed arrays without allocation.

use crate::scalar::{c_im, c_re, c_zero, Float, C};
use crate::statespace::{Operator, DIM};

/// Padé(7,7) numerator coefficients (Higham's scaling-and-squaring method).
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];

/// 1-norm bound below which the unscaled Padé(7,7) approximant is accurate
/// to double-precision roundoff.
const THETA7: f64 = 0.95;

fn mat_zero<T: Float>() -> [[C<T>; DIM]; DIM] {
    [[c_zero(); DIM]; DIM]
}

fn mat_identity<T: Float>() -> [[C<T>; DIM]; DIM] {
    let mut m = mat_zero();
    for i in 0..DIM {
        m[i][i] = c_re(T::one());
    }
    m
}

fn mat_mul<T: Float>(a: &[[C<T>; DIM]; DIM], b: &[[C<T>; DIM]; DIM]) -> [[C<T>; DIM]; DIM] {
    let mut out = mat_zero();
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            for j in 0..DIM {
                out[i][j] = out[i][j] + aik * b[k][j];
            }
        }
    }
    out
}

fn mat_1_norm<T: Float>(a: &[[C<T>; DIM]; DIM]) -> T {
    let mut worst = T::zero();
    for j in 0..DIM {
        let mut col = T::zero();
        for row in a.iter() {
            col = col + row[j].norm();
        }
        if col > worst {
            worst = col;
        }
    }
    worst
}

/// Solve A·X = B by Gaussian elimination with partial pivoting. The Padé
/// denominator is always well conditioned in the scaled regime, so a
/// vanishing pivot indicates a caller bug and panics.
fn solve<T: Float>(a: [[C<T>; DIM]; DIM], b: [[C<T>; DIM]; DIM]) -> [[C<T>; DIM]; DIM] {
    let mut aug: [[C<T>; 2 * DIM]; DIM] = [[c_zero(); 2 * DIM]; DIM];
    for i in 0..DIM {
        aug[i][..DIM].copy_from_slice(&a[i]);
        aug[i][DIM..].copy_from_slice(&b[i]);
    }
    for col in 0..DIM {
        let mut pivot_row = col;
        let mut pivot_mag = aug[col][col].norm();
        for row in (col + 1)..DIM {
            let mag = aug[row][col].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        assert!(pivot_mag > T::zero(), "singular Padé denominator");
        aug.swap(col, pivot_row);
        let pivot = aug[col][col];
        for row in (col + 1)..DIM {
            let factor = aug[row][col] / pivot;
            if factor.norm() == T::zero() {
                continue;
            }
            for j in col..(2 * DIM) {
                let v = aug[col][j];
                aug[row][j] = aug[row][j] - factor * v;
            }
        }
    }
    let mut x = mat_zero();
    for col in (0..DIM).rev() {
        let pivot = aug[col][col];
        for j in 0..DIM {
            let mut sum = aug[col][DIM + j];
            for k in (col + 1)..DIM {
                sum = sum - aug[col][k] * x[k][j];
            }
            x[col][j] = sum / pivot;
        }
    }
    x
}

/// exp(A) via scaling-and-squaring with a diagonal Padé(7,7) approximant.
///
/// For anti-Hermitian A (the propagator case, A = −iH·dt) the diagonal
/// approximant is itself unitary, so repeated steps do not drift the norm
/// beyond roundoff.
pub fn expm<T: Float>(a: &Operator<T>) -> Operator<T> {
    let norm = mat_1_norm(&a.m);
    let theta = T::of(THETA7);
    let s: u32 = if norm > theta {
        let ratio = (norm / theta).log2().ceil();
        ratio.to_f64().unwrap_or(0.0).max(0.0) as u32
    } else {
        0
    };
    let scale = c_re(T::one() / T::of((1u64 << s) as f64));
    let mut m = a.m;
    for row in m.iter_mut() {
        for e in row.iter_mut() {
            *e = *e * scale;
        }
    }

    let b: [T; 8] = PADE7.map(T::of);
    let eye = mat_identity::<T>();
    let a2 = mat_mul(&m, &m);
    let a4 = mat_mul(&a2, &a2);
    let a6 = mat_mul(&a2, &a4);

    // U = A·(b7·A6 + b5·A4 + b3·A2 + b1·I), V = b6·A6 + b4·A4 + b2·A2 + b0·I
    let mut w = mat_zero();
    let mut v = mat_zero();
    for i in 0..DIM {
        for j in 0..DIM {
            w[i][j] = a6[i][j] * c_re(b[7])
                + a4[i][j] * c_re(b[5])
                + a2[i][j] * c_re(b[3])
                + eye[i][j] * c_re(b[1]);
            v[i][j] = a6[i][j] * c_re(b[6])
                + a4[i][j] * c_re(b[4])
                + a2[i][j] * c_re(b[2])
                + eye[i][j] * c_re(b[0]);
        }
    }
    let u = mat_mul(&m, &w);

    let mut num = mat_zero();
    let mut den = mat_zero();
    for i in 0..DIM {
        for j in 0..DIM {
            num[i][j] = v[i][j] + u[i][j];
            den[i][j] = v[i][j] - u[i][j];
        }
    }
    let mut result = solve(den, num);
    for _ in 0..s {
        result = mat_mul(&result, &result);
    }
    Operator { m: result }
}

/// exp(−i·H·dt) for a Hamiltonian-role operator H (entries in rad/s).
pub fn unitary_step<T: Float>(h: &Operator<T>, dt: T) -> Operator<T> {
    let factor = c_im(-dt);
    expm(&h.scale(factor))
}

/// Eigendecomposition of a Hermitian operator by cyclic complex Jacobi
/// rotations. Returns eigenvalues in ascending order and the unitary whose
/// columns are the matching eigenvectors.
pub fn eigh<T: Float>(h: &Operator<T>) -> ([T; DIM], Operator<T>) {
    let mut a = h.m;
    let mut v = mat_identity::<T>();
    let scale = h.max_abs().max(T::min_positive_value());
    let tol = scale * T::epsilon() * T::of(1e-2);

    for _sweep in 0..60 {
        let mut off = T::zero();
        for p in 0..DIM {
            for q in (p + 1)..DIM {
                off = off.max(a[p][q].norm());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..DIM {
            for q in (p + 1)..DIM {
                let apq = a[p][q];
                let mag = apq.norm();
                if mag <= tol {
                    continue;
                }
                let phase = apq / c_re(mag);
                let app = a[p][p].re;
                let aqq = a[q][q].re;
                let tau = (aqq - app) / (T::of(2.0) * mag);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                // Unitary J: J[p][p]=c, J[p][q]=s·e, J[q][p]=−s·ē, J[q][q]=c
                // with e = apq/|apq|; updates A ← J†·A·J, V ← V·J.
                let e = phase;
                let ec = phase.conj();
                for k in 0..DIM {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = akp * c_re(c) - akq * ec * c_re(s);
                    a[k][q] = akp * e * c_re(s) + akq * c_re(c);
                }
                for k in 0..DIM {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = apk * c_re(c) - aqk * e * c_re(s);
                    a[q][k] = apk * ec * c_re(s) + aqk * c_re(c);
                }
                for k in 0..DIM {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = vkp * c_re(c) - vkq * ec * c_re(s);
                    v[k][q] = vkp * e * c_re(s) + vkq * c_re(c);
                }
            }
        }
    }

    let mut evals = [T::zero(); DIM];
    for i in 0..DIM {
        evals[i] = a[i][i].re;
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap());
    let mut sorted_vals = [T::zero(); DIM];
    let mut sorted_vecs = mat_zero();
    for (dst, &src) in order.iter().enumerate() {
        sorted_vals[dst] = evals[src];
        for k in 0..DIM {
            sorted_vecs[k][dst] = v[k][src];
        }
    }
    (sorted_vals, Operator { m: sorted_vecs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut impl Rng, scale: f64) -> Operator<f64> {
        let mut h = Operator::zero();
        for i in 0..DIM {
            h.m[i][i] = c_re(rng.gen_range(-scale..scale));
            for j in (i + 1)..DIM {
                let z = C::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
                h.m[i][j] = z;
                h.m[j][i] = z.conj();
            }
        }
        h
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Operator::<f64>::zero();
        let e = expm(&z);
        for i in 0..DIM {
            for j in 0..DIM {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((e.m[i][j] - c_re(expect)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn expm_diagonal_matches_scalar_exp() {
        let mut a = Operator::<f64>::zero();
        a.m[0][0] = c_re(1.0);
        a.m[1][1] = c_re(-2.0);
        a.m[2][2] = C::new(0.5, 1.5);
        let e = expm(&a);
        assert!((e.m[0][0].re - 1.0f64.exp()).abs() < 1e-13);
        assert!((e.m[1][1].re - (-2.0f64).exp()).abs() < 1e-15);
        assert!((e.m[2][2] - C::new(0.5, 1.5).exp()).norm() < 1e-13);
        assert!((e.m[3][3].re - 1.0).abs() < 1e-15);
        assert!(e.m[0][1].norm() < 1e-16);
    }

    #[test]
    fn unitary_step_is_unitary_even_for_large_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &dt in &[1e-6, 1e-3, 0.3, 10.0] {
            let h = random_hermitian(&mut rng, 5.0);
            let u = unitary_step(&h, dt);
            let prod = u.matmul(&u.adjoint());
            for i in 0..DIM {
                for j in 0..DIM {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (prod.m[i][j] - c_re(expect)).norm() < 1e-13,
                        "dt={dt} i={i} j={j}"
                    );
                }
            }
        }
    }

    #[test]
    fn unitary_step_matches_two_level_rabi_formula() {
        // H = (Ω/2)σx on the (0,1) block: exp(−iHt) has cos/−i·sin entries.
        let omega = 2.0e5;
        let mut h = Operator::<f64>::zero();
        h.m[0][1] = c_re(omega / 2.0);
        h.m[1][0] = c_re(omega / 2.0);
        let t = 3.3e-6;
        let u = unitary_step(&h, t);
        let half = omega * t / 2.0;
        assert!((u.m[0][0].re - half.cos()).abs() < 1e-12);
        assert!((u.m[0][1] - c_im(-half.sin())).norm() < 1e-12);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let h = random_hermitian(&mut rng, 3.0);
            let (vals, vecs) = eigh(&h);
            // H·v_k = λ_k·v_k for every column.
            for k in 0..DIM {
                let col: [C<f64>; DIM] =
                    [vecs.m[0][k], vecs.m[1][k], vecs.m[2][k], vecs.m[3][k]];
                let hv = h.mul_vec(&col);
                for i in 0..DIM {
                    let resid = (hv[i] - col[i] * c_re(vals[k])).norm();
                    assert!(resid < 1e-11, "residual {resid}");
                }
            }
            // Ascending order.
            for k in 1..DIM {
                assert!(vals[k] >= vals[k - 1]);
            }
            // Orthonormal columns.
            let prod = vecs.adjoint().matmul(&vecs);
            for i in 0..DIM {
                for j in 0..DIM {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((prod.m[i][j] - c_re(expect)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn eigh_handles_degenerate_spectra() {
        let h = Operator::<f64>::identity();
        let (vals, _) = eigh(&h);
        for v in vals {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }
}
