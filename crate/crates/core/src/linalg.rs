//! Dense complex matrix helpers shared by every transport.
//!
//! All fibre maps are represented as `DMatrix<Complex64>`. Real connections
//! (Levi-Civita, constant real coefficients) simply carry zero imaginary parts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Reciprocal 1-norm condition number below which a matrix is treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn from_real(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Builds a complex matrix from real row slices.
pub fn real_rows(rows: &[&[f64]]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| Complex64::new(rows[i][j], 0.0))
}

pub fn diag(entries: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

/// Returns the real part if every imaginary part is within `tol`.
pub fn to_real(m: &CMatrix, tol: f64) -> Option<DMatrix<f64>> {
    if m.iter().all(|z| z.im.abs() <= tol) {
        Some(m.map(|z| z.re))
    } else {
        None
    }
}

/// Frobenius norm.
pub fn norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn vec_dist(a: &CVector, b: &CVector) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse with a conditioning guard.
pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let inv = m
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { rcond: 0.0 })?;
    let rcond = 1.0 / (one_norm(m) * one_norm(&inv));
    if !rcond.is_finite() || rcond < SINGULAR_RCOND || !is_finite(&inv) {
        return Err(Error::Singular {
            rcond: if rcond.is_finite() { rcond } else { 0.0 },
        });
    }
    Ok(inv)
}

/// ‖M†M − 𝕀‖.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    dist(&(m.adjoint() * m), &identity(m.nrows()))
}

/// ‖M + M†‖, zero exactly for anti-Hermitian matrices.
pub fn anti_hermitian_defect(m: &CMatrix) -> f64 {
    norm(&(m + m.adjoint()))
}

/// Nearest unitary matrix in Frobenius norm (unitary polar factor).
pub fn project_unitary(m: &CMatrix) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::Numerical("svd failed during unitary projection".into())),
    }
}

pub fn determinant(m: &CMatrix) -> Complex64 {
    m.clone().determinant()
}

/// Matrix exponential.
///
/// 1×1 and well-scaled 2×2 inputs use closed forms; everything else goes
/// through scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    assert!(a.is_square(), "expm requires a square matrix");
    match a.nrows() {
        0 => a.clone(),
        1 => CMatrix::from_element(1, 1, a[(0, 0)].exp()),
        2 => expm_2x2(a).unwrap_or_else(|| expm_pade13(a)),
        _ => expm_pade13(a),
    }
}

/// exp(M) = e^μ [cosh δ 𝕀 + (sinh δ / δ) N] with M = μ𝕀 + N, N traceless, N² = δ²𝕀.
/// Declines when |δ| > 1 to avoid cancellation between cosh and sinh.
fn expm_2x2(a: &CMatrix) -> Option<CMatrix> {
    let mu = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let n00 = a[(0, 0)] - mu;
    let n01 = a[(0, 1)];
    let n10 = a[(1, 0)];
    let delta_sq = n00 * n00 + n01 * n10;
    let delta = delta_sq.sqrt();
    if delta.norm() > 1.0 {
        return None;
    }
    let (ch, shc) = if delta.norm() < 1e-4 {
        let d2 = delta_sq;
        (
            Complex64::new(1.0, 0.0) + d2 * 0.5 + d2 * d2 / 24.0,
            Complex64::new(1.0, 0.0) + d2 / 6.0 + d2 * d2 / 120.0,
        )
    } else {
        (delta.cosh(), delta.sinh() / delta)
    };
    let scale = mu.exp();
    let mut out = CMatrix::zeros(2, 2);
    out[(0, 0)] = scale * (ch + shc * n00);
    out[(1, 1)] = scale * (ch - shc * n00);
    out[(0, 1)] = scale * shc * n01;
    out[(1, 0)] = scale * shc * n10;
    Some(out)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which the unscaled degree-13 approximant is accurate to unit roundoff.
const THETA13: f64 = 5.371920351148152;

fn expm_pade13(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm1 = one_norm(a);
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * Complex64::new(2f64.powi(-squarings), 0.0);
    let b = |k: usize| Complex64::new(PADE13[k], 0.0);
    let eye = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &eye * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &eye * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).unwrap_or_else(|| {
        // q is a perturbation of the identity for scaled inputs; reaching here
        // means the input was non-finite.
        CMatrix::from_element(n, n, Complex64::new(f64::NAN, f64::NAN))
    });
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Pauli matrices σ_x, σ_y, σ_z.
pub fn pauli() -> [CMatrix; 3] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// Rotation angle in [0, π] of a 2×2 matrix conjugate to a planar rotation,
/// read off its eigenvalues e^{±iα}. Conjugation invariant.
pub fn rotation_angle(m: &CMatrix) -> Result<f64> {
    if m.shape() != (2, 2) {
        return Err(Error::Dimension {
            expected: 2,
            got: m.nrows(),
        });
    }
    let half_trace = ((m[(0, 0)] + m[(1, 1)]) * 0.5).re;
    let det = determinant(m).re;
    let disc = (det - half_trace * half_trace).max(0.0);
    Ok(disc.sqrt().atan2(half_trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent reference: Taylor series after enough halvings that the
    /// series converges in a few dozen terms.
    fn taylor_expm(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let mut k = 0;
        let mut scaled = a.clone();
        while norm(&scaled) > 0.05 {
            scaled *= Complex64::new(0.5, 0.0);
            k += 1;
        }
        let mut term = identity(n);
        let mut sum = identity(n);
        for j in 1..30 {
            term = &term * &scaled / Complex64::new(j as f64, 0.0);
            sum += &term;
        }
        for _ in 0..k {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn expm_nilpotent_is_truncated_series() {
        let n = real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = expm(&(n.clone() * c(-0.7, 0.0)));
        let expected = identity(2) - n * c(0.7, 0.0);
        assert!(dist(&e, &expected) < 1e-15);
    }

    #[test]
    fn expm_rotation_generator() {
        let w = 1.3;
        let g = real_rows(&[&[0.0, -w], &[w, 0.0]]);
        let e = expm(&g);
        let expected = real_rows(&[&[w.cos(), -w.sin()], &[w.sin(), w.cos()]]);
        assert!(dist(&e, &expected) < 1e-14);
    }

    #[test]
    fn expm_matches_taylor_reference() {
        let cases = [
            CMatrix::from_fn(3, 3, |i, j| c((i as f64) - 0.3 * j as f64, 0.1 * (i + j) as f64)),
            CMatrix::from_fn(2, 2, |i, j| c(2.0 * i as f64 - j as f64, 1.5)),
            CMatrix::from_fn(4, 4, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, 0.0)),
        ];
        for a in &cases {
            let got = expm(a);
            let want = taylor_expm(a);
            assert!(dist(&got, &want) <= 1e-11 * norm(&want), "{got} vs {want}");
        }
    }

    #[test]
    fn expm_anti_hermitian_is_unitary() {
        let [sx, sy, sz] = pauli();
        let a = (sx * c(0.3, 0.0) + sy * c(-1.1, 0.0) + sz * c(0.4, 0.0)) * c(0.0, 0.5);
        assert!(unitarity_defect(&expm(&a)) < 1e-14);
        let big = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                c(0.0, 2.0 + i as f64)
            } else if i < j {
                c(1.0, 0.5)
            } else {
                c(-1.0, 0.5)
            }
        });
        assert!(anti_hermitian_defect(&big) < 1e-15);
        assert!(unitarity_defect(&expm(&big)) < 1e-13);
    }

    #[test]
    fn inverse_rejects_singular() {
        let s = real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(matches!(inverse(&s), Err(Error::Singular { .. })));
        let d = real_rows(&[&[2.0, 0.0], &[0.0, 4.0]]);
        let inv = inverse(&d).unwrap();
        assert!(dist(&inv, &real_rows(&[&[0.5, 0.0], &[0.0, 0.25]])) < 1e-16);
    }

    #[test]
    fn rotation_angle_is_conjugation_invariant() {
        let a: f64 = 2.0;
        let r = real_rows(&[&[a.cos(), a.sin()], &[-a.sin(), a.cos()]]);
        let d = real_rows(&[&[1.0, 0.0], &[0.0, 0.3]]);
        let conj = inverse(&d).unwrap() * r * d;
        assert!((rotation_angle(&conj).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn unitary_projection_recovers_unitary() {
        let u = expm(&(pauli()[1].clone() * c(0.0, 0.8)));
        let noisy = &u + CMatrix::from_element(2, 2, c(1e-6, -2e-6));
        let p = project_unitary(&noisy).unwrap();
        assert!(unitarity_defect(&p) < 1e-14);
        assert!(dist(&p, &u) < 1e-5);
    }
}
