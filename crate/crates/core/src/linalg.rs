//! Small dense helpers on slices.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

#[inline]
pub fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Log-determinant and quadratic form `eᵀ R⁻¹ e` for a small symmetric
/// positive definite `R` (row-major, `n×n`).
///
/// Sizes up to three use closed forms; larger ones a Cholesky factorization.
pub fn spd_logdet_quad<T: Real>(r: &[T], e: &[T], n: usize) -> Result<(T, T)> {
    let not_pd = || Error::Numerical("evidence covariance is not positive definite".into());
    match n {
        1 => {
            let a = r[0];
            if !(a > T::zero()) {
                return Err(not_pd());
            }
            Ok((a.ln(), e[0] * e[0] / a))
        }
        2 => {
            let (a, b, d) = (r[0], r[1], r[3]);
            let det = a * d - b * b;
            if !(a > T::zero() && det > T::zero()) {
                return Err(not_pd());
            }
            let q = (d * e[0] * e[0] - (b + b) * e[0] * e[1] + a * e[1] * e[1]) / det;
            Ok((det.ln(), q))
        }
        3 => {
            let (a, b, c) = (r[0], r[1], r[2]);
            let (d, f) = (r[4], r[5]);
            let g = r[8];
            // Cofactors of the symmetric matrix [[a b c] [b d f] [c f g]].
            let c00 = d * g - f * f;
            let c01 = c * f - b * g;
            let c02 = b * f - c * d;
            let c11 = a * g - c * c;
            let c12 = b * c - a * f;
            let c22 = a * d - b * b;
            let det = a * c00 + b * c01 + c * c02;
            if !(a > T::zero() && c22 > T::zero() && det > T::zero()) {
                return Err(not_pd());
            }
            let two = T::of(2.0);
            let q = (c00 * e[0] * e[0]
                + c11 * e[1] * e[1]
                + c22 * e[2] * e[2]
                + two * (c01 * e[0] * e[1] + c02 * e[0] * e[2] + c12 * e[1] * e[2]))
                / det;
            Ok((det.ln(), q))
        }
        _ => {
            let mut l = vec![T::zero(); n * n];
            for i in 0..n {
                for j in 0..=i {
                    let mut s = r[i * n + j];
                    for k in 0..j {
                        s = s - l[i * n + k] * l[j * n + k];
                    }
                    if i == j {
                        if !(s > T::zero()) {
                            return Err(not_pd());
                        }
                        l[i * n + i] = s.sqrt();
                    } else {
                        l[i * n + j] = s / l[j * n + j];
                    }
                }
            }
            let mut z = vec![T::zero(); n];
            let mut logdet = T::zero();
            for i in 0..n {
                let mut s = e[i];
                for k in 0..i {
                    s = s - l[i * n + k] * z[k];
                }
                z[i] = s / l[i * n + i];
                logdet = logdet + l[i * n + i].ln();
            }
            Ok((logdet + logdet, dot(&z, &z)))
        }
    }
}
