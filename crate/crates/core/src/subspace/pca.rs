//! Principal directions of centered data via one-sided Jacobi rotations.

use crate::linalg::{axpy, dot, norm};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Left singular vectors and singular values of the matrix whose columns are
/// `columns`, sorted by descending singular value.
///
/// Columns are rotated pairwise until mutually orthogonal; the column norms
/// are then the singular values and the normalized columns the left singular
/// vectors. Directions whose singular value is below `zero_tol` are dropped.
pub(crate) fn left_singular<T: Real>(
    mut columns: Vec<Vec<T>>,
    zero_tol: T,
) -> (Vec<Vec<T>>, Vec<T>) {
    let n = columns.len();
    let tol = T::epsilon() * T::of(4.0);
    let mut norms2: Vec<T> = columns.iter().map(|c| dot(c, c)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (norms2[i], norms2[j]);
                if a == T::zero() || b == T::zero() {
                    continue;
                }
                let (left, right) = columns.split_at_mut(j);
                let (ci, cj) = (&mut left[i], &mut right[0]);
                let g = dot(ci, cj);
                if g.abs() <= tol * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (g + g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
                    let (xv, yv) = (*x, *y);
                    *x = c * xv - s * yv;
                    *y = s * xv + c * yv;
                }
                norms2[i] = a - t * g;
                norms2[j] = b + t * g;
            }
        }
        for (n2, c) in norms2.iter_mut().zip(&columns) {
            *n2 = dot(c, c);
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        norms2[b]
            .partial_cmp(&norms2[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut dirs = Vec::new();
    let mut sv = Vec::new();
    for k in order {
        let s = norms2[k].sqrt();
        if !(s > zero_tol) {
            break;
        }
        let inv = T::one() / s;
        dirs.push(columns[k].iter().map(|&v| v * inv).collect());
        sv.push(s);
    }
    (dirs, sv)
}

/// Re-orthonormalizes `basis` in place (two passes of modified Gram-Schmidt)
/// and extends it to `target` vectors with the lowest-index canonical
/// directions that are not already spanned.
pub(crate) fn orthonormal_completion<T: Real>(basis: &mut Vec<Vec<T>>, target: usize, dim: usize) {
    let reorth = |v: &mut Vec<T>, prev: &[Vec<T>]| {
        for _ in 0..2 {
            for u in prev {
                let p = dot(u, v);
                axpy(-p, u, v);
            }
        }
    };
    for k in 0..basis.len() {
        let (prev, rest) = basis.split_at_mut(k);
        let v = &mut rest[0];
        reorth(v, prev);
        let nv = norm(v);
        v.iter_mut().for_each(|x| *x = *x / nv);
    }
    let mut axis = 0;
    while basis.len() < target && axis < dim {
        let mut v = vec![T::zero(); dim];
        v[axis] = T::one();
        axis += 1;
        reorth(&mut v, basis);
        let nv = norm(&v);
        if nv > T::of(0.5) {
            v.iter_mut().for_each(|x| *x = *x / nv);
            basis.push(v);
        }
    }
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is positive.
pub(crate) fn normalize_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
