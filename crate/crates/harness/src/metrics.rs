//! Echo return loss enhancement and normalized system mismatch.

use std::ops::Range;

use lpud_core::signal::FirStack;
use lpud_core::Real;

use crate::error::{Error, Result};

/// Denominator floor of the per-sample ERLE ratio.
pub const ERLE_FLOOR: f64 = 1e-12;

/// Reported decibel values are clamped to `±DB_CAP`.
pub const DB_CAP: f64 = 80.0;

/// `10 log10(x)` clamped to `[-DB_CAP, DB_CAP]`.
pub fn to_db(x: f64) -> f64 {
    (10.0 * x.log10()).clamp(-DB_CAP, DB_CAP)
}

/// Splits `0..n` into a first half and the remainder.
pub fn halves(n: usize) -> [Range<usize>; 2] {
    [0..n / 2, n / 2..n]
}

/// Average over samples `range` and all channels of `d² / (d - ŷ)²`, linear.
pub fn erle<T: Real, A: AsRef<[T]>, B: AsRef<[T]>>(
    d: &[A],
    estimate: &[B],
    range: Range<usize>,
) -> Result<f64> {
    if d.len() != estimate.len() || d.is_empty() {
        return Err(Error::Metric(format!(
            "{} reference and {} estimated channels",
            d.len(),
            estimate.len()
        )));
    }
    if range.is_empty() {
        return Err(Error::Metric("empty ERLE range".into()));
    }
    let mut total = 0.0;
    for (dq, yq) in d.iter().zip(estimate) {
        let (dq, yq) = (dq.as_ref(), yq.as_ref());
        if range.end > dq.len() || range.end > yq.len() {
            return Err(Error::Metric(format!(
                "range {range:?} exceeds a channel of {} samples",
                dq.len().min(yq.len())
            )));
        }
        for n in range.clone() {
            let dv = dq[n].to_f64_lossy();
            let e = dv - yq[n].to_f64_lossy();
            total += dv * dv / (e * e).max(ERLE_FLOOR);
        }
    }
    Ok(total / (range.len() * d.len()) as f64)
}

/// Mean over all channel pairs of `‖h - ĥ‖² / ‖h‖²`, linear.
pub fn system_mismatch<T: Real>(truth: &FirStack<T>, estimate: &FirStack<T>) -> Result<f64> {
    let dims = truth.dims();
    if estimate.dims() != dims {
        return Err(Error::Metric(format!(
            "truth {dims:?} and estimate {:?} differ in shape",
            estimate.dims()
        )));
    }
    let mut total = 0.0;
    for p in 0..dims.inputs {
        for q in 0..dims.outputs {
            let (mut num, mut den) = (0.0, 0.0);
            for l in 0..dims.taps {
                let i = dims.index(p, l, q);
                let h = truth.as_slice()[i].to_f64_lossy();
                let e = h - estimate.as_slice()[i].to_f64_lossy();
                num += e * e;
                den += h * h;
            }
            if den == 0.0 {
                return Err(Error::Metric(format!(
                    "true channel ({p}, {q}) is all zero"
                )));
            }
            total += num / den;
        }
    }
    Ok(total / dims.pairs() as f64)
}

/// Mean of a per-block mismatch trace over `range`.
pub fn mismatch_average(trace: &[f64], range: Range<usize>) -> Result<f64> {
    if range.is_empty() || range.end > trace.len() {
        return Err(Error::Metric(format!(
            "block range {range:?} invalid for {} blocks",
            trace.len()
        )));
    }
    Ok(trace[range.clone()].iter().sum::<f64>() / range.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpud_core::seed;
    use lpud_core::signal::FirDims;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, rng: &mut seed::Rng) -> Vec<f64> {
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn zero_estimate_erle_is_unity() {
        let mut rng = seed::rng(1);
        let d = vec![gaussian(500, &mut rng), gaussian(500, &mut rng)];
        let zero = vec![vec![0.0; 500]; 2];
        let v = erle::<f64, _, _>(&d, &zero, 0..500).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(to_db(v), 0.0);
    }

    #[test]
    fn perfect_estimate_hits_the_cap() {
        let mut rng = seed::rng(2);
        let d = vec![gaussian(100, &mut rng)];
        let v = erle::<f64, _, _>(&d, &d, 0..100).unwrap();
        assert_eq!(to_db(v), DB_CAP);
    }

    #[test]
    fn erle_matches_scalar_loop() {
        let mut rng = seed::rng(3);
        let d = vec![gaussian(300, &mut rng), gaussian(300, &mut rng)];
        let e = vec![gaussian(300, &mut rng), gaussian(300, &mut rng)];
        let est: Vec<Vec<f64>> = d
            .iter()
            .zip(&e)
            .map(|(dq, eq)| dq.iter().zip(eq).map(|(a, b)| a + 0.1 * b).collect())
            .collect();
        let (n1, n2) = (40, 260);
        let mut acc = 0.0;
        let mut count = 0;
        for n in n1..n2 {
            for q in 0..2 {
                let r = d[q][n] - est[q][n];
                acc += d[q][n] * d[q][n] / (r * r).max(1e-12);
                count += 1;
            }
        }
        let v = erle::<f64, _, _>(&d, &est, n1..n2).unwrap();
        assert!((v - acc / count as f64).abs() <= 1e-10 * v.abs());
    }

    #[test]
    fn erle_errors() {
        let d = vec![vec![1.0; 10]];
        assert!(erle::<f64, _, _>(&d, &d, 5..5).is_err());
        assert!(erle::<f64, _, _>(&d, &d, 0..11).is_err());
        assert!(erle::<f64, _, _>(&d, &[vec![1.0; 10], vec![1.0; 10]], 0..10).is_err());
    }

    #[test]
    fn mismatch_reference_values() {
        let mut rng = seed::rng(4);
        let dims = FirDims::new(1, 8, 2).unwrap();
        let h = FirStack::from_vec(dims, gaussian(16, &mut rng)).unwrap();
        let zero = FirStack::zeros(dims);
        assert!((system_mismatch(&h, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(system_mismatch(&h, &h).unwrap(), 0.0);
        assert_eq!(to_db(0.0), -DB_CAP);
    }

    #[test]
    fn mismatch_matches_scalar_loop() {
        let mut rng = seed::rng(5);
        let dims = FirDims::new(1, 8, 2).unwrap();
        let h = FirStack::from_vec(dims, gaussian(16, &mut rng)).unwrap();
        let g = FirStack::from_vec(dims, gaussian(16, &mut rng)).unwrap();
        let mut expected = 0.0;
        for q in 0..2 {
            let ht = h.taps(0, q);
            let gt = g.taps(0, q);
            let num: f64 = ht.iter().zip(&gt).map(|(a, b)| (a - b) * (a - b)).sum();
            let den: f64 = ht.iter().map(|a| a * a).sum();
            expected += num / den / 2.0;
        }
        assert!((system_mismatch(&h, &g).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn mismatch_errors() {
        let dims = FirDims::new(1, 4, 2).unwrap();
        let mut h = FirStack::<f64>::zeros(dims);
        h.set_taps(0, 0, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            system_mismatch(&h, &FirStack::zeros(dims)),
            Err(Error::Metric(_))
        ));
        let other = FirStack::<f64>::zeros(FirDims::new(1, 4, 1).unwrap());
        assert!(system_mismatch(&h, &other).is_err());
        assert!(mismatch_average(&[1.0, 2.0], 1..3).is_err());
        assert_eq!(mismatch_average(&[1.0, 2.0, 4.0], 1..3).unwrap(), 3.0);
    }

    #[test]
    fn halves_partition() {
        for n in [2, 3, 156, 157] {
            let [a, b] = halves(n);
            assert_eq!(a.start, 0);
            assert_eq!(a.end, b.start);
            assert_eq!(b.end, n);
            assert!(b.len() - a.len() <= 1);
        }
    }
}
