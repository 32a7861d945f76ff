use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::scalar::Real;

/// Shape of a multi-input multi-output FIR system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FirDims {
    /// Number of input signals (P).
    pub inputs: usize,
    /// Taps per filter (L).
    pub taps: usize,
    /// Number of output signals (Q).
    pub outputs: usize,
}

impl FirDims {
    pub fn new(inputs: usize, taps: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || taps == 0 || outputs == 0 {
            return Err(Error::Config(format!(
                "FIR dimensions must be positive, got P={inputs}, L={taps}, Q={outputs}"
            )));
        }
        Ok(Self {
            inputs,
            taps,
            outputs,
        })
    }

    /// Parameter-space dimension R = P·L·Q.
    #[inline]
    pub fn len(&self) -> usize {
        self.inputs * self.taps * self.outputs
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of (input `p`, tap `l`, output `q`) in the stacked vector.
    ///
    /// The stack is `vec(Hᵀ)` for the `PL×Q` transmission matrix `H`, so the
    /// output index runs fastest, then the tap, then the input.
    #[inline]
    pub fn index(&self, p: usize, l: usize, q: usize) -> usize {
        q + self.outputs * (l + self.taps * p)
    }

    /// Number of (input, output) filter pairs.
    #[inline]
    pub fn pairs(&self) -> usize {
        self.inputs * self.outputs
    }
}

/// The stacked coefficient vector of a MIMO FIR system.
#[derive(Debug, Clone, PartialEq)]
pub struct FirStack<T> {
    dims: FirDims,
    coeffs: Vec<T>,
}

impl<T> AsRef<[T]> for FirStack<T> {
    fn as_ref(&self) -> &[T] {
        &self.coeffs
    }
}

impl<T: Real> FirStack<T> {
    pub fn zeros(dims: FirDims) -> Self {
        Self {
            dims,
            coeffs: vec![T::zero(); dims.len()],
        }
    }

    pub fn from_vec(dims: FirDims, coeffs: Vec<T>) -> Result<Self> {
        ensure_len("FirStack coefficients", dims.len(), coeffs.len())?;
        Ok(Self { dims, coeffs })
    }

    /// Builds a stack from per-pair impulse responses, `filters[p][q]`.
    /// Responses shorter than `taps` are zero-extended; longer ones are an error.
    pub fn from_filters(taps: usize, filters: &[Vec<Vec<T>>]) -> Result<Self> {
        let inputs = filters.len();
        let outputs = filters.first().map_or(0, Vec::len);
        let dims = FirDims::new(inputs, taps, outputs)?;
        let mut stack = Self::zeros(dims);
        for (p, row) in filters.iter().enumerate() {
            ensure_len("filters per input", outputs, row.len())?;
            for (q, h) in row.iter().enumerate() {
                if h.len() > taps {
                    return Err(Error::dim("filter length", taps, h.len()));
                }
                for (l, &c) in h.iter().enumerate() {
                    stack.coeffs[dims.index(p, l, q)] = c;
                }
            }
        }
        Ok(stack)
    }

    #[inline]
    pub fn dims(&self) -> FirDims {
        self.dims
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<T> {
        self.coeffs
    }

    /// Impulse response from input `p` to output `q`.
    pub fn taps(&self, p: usize, q: usize) -> Vec<T> {
        (0..self.dims.taps)
            .map(|l| self.coeffs[self.dims.index(p, l, q)])
            .collect()
    }

    pub fn set_taps(&mut self, p: usize, q: usize, taps: &[T]) -> Result<()> {
        ensure_len("FirStack::set_taps", self.dims.taps, taps.len())?;
        for (l, &c) in taps.iter().enumerate() {
            let k = self.dims.index(p, l, q);
            self.coeffs[k] = c;
        }
        Ok(())
    }

    /// Keeps the first `taps` coefficients of every filter.
    pub fn truncated(&self, taps: usize) -> Result<Self> {
        if taps == 0 || taps > self.dims.taps {
            return Err(Error::Config(format!(
                "cannot truncate {}-tap filters to {taps} taps",
                self.dims.taps
            )));
        }
        let dims = FirDims { taps, ..self.dims };
        let mut out = Self::zeros(dims);
        for p in 0..dims.inputs {
            for l in 0..taps {
                for q in 0..dims.outputs {
                    out.coeffs[dims.index(p, l, q)] = self.coeffs[self.dims.index(p, l, q)];
                }
            }
        }
        Ok(out)
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: T, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::dim(
                "FirStack::add_scaled",
                self.dims.len(),
                other.dims.len(),
            ));
        }
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + alpha * b;
        }
        Ok(())
    }

    /// Evaluates `(xᵀ ⊗ I_Q) h̃` for a stacked regressor `x` of length `P·L`.
    pub fn kron_apply(&self, x: &[T]) -> Result<Vec<T>> {
        let d = self.dims;
        ensure_len("regressor", d.inputs * d.taps, x.len())?;
        let mut y = vec![T::zero(); d.outputs];
        for (k, &xk) in x.iter().enumerate() {
            let row = &self.coeffs[k * d.outputs..(k + 1) * d.outputs];
            for (yq, &h) in y.iter_mut().zip(row) {
                *yq = *yq + xk * h;
            }
        }
        Ok(y)
    }
}

/// Stacks a `PL×Q` transmission matrix into `vec(Hᵀ)`.
pub fn vec_fir<T: Real>(h: &Array2<T>, dims: FirDims) -> Result<FirStack<T>> {
    ensure_len(
        "transmission matrix rows",
        dims.inputs * dims.taps,
        h.nrows(),
    )?;
    ensure_len("transmission matrix columns", dims.outputs, h.ncols())?;
    // Row-major iteration over H is exactly column-major iteration over Hᵀ.
    let coeffs = h.iter().copied().collect();
    FirStack::from_vec(dims, coeffs)
}

/// Inverse of [`vec_fir`].
pub fn unvec_fir<T: Real>(stack: &FirStack<T>) -> Array2<T> {
    let d = stack.dims();
    Array2::from_shape_vec((d.inputs * d.taps, d.outputs), stack.as_slice().to_vec())
        .expect("stack length equals P·L·Q")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn scalar_stack() {
        let d = FirDims::new(1, 1, 1).unwrap();
        let s = vec_fir(&array![[3.0f64]], d).unwrap();
        assert_eq!(s.as_slice(), &[3.0]);
    }

    #[test]
    fn two_tap_two_output_layout() {
        let (a, b, c, dd) = (1.0, 2.0, 3.0, 4.0);
        let d = FirDims::new(1, 2, 2).unwrap();
        let s = vec_fir(&array![[a, b], [c, dd]], d).unwrap();
        assert_eq!(s.as_slice(), &[a, b, c, dd]);
        assert_eq!(s.taps(0, 0), vec![a, c]);
        assert_eq!(s.taps(0, 1), vec![b, dd]);
    }

    #[test]
    fn rejects_wrong_shape() {
        let d = FirDims::new(1, 2, 2).unwrap();
        assert!(matches!(
            vec_fir(&array![[1.0f64, 2.0, 3.0]], d),
            Err(Error::Dimension { .. })
        ));
        assert!(FirStack::<f64>::from_vec(d, vec![0.0; 3]).is_err());
    }

    #[test]
    fn truncation_keeps_leading_taps() {
        let s = FirStack::from_filters(
            4,
            &[vec![vec![1.0, 2.0, 3.0, 4.0], vec![5.0, 6.0, 7.0, 8.0]]],
        )
        .unwrap();
        let t = s.truncated(2).unwrap();
        assert_eq!(t.taps(0, 0), vec![1.0, 2.0]);
        assert_eq!(t.taps(0, 1), vec![5.0, 6.0]);
    }

    fn stack_strategy() -> impl Strategy<Value = (FirDims, Vec<f64>)> {
        (1usize..4, 1usize..6, 1usize..4).prop_flat_map(|(p, l, q)| {
            let d = FirDims::new(p, l, q).unwrap();
            (Just(d), prop::collection::vec(-10.0f64..10.0, d.len()))
        })
    }

    proptest! {
        #[test]
        fn vec_unvec_round_trip((d, c) in stack_strategy()) {
            let s = FirStack::from_vec(d, c).unwrap();
            let back = vec_fir(&unvec_fir(&s), d).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn kronecker_consistency((d, c) in stack_strategy(), seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed);
            let x: Vec<f64> = (0..d.inputs * d.taps).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = FirStack::from_vec(d, c).unwrap();
            let h = unvec_fir(&s);
            let direct = h.t().dot(&ndarray::Array1::from(x.clone()));
            let via_layout = s.kron_apply(&x).unwrap();
            for (a, b) in direct.iter().zip(&via_layout) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
