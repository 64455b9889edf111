//! Shape-tagged contiguous buffer of 64-bit floats, row-major.
//!
//! The sole numeric container for batches, weights, and gradients. Matrix
//! products are delegated to `matrixmultiply::dgemm`, which is
//! single-threaded and bitwise deterministic for fixed inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("shape {shape:?} implies {expected} elements, buffer has {got}")]
    LengthMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dim(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, ShapeError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(ShapeError::LengthMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    /// Internal constructor for buffers whose length is known to match.
    pub(crate) fn from_vec_unchecked(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Extent pair of a rank-2 tensor.
    pub fn dims2(&self) -> Result<(usize, usize), ShapeError> {
        match self.shape.as_slice() {
            &[r, c] => Ok((r, c)),
            s => Err(ShapeError::Dim(format!(
                "expected rank-2 tensor, got shape {s:?}"
            ))),
        }
    }

    /// Row view of a rank-2 tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }

    /// c = a . b for rank-2 tensors, [m x k] . [k x n] -> [m x n].
    pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, ShapeError> {
        let (m, ka) = a.dims2()?;
        let (kb, n) = b.dims2()?;
        if ka != kb {
            return Err(ShapeError::Dim(format!(
                "matmul inner dimensions differ: {m}x{ka} . {kb}x{n}"
            )));
        }
        let mut c = Tensor::zeros(vec![m, n]);
        gemm(
            m,
            ka,
            n,
            a.data(),
            [ka as isize, 1],
            b.data(),
            [n as isize, 1],
            c.data_mut(),
        );
        Ok(c)
    }

    /// c = a . b^T, [m x k] . [n x k]^T -> [m x n].
    pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor, ShapeError> {
        let (m, ka) = a.dims2()?;
        let (n, kb) = b.dims2()?;
        if ka != kb {
            return Err(ShapeError::Dim(format!(
                "matmul_nt inner dimensions differ: {m}x{ka} . ({n}x{kb})^T"
            )));
        }
        let mut c = Tensor::zeros(vec![m, n]);
        gemm(
            m,
            ka,
            n,
            a.data(),
            [ka as isize, 1],
            b.data(),
            [1, kb as isize],
            c.data_mut(),
        );
        Ok(c)
    }

    /// c = a^T . b, ([k x m])^T . [k x n] -> [m x n].
    pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor, ShapeError> {
        let (ka, m) = a.dims2()?;
        let (kb, n) = b.dims2()?;
        if ka != kb {
            return Err(ShapeError::Dim(format!(
                "matmul_tn inner dimensions differ: ({ka}x{m})^T . {kb}x{n}"
            )));
        }
        let mut c = Tensor::zeros(vec![m, n]);
        gemm(
            m,
            ka,
            n,
            a.data(),
            [1, m as isize],
            b.data(),
            [n as isize, 1],
            c.data_mut(),
        );
        Ok(c)
    }
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    sa: [isize; 2],
    b: &[f64],
    sb: [isize; 2],
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(0.0);
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa[0],
            sa[1],
            b.as_ptr(),
            sb[0],
            sb[1],
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
