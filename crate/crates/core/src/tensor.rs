/*
Copyright 2026 The tenrec Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! Dense N-order tensors and their mode-n unfoldings.
//!
//! Storage is first-index-fastest: entry `(i_1, ..., i_N)` (0-based) lives at
//! `i_1 + I_1 * (i_2 + I_2 * (i_3 + ...))`. The mode-n unfolding is the
//! `I_n x prod_{m != n} I_m` matrix whose column for a given multi-index is
//! `sum_{m != n} i_m * prod_{l < m, l != n} I_l`, i.e. the remaining indices
//! keep their relative order with the lowest one varying fastest. With this
//! layout the mode-0 unfolding is the raw buffer reinterpreted column-major.
//!
//! Modes are 0-based throughout the API.

use crate::error::{Error, Result};

/// Column-major dense matrix. Unfoldings and all factor matrices use it.
pub type Matrix = nalgebra::DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Frobenius,
    L1,
    LInf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::arg("tensor order must be at least 1"));
    }
    if let Some(n) = dims.iter().position(|&d| d == 0) {
        return Err(Error::arg(format!("dimension of mode {n} is zero")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::arg("tensor size overflows usize"))
}

impl DenseTensor {
    /// Wraps `data` (first index fastest). Rejects empty/zero dims, length
    /// mismatches and non-finite entries.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_dims(&dims)?;
        if data.len() != len {
            return Err(Error::arg(format!(
                "data length {} does not match dims {:?} (expected {len})",
                data.len(),
                dims
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::arg(format!("non-finite entry at linear index {i}")));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_dims(dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            for (i, &d) in idx.iter_mut().zip(dims) {
                *i += 1;
                if *i < d {
                    break;
                }
                *i = 0;
            }
        }
        Self::new(dims.to_vec(), data)
    }

    /// Internal constructor for buffers produced from already-validated dims.
    pub(crate) fn from_raw(dims: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { dims, data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.dims.len(), "index order mismatch");
        let mut lin = 0;
        for (&i, &d) in idx.iter().zip(&self.dims).rev() {
            assert!(i < d, "index {i} out of range for dimension {d}");
            lin = lin * d + i;
        }
        lin
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.dims.len() {
            return Err(Error::arg(format!(
                "mode {mode} out of range for an order-{} tensor",
                self.dims.len()
            )));
        }
        Ok(())
    }

    /// Mode-`mode` unfolding, `I_mode x prod_{m != mode} I_m`.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        self.check_mode(mode)?;
        let (left, rows, right) = split_dims(&self.dims, mode);
        let cols = left * right;
        if mode == 0 {
            return Ok(Matrix::from_vec(rows, cols, self.data.clone()));
        }
        let mut out = vec![0.0; self.data.len()];
        for b in 0..right {
            for i in 0..rows {
                let src = &self.data[left * (i + rows * b)..left * (i + rows * b + 1)];
                for (a, &x) in src.iter().enumerate() {
                    out[i + rows * (a + left * b)] = x;
                }
            }
        }
        Ok(Matrix::from_vec(rows, cols, out))
    }

    /// Inverse of [`DenseTensor::unfold`]: returns the tensor with dims `dims`
    /// whose mode-`mode` unfolding is `m`.
    pub fn fold(m: &Matrix, mode: usize, dims: &[usize]) -> Result<Self> {
        let len = check_dims(dims)?;
        if mode >= dims.len() {
            return Err(Error::arg(format!(
                "mode {mode} out of range for an order-{} tensor",
                dims.len()
            )));
        }
        let (left, rows, right) = split_dims(dims, mode);
        if m.nrows() != rows || m.ncols() != left * right {
            return Err(Error::arg(format!(
                "cannot fold a {}x{} matrix along mode {mode} into dims {:?} (expected {}x{})",
                m.nrows(),
                m.ncols(),
                dims,
                rows,
                left * right
            )));
        }
        let src = m.as_slice();
        if mode == 0 {
            return Ok(Self::from_raw(dims.to_vec(), src.to_vec()));
        }
        let mut out = vec![0.0; len];
        for b in 0..right {
            for i in 0..rows {
                let dst = &mut out[left * (i + rows * b)..left * (i + rows * b + 1)];
                for (a, y) in dst.iter_mut().enumerate() {
                    *y = src[i + rows * (a + left * b)];
                }
            }
        }
        Ok(Self::from_raw(dims.to_vec(), out))
    }

    /// Mode-n product `t x_n m`: replaces `I_n` with `m.nrows()`.
    pub fn mode_product(&self, m: &Matrix, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if m.ncols() != self.dims[mode] {
            return Err(Error::arg(format!(
                "mode-{mode} product needs a matrix with {} columns, got {}x{}",
                self.dims[mode],
                m.nrows(),
                m.ncols()
            )));
        }
        let mut dims = self.dims.clone();
        dims[mode] = m.nrows();
        let prod = m * self.unfold(mode)?;
        Self::fold(&prod, mode, &dims)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        match kind {
            NormKind::Frobenius => self.data.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormKind::L1 => self.data.iter().map(|x| x.abs()).sum(),
            NormKind::LInf => self.data.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.norm(NormKind::Frobenius)
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_dims(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::arg(format!(
                "dimension mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.dims.clone(), self.data.iter().map(|&x| f(x)).collect())
    }

    /// Elementwise combination of two equally-shaped tensors.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_dims(other)?;
        Ok(Self::from_raw(
            self.dims.clone(),
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| s * x)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        self.check_same_dims(other)?;
        for (y, &x) in self.data.iter_mut().zip(&other.data) {
            *y += alpha * x;
        }
        Ok(())
    }
}

/// `(prod of dims before mode, dims[mode], prod of dims after mode)`
pub(crate) fn split_dims(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = dims[..mode].iter().product();
    let right = dims[mode + 1..].iter().product();
    (left, dims[mode], right)
}

/// Frobenius norm of a matrix, summed in storage order.
pub fn matrix_frobenius(m: &Matrix) -> f64 {
    m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counting(dims: &[usize]) -> DenseTensor {
        let n: usize = dims.iter().product();
        DenseTensor::new(dims.to_vec(), (0..n).map(|i| i as f64).collect()).unwrap()
    }

    /// Brute-force index map: row = i_mode, col = sum_{m != mode} i_m * prod_{l<m, l!=mode} I_l.
    fn unfold_oracle(t: &DenseTensor, mode: usize) -> Matrix {
        let dims = t.dims().to_vec();
        let cols: usize = dims
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != mode)
            .map(|(_, &d)| d)
            .product();
        let mut out = Matrix::zeros(dims[mode], cols);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..t.len() {
            let mut col = 0;
            let mut stride = 1;
            for m in 0..dims.len() {
                if m != mode {
                    col += idx[m] * stride;
                    stride *= dims[m];
                }
            }
            out[(idx[mode], col)] = t.get(&idx);
            for (i, &d) in idx.iter_mut().zip(&dims) {
                *i += 1;
                if *i < d {
                    break;
                }
                *i = 0;
            }
        }
        out
    }

    #[test]
    fn unfold_mode0_of_2x2x2_matches_index_map() {
        // t[i,j,k] = i + 2j + 4k (0-based)
        let t = DenseTensor::from_fn(&[2, 2, 2], |ix| (ix[0] + 2 * ix[1] + 4 * ix[2]) as f64)
            .unwrap();
        let m = t.unfold(0).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (2, 4));
        for i in 0..2 {
            let row: Vec<f64> = (0..4).map(|c| m[(i, c)]).collect();
            let f = i as f64;
            assert_eq!(row, vec![f, f + 2.0, f + 4.0, f + 6.0]);
        }
        assert_eq!(m, unfold_oracle(&t, 0));
        let back = DenseTensor::fold(&m, 0, &[2, 2, 2]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn unfold_matches_oracle_every_mode() {
        for dims in [vec![3, 4, 2], vec![2, 3, 4, 5], vec![5], vec![1, 4, 1, 3]] {
            let t = counting(&dims);
            for mode in 0..dims.len() {
                let m = t.unfold(mode).unwrap();
                assert_eq!(m, unfold_oracle(&t, mode), "dims {dims:?} mode {mode}");
                assert_eq!(DenseTensor::fold(&m, mode, &dims).unwrap(), t);
            }
        }
    }

    #[test]
    fn degenerate_dims_unfold_to_column() {
        let t = DenseTensor::new(vec![3, 1, 1], vec![1.0, 2.0, 3.0]).unwrap();
        let m = t.unfold(0).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (3, 1));
        assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn fold_zero_matrix_is_zero_tensor() {
        let z = DenseTensor::fold(&Matrix::zeros(3, 8), 1, &[2, 3, 4]).unwrap();
        assert!(z.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bad_mode_and_shape_are_rejected() {
        let t = counting(&[2, 3]);
        assert!(matches!(t.unfold(2), Err(Error::Argument(_))));
        assert!(DenseTensor::fold(&Matrix::zeros(3, 3), 0, &[2, 3]).is_err());
        assert!(t.mode_product(&Matrix::zeros(4, 4), 0).is_err());
    }

    #[test]
    fn construction_rejects_invalid() {
        assert!(DenseTensor::new(vec![], vec![]).is_err());
        assert!(DenseTensor::new(vec![2, 0], vec![]).is_err());
        assert!(DenseTensor::new(vec![2], vec![1.0]).is_err());
        assert!(DenseTensor::new(vec![2], vec![1.0, f64::NAN]).is_err());
        assert!(DenseTensor::new(vec![1], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn mode_product_identity_and_scaling() {
        let t = counting(&[3, 4, 2]);
        for mode in 0..3 {
            let eye = Matrix::identity(t.dims()[mode], t.dims()[mode]);
            assert_eq!(t.mode_product(&eye, mode).unwrap(), t);
            let twice = t.mode_product(&(eye * 2.0), mode).unwrap();
            assert_eq!(twice, t.scale(2.0));
        }
    }

    #[test]
    fn mode_product_matches_triple_loop() {
        let dims = [3usize, 4, 2];
        let t = DenseTensor::from_fn(&dims, |ix| {
            ((ix[0] * 7 + ix[1] * 3 + ix[2] * 11) % 13) as f64 * 0.37 - 1.5
        })
        .unwrap();
        for mode in 0..3 {
            let m = Matrix::from_fn(5, dims[mode], |r, c| ((r * 5 + c * 3) % 7) as f64 - 2.5);
            let got = t.mode_product(&m, mode).unwrap();
            let mut new_dims = dims.to_vec();
            new_dims[mode] = 5;
            let want = DenseTensor::from_fn(&new_dims, |ix| {
                let mut src = ix.to_vec();
                (0..dims[mode])
                    .map(|k| {
                        src[mode] = k;
                        t.get(&src) * m[(ix[mode], k)]
                    })
                    .sum()
            })
            .unwrap();
            for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn norms() {
        let z = DenseTensor::zeros(&[2, 2, 2]).unwrap();
        for k in [NormKind::Frobenius, NormKind::L1, NormKind::LInf] {
            assert_eq!(z.norm(k), 0.0);
        }
        let ones = z.map(|_| 1.0);
        assert_eq!(ones.norm(NormKind::Frobenius), 8f64.sqrt());
        assert_eq!(ones.norm(NormKind::L1), 8.0);
        assert_eq!(ones.norm(NormKind::LInf), 1.0);

        let t = DenseTensor::from_fn(&[4, 3, 5], |ix| {
            (ix[0] as f64 - 1.3) * (ix[1] as f64 + 0.2) - ix[2] as f64 * 0.7
        })
        .unwrap();
        let direct: f64 = t.as_slice().iter().map(|x| x * x).sum();
        let f = t.frobenius();
        assert!((f * f - direct).abs() <= 1e-12 * direct);
        assert!((f * f - t.inner(&t).unwrap()).abs() <= 1e-12 * direct);
    }

    #[test]
    fn linear_index_is_first_index_fastest() {
        let t = counting(&[2, 3, 4]);
        assert_eq!(t.get(&[1, 0, 0]), 1.0);
        assert_eq!(t.get(&[0, 1, 0]), 2.0);
        assert_eq!(t.get(&[0, 0, 1]), 6.0);
        assert_eq!(t.get(&[1, 2, 3]), 23.0);
    }
}
