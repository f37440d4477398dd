//! Dense tensors, dense matrices, and the multilinear primitives built on them.
//!
//! Storage is first-index-fastest for both tensors and matrices, so a matrix
//! is column-major and the mode-0 unfolding of a tensor is a plain reshape.
//! Modes are zero-based throughout the crate.
//!
//! Unfolding follows the Kolda-Bader column order: the column of entry
//! `(i_0, .., i_{N-1})` in the mode-`n` unfolding is `sum_{k != n} i_k * J_k`
//! with `J_k = prod_{m < k, m != n} I_m`.

use crate::error::{Error, Result};

/// Nonzero threshold used by [`DenseTensor::norms`].
pub const L0_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
    }

    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "matrix extents must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows. Mostly useful in tests.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidShape("ragged rows".into()));
        }
        let mut data = vec![0.0; r * c];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                data[i + j * r] = v;
            }
        }
        Self::from_col_major(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[i + j * rows] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major backing storage.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r + c * self.rows]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r + c * self.rows] = v;
    }

    #[inline]
    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other.data[k + j * other.rows];
                if b == 0.0 {
                    continue;
                }
                let src = &self.data[k * self.rows..(k + 1) * self.rows];
                for (d, &a) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix::from_fn(self.cols, other.cols, |i, j| {
            dot(self.column(i), other.column(j))
        }))
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix> {
        self.matmul(&other.transpose())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Adds `other` into `self` in place.
    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| c * x).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// Trace inner product `<self, other>`.
    pub fn inner(&self, other: &Matrix) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(dot(&self.data, &other.data))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `‖selfᵀ self − I‖_F`: distance of the columns from orthonormality.
    pub fn orthonormality_error(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.cols {
            for j in 0..self.cols {
                let g = dot(self.column(i), self.column(j)) - if i == j { 1.0 } else { 0.0 };
                acc += g * g;
            }
        }
        acc.sqrt()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frobenius norm, ℓ1 norm and nonzero count of a tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub l1: f64,
    pub l0: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        })
    }

    /// Fills a tensor from a function of the multi-index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let mut idx = vec![0usize; shape.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            for (i, &e) in idx.iter_mut().zip(shape) {
                *i += 1;
                if *i < e {
                    break;
                }
                *i = 0;
            }
        }
        Ok(t)
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index order mismatch");
        let mut off = 0;
        let mut stride = 1;
        for (&i, &e) in idx.iter().zip(&self.shape) {
            assert!(i < e, "index {i} out of bounds for extent {e}");
            off += i * stride;
            stride *= e;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    /// Splits the shape around `mode` into (product before, extent, product after).
    fn split(&self, mode: usize) -> Result<(usize, usize, usize)> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        let left = self.shape[..mode].iter().product();
        let right = self.shape[mode + 1..].iter().product();
        Ok((left, self.shape[mode], right))
    }

    /// Mode-`mode` unfolding, an `I_mode × prod_{k != mode} I_k` matrix.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        let (left, mid, right) = self.split(mode)?;
        let cols = left * right;
        let mut out = vec![0.0; mid * cols];
        for r in 0..right {
            for i in 0..mid {
                let src = &self.data[left * (i + mid * r)..left * (i + mid * r) + left];
                for (l, &v) in src.iter().enumerate() {
                    out[i + mid * (l + left * r)] = v;
                }
            }
        }
        Matrix::from_col_major(mid, cols, out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(m: &Matrix, mode: usize, shape: &[usize]) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        let (left, mid, right) = t.split(mode)?;
        if m.rows() != mid || m.cols() != left * right {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot fold into shape {shape:?} along mode {mode}",
                m.rows(),
                m.cols()
            )));
        }
        let src = m.as_slice();
        for r in 0..right {
            for i in 0..mid {
                let dst = &mut t.data[left * (i + mid * r)..left * (i + mid * r) + left];
                for (l, d) in dst.iter_mut().enumerate() {
                    *d = src[i + mid * (l + left * r)];
                }
            }
        }
        Ok(t)
    }

    /// Mode-`mode` product `self ×_mode u`; `u` must have `I_mode` columns.
    pub fn mode_product(&self, u: &Matrix, mode: usize) -> Result<Self> {
        let (left, mid, right) = self.split(mode)?;
        if u.cols() != mid {
            return Err(Error::DimensionMismatch(format!(
                "mode-{mode} product needs {mid} columns, matrix is {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        let out_mid = u.rows();
        let mut shape = self.shape.clone();
        shape[mode] = out_mid;
        let mut out = vec![0.0; left * out_mid * right];
        for r in 0..right {
            for i in 0..mid {
                let src = &self.data[left * (i + mid * r)..left * (i + mid * r) + left];
                for j in 0..out_mid {
                    let c = u.get(j, i);
                    if c == 0.0 {
                        continue;
                    }
                    let base = left * (j + out_mid * r);
                    for (d, &s) in out[base..base + left].iter_mut().zip(src) {
                        *d += c * s;
                    }
                }
            }
        }
        Ok(Self { shape, data: out })
    }

    /// Mode-`mode` product with the transpose, `self ×_mode uᵀ`.
    pub fn mode_product_t(&self, u: &Matrix, mode: usize) -> Result<Self> {
        let (left, mid, right) = self.split(mode)?;
        if u.rows() != mid {
            return Err(Error::DimensionMismatch(format!(
                "transposed mode-{mode} product needs {mid} rows, matrix is {}x{}",
                u.rows(),
                u.cols()
            )));
        }
        let out_mid = u.cols();
        let mut shape = self.shape.clone();
        shape[mode] = out_mid;
        let mut out = vec![0.0; left * out_mid * right];
        for r in 0..right {
            for j in 0..out_mid {
                let col = u.column(j);
                let base = left * (j + out_mid * r);
                for (i, &c) in col.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let src = &self.data[left * (i + mid * r)..left * (i + mid * r) + left];
                    for (d, &s) in out[base..base + left].iter_mut().zip(src) {
                        *d += c * s;
                    }
                }
            }
        }
        Ok(Self { shape, data: out })
    }

    /// Sum of entrywise products.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norms(&self) -> Norms {
        Norms {
            frobenius: self.frobenius_norm(),
            l1: self.data.iter().map(|x| x.abs()).sum(),
            l0: self.data.iter().filter(|x| x.abs() > L0_TOLERANCE).count(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    /// `‖self − other‖_F²`.
    pub fn distance_sq(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.check_same_shape(other)?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> DenseTensor {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| c * x).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &DenseTensor) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shape {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(())
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(Error::InvalidShape(
            "tensor order must be at least 1".into(),
        ));
    }
    if shape.contains(&0) {
        return Err(Error::InvalidShape(format!(
            "every extent must be positive, got {shape:?}"
        )));
    }
    Ok(())
}

/// `M` equally shaped order-3 samples, logically the stacked order-4 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    shape: [usize; 3],
    samples: Vec<DenseTensor>,
}

impl SampleSet {
    pub fn new(samples: Vec<DenseTensor>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidShape("sample set must not be empty".into()))?;
        if first.order() != 3 {
            return Err(Error::InvalidShape(format!(
                "samples must be order-3 tensors, got order {}",
                first.order()
            )));
        }
        let shape = [first.shape()[0], first.shape()[1], first.shape()[2]];
        if let Some((i, bad)) = samples.iter().enumerate().find(|(_, s)| s.shape() != shape) {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} has shape {:?}, expected {shape:?}",
                bad.shape()
            )));
        }
        Ok(Self { shape, samples })
    }

    #[inline]
    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &DenseTensor {
        &self.samples[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DenseTensor> {
        self.samples.iter()
    }

    pub fn as_slice(&self) -> &[DenseTensor] {
        &self.samples
    }

    /// Frobenius norm of the stacked tensor.
    pub fn frobenius_norm(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.inner(s).unwrap_or(0.0))
            .sum::<f64>()
            .sqrt()
    }

    /// Stacks the samples into an order-4 tensor `I_1 × I_2 × I_3 × M`.
    pub fn stacked(&self) -> DenseTensor {
        let mut data = Vec::with_capacity(self.samples.len() * self.samples[0].len());
        for s in &self.samples {
            data.extend_from_slice(s.as_slice());
        }
        let mut shape = self.shape.to_vec();
        shape.push(self.samples.len());
        DenseTensor { shape, data }
    }
}

impl<'a> IntoIterator for &'a SampleSet {
    type Item = &'a DenseTensor;
    type IntoIter = std::slice::Iter<'a, DenseTensor>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(shape: &[usize]) -> DenseTensor {
        let n: usize = shape.iter().product();
        DenseTensor::new(shape.to_vec(), (1..=n).map(|x| x as f64).collect()).unwrap()
    }

    // Entry formula evaluated by brute force over multi-indices.
    fn unfold_by_enumeration(t: &DenseTensor, mode: usize) -> Matrix {
        let shape = t.shape().to_vec();
        let cols: usize = shape
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != mode)
            .map(|(_, &e)| e)
            .product();
        let mut m = Matrix::zeros(shape[mode], cols);
        let _ = DenseTensor::from_fn(&shape, |idx| {
            let mut col = 0;
            for (k, &ik) in idx.iter().enumerate() {
                if k == mode {
                    continue;
                }
                let stride: usize = (0..k).filter(|&m| m != mode).map(|m| shape[m]).product();
                col += ik * stride;
            }
            m.set(idx[mode], col, t.get(idx));
            0.0
        });
        m
    }

    #[test]
    fn unfold_2x2x2_mode0() {
        let t = seq(&[2, 2, 2]);
        let m = t.unfold(0).unwrap();
        let expected =
            Matrix::from_rows(&[vec![1.0, 3.0, 5.0, 7.0], vec![2.0, 4.0, 6.0, 8.0]]).unwrap();
        assert_eq!(m, expected);
        assert_eq!(m, unfold_by_enumeration(&t, 0));
    }

    #[test]
    fn unfold_matches_enumeration_every_mode() {
        let t = seq(&[3, 4, 2, 2]);
        for mode in 0..4 {
            assert_eq!(t.unfold(mode).unwrap(), unfold_by_enumeration(&t, mode));
        }
    }

    #[test]
    fn unfold_order_one_is_column() {
        let t = seq(&[5]);
        let m = t.unfold(0).unwrap();
        assert_eq!((m.rows(), m.cols()), (5, 1));
        assert_eq!(m.as_slice(), t.as_slice());
    }

    #[test]
    fn unfold_rejects_bad_mode() {
        let t = seq(&[2, 2]);
        assert!(matches!(
            t.unfold(2),
            Err(Error::ModeOutOfRange { mode: 2, order: 2 })
        ));
    }

    #[test]
    fn fold_inverts_unfold() {
        let t = seq(&[2, 2, 2]);
        let back = DenseTensor::fold(&t.unfold(0).unwrap(), 0, &[2, 2, 2]).unwrap();
        assert_eq!(back.as_slice(), &[1., 2., 3., 4., 5., 6., 7., 8.]);

        let t = seq(&[3, 4, 5]);
        for mode in 0..3 {
            let back = DenseTensor::fold(&t.unfold(mode).unwrap(), mode, &[3, 4, 5]).unwrap();
            assert_eq!(back, t);
        }
    }

    #[test]
    fn fold_scalar() {
        let m = Matrix::from_col_major(1, 1, vec![4.5]).unwrap();
        let t = DenseTensor::fold(&m, 0, &[1, 1, 1]).unwrap();
        assert_eq!(t.shape(), &[1, 1, 1]);
        assert_eq!(t.as_slice(), &[4.5]);
    }

    #[test]
    fn fold_dimension_mismatch() {
        let m = Matrix::zeros(2, 3);
        assert!(matches!(
            DenseTensor::fold(&m, 0, &[2, 2, 2]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn mode_product_sums_ones() {
        let t = DenseTensor::new(vec![2, 2, 2], vec![1.0; 8]).unwrap();
        let u = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let y = t.mode_product(&u, 0).unwrap();
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert!(y.as_slice().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn mode_product_identity() {
        let t = seq(&[3, 4, 5]);
        for mode in 0..3 {
            let y = t
                .mode_product(&Matrix::identity(t.shape()[mode]), mode)
                .unwrap();
            assert_eq!(y, t);
        }
    }

    #[test]
    fn mode_product_matches_entry_formula() {
        let t = DenseTensor::from_fn(&[3, 4, 2], |i| {
            ((i[0] * 7 + i[1] * 3 + i[2] * 11) % 13) as f64 - 6.0
        })
        .unwrap();
        let u = Matrix::from_fn(5, 3, |r, c| ((r * 5 + c * 2) % 7) as f64 * 0.5 - 1.0);
        let y = t.mode_product(&u, 0).unwrap();
        // Triple loop straight from Y[r, j, k] = sum_i X[i, j, k] U[r, i].
        for r in 0..5 {
            for j in 0..4 {
                for k in 0..2 {
                    let mut s = 0.0;
                    for i in 0..3 {
                        s += t.get(&[i, j, k]) * u.get(r, i);
                    }
                    assert!((y.get(&[r, j, k]) - s).abs() < 1e-12);
                }
            }
        }
        let via_unfold =
            DenseTensor::fold(&u.matmul(&t.unfold(0).unwrap()).unwrap(), 0, &[5, 4, 2]).unwrap();
        for (a, b) in y.as_slice().iter().zip(via_unfold.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_product_t_matches_explicit_transpose() {
        let t = seq(&[3, 4, 5]);
        let u = Matrix::from_fn(4, 2, |r, c| (r as f64 - c as f64) * 0.3);
        let a = t.mode_product_t(&u, 1).unwrap();
        let b = t.mode_product(&u.transpose(), 1).unwrap();
        assert_eq!(a.shape(), &[3, 2, 5]);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mode_product_dimension_mismatch() {
        let t = seq(&[3, 4, 5]);
        assert!(t.mode_product(&Matrix::zeros(2, 4), 0).is_err());
    }

    #[test]
    fn inner_products() {
        let t = seq(&[2, 2, 2]);
        assert_eq!(
            t.inner(&DenseTensor::zeros(&[2, 2, 2]).unwrap()).unwrap(),
            0.0
        );
        assert_eq!(t.inner(&t).unwrap(), 204.0);
        assert!(t.inner(&seq(&[2, 4])).is_err());
    }

    #[test]
    fn norms_examples() {
        let z = DenseTensor::zeros(&[3, 2]).unwrap().norms();
        assert_eq!((z.frobenius, z.l1, z.l0), (0.0, 0.0, 0));

        let t = DenseTensor::new(vec![2], vec![3.0, -4.0]).unwrap().norms();
        assert_eq!((t.frobenius, t.l1, t.l0), (5.0, 7.0, 2));

        let t = seq(&[2, 2, 2]).norms();
        assert_eq!(t.frobenius, 204f64.sqrt());
        assert_eq!((t.l1, t.l0), (36.0, 8));
    }

    #[test]
    fn l0_ignores_noise_below_tolerance() {
        let t = DenseTensor::new(vec![3], vec![1e-13, -1e-14, 1e-11]).unwrap();
        assert_eq!(t.norms().l0, 1);
    }

    #[test]
    fn rejects_invalid_shapes() {
        assert!(DenseTensor::zeros(&[]).is_err());
        assert!(DenseTensor::zeros(&[2, 0]).is_err());
        assert!(DenseTensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn sample_set_rejects_mixed_shapes() {
        let a = DenseTensor::zeros(&[2, 2, 2]).unwrap();
        let b = DenseTensor::zeros(&[2, 2, 3]).unwrap();
        assert!(SampleSet::new(vec![a.clone(), b]).is_err());
        assert!(SampleSet::new(vec![]).is_err());
        let s = SampleSet::new(vec![a.clone(), a]).unwrap();
        assert_eq!(s.stacked().shape(), &[2, 2, 2, 2]);
    }
}
