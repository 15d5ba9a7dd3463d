//! Dense complex matrices, row-major.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::LinalgError;

/// Dense complex matrix with `f64` real and imaginary parts, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::EntryCount { rows, cols, found: entries.len() });
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    /// Build from real entries, row-major.
    pub fn from_real(rows: usize, cols: usize, reals: &[f64]) -> Result<Self, LinalgError> {
        if reals.len() != rows * cols {
            return Err(LinalgError::EntryCount { rows, cols, found: reals.len() });
        }
        let entries = reals.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimMismatch { left: self.cols, right: rhs.rows });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        // i-k-j loop order keeps both operands streaming row-major.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == Complex64::ZERO {
                    continue;
                }
                let row_out = &mut out.entries[i * rhs.cols..(i + 1) * rhs.cols];
                let row_rhs = &rhs.entries[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in row_out.iter_mut().zip(row_rhs) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimMismatch { left: self.cols, right: v.len() });
        }
        let mut out = vec![Complex64::ZERO; self.rows];
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&e| e * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Kronecker product; `self` acts on the more significant qubits.
    pub fn tensor(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut entries = vec![Complex64::ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == Complex64::ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    let dst_row = i * other.rows + k;
                    for l in 0..other.cols {
                        entries[dst_row * cols + j * other.cols + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self { rows, cols, entries }
    }

    /// max_ij |a_ij - b_ij|
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max_ij |a_ij - conj(a_ji)|; zero for exactly Hermitian matrices.
    pub fn hermitian_deviation(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    /// max_ij |(U†U - I)_ij|
    pub fn unitarity_deviation(&self) -> f64 {
        let gram = self.adjoint().matmul(self).expect("square by construction");
        gram.max_abs_diff(&Self::identity(self.cols))
    }

    /// (A + A†)/2; used to shed rounding drift off operators that are
    /// Hermitian by construction.
    pub fn hermitized(&self) -> Self {
        debug_assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        })
    }

    /// i[A, B] = i(AB - BA); Hermitian when A and B are.
    pub fn commutator_i(&self, other: &Self) -> Result<Self, LinalgError> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        let i = Complex64::new(0.0, 1.0);
        Ok(Self::from_fn(ab.rows, ab.cols, |r, c| i * (ab.get(r, c) - ba.get(r, c))))
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        debug_assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix dimension mismatch")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.tensor(&i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_places_blocks() {
        // sigma_x (x) |0><0| has ones at (0,2) and (2,0) only.
        let proj0 = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let t = sigma_x().tensor(&proj0);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if (i, j) == (0, 2) || (i, j) == (2, 0) { 1.0 } else { 0.0 };
                assert_eq!(t.get(i, j), Complex64::new(expect, 0.0), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn tensor_trace_multiplies() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new((i + 2 * j) as f64, j as f64));
        let b = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(1.0 - i as f64, (i * j) as f64));
        let lhs = a.tensor(&b).trace();
        let rhs = a.trace() * b.trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn mixed_product_identity() {
        // (a (x) b)(c (x) d) = (ac) (x) (bd)
        let a = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64 - j as f64, 1.0));
        let b = sigma_x();
        let c = ComplexMatrix::from_fn(2, 2, |i, j| Complex64::new((i * j) as f64, -(j as f64)));
        let d = ComplexMatrix::identity(2);
        let lhs = a.tensor(&b).matmul(&c.tensor(&d)).unwrap();
        let rhs = a.matmul(&c).unwrap().tensor(&b.matmul(&d).unwrap());
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn matmul_dim_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        let b = ComplexMatrix::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(LinalgError::DimMismatch { .. })));
    }

    #[test]
    fn adjoint_involution() {
        let a = ComplexMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64, j as f64 + 0.5));
        assert_eq!(a.adjoint().adjoint(), a);
    }
}
