//! Dense symmetric matrices.
//!
//! Entries are stored fully (row-major) and mirrored bit-exactly: every write
//! through [`SymMatrix::set`] updates both `(i,j)` and `(j,i)`, so the
//! symmetry invariant can never drift.

use num::BigRational;

/// A dense symmetric `n × n` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// The zero matrix.
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    /// The identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// The all-ones matrix.
    pub fn ones(n: usize) -> Self {
        SymMatrix { n, data: vec![1.0; n * n] }
    }

    /// Builds from a function of the (unordered) index pair; `f` is only
    /// called with `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets the `(i,j)` and `(j,i)` entries.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to the `(i,j)` and `(j,i)` entries (once each).
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.set(i, j, self.get(i, j) + v);
    }

    /// `x^T M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for j in 0..self.n {
                row += self.get(i, j) * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// `M x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `a*M + b*N` entrywise.
    pub fn lin_comb(a: f64, m: &SymMatrix, b: f64, n: &SymMatrix) -> SymMatrix {
        assert_eq!(m.n, n.n);
        SymMatrix {
            n: m.n,
            data: m.data.iter().zip(&n.data).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    /// Exact rational view of the entries. Every finite `f64` is an exact
    /// rational, so this conversion is lossless; it is how exact-arithmetic
    /// paths (grid oracles, KKT multipliers at rational points) read a matrix
    /// that was assembled in floating point from integer data.
    pub fn rational_entries(&self) -> Vec<BigRational> {
        self.data
            .iter()
            .map(|&v| BigRational::from_float(v).expect("matrix entry must be finite"))
            .collect()
    }

    /// Maximum absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_mirrors_both_entries() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 2, 1.5);
        assert_eq!(m.get(0, 2), 1.5);
        assert_eq!(m.get(2, 0), 1.5);
    }

    #[test]
    fn quadratic_form_matches_hand_computation() {
        // M = [[1,2],[2,3]], x = (1,2): x^T M x = 1 + 2*2*2 + 3*4 = 21.
        let mut m = SymMatrix::identity(2);
        m.set(0, 1, 2.0);
        m.set(1, 1, 3.0);
        assert_eq!(m.quadratic_form(&[1.0, 2.0]), 21.0);
    }

    #[test]
    fn rational_entries_are_exact() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, 0.5);
        let q = m.rational_entries();
        assert_eq!(q[1], BigRational::new(1.into(), 2.into()));
    }
}
