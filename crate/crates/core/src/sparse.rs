//! Compressed sparse row storage for complex matrices.
//!
//! Only the handful of kernels the simulator needs are provided: assembly
//! from triplets, Kronecker products, matrix-vector products and conversion
//! back to dense form.

use ndarray::{Array1, Array2, ArrayView1};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Assembles a matrix from `(row, col, value)` triplets. Duplicate
    /// entries are summed and exact zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < rows && c < cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        let mut m = Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    pub fn from_dense(a: &Array2<Complex64>) -> Self {
        let mut triplets = Vec::new();
        for ((r, c), v) in a.indexed_iter() {
            if *v != Complex64::new(0.0, 0.0) {
                triplets.push((r, c, *v));
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), triplets)
    }

    fn prune(&mut self) {
        let zero = Complex64::new(0.0, 0.0);
        if self.values.iter().all(|v| *v != zero) {
            return;
        }
        let mut indptr = vec![0usize; self.rows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != zero {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        let mut a = Array2::zeros((self.rows, self.cols));
        for (r, c, v) in self.triplets() {
            a[[r, c]] = v;
        }
        a
    }

    pub fn diagonal(&self) -> Array1<Complex64> {
        let n = self.rows.min(self.cols);
        let mut d = Array1::zeros(n);
        for (r, c, v) in self.triplets() {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: ArrayView1<Complex64>) -> Array1<Complex64> {
        let mut y = Array1::zeros(self.rows);
        self.mul_vec_into(x, y.as_slice_mut().expect("contiguous"));
        y
    }

    /// Writes `A x` into `out`, which must have length `rows`.
    pub fn mul_vec_into(&self, x: ArrayView1<Complex64>, out: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        match x.as_slice() {
            Some(xs) => {
                for (r, slot) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in self.indptr[r]..self.indptr[r + 1] {
                        acc += self.values[k] * xs[self.indices[k]];
                    }
                    *slot = acc;
                }
            }
            None => {
                for (r, slot) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in self.indptr[r]..self.indptr[r + 1] {
                        acc += self.values[k] * x[self.indices[k]];
                    }
                    *slot = acc;
                }
            }
        }
    }

    pub fn kron(&self, other: &CsrMatrix) -> CsrMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (r1, c1, v1) in self.triplets() {
            for (r2, c2, v2) in other.triplets() {
                triplets.push((r1 * other.rows + r2, c1 * other.cols + c2, v1 * v2));
            }
        }
        CsrMatrix::from_triplets(rows, cols, triplets)
    }

    pub fn scale(&self, s: Complex64) -> CsrMatrix {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        m.prune();
        m
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let triplets = self.triplets().chain(other.triplets()).collect();
        CsrMatrix::from_triplets(self.rows, self.cols, triplets)
    }

    pub fn adjoint(&self) -> CsrMatrix {
        let triplets = self.triplets().map(|(r, c, v)| (c, r, v.conj())).collect();
        CsrMatrix::from_triplets(self.cols, self.rows, triplets)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.cols, self.rows, triplets)
    }

    pub fn conj(&self) -> CsrMatrix {
        let mut m = self.clone();
        for v in &mut m.values {
            *v = v.conj();
        }
        m
    }

    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.cols, other.rows);
        let mut triplets = Vec::new();
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let (mid, a) = (self.indices[k], self.values[k]);
                for j in other.indptr[mid]..other.indptr[mid + 1] {
                    triplets.push((r, other.indices[j], a * other.values[j]));
                }
            }
        }
        CsrMatrix::from_triplets(self.rows, other.cols, triplets)
    }

    /// Largest absolute row sum, the induced infinity norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}
