//! Hilbert-space building blocks: bosonic ladder operators on a truncated
//! Fock space, qubit operators, tensor products and the standard states.
//!
//! Composite operators are always ordered qubit ⊗ boson, so composite index
//! `q * fock_dim + n` addresses qubit level `q` and Fock level `n`. Qubit
//! level 0 is the excited state `|e⟩` and level 1 the ground state `|g⟩`,
//! which makes `σ_z = diag(+1, −1)`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, re, I, ONE, ZERO};
use crate::sparse::CsrMatrix;

/// Storage switches to sparse below this fill fraction.
pub const SPARSE_DENSITY_THRESHOLD: f64 = 0.25;

pub const EXCITED: usize = 0;
pub const GROUND: usize = 1;

#[derive(Debug, Clone)]
pub enum Storage {
    Dense(Array2<Complex64>),
    Sparse(CsrMatrix),
}

/// A complex matrix, stored dense or sparse depending on its fill.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    storage: Storage,
}

impl OperatorMatrix {
    /// Wraps a dense matrix, converting to sparse storage when fewer than
    /// a quarter of the entries are nonzero.
    pub fn from_dense(a: Array2<Complex64>) -> Self {
        let total = a.len().max(1);
        let nnz = a.iter().filter(|z| **z != ZERO).count();
        if (nnz as f64) < SPARSE_DENSITY_THRESHOLD * total as f64 {
            Self::from_sparse(CsrMatrix::from_dense(&a))
        } else {
            Self {
                storage: Storage::Dense(a),
            }
        }
    }

    pub fn from_sparse(m: CsrMatrix) -> Self {
        let total = (m.rows() * m.cols()).max(1);
        if m.nnz() as f64 >= SPARSE_DENSITY_THRESHOLD * total as f64 {
            Self {
                storage: Storage::Dense(m.to_dense()),
            }
        } else {
            Self {
                storage: Storage::Sparse(m),
            }
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sparse(CsrMatrix::from_triplets(
            n,
            n,
            (0..n).map(|k| (k, k, ONE)).collect(),
        ))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_sparse(CsrMatrix::zeros(rows, cols))
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn rows(&self) -> usize {
        match &self.storage {
            Storage::Dense(a) => a.nrows(),
            Storage::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match &self.storage {
            Storage::Dense(a) => a.ncols(),
            Storage::Sparse(m) => m.cols(),
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(a) => a.iter().filter(|z| **z != ZERO).count(),
            Storage::Sparse(m) => m.nnz(),
        }
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        match &self.storage {
            Storage::Dense(a) => a.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> CsrMatrix {
        match &self.storage {
            Storage::Dense(a) => CsrMatrix::from_dense(a),
            Storage::Sparse(m) => m.clone(),
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        match &self.storage {
            Storage::Dense(a) => a[[row, col]],
            Storage::Sparse(m) => m
                .triplets()
                .find(|&(r, c, _)| r == row && c == col)
                .map_or(ZERO, |(_, _, v)| v),
        }
    }

    pub fn apply(&self, v: &StateVector) -> Array1<Complex64> {
        match &self.storage {
            Storage::Dense(a) => a.dot(v.amplitudes()),
            Storage::Sparse(m) => m.mul_vec(v.amplitudes().view()),
        }
    }

    pub fn adjoint(&self) -> Self {
        match &self.storage {
            Storage::Dense(a) => Self::from_dense(linalg::dagger(a)),
            Storage::Sparse(m) => Self::from_sparse(m.adjoint()),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Self::from_sparse(a.matmul(b)),
            _ => Self::from_dense(self.to_dense().dot(&other.to_dense())),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (&self.storage, &other.storage) {
            (Storage::Sparse(a), Storage::Sparse(b)) => Self::from_sparse(a.add(b)),
            _ => Self::from_dense(self.to_dense() + other.to_dense()),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(re(-1.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        match &self.storage {
            Storage::Dense(a) => Self::from_dense(a.mapv(|z| z * s)),
            Storage::Sparse(m) => Self::from_sparse(m.scale(s)),
        }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        linalg::hermiticity_residual(&self.to_dense())
    }

    pub fn is_diagonal(&self) -> bool {
        match &self.storage {
            Storage::Dense(a) => a.indexed_iter().all(|((r, c), z)| r == c || *z == ZERO),
            Storage::Sparse(m) => m.triplets().all(|(r, c, _)| r == c),
        }
    }

    pub fn operator_norm(&self) -> f64 {
        linalg::operator_norm(&self.to_dense())
    }
}

/// A normalised state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    /// Normalises `amplitudes`; fails for the zero vector.
    pub fn new(amplitudes: Array1<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension {
                what: "state vector",
                dim: 0,
            });
        }
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical("state vector has zero or non-finite norm".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.mapv(|z| z / norm),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::InvalidDimension {
                what: "basis state index",
                dim: index,
            });
        }
        let mut a = Array1::zeros(dim);
        a[index] = ONE;
        Ok(Self { amplitudes: a })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut out = Array1::zeros(self.dim() * other.dim());
        for (i, a) in self.amplitudes.iter().enumerate() {
            for (j, b) in other.amplitudes.iter().enumerate() {
                out[i * other.dim() + j] = a * b;
            }
        }
        StateVector { amplitudes: out }
    }

    pub fn projector(&self) -> Array2<Complex64> {
        let n = self.dim();
        Array2::from_shape_fn((n, n), |(i, j)| self.amplitudes[i] * self.amplitudes[j].conj())
    }
}

/// Bosonic annihilation operator `c` on Fock levels `0..dim`.
pub fn annihilation(dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            what: "Fock space",
            dim,
        });
    }
    let triplets = (1..dim).map(|n| (n - 1, n, re((n as f64).sqrt()))).collect();
    Ok(OperatorMatrix::from_sparse(CsrMatrix::from_triplets(dim, dim, triplets)))
}

pub fn creation(dim: usize) -> Result<OperatorMatrix> {
    Ok(annihilation(dim)?.adjoint())
}

/// Number operator `c†c = diag(0, 1, …, dim−1)`.
pub fn number(dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            what: "Fock space",
            dim,
        });
    }
    let triplets = (1..dim).map(|n| (n, n, re(n as f64))).collect();
    Ok(OperatorMatrix::from_sparse(CsrMatrix::from_triplets(dim, dim, triplets)))
}

/// The qubit operator set.
///
/// `sigma_plus`/`sigma_minus` follow the `σ_x ± iσ_y` convention and so carry
/// a matrix element of magnitude 2. `raising`/`lowering` are the unit
/// transition operators `|e⟩⟨g|`, `|g⟩⟨e|` (`σ_± / 2`), which are what the
/// Hamiltonians and the relaxation channel are built from.
#[derive(Debug, Clone)]
pub struct QubitOperators {
    pub sigma_x: OperatorMatrix,
    pub sigma_y: OperatorMatrix,
    pub sigma_z: OperatorMatrix,
    pub sigma_plus: OperatorMatrix,
    pub sigma_minus: OperatorMatrix,
    pub raising: OperatorMatrix,
    pub lowering: OperatorMatrix,
}

pub fn qubit_operators() -> QubitOperators {
    let m = |a: [[Complex64; 2]; 2]| {
        OperatorMatrix::from_dense(Array2::from_shape_fn((2, 2), |(i, j)| a[i][j]))
    };
    let sigma_x = m([[ZERO, ONE], [ONE, ZERO]]);
    let sigma_y = m([[ZERO, -I], [I, ZERO]]);
    let sigma_z = m([[ONE, ZERO], [ZERO, -ONE]]);
    let sigma_plus = sigma_x.add(&sigma_y.scale(I));
    let sigma_minus = sigma_x.sub(&sigma_y.scale(I));
    let raising = sigma_plus.scale(re(0.5));
    let lowering = sigma_minus.scale(re(0.5));
    QubitOperators {
        sigma_x,
        sigma_y,
        sigma_z,
        sigma_plus,
        sigma_minus,
        raising,
        lowering,
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    match (a.storage(), b.storage()) {
        (Storage::Dense(x), Storage::Dense(y)) => OperatorMatrix::from_dense(linalg::kron(x, y)),
        _ => OperatorMatrix::from_sparse(a.to_sparse().kron(&b.to_sparse())),
    }
}

/// Probability a coherent state keeps inside Fock levels `0..dim`,
/// `Σ_{n<dim} e^{−|α|²}|α|^{2n}/n!`.
pub fn coherent_captured_probability(alpha: Complex64, dim: usize) -> f64 {
    let x = alpha.norm_sqr();
    let mut term = (-x).exp();
    let mut sum = term;
    for n in 1..dim {
        term *= x / n as f64;
        sum += term;
    }
    sum
}

/// Coherent state `|α⟩` truncated to `dim` levels and renormalised.
pub fn coherent_state(alpha: Complex64, dim: usize) -> Result<StateVector> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            what: "Fock space",
            dim,
        });
    }
    let mut amps = Array1::zeros(dim);
    amps[0] = ONE;
    for n in 1..dim {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    StateVector::new(amps)
}

/// Pegg–Barnett phase state `(1/√dim) Σ_n e^{inφ} |n⟩`.
pub fn phase_state(phi: f64, dim: usize) -> Result<StateVector> {
    if dim < 1 {
        return Err(Error::InvalidDimension {
            what: "phase state",
            dim,
        });
    }
    let amp = 1.0 / (dim as f64).sqrt();
    let mut amps = Array1::from_shape_fn(dim, |n| Complex64::from_polar(amp, n as f64 * phi));
    // Reduce the representable rounding of φ + 2π so periodicity is exact.
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.mapv_inplace(|z| z / norm);
    Ok(StateVector { amplitudes: amps })
}

/// Displacement operator `exp(α c† − α* c)` in the truncated space.
pub fn displacement(alpha: Complex64, dim: usize) -> Result<OperatorMatrix> {
    let c = annihilation(dim)?.to_dense();
    let generator = linalg::dagger(&c).mapv(|z| z * alpha) - c.mapv(|z| z * alpha.conj());
    Ok(OperatorMatrix::from_dense(linalg::expm(&generator)?))
}

/// Photon-number parity `diag((−1)^n)`.
pub fn parity(dim: usize) -> Result<OperatorMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            what: "Fock space",
            dim,
        });
    }
    let triplets = (0..dim)
        .map(|n| (n, n, if n % 2 == 0 { ONE } else { -ONE }))
        .collect();
    Ok(OperatorMatrix::from_sparse(CsrMatrix::from_triplets(dim, dim, triplets)))
}
