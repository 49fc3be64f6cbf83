//! Lindblad propagation of the composite density matrix through a
//! piecewise-constant pulse schedule.
//!
//! Density matrices are vectorised by stacking columns, so
//! `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, re, I, ONE, ZERO};
use crate::model::{DissipatorSpec, PulseSchedule};
use crate::observables;
use crate::operators::{OperatorMatrix, StateVector};
use crate::sparse::CsrMatrix;

/// Trace or Hermiticity drift beyond this is corrected after each propagation.
pub const DRIFT_CORRECTION: f64 = 1e-10;
/// An eigenvalue below this after propagation is treated as a hard failure.
pub const POSITIVITY_FAILURE: f64 = -1e-5;
/// Upper bound on the RK4 step in ns.
pub const RK4_DT_MAX: f64 = 0.01;
/// RK4 step bound `h · max(‖L_off‖_∞, max coupled |ΔL_diag|)`.
pub const RK4_STIFFNESS_BOUND: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Array2<Complex64>,
}

impl DensityMatrix {
    /// Wraps a square matrix without validation.
    pub fn from_matrix(matrix: Array2<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidDimension {
                what: "density matrix",
                dim: 0,
            });
        }
        Ok(Self { matrix })
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        Self::from_matrix(psi.projector())
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::from_matrix(linalg::identity(dim).mapv(|z| z / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<Complex64> {
        self.matrix
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
        let mut acc = ZERO;
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[[i, j]] * self.matrix[[j, i]];
            }
        }
        acc.re
    }

    /// `‖ρ − ρ†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        linalg::norm_frobenius(&(&self.matrix - &linalg::dagger(&self.matrix)))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let h = (&self.matrix + &linalg::dagger(&self.matrix)).mapv(|z| z * 0.5);
        Ok(linalg::eigvalsh(&h))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.matrix - &other.matrix;
        let h = (&diff + &linalg::dagger(&diff)).mapv(|z| z * 0.5);
        Ok(0.5 * linalg::eigvalsh(&h).iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> Complex64 {
        // Tr(Aρ) = Σ_ij A_ij ρ_ji
        match op.storage() {
            crate::operators::Storage::Sparse(m) => {
                m.triplets().map(|(i, j, a)| a * self.matrix[[j, i]]).sum()
            }
            crate::operators::Storage::Dense(a) => {
                let mut acc = ZERO;
                for ((i, j), v) in a.indexed_iter() {
                    acc += v * self.matrix[[j, i]];
                }
                acc
            }
        }
    }

    pub fn to_vec(&self) -> Array1<Complex64> {
        let n = self.dim();
        Array1::from_shape_fn(n * n, |k| self.matrix[[k % n, k / n]])
    }

    pub fn from_vec(v: &Array1<Complex64>, dim: usize) -> Result<Self> {
        if v.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: v.len(),
            });
        }
        Self::from_matrix(Array2::from_shape_fn((dim, dim), |(r, c)| v[c * dim + r]))
    }

    /// Re-Hermitises and renormalises when drift exceeds [`DRIFT_CORRECTION`].
    /// Returns the drift before correction as `(trace, hermiticity)`.
    pub fn correct_drift(&mut self) -> Result<(f64, f64)> {
        let herm = self.hermiticity_residual();
        if herm > DRIFT_CORRECTION {
            self.matrix = (&self.matrix + &linalg::dagger(&self.matrix)).mapv(|z| z * 0.5);
        }
        let tr = self.trace();
        let drift = (tr - ONE).norm();
        if drift > DRIFT_CORRECTION {
            if !(tr.re > 0.0) || !tr.re.is_finite() {
                return Err(Error::Numerical(format!("trace collapsed to {tr}")));
            }
            self.matrix.mapv_inplace(|z| z / tr.re);
        }
        Ok((drift, herm))
    }
}

/// A Liouvillian acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim: usize,
    matrix: CsrMatrix,
}

impl Superoperator {
    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> Array2<Complex64> {
        self.matrix.to_dense()
    }

    /// `‖vec(1)† L‖_∞`, zero for a trace-preserving generator.
    pub fn trace_preservation_residual(&self) -> f64 {
        let n = self.dim;
        let mut row = vec![ZERO; n * n];
        for (r, c, v) in self.matrix.triplets() {
            if r % n == r / n {
                row[c] += v;
            }
        }
        row.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let v = self.matrix.mul_vec(rho.to_vec().view());
        DensityMatrix::from_vec(&v, self.dim)
    }
}

/// `L = −i(1⊗H − Hᵀ⊗1) + Σ γ [x̄⊗x − ½(1⊗x†x + (x†x)ᵀ⊗1)]`.
pub fn liouvillian(h: &OperatorMatrix, diss: &DissipatorSpec) -> Result<Superoperator> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.cols(),
        });
    }
    let eye = CsrMatrix::from_triplets(n, n, (0..n).map(|k| (k, k, ONE)).collect());
    let hs = h.to_sparse();
    let mut l = eye
        .kron(&hs)
        .add(&hs.transpose().kron(&eye).scale(re(-1.0)))
        .scale(-I);
    for (rate, x) in &diss.channels {
        if x.rows() != n || x.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.rows(),
            });
        }
        if !(*rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative dissipation rate {rate}")));
        }
        if *rate == 0.0 {
            continue;
        }
        let xs = x.to_sparse();
        let xdx = xs.adjoint().matmul(&xs);
        let term = xs
            .conj()
            .kron(&xs)
            .add(&eye.kron(&xdx).add(&xdx.transpose().kron(&eye)).scale(re(-0.5)));
        l = l.add(&term.scale(re(*rate)));
    }
    Ok(Superoperator { dim: n, matrix: l })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Expm,
    Rk4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Expm => "expm",
            Method::Rk4 => "rk4",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expm" => Ok(Method::Expm),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::Config(format!("unknown method `{other}` (expected expm or rk4)"))),
        }
    }
}

/// A fixed-interval propagator `ρ ↦ exp(L·dt) ρ`.
#[derive(Debug, Clone)]
pub enum Propagator {
    Identity { dim: usize },
    Dense { dim: usize, map: Array2<Complex64> },
    Rk4(Rk4Propagator),
}

/// Fixed-step RK4 in the interaction picture of the Liouvillian diagonal.
///
/// The diagonal carries the large detuning phases; it is integrated exactly
/// and only the off-diagonal remainder is stepped.
#[derive(Debug, Clone)]
pub struct Rk4Propagator {
    dim: usize,
    half_step_phase: Vec<Complex64>,
    off_diagonal: CsrMatrix,
    h: f64,
    n_steps: usize,
}

impl Rk4Propagator {
    pub fn new(l: &Superoperator, dt: f64, dt_max: f64) -> Result<Self> {
        let diag = l.matrix.diagonal();
        let off = CsrMatrix::from_triplets(
            l.matrix.rows(),
            l.matrix.cols(),
            l.matrix.triplets().filter(|(r, c, _)| r != c).collect(),
        );
        let coupled_spread = off
            .triplets()
            .map(|(r, c, _)| (diag[r] - diag[c]).norm())
            .fold(0.0, f64::max);
        let rate = off.norm_inf().max(coupled_spread);
        let bound = if rate > 0.0 {
            (RK4_STIFFNESS_BOUND / rate).min(dt_max)
        } else {
            dt_max
        };
        let n_steps = ((dt / bound).ceil() as usize).max(1);
        let h = dt / n_steps as f64;
        Ok(Self {
            dim: l.dim,
            half_step_phase: diag.iter().map(|d| (d * (h / 2.0)).exp()).collect(),
            off_diagonal: off,
            h,
            n_steps,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn apply_vec(&self, y: &mut Array1<Complex64>) {
        let n = y.len();
        let h = self.h;
        let e = &self.half_step_phase;
        let mut yi = vec![ZERO; n];
        let mut tmp = vec![ZERO; n];
        let mut k = vec![ZERO; n];
        let mut acc = vec![ZERO; n];
        let mut buf = Array1::zeros(n);
        let off = &self.off_diagonal;
        for _ in 0..self.n_steps {
            let ys = y.as_slice_mut().expect("contiguous");
            // k1 = E·N(y), y_I = E·y
            off.mul_vec_into(ndarray::ArrayView1::from(&ys[..]), &mut k);
            for j in 0..n {
                yi[j] = e[j] * ys[j];
                k[j] *= e[j];
                acc[j] = yi[j] + k[j] * (h / 6.0);
                buf[j] = yi[j] + k[j] * (h / 2.0);
            }
            // k2
            off.mul_vec_into(buf.view(), &mut k);
            for j in 0..n {
                acc[j] += k[j] * (h / 3.0);
                buf[j] = yi[j] + k[j] * (h / 2.0);
            }
            // k3
            off.mul_vec_into(buf.view(), &mut k);
            for j in 0..n {
                acc[j] += k[j] * (h / 3.0);
                buf[j] = e[j] * (yi[j] + k[j] * h);
            }
            // k4 = N(E(y_I + h k3))
            off.mul_vec_into(buf.view(), &mut tmp);
            for j in 0..n {
                ys[j] = e[j] * acc[j] + tmp[j] * (h / 6.0);
            }
        }
    }
}

impl Propagator {
    pub fn new(l: &Superoperator, dt: f64, method: Method) -> Result<Self> {
        if dt < 0.0 || !dt.is_finite() {
            return Err(Error::NegativeTime(dt));
        }
        if dt == 0.0 {
            return Ok(Propagator::Identity { dim: l.dim });
        }
        match method {
            Method::Expm => {
                let generator = l.matrix.to_dense().mapv(|z| z * dt);
                Ok(Propagator::Dense {
                    dim: l.dim,
                    map: linalg::expm(&generator)?,
                })
            }
            Method::Rk4 => Ok(Propagator::Rk4(Rk4Propagator::new(l, dt, RK4_DT_MAX)?)),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Propagator::Identity { dim } | Propagator::Dense { dim, .. } => *dim,
            Propagator::Rk4(p) => p.dim,
        }
    }

    /// Advances `rho` by one interval without drift correction.
    pub fn apply_raw(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        match self {
            Propagator::Identity { .. } => Ok(rho.clone()),
            Propagator::Dense { map, dim } => DensityMatrix::from_vec(&map.dot(&rho.to_vec()), *dim),
            Propagator::Rk4(p) => {
                let mut v = rho.to_vec();
                p.apply_vec(&mut v);
                DensityMatrix::from_vec(&v, p.dim)
            }
        }
    }

    /// Advances `rho`, corrects drift and enforces positivity.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<(DensityMatrix, Drift)> {
        let mut out = self.apply_raw(rho)?;
        if out.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("non-finite density matrix".into()));
        }
        let (trace, hermiticity) = out.correct_drift()?;
        let min_eig = out.min_eigenvalue()?;
        if min_eig < POSITIVITY_FAILURE {
            return Err(Error::Numerical(format!(
                "positivity lost: minimum eigenvalue {min_eig:.3e}"
            )));
        }
        Ok((
            out,
            Drift {
                trace,
                hermiticity,
                min_eigenvalue: min_eig,
            },
        ))
    }
}

/// Pre-correction drift and post-correction positivity of one propagation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Drift {
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

/// `vec(ρ') = exp(L·dt) vec(ρ)` followed by drift correction.
pub fn propagate(
    rho: &DensityMatrix,
    l: &Superoperator,
    dt: f64,
    method: Method,
) -> Result<DensityMatrix> {
    Ok(Propagator::new(l, dt, method)?.apply(rho)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub n_c: f64,
    pub p_e: f64,
    pub p_g: f64,
    pub drive_on: bool,
    /// Index into the schedule, `None` for the initial sample.
    pub segment: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub rho: DensityMatrix,
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<Snapshot>,
    /// Largest drift seen before correction, over all propagations.
    pub max_drift: Drift,
    /// Largest `|Tr ρ − 1|` and `‖ρ − ρ†‖_F` over recorded samples.
    pub max_trace_error: f64,
    pub max_hermiticity: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub method: Method,
    pub samples_per_segment: usize,
    pub snapshots: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Expm,
            samples_per_segment: 10,
            snapshots: true,
        }
    }
}

fn sample(rho: &DensityMatrix, fock_dim: usize, t: f64, drive_on: bool, segment: Option<usize>) -> Result<Sample> {
    let (p_e, p_g) = observables::qubit_populations(rho, fock_dim)?;
    Ok(Sample {
        t,
        n_c: observables::mean_number(rho, fock_dim)?,
        p_e,
        p_g,
        drive_on,
        segment,
    })
}

/// Evolves `rho0` through `schedule`, with `h_on` in drive-on segments and
/// `h_off` otherwise. Each segment is split into `samples_per_segment`
/// equal sub-intervals.
pub fn evolve(
    schedule: &PulseSchedule,
    rho0: &DensityMatrix,
    h_on: &OperatorMatrix,
    h_off: &OperatorMatrix,
    diss: &DissipatorSpec,
    options: EvolveOptions,
) -> Result<Trajectory> {
    if options.samples_per_segment == 0 {
        return Err(Error::InvalidParameter("samples_per_segment must be at least 1".into()));
    }
    let dim = rho0.dim();
    if dim % 2 != 0 || h_on.rows() != dim || h_off.rows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: h_on.rows(),
        });
    }
    let fock_dim = dim / 2;
    let l_on = liouvillian(h_on, diss)?;
    let l_off = liouvillian(h_off, diss)?;

    let first_on = schedule.segments.first().is_some_and(|s| s.drive_on);
    let mut traj = Trajectory {
        min_eigenvalue: rho0.min_eigenvalue()?,
        ..Trajectory::default()
    };
    let mut rho = rho0.clone();
    traj.samples.push(sample(&rho, fock_dim, 0.0, first_on, None)?);

    let mut cache: HashMap<(bool, u64), Propagator> = HashMap::new();
    let n = options.samples_per_segment;
    for (index, seg) in schedule.segments.iter().enumerate() {
        if seg.duration < 0.0 {
            return Err(Error::Propagation {
                segment: index,
                source: Box::new(Error::NegativeTime(seg.duration)),
            });
        }
        if seg.duration > 0.0 {
            let dt = seg.duration / n as f64;
            let key = (seg.drive_on, dt.to_bits());
            if !cache.contains_key(&key) {
                let l = if seg.drive_on { &l_on } else { &l_off };
                let prop = Propagator::new(l, dt, options.method).map_err(|e| Error::Propagation {
                    segment: index,
                    source: Box::new(e),
                })?;
                cache.insert(key, prop);
            }
            let prop = &cache[&key];
            for k in 1..=n {
                let (next, drift) = prop.apply(&rho).map_err(|e| Error::Propagation {
                    segment: index,
                    source: Box::new(e),
                })?;
                rho = next;
                traj.max_drift.trace = traj.max_drift.trace.max(drift.trace);
                traj.max_drift.hermiticity = traj.max_drift.hermiticity.max(drift.hermiticity);
                traj.min_eigenvalue = traj.min_eigenvalue.min(drift.min_eigenvalue);
                let t = if k == n { seg.t_end() } else { seg.t_start + k as f64 * dt };
                traj.max_trace_error = traj.max_trace_error.max((rho.trace() - ONE).norm());
                traj.max_hermiticity = traj.max_hermiticity.max(rho.hermiticity_residual());
                traj.samples.push(sample(&rho, fock_dim, t, seg.drive_on, Some(index))?);
            }
        }
        let ends_step = schedule
            .segments
            .get(index + 1)
            .is_none_or(|next| next.step != seg.step);
        if options.snapshots && ends_step && seg.duration >= 0.0 && schedule.total_duration() > 0.0 {
            traj.snapshots.push(Snapshot {
                step: seg.step,
                t: seg.t_end(),
                rho: rho.clone(),
            });
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, PhysicalParams, Segment};
    use crate::operators::{self, coherent_state};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn small_params() -> PhysicalParams {
        PhysicalParams {
            fock_dim: 6,
            alpha: re(1.2),
            n_steps: 2,
            ..PhysicalParams::base()
        }
    }

    fn small_setup() -> (PhysicalParams, model::DerivedParams, DissipatorSpec) {
        let p = small_params();
        let d = model::derive(&p).unwrap();
        let diss = model::dissipators(&p).unwrap();
        (p, d, diss)
    }

    #[test]
    fn closed_diagonal_liouvillian() {
        let h = OperatorMatrix::from_dense(Array2::from_diag(&Array1::from(vec![re(1.0), re(-0.5), re(2.0)])));
        let l = liouvillian(&h, &DissipatorSpec::empty()).unwrap();
        let dense = l.to_dense();
        let hd = [1.0, -0.5, 2.0];
        for c in 0..3 {
            for r in 0..3 {
                let k = c * 3 + r;
                assert_abs_diff_eq!(dense[[k, k]].im, -(hd[r] - hd[c]), epsilon = 1e-15);
            }
        }
        assert_eq!(l.matrix().nnz(), 6);
    }

    #[test]
    fn vacuum_is_steady_under_decay() {
        let c = operators::annihilation(5).unwrap();
        let diss = DissipatorSpec {
            channels: vec![(0.7, c)],
        };
        let l = liouvillian(&OperatorMatrix::zeros(5, 5), &diss).unwrap();
        let vac = DensityMatrix::from_pure(&StateVector::basis(5, 0).unwrap()).unwrap();
        let out = l.apply(&vac).unwrap();
        assert!(out.matrix().iter().all(|z| z.norm() < 1e-16));
    }

    #[test]
    fn liouvillian_matches_direct_action() {
        let (p, d, diss) = small_setup();
        let h = model::hamiltonian_rotframe(&p, &d, true).unwrap();
        let l = liouvillian(&h, &diss).unwrap();
        let rho = model::initial_state(&p).unwrap();
        let got = l.apply(&rho).unwrap();
        let r = rho.matrix();
        let hd = h.to_dense();
        let mut want = (hd.dot(r) - r.dot(&hd)).mapv(|z| -I * z);
        for (rate, x) in &diss.channels {
            let x = x.to_dense();
            let xd = linalg::dagger(&x);
            let xdx = xd.dot(&x);
            want = want + (x.dot(r).dot(&xd) - (xdx.dot(r) + r.dot(&xdx)).mapv(|z| z * 0.5)).mapv(|z| z * *rate);
        }
        assert!(linalg::max_abs(&(got.matrix() - &want)) < 1e-12);
    }

    #[test]
    fn base_liouvillian_preserves_trace() {
        let p = PhysicalParams::base();
        let d = model::derive(&p).unwrap();
        let diss = model::dissipators(&p).unwrap();
        for on in [true, false] {
            let l = liouvillian(&model::hamiltonian_rotframe(&p, &d, on).unwrap(), &diss).unwrap();
            assert!(l.trace_preservation_residual() < 1e-10);
        }
    }

    #[test]
    fn liouvillian_rejects_mismatched_channel() {
        let diss = DissipatorSpec {
            channels: vec![(1.0, operators::annihilation(3).unwrap())],
        };
        assert!(matches!(
            liouvillian(&OperatorMatrix::identity(4), &diss),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_time_is_identity_and_negative_is_error() {
        let (p, d, diss) = small_setup();
        let l = liouvillian(&model::hamiltonian_rotframe(&p, &d, true).unwrap(), &diss).unwrap();
        let rho = model::initial_state(&p).unwrap();
        for m in [Method::Expm, Method::Rk4] {
            assert_eq!(propagate(&rho, &l, 0.0, m).unwrap(), rho);
            assert!(matches!(propagate(&rho, &l, -1.0, m), Err(Error::NegativeTime(_))));
        }
    }

    #[test]
    fn closed_evolution_conserves_purity() {
        let (p, d, _) = small_setup();
        let h = model::hamiltonian_rotframe(&p, &d, true).unwrap();
        let l = liouvillian(&h, &DissipatorSpec::empty()).unwrap();
        let rho = model::initial_state(&p).unwrap();
        for m in [Method::Expm, Method::Rk4] {
            let out = propagate(&rho, &l, d.t_p, m).unwrap();
            assert!((out.purity() - 1.0).abs() < 1e-8, "{m}: purity {}", out.purity());
            let e0 = rho.expectation(&h).re;
            let e1 = out.expectation(&h).re;
            assert!((e1 - e0).abs() < 1e-8 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn expm_and_rk4_agree_on_small_system() {
        let (p, d, diss) = small_setup();
        let rho = model::initial_state(&p).unwrap();
        for on in [true, false] {
            let l = liouvillian(&model::hamiltonian_rotframe(&p, &d, on).unwrap(), &diss).unwrap();
            let a = propagate(&rho, &l, d.t_h, Method::Expm).unwrap();
            let b = propagate(&rho, &l, d.t_h, Method::Rk4).unwrap();
            assert!(a.trace_distance(&b).unwrap() < 1e-7);
        }
    }

    #[test]
    fn semigroup_property() {
        let (p, d, diss) = small_setup();
        let l = liouvillian(&model::hamiltonian_rotframe(&p, &d, true).unwrap(), &diss).unwrap();
        let rho = model::initial_state(&p).unwrap();
        let (t1, t2) = (1.3, 2.9);
        let whole = propagate(&rho, &l, t1 + t2, Method::Expm).unwrap();
        let split = propagate(&propagate(&rho, &l, t1, Method::Expm).unwrap(), &l, t2, Method::Expm).unwrap();
        assert!(linalg::max_abs(&(whole.matrix() - split.matrix())) < 1e-9);
    }

    #[test]
    fn decay_of_a_single_photon() {
        let gamma = 0.4;
        let c = operators::annihilation(3).unwrap();
        let l = liouvillian(&OperatorMatrix::zeros(3, 3), &DissipatorSpec { channels: vec![(gamma, c)] }).unwrap();
        let one = DensityMatrix::from_pure(&StateVector::basis(3, 1).unwrap()).unwrap();
        let t = 1.7;
        for m in [Method::Expm, Method::Rk4] {
            let out = propagate(&one, &l, t, m).unwrap();
            assert_abs_diff_eq!(out.matrix()[[1, 1]].re, (-gamma * t).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn drift_correction_restores_invariants() {
        let mut m = DensityMatrix::from_pure(&coherent_state(re(0.5), 4).unwrap())
            .unwrap()
            .into_matrix();
        m[[0, 1]] += Complex64::new(1e-6, 0.0);
        m[[2, 2]] += re(1e-6);
        let mut rho = DensityMatrix::from_matrix(m).unwrap();
        let (tr, herm) = rho.correct_drift().unwrap();
        assert!(tr > 1e-7 && herm > 1e-7);
        assert!(rho.hermiticity_residual() < 1e-15);
        assert!((rho.trace() - ONE).norm() < 1e-15);
    }

    #[test]
    fn positivity_violation_is_reported() {
        let flip = Array2::from_shape_vec((2, 2), vec![re(2.0), ZERO, ZERO, re(-1.0)]).unwrap();
        let map = Array2::from_diag(&Array1::from(vec![re(1.0), ZERO, ZERO, re(1.0)]));
        let p = Propagator::Dense { dim: 2, map };
        let rho = DensityMatrix::from_matrix(flip).unwrap();
        assert!(matches!(p.apply(&rho), Err(Error::Numerical(_))));
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = DensityMatrix::from_pure(&StateVector::basis(3, 0).unwrap()).unwrap();
        let b = DensityMatrix::from_pure(&StateVector::basis(3, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(a.trace_distance(&b).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.trace_distance(&a).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn evolve_empty_and_zero_duration() {
        let (p, d, diss) = small_setup();
        let h_on = model::hamiltonian_rotframe(&p, &d, true).unwrap();
        let h_off = model::hamiltonian_rotframe(&p, &d, false).unwrap();
        let rho = model::initial_state(&p).unwrap();
        let empty = evolve(&PulseSchedule::default(), &rho, &h_on, &h_off, &diss, EvolveOptions::default()).unwrap();
        assert_eq!(empty.samples.len(), 1);
        assert!(empty.snapshots.is_empty());
        let zero = PulseSchedule {
            segments: vec![Segment {
                t_start: 0.0,
                duration: 0.0,
                drive_on: true,
                step: 1,
            }],
        };
        let t = evolve(&zero, &rho, &h_on, &h_off, &diss, EvolveOptions::default()).unwrap();
        assert_eq!(t.samples.len(), 1);
    }

    #[test]
    fn evolve_samples_and_snapshots() {
        let (p, d, diss) = small_setup();
        let schedule = model::pulse_schedule(&p, &d).unwrap();
        let h_on = model::hamiltonian_rotframe(&p, &d, true).unwrap();
        let h_off = model::hamiltonian_rotframe(&p, &d, false).unwrap();
        let rho = model::initial_state(&p).unwrap();
        let opts = EvolveOptions {
            samples_per_segment: 3,
            ..EvolveOptions::default()
        };
        let t = evolve(&schedule, &rho, &h_on, &h_off, &diss, opts).unwrap();
        assert_eq!(t.samples.len(), 1 + 4 * 3);
        assert_eq!(t.snapshots.len(), 2);
        assert_abs_diff_eq!(t.snapshots[1].t, 2.0 * d.t_p, epsilon = 1e-12);
        for w in t.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        assert!(t.max_trace_error < 1e-8);
        assert!(t.max_hermiticity < 1e-10);
        assert!(t.min_eigenvalue > -1e-7);
    }

    #[test]
    fn propagation_errors_carry_segment_index() {
        let (p, d, diss) = small_setup();
        let h_on = model::hamiltonian_rotframe(&p, &d, true).unwrap();
        let h_off = model::hamiltonian_rotframe(&p, &d, false).unwrap();
        let rho = model::initial_state(&p).unwrap();
        let bad = PulseSchedule {
            segments: vec![
                Segment { t_start: 0.0, duration: 1.0, drive_on: true, step: 1 },
                Segment { t_start: 1.0, duration: -1.0, drive_on: false, step: 1 },
            ],
        };
        let err = evolve(&bad, &rho, &h_on, &h_off, &diss, EvolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Propagation { segment: 1, .. }));
    }

    #[test]
    fn method_parsing() {
        assert_eq!("rk4".parse::<Method>().unwrap(), Method::Rk4);
        assert_eq!(Method::Expm.to_string(), "expm");
        assert!("euler".parse::<Method>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn random_generators_preserve_trace(
            h in proptest::collection::vec(-1.0f64..1.0, 18),
            x in proptest::collection::vec(-1.0f64..1.0, 18),
            rate in 0.0f64..2.0,
        ) {
            let herm = Array2::from_shape_fn((3, 3), |(i, j)| {
                let (a, b) = (i.min(j), i.max(j));
                let z = Complex64::new(h[3 * a + b], if i == j { 0.0 } else { h[9 + 3 * a + b] });
                if i <= j { z } else { z.conj() }
            });
            let jump = Array2::from_shape_fn((3, 3), |(i, j)| Complex64::new(x[3 * i + j], x[9 + 3 * i + j]));
            let diss = DissipatorSpec { channels: vec![(rate, OperatorMatrix::from_dense(jump))] };
            let l = liouvillian(&OperatorMatrix::from_dense(herm), &diss).unwrap();
            prop_assert!(l.trace_preservation_residual() < 1e-12);
        }

        #[test]
        fn semigroup_on_random_times(t1 in 0.0f64..3.0, t2 in 0.0f64..3.0) {
            let (p, d, diss) = small_setup();
            let l = liouvillian(&model::hamiltonian_rotframe(&p, &d, false).unwrap(), &diss).unwrap();
            let rho = model::initial_state(&p).unwrap();
            let whole = propagate(&rho, &l, t1 + t2, Method::Expm).unwrap();
            let split = propagate(&propagate(&rho, &l, t1, Method::Expm).unwrap(), &l, t2, Method::Expm).unwrap();
            prop_assert!(linalg::max_abs(&(whole.matrix() - split.matrix())) < 1e-9);
        }
    }
}
