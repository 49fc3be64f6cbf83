//! Reported quantities: quasimagnon number, qubit populations, the reduced
//! boson state, its phase distribution and Holevo spread, the Wigner function
//! and the log-log spreading fit.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::solver::{DensityMatrix, Sample, Trajectory};

/// Phase probabilities in `[−PHASE_CLAMP, 0)` are rounding noise and set to 0.
pub const PHASE_CLAMP: f64 = 1e-12;
/// Below this sharpness σ_H is treated as undefined.
pub const FLAT_SHARPNESS: f64 = 1e-9;

fn check_composite(rho: &DensityMatrix, fock_dim: usize) -> Result<()> {
    if rho.dim() != 2 * fock_dim {
        return Err(Error::DimensionMismatch {
            expected: 2 * fock_dim,
            found: rho.dim(),
        });
    }
    Ok(())
}

/// `Tr(ρ (1 ⊗ c†c))`.
pub fn mean_number(rho: &DensityMatrix, fock_dim: usize) -> Result<f64> {
    check_composite(rho, fock_dim)?;
    let m = rho.matrix();
    Ok((0..rho.dim()).map(|k| (k % fock_dim) as f64 * m[[k, k]].re).sum())
}

/// `(P_e, P_g) = ((1 + ⟨σ_z⟩)/2, (1 − ⟨σ_z⟩)/2)`.
pub fn qubit_populations(rho: &DensityMatrix, fock_dim: usize) -> Result<(f64, f64)> {
    check_composite(rho, fock_dim)?;
    let m = rho.matrix();
    let pe: f64 = (0..fock_dim).map(|n| m[[n, n]].re).sum();
    let pg: f64 = (fock_dim..2 * fock_dim).map(|n| m[[n, n]].re).sum();
    let sz = pe - pg;
    let tr = pe + pg;
    Ok(((tr + sz) / 2.0, (tr - sz) / 2.0))
}

/// Partial trace over the qubit.
pub fn reduce_boson(rho: &DensityMatrix, fock_dim: usize) -> Result<DensityMatrix> {
    check_composite(rho, fock_dim)?;
    let m = rho.matrix();
    DensityMatrix::from_matrix(Array2::from_shape_fn((fock_dim, fock_dim), |(a, b)| {
        m[[a, b]] + m[[fock_dim + a, fock_dim + b]]
    }))
}

/// Probabilities on the uniform grid `φ_k = −π + 2πk/M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDistribution {
    pub phi: Vec<f64>,
    pub p: Vec<f64>,
}

pub fn phase_grid(m: usize) -> Vec<f64> {
    (0..m).map(|k| -PI + 2.0 * PI * k as f64 / m as f64).collect()
}

/// Sums along the sub-diagonals, `S_d = Σ_n ρ_{n+d, n}` for `d ≥ 0`.
fn diagonal_sums(rho: &Array2<Complex64>) -> Vec<Complex64> {
    let f = rho.nrows();
    (0..f)
        .map(|d| (0..f - d).map(|n| rho[[n + d, n]]).sum())
        .collect()
}

/// `P(φ_k) = ⟨φ_k|ρ_m|φ_k⟩ = (1/M) Σ_{mn} e^{i(n−m)φ_k} ρ_{mn}` with the
/// phase states `|φ⟩ = M^{−1/2} Σ_n e^{inφ}|n⟩`.
pub fn phase_distribution(rho_m: &DensityMatrix, m: usize) -> Result<PhaseDistribution> {
    let f = rho_m.dim();
    if m < f {
        return Err(Error::Resolution { m, fock_dim: f });
    }
    let s = diagonal_sums(rho_m.matrix());
    let phi = phase_grid(m);
    let mut p = Vec::with_capacity(m);
    for &x in &phi {
        // S_{−d} = conj(S_d) for Hermitian ρ, so the sum folds onto d ≥ 0.
        let mut acc = s[0].re;
        for (d, sd) in s.iter().enumerate().skip(1) {
            acc += 2.0 * (sd * Complex64::from_polar(1.0, -(d as f64) * x)).re;
        }
        let mut v = acc / m as f64;
        if v < 0.0 {
            if v < -PHASE_CLAMP {
                return Err(Error::Numerical(format!(
                    "phase probability {v:.3e} at φ = {x:.4} is negative"
                )));
            }
            v = 0.0;
        }
        p.push(v);
    }
    Ok(PhaseDistribution { phi, p })
}

/// `⟨e^{iφ}⟩ = Σ_n ρ_{n+1,n}`, the closed form of the grid average.
pub fn mean_phasor_direct(rho_m: &DensityMatrix) -> Complex64 {
    let m = rho_m.matrix();
    (0..m.nrows().saturating_sub(1)).map(|n| m[[n + 1, n]]).sum()
}

impl PhaseDistribution {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// `Σ_k P(φ_k) e^{iφ_k}`.
    pub fn mean_phasor(&self) -> Complex64 {
        self.phi
            .iter()
            .zip(&self.p)
            .map(|(x, p)| Complex64::from_polar(*p, *x))
            .sum()
    }

    pub fn circular_mean(&self) -> f64 {
        self.mean_phasor().arg()
    }

    pub fn peak(&self) -> f64 {
        let (k, _) = self
            .p
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bk, bv), (k, &v)| if v > bv { (k, v) } else { (bk, bv) });
        self.phi[k]
    }

    /// Third central moment of the deviation from the circular mean, with
    /// the deviation wrapped into `[−π, π)`.
    pub fn circular_third_moment(&self) -> f64 {
        let mu = self.circular_mean();
        self.phi
            .iter()
            .zip(&self.p)
            .map(|(x, p)| p * wrap(x - mu).powi(3))
            .sum()
    }

    /// Probabilities divided by the grid spacing.
    pub fn density(&self) -> Vec<f64> {
        let scale = self.len() as f64 / (2.0 * PI);
        self.p.iter().map(|p| p * scale).collect()
    }
}

/// Wraps an angle into `[−π, π)`.
pub fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI { y - 2.0 * PI } else { y }
}

/// `(|⟨e^{iφ}⟩|, √(|⟨e^{iφ}⟩|^{−2} − 1))`.
pub fn sharpness_holevo(p: &PhaseDistribution) -> Result<(f64, f64)> {
    sharpness_to_holevo(p.mean_phasor().norm())
}

pub fn sharpness_to_holevo(sharpness: f64) -> Result<(f64, f64)> {
    if !(sharpness >= FLAT_SHARPNESS) {
        return Err(Error::FlatDistribution { sharpness });
    }
    let s = sharpness.min(1.0);
    Ok((sharpness, (1.0 / (s * s) - 1.0).max(0.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl Default for WignerGridSpec {
    fn default() -> Self {
        Self::square(4.5, 101)
    }
}

impl WignerGridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            nx: points,
            p_min: -half_width,
            p_max: half_width,
            np: points,
        }
    }

    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![min];
        }
        (0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.np == 0 {
            return Err(Error::InvalidParameter("Wigner grid needs at least one point per axis".into()));
        }
        if !(self.x_max >= self.x_min && self.p_max >= self.p_min) {
            return Err(Error::InvalidParameter("Wigner grid bounds are reversed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// `w[[i, j]]` at `(x[i], p[j])`.
    pub w: Array2<f64>,
}

impl WignerGrid {
    fn spacing(axis: &[f64]) -> f64 {
        if axis.len() > 1 { axis[1] - axis[0] } else { 1.0 }
    }

    /// `Σ W Δx Δp`.
    pub fn riemann_sum(&self) -> f64 {
        self.w.sum() * Self::spacing(&self.x) * Self::spacing(&self.p)
    }

    pub fn peak(&self) -> (f64, f64, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for ((i, j), &v) in self.w.indexed_iter() {
            if v > best.2 {
                best = (i, j, v);
            }
        }
        (self.x[best.0], self.p[best.1], best.2)
    }

    /// `∫ W dp` at each `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = Self::spacing(&self.p);
        self.w.rows().into_iter().map(|r| r.sum() * dp).collect()
    }
}

/// Generalised Laguerre values `L_l^{(k)}(x)` for `l = 0..=l_max`.
fn laguerre(l_max: usize, k: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(1.0);
    if l_max >= 1 {
        out.push(1.0 + k as f64 - x);
    }
    for l in 1..l_max {
        let lf = l as f64;
        let next = ((2.0 * lf + 1.0 + k as f64 - x) * out[l] - (lf + k as f64) * out[l - 1]) / (lf + 1.0);
        out.push(next);
    }
    out
}

/// Displacement matrix elements `⟨n|D(β)|m⟩` of the untruncated operator
/// for `n, m < dim`.
pub fn displacement_elements(beta: Complex64, dim: usize) -> Array2<Complex64> {
    let x = beta.norm_sqr();
    let gauss = (-x / 2.0).exp();
    let mut out = Array2::zeros((dim, dim));
    // sqrt(l!/(l+k)!) built incrementally.
    for k in 0..dim {
        let lag = laguerre(dim - 1 - k, k, x);
        let up = beta.powu(k as u32);
        let down = (-beta.conj()).powu(k as u32);
        let mut ratio = 1.0 / (1..=k).map(|j| (j as f64).sqrt()).product::<f64>();
        for l in 0..dim - k {
            if l > 0 {
                ratio *= (l as f64 / (l + k) as f64).sqrt();
            }
            let common = ratio * gauss * lag[l];
            // n = l + k ≥ m = l
            out[[l + k, l]] = up * common;
            if k > 0 {
                out[[l, l + k]] = down * common;
            }
        }
    }
    out
}

/// `W(α) = (2/π) Tr[ρ D(α) Π D†(α)] = (2/π) Σ_{mn} ρ_{mn} (−1)^m ⟨n|D(2α)|m⟩`.
pub fn wigner_point(rho_m: &DensityMatrix, alpha: Complex64) -> f64 {
    let f = rho_m.dim();
    let d = displacement_elements(alpha * 2.0, f);
    let r = rho_m.matrix();
    let mut acc = ZERO;
    for m in 0..f {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..f {
            acc += r[[m, n]] * d[[n, m]] * sign;
        }
    }
    2.0 / PI * acc.re
}

pub fn wigner(rho_m: &DensityMatrix, spec: &WignerGridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let x = WignerGridSpec::axis(spec.x_min, spec.x_max, spec.nx);
    let p = WignerGridSpec::axis(spec.p_min, spec.p_max, spec.np);
    let mut w = Array2::zeros((x.len(), p.len()));
    for (i, xi) in x.iter().enumerate() {
        for (j, pj) in p.iter().enumerate() {
            w[[i, j]] = wigner_point(rho_m, Complex64::new(*xi, *pj));
        }
    }
    Ok(WignerGrid { x, p, w })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadPoint {
    pub step: usize,
    pub t: f64,
    pub sharpness: f64,
    pub sigma_h: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpreadSeries {
    pub points: Vec<SpreadPoint>,
}

impl SpreadSeries {
    /// Holevo spread at every step-boundary snapshot of `traj`.
    pub fn from_trajectory(traj: &Trajectory, fock_dim: usize, m_phase: usize) -> Result<Self> {
        let mut points = Vec::with_capacity(traj.snapshots.len());
        for snap in &traj.snapshots {
            let dist = phase_distribution(&reduce_boson(&snap.rho, fock_dim)?, m_phase)?;
            let (sharpness, sigma_h) = sharpness_holevo(&dist)?;
            points.push(SpreadPoint {
                step: snap.step,
                t: snap.t,
                sharpness,
                sigma_h,
            });
        }
        Ok(Self { points })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// Standard error of the slope from the regression residuals; zero for
    /// a two-point fit.
    pub stderr: f64,
    pub intercept: f64,
    pub points_used: usize,
}

/// Ordinary least squares of `ln σ_H` against `ln t` over the first `first_k`
/// points.
pub fn loglog_slope(series: &SpreadSeries, first_k: usize) -> Result<SlopeFit> {
    if first_k < 2 {
        return Err(Error::FitDomain(format!("need at least 2 points, got {first_k}")));
    }
    if series.points.len() < first_k {
        return Err(Error::FitDomain(format!(
            "series has {} points, fit needs {first_k}",
            series.points.len()
        )));
    }
    let pts = &series.points[..first_k];
    for (k, w) in pts.windows(2).enumerate() {
        if w[1].step != w[0].step + 1 {
            return Err(Error::FitDomain(format!("step indices not consecutive at position {}", k + 1)));
        }
    }
    let mut xs = Vec::with_capacity(first_k);
    let mut ys = Vec::with_capacity(first_k);
    for pt in pts {
        if !(pt.sigma_h > 0.0 && pt.sigma_h.is_finite()) {
            return Err(Error::FitDomain(format!("sigma_H = {} at step {}", pt.sigma_h, pt.step)));
        }
        if !(pt.t > 0.0 && pt.t.is_finite()) {
            return Err(Error::FitDomain(format!("time {} at step {}", pt.t, pt.step)));
        }
        xs.push(pt.t.ln());
        ys.push(pt.sigma_h.ln());
    }
    let n = first_k as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitDomain("times are not distinct".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if first_k > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
        points_used: first_k,
    })
}

fn sample_variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Per-segment sample variance of `⟨n_c⟩`, each segment including the sample
/// at its start.
pub fn segment_number_variances(samples: &[Sample]) -> Vec<(usize, bool, f64)> {
    let mut out = Vec::new();
    let mut k = 1;
    while k < samples.len() {
        let Some(seg) = samples[k].segment else {
            k += 1;
            continue;
        };
        let start = k - 1;
        while k < samples.len() && samples[k].segment == Some(seg) {
            k += 1;
        }
        let values: Vec<f64> = samples[start..k].iter().map(|s| s.n_c).collect();
        out.push((seg, samples[k - 1].drive_on, sample_variance(&values)));
    }
    out
}

/// Mean per-segment variance of `⟨n_c⟩` over drive-on and drive-off segments.
pub fn drive_variance_split(samples: &[Sample]) -> (f64, f64) {
    let vars = segment_number_variances(samples);
    let mean = |on: bool| {
        let v: Vec<f64> = vars.iter().filter(|s| s.1 == on).map(|s| s.2).collect();
        if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 }
    };
    (mean(true), mean(false))
}

/// Trapezoidal time average of `⟨n_c⟩` over `[t0, t1]`, using the samples
/// that fall in the window.
pub fn time_average_number(samples: &[Sample], t0: f64, t1: f64) -> Result<f64> {
    let tol = 1e-9 * t1.abs().max(1.0);
    let window: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.t >= t0 - tol && s.t <= t1 + tol)
        .collect();
    if window.len() < 2 {
        return Err(Error::InvalidParameter(format!("fewer than two samples in [{t0}, {t1}]")));
    }
    let mut area = 0.0;
    for w in window.windows(2) {
        area += 0.5 * (w[0].n_c + w[1].n_c) * (w[1].t - w[0].t);
    }
    Ok(area / (window.last().unwrap().t - window[0].t))
}
