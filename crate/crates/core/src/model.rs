//! Physical parameters, the rotating-frame and effective Hamiltonians, the
//! dissipation channels, the square-wave pulse schedule and the initial state.
//!
//! Configured frequencies are `ν = ω/2π` in GHz. Everything internal is
//! angular (rad/ns) and times are in ns.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{re, ONE};
use crate::operators::{self, OperatorMatrix, StateVector};
use crate::solver::DensityMatrix;

pub const TWO_PI: f64 = 2.0 * PI;

/// Minimum `|Δ|/η` before the dispersive treatment is flagged.
pub const DISPERSIVE_RATIO: f64 = 10.0;

/// `|α|²/fock_dim` above which truncation is flagged.
pub const TRUNCATION_RATIO: f64 = 0.5;

/// Which Rabi frequency sets the coin pulse length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RabiConvention {
    /// `Ω_R = 2ηε₀/Δ`, the coefficient of `σ_x` in the effective Hamiltonian.
    #[default]
    Coupling,
    /// `Ω_R0 = 2πε₀/Δ`.
    Bare,
}

/// Position of the drive-on segment inside each walk step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SegmentOrder {
    #[default]
    DriveFirst,
    DriveLast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub nu_q: f64,
    pub nu_d_split: f64,
    pub nu_eta: f64,
    pub nu_eps0: f64,
    pub gamma1: f64,
    pub gamma_phi: f64,
    pub gamma_c: f64,
    pub alpha: Complex64,
    pub d_sites: usize,
    pub fock_dim: usize,
    pub n_steps: usize,
    pub m_phase: usize,
    #[serde(default)]
    pub rabi_convention: RabiConvention,
    #[serde(default)]
    pub segment_order: SegmentOrder,
}

impl PhysicalParams {
    /// Parameters of the ballistic-walk demonstration.
    pub fn base() -> Self {
        Self {
            nu_q: 7.0,
            nu_d_split: 2.87,
            nu_eta: 0.1,
            nu_eps0: 1.0,
            gamma1: 0.02e-3,
            gamma_phi: 0.31e-3,
            gamma_c: 0.1e-3,
            alpha: re(3.0),
            d_sites: 16,
            fock_dim: 17,
            n_steps: 8,
            m_phase: 256,
            rabi_convention: RabiConvention::Coupling,
            segment_order: SegmentOrder::DriveFirst,
        }
    }

    /// Strong drive with lossy quasimagnons.
    pub fn realistic() -> Self {
        Self {
            nu_eps0: 10.0,
            gamma_c: 2.78e-3,
            n_steps: 4,
            ..Self::base()
        }
    }

    /// `realistic` with the larger qubit relaxation rate.
    pub fn realistic_fast_relaxation() -> Self {
        Self {
            gamma1: 0.31e-3,
            ..Self::realistic()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "base" => Ok(Self::base()),
            "realistic" => Ok(Self::realistic()),
            "realistic-gamma1" | "realistic_gamma1" => Ok(Self::realistic_fast_relaxation()),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected base, realistic or realistic-gamma1)"
            ))),
        }
    }

    pub const PRESETS: [&'static str; 3] = ["base", "realistic", "realistic-gamma1"];

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("nu_q", self.nu_q),
            ("nu_d_split", self.nu_d_split),
            ("nu_eta", self.nu_eta),
            ("nu_eps0", self.nu_eps0),
            ("gamma1", self.gamma1),
            ("gamma_phi", self.gamma_phi),
            ("gamma_c", self.gamma_c),
            ("alpha.re", self.alpha.re),
            ("alpha.im", self.alpha.im),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma_phi", self.gamma_phi),
            ("gamma_c", self.gamma_c),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} is negative")));
            }
        }
        if self.fock_dim < 2 {
            return Err(Error::InvalidDimension {
                what: "Fock space",
                dim: self.fock_dim,
            });
        }
        if self.d_sites < 2 {
            return Err(Error::InvalidParameter(format!(
                "d_sites = {} must be at least 2",
                self.d_sites
            )));
        }
        if self.alpha.norm_sqr() >= self.fock_dim as f64 {
            return Err(Error::InvalidParameter(format!(
                "|alpha|^2 = {} does not fit in {} Fock levels",
                self.alpha.norm_sqr(),
                self.fock_dim
            )));
        }
        if self.nu_eta == 0.0 {
            return Err(Error::InvalidParameter("nu_eta must be nonzero".into()));
        }
        if self.nu_q == self.nu_d_split {
            return Err(Error::InvalidParameter("qubit is resonant with the ensemble".into()));
        }
        Ok(())
    }

    pub fn composite_dim(&self) -> usize {
        2 * self.fock_dim
    }
}

/// Quantities derived from [`PhysicalParams`], all angular unless prefixed `nu_`.
///
/// `delta` is the signed splitting `D − ω_q`. The dispersive coefficients are
/// formed with the qubit-minus-ensemble detuning `ω_q − D = −delta`, which is
/// the combination `δ_c − δ_d` that survives in the rotating frame and makes
/// the canonical transformation cancel the first-order coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub delta: f64,
    pub chi: f64,
    pub omega_r: f64,
    pub omega_d: f64,
    pub nu_d: f64,
    pub delta_c: f64,
    pub delta_d: f64,
    pub eta: f64,
    pub eps0: f64,
    pub omega_p: f64,
    pub t_h: f64,
    pub t_p: f64,
    pub n_bar: f64,
    pub warnings: Vec<String>,
}

impl DerivedParams {
    pub fn dispersive_detuning(&self) -> f64 {
        -self.delta
    }
}

pub fn derive(p: &PhysicalParams) -> Result<DerivedParams> {
    p.validate()?;
    let omega_q = TWO_PI * p.nu_q;
    let d_split = TWO_PI * p.nu_d_split;
    let eta = TWO_PI * p.nu_eta;
    let eps0 = TWO_PI * p.nu_eps0;
    let delta = d_split - omega_q;
    let detuning = omega_q - d_split;
    let chi = eta * eta / detuning;
    let omega_r = 2.0 * eta * eps0 / detuning;
    let n_bar = p.alpha.norm_sqr();
    let omega_d = (2.0 * n_bar + 1.0) * chi + omega_q - omega_r;

    let pulse_rabi = match p.rabi_convention {
        RabiConvention::Coupling => omega_r.abs(),
        RabiConvention::Bare => (TWO_PI * eps0 / delta).abs(),
    };
    let omega_p = chi.abs() * p.d_sites as f64;
    let t_h = PI / (2f64.sqrt() * pulse_rabi);
    let t_p = TWO_PI / omega_p;
    if !(t_h < t_p) {
        return Err(Error::ScheduleInfeasible { t_h, t_p });
    }

    let mut warnings = Vec::new();
    if n_bar > TRUNCATION_RATIO * p.fock_dim as f64 {
        warnings.push(format!(
            "|alpha|^2 = {n_bar} exceeds {TRUNCATION_RATIO} * fock_dim; the coherent state is noticeably truncated"
        ));
    }
    if delta.abs() < DISPERSIVE_RATIO * eta {
        warnings.push(format!(
            "|Delta|/eta = {:.3} is below {DISPERSIVE_RATIO}; dispersive treatment is marginal",
            delta.abs() / eta
        ));
    }

    Ok(DerivedParams {
        delta,
        chi,
        omega_r,
        omega_d,
        nu_d: omega_d / TWO_PI,
        delta_c: omega_d - d_split,
        delta_d: omega_d - omega_q,
        eta,
        eps0,
        omega_p,
        t_h,
        t_p,
        n_bar,
        warnings,
    })
}

/// Operators lifted to the qubit ⊗ boson space.
#[derive(Debug, Clone)]
pub struct CompositeOps {
    pub fock_dim: usize,
    pub c: OperatorMatrix,
    pub c_dag: OperatorMatrix,
    pub n: OperatorMatrix,
    pub sigma_x: OperatorMatrix,
    pub sigma_z: OperatorMatrix,
    pub raising: OperatorMatrix,
    pub lowering: OperatorMatrix,
    pub identity: OperatorMatrix,
}

impl CompositeOps {
    pub fn new(fock_dim: usize) -> Result<Self> {
        let q = operators::qubit_operators();
        let i2 = OperatorMatrix::identity(2);
        let ib = OperatorMatrix::identity(fock_dim);
        let c = operators::tensor(&i2, &operators::annihilation(fock_dim)?);
        let c_dag = c.adjoint();
        Ok(Self {
            fock_dim,
            n: c_dag.matmul(&c),
            c,
            c_dag,
            sigma_x: operators::tensor(&q.sigma_x, &ib),
            sigma_z: operators::tensor(&q.sigma_z, &ib),
            raising: operators::tensor(&q.raising, &ib),
            lowering: operators::tensor(&q.lowering, &ib),
            identity: OperatorMatrix::identity(2 * fock_dim),
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.fock_dim
    }

    fn drive(&self, eps: f64) -> OperatorMatrix {
        self.c.add(&self.c_dag).scale(re(eps))
    }

    fn detunings(&self, delta_c: f64, delta_d: f64) -> OperatorMatrix {
        self.n
            .scale(re(-delta_c))
            .add(&self.sigma_z.scale(re(-delta_d / 2.0)))
    }

    /// `η(c†σ_− + cσ_+)` with unit transition operators.
    pub fn exchange(&self, eta: f64) -> OperatorMatrix {
        self.c_dag
            .matmul(&self.lowering)
            .add(&self.c.matmul(&self.raising))
            .scale(re(eta))
    }
}

/// `H = −δ_c c†c − δ_d σ_z/2 + η(c†σ_− + cσ_+) + ε(c + c†)`, drive term only
/// when `drive_on`.
pub fn hamiltonian_rotframe(
    p: &PhysicalParams,
    d: &DerivedParams,
    drive_on: bool,
) -> Result<OperatorMatrix> {
    let ops = CompositeOps::new(p.fock_dim)?;
    Ok(rotframe_with(&ops, d.delta_c, d.delta_d, d.eta, if drive_on { d.eps0 } else { 0.0 }))
}

pub(crate) fn rotframe_with(
    ops: &CompositeOps,
    delta_c: f64,
    delta_d: f64,
    eta: f64,
    eps: f64,
) -> OperatorMatrix {
    let mut h = ops.detunings(delta_c, delta_d).add(&ops.exchange(eta));
    if eps != 0.0 {
        h = h.add(&ops.drive(eps));
    }
    h
}

/// Second-order effective Hamiltonian
/// `χc†cσ_z + (Ω_R/2)σ_x + ε(c + c†) − δ_c c†c − (δ_d/2)σ_z + (χ/2)(1 + σ_z)`.
/// Not used for dynamics.
pub fn hamiltonian_effective(
    p: &PhysicalParams,
    d: &DerivedParams,
    drive_on: bool,
) -> Result<OperatorMatrix> {
    let ops = CompositeOps::new(p.fock_dim)?;
    let (eps, omega_r) = if drive_on {
        (d.eps0, d.omega_r)
    } else {
        (0.0, 0.0)
    };
    Ok(effective_with(&ops, d.delta_c, d.delta_d, d.chi, omega_r, eps))
}

pub(crate) fn effective_with(
    ops: &CompositeOps,
    delta_c: f64,
    delta_d: f64,
    chi: f64,
    omega_r: f64,
    eps: f64,
) -> OperatorMatrix {
    let mut h = ops
        .n
        .matmul(&ops.sigma_z)
        .scale(re(chi))
        .add(&ops.detunings(delta_c, delta_d))
        .add(&ops.identity.add(&ops.sigma_z).scale(re(chi / 2.0)));
    if omega_r != 0.0 {
        h = h.add(&ops.sigma_x.scale(re(omega_r / 2.0)));
    }
    if eps != 0.0 {
        h = h.add(&ops.drive(eps));
    }
    h
}

/// `(Ω_R/2)(σ_x + σ_z)` on the qubit alone.
pub fn coin_hamiltonian(d: &DerivedParams) -> OperatorMatrix {
    coin_with(d.omega_r)
}

pub fn coin_with(omega_r: f64) -> OperatorMatrix {
    let q = operators::qubit_operators();
    q.sigma_x.add(&q.sigma_z).scale(re(omega_r / 2.0))
}

/// Lindblad channels as `(angular rate, jump operator)`.
#[derive(Debug, Clone, Default)]
pub struct DissipatorSpec {
    pub channels: Vec<(f64, OperatorMatrix)>,
}

impl DissipatorSpec {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn total_rate(&self) -> f64 {
        self.channels.iter().map(|(r, _)| r).sum()
    }
}

/// `(Γ, 1⊗c)`, `(γ₁, σ_−⊗1)`, `(γ_φ/2, σ_z⊗1)`.
pub fn dissipators(p: &PhysicalParams) -> Result<DissipatorSpec> {
    for (name, v) in [
        ("gamma_c", p.gamma_c),
        ("gamma1", p.gamma1),
        ("gamma_phi", p.gamma_phi),
    ] {
        if !(v >= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {v} must be non-negative")));
        }
    }
    let ops = CompositeOps::new(p.fock_dim)?;
    Ok(DissipatorSpec {
        channels: vec![
            (TWO_PI * p.gamma_c, ops.c),
            (TWO_PI * p.gamma1, ops.lowering),
            (TWO_PI * p.gamma_phi / 2.0, ops.sigma_z),
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub duration: f64,
    pub drive_on: bool,
    /// Walk step this segment belongs to, counted from 1.
    pub step: usize,
}

impl Segment {
    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn n_steps(&self) -> usize {
        self.segments.last().map_or(0, |s| s.step)
    }
}

/// `n_steps` walk steps, each a drive-on segment of `t_H` and a drive-off
/// segment of `t_p − t_H`.
pub fn pulse_schedule(p: &PhysicalParams, d: &DerivedParams) -> Result<PulseSchedule> {
    if !(d.t_h < d.t_p) || d.t_h <= 0.0 {
        return Err(Error::ScheduleInfeasible { t_h: d.t_h, t_p: d.t_p });
    }
    let on = (d.t_h, true);
    let off = (d.t_p - d.t_h, false);
    let order = match p.segment_order {
        SegmentOrder::DriveFirst => [on, off],
        SegmentOrder::DriveLast => [off, on],
    };
    let mut segments = Vec::with_capacity(2 * p.n_steps);
    for step in 0..p.n_steps {
        // Anchor each step at an exact multiple of t_p to avoid accumulating drift.
        let mut t = step as f64 * d.t_p;
        for (duration, drive_on) in order {
            segments.push(Segment {
                t_start: t,
                duration,
                drive_on,
                step: step + 1,
            });
            t += duration;
        }
    }
    Ok(PulseSchedule { segments })
}

/// `|α⟩ ⊗ (|g⟩ + i|e⟩)/√2` as a density matrix, ordered qubit ⊗ boson.
pub fn initial_state(p: &PhysicalParams) -> Result<DensityMatrix> {
    let boson = operators::coherent_state(p.alpha, p.fock_dim)?;
    let mut q = ndarray::Array1::zeros(2);
    q[operators::EXCITED] = Complex64::new(0.0, 1.0);
    q[operators::GROUND] = ONE;
    let qubit = StateVector::new(q)?;
    DensityMatrix::from_pure(&qubit.tensor(&boson))
}
