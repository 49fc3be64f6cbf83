//! Numerical checks of the operator algebra behind the model: Hubbard
//! operators of the spin-1 ensemble and their Schwinger-boson form, the
//! contraction of SU(3) onto the quasimagnon algebra, decoupling of the
//! quasimagnon modes, the inhomogeneous collective mode, and the canonical
//! transformation that yields the dispersive Hamiltonian.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, re, ONE};
use crate::model::{self, CompositeOps, PhysicalParams};
use crate::operators::OperatorMatrix;
use crate::sparse::CsrMatrix;

/// Tolerance for exact operator identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Minimum log-log slope of the canonical-transformation residual.
pub const FROHLICH_MIN_SLOPE: f64 = 1.9;
/// Relative tolerance on the induced `σ_x` coefficient.
pub const RABI_PROJECTION_TOL: f64 = 0.05;
/// Allowed relative departure of the one-excitation deviation ratio from 2.
pub const CONTRACTION_RATIO_TOL: f64 = 0.1;
pub const MAX_ENSEMBLE_SITES: usize = 4;
pub const MAX_FROHLICH_FOCK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// Passes when the value is below the tolerance.
    Below,
    /// Passes when the value is at least the tolerance.
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl ResidualReport {
    pub fn below(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            bound: Bound::Below,
            passed: residual >= 0.0 && residual < tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            residual: value,
            tolerance: threshold,
            bound: Bound::AtLeast,
            passed: value >= threshold,
        }
    }

    pub fn line(&self) -> String {
        let op = match self.bound {
            Bound::Below => "<",
            Bound::AtLeast => ">=",
        };
        format!(
            "{:<44} {:>12.4e} {op} {:<10.3e} {}",
            self.name,
            self.residual,
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

fn op_norm(a: &OperatorMatrix) -> f64 {
    if a.nnz() == 0 {
        return 0.0;
    }
    a.operator_norm()
}

fn diag_projector(dim: usize, keep: impl Fn(usize) -> bool) -> OperatorMatrix {
    OperatorMatrix::from_sparse(CsrMatrix::from_triplets(
        dim,
        dim,
        (0..dim).filter(|&k| keep(k)).map(|k| (k, k, ONE)).collect(),
    ))
}

/// Spin-1 levels in storage order.
pub const LEVELS: [&str; 3] = ["+", "0", "-"];
const PLUS: usize = 0;
const ZERO_LEVEL: usize = 1;
const MINUS: usize = 2;

/// Collective Hubbard operators `X^{mn} = Σ_j |m⟩_j⟨n|_j` on `N` spin-1 sites.
#[derive(Debug, Clone)]
pub struct EnsembleOperators {
    pub n_sites: usize,
    /// `x[m][n]`, levels ordered `+, 0, −`.
    pub x: Vec<Vec<OperatorMatrix>>,
}

impl EnsembleOperators {
    pub fn dim(&self) -> usize {
        3usize.pow(self.n_sites as u32)
    }
}

pub fn hubbard_ensemble(n: usize) -> Result<EnsembleOperators> {
    if n == 0 || n > MAX_ENSEMBLE_SITES {
        return Err(Error::EnsembleSize(n));
    }
    let dim = 3usize.pow(n as u32);
    let mut x = Vec::with_capacity(3);
    for m in 0..3 {
        let mut row = Vec::with_capacity(3);
        for k in 0..3 {
            let mut triplets = Vec::new();
            for idx in 0..dim {
                for site in 0..n {
                    let stride = 3usize.pow((n - 1 - site) as u32);
                    let level = (idx / stride) % 3;
                    if level == k {
                        let target = idx - k * stride + m * stride;
                        triplets.push((target, idx, ONE));
                    }
                }
            }
            row.push(OperatorMatrix::from_sparse(CsrMatrix::from_triplets(dim, dim, triplets)));
        }
        x.push(row);
    }
    Ok(EnsembleOperators { n_sites: n, x })
}

/// Largest `‖[X^{mn}, X^{m'n'}] − δ_{m'n}X^{mn'} + δ_{mn'}X^{m'n}‖` over all pairs.
pub fn hubbard_algebra_residual(x: &[Vec<OperatorMatrix>]) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..3 {
        for n in 0..3 {
            for mp in 0..3 {
                for np in 0..3 {
                    let mut r = x[m][n].commutator(&x[mp][np]);
                    if mp == n {
                        r = r.sub(&x[m][np]);
                    }
                    if m == np {
                        r = r.add(&x[mp][n]);
                    }
                    worst = worst.max(op_norm(&r));
                }
            }
        }
    }
    worst
}

pub fn check_hubbard_algebra(ops: &EnsembleOperators) -> ResidualReport {
    ResidualReport::below(
        format!("hubbard algebra N={}", ops.n_sites),
        hubbard_algebra_residual(&ops.x),
        IDENTITY_TOL,
    )
}

/// Schwinger bosons `X^{mn} = x_m†x_n` on three modes with `max_occupation`
/// quanta each, projected onto the sector with `n_total` quanta.
pub fn schwinger_sector(n_total: usize, max_occupation: usize) -> Result<Vec<Vec<OperatorMatrix>>> {
    if n_total > max_occupation {
        return Err(Error::InvalidParameter(format!(
            "sector N={n_total} does not fit in {max_occupation} quanta per mode"
        )));
    }
    let d = max_occupation + 1;
    let dim = d * d * d;
    let a = crate::operators::annihilation(d)?;
    let id = OperatorMatrix::identity(d);
    let modes = [
        crate::operators::tensor(&crate::operators::tensor(&a, &id), &id),
        crate::operators::tensor(&crate::operators::tensor(&id, &a), &id),
        crate::operators::tensor(&crate::operators::tensor(&id, &id), &a),
    ];
    let p = diag_projector(dim, |k| k / (d * d) + (k / d) % d + k % d == n_total);
    Ok((0..3)
        .map(|m| {
            (0..3)
                .map(|n| p.matmul(&modes[m].adjoint().matmul(&modes[n])).matmul(&p))
                .collect()
        })
        .collect())
}

pub fn check_schwinger_algebra(n_total: usize, max_occupation: usize) -> Result<ResidualReport> {
    let x = schwinger_sector(n_total, max_occupation)?;
    Ok(ResidualReport::below(
        format!("schwinger sector N={n_total}"),
        hubbard_algebra_residual(&x),
        IDENTITY_TOL,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionCheck {
    pub n_sites: usize,
    /// `‖[V_−, U_+] + T_+/N‖`.
    pub identity: ResidualReport,
    /// `(k, ‖([V_−, V_+] − 1)|ψ_k⟩‖)` for `k` sites in `|−⟩`, the rest in `|0⟩`.
    pub deviations: Vec<(usize, f64)>,
}

/// Builds `V_− = X^{0−}/√N`, `U_− = X^{0+}/√N`, `T_− = X^{−+}` and measures
/// the contraction relations on states with up to `trunc` excitations.
pub fn check_contraction(n: usize, trunc: usize) -> Result<ContractionCheck> {
    let ops = hubbard_ensemble(n)?;
    let nf = n as f64;
    let x = &ops.x;
    let v_minus = x[ZERO_LEVEL][MINUS].scale(re(1.0 / nf.sqrt()));
    let u_minus = x[ZERO_LEVEL][PLUS].scale(re(1.0 / nf.sqrt()));
    let t_minus = x[MINUS][PLUS].clone();
    let v_plus = v_minus.adjoint();
    let u_plus = u_minus.adjoint();
    let t_plus = t_minus.adjoint();

    let identity = v_minus.commutator(&u_plus).add(&t_plus.scale(re(1.0 / nf)));
    let identity = ResidualReport::below(
        format!("contraction [V-,U+]+T+/N N={n}"),
        op_norm(&identity),
        IDENTITY_TOL,
    );

    let dim = ops.dim();
    let dev_op = v_minus.commutator(&v_plus).sub(&OperatorMatrix::identity(dim));
    let mut deviations = Vec::new();
    for k in 0..=trunc.min(n) {
        // First k sites in |−⟩, the rest in |0⟩.
        let idx: usize = (0..n)
            .map(|site| {
                let level = if site < k { MINUS } else { ZERO_LEVEL };
                level * 3usize.pow((n - 1 - site) as u32)
            })
            .sum();
        let psi = crate::operators::StateVector::basis(dim, idx)?;
        let out = dev_op.apply(&psi);
        deviations.push((k, out.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()));
    }
    Ok(ContractionCheck {
        n_sites: n,
        identity,
        deviations,
    })
}

/// Tensor-product space of a qubit and `n_modes` bosonic modes, each
/// truncated to occupations 0 and 1.
struct ModeSpace {
    n_modes: usize,
    modes: Vec<OperatorMatrix>,
    raising: OperatorMatrix,
    lowering: OperatorMatrix,
}

impl ModeSpace {
    fn new(n_modes: usize) -> Result<Self> {
        let q = crate::operators::qubit_operators();
        let a = crate::operators::annihilation(2)?.to_sparse();
        let id2 = CsrMatrix::from_triplets(2, 2, vec![(0, 0, ONE), (1, 1, ONE)]);
        let bath_id = (0..n_modes).fold(
            CsrMatrix::from_triplets(1, 1, vec![(0, 0, ONE)]),
            |acc, _| acc.kron(&id2),
        );
        let mut modes = Vec::with_capacity(n_modes);
        for j in 0..n_modes {
            let mut m = id2.clone();
            for k in 0..n_modes {
                m = m.kron(if k == j { &a } else { &id2 });
            }
            modes.push(OperatorMatrix::from_sparse(m));
        }
        Ok(Self {
            n_modes,
            modes,
            raising: OperatorMatrix::from_sparse(q.raising.to_sparse().kron(&bath_id)),
            lowering: OperatorMatrix::from_sparse(q.lowering.to_sparse().kron(&bath_id)),
        })
    }

    fn dim(&self) -> usize {
        2 << self.n_modes
    }

    fn boson_number(&self, idx: usize) -> usize {
        (idx & ((1 << self.n_modes) - 1)).count_ones() as usize
    }

    fn qubit_excited(&self, idx: usize) -> bool {
        idx >> self.n_modes == crate::operators::EXCITED
    }

    fn combine(&self, coeffs: &[f64]) -> OperatorMatrix {
        coeffs
            .iter()
            .zip(&self.modes)
            .filter(|(w, _)| **w != 0.0)
            .fold(OperatorMatrix::zeros(self.dim(), self.dim()), |acc, (w, m)| {
                acc.add(&m.scale(re(*w)))
            })
    }

    /// `σ_+ A + σ_− A†`.
    fn exchange(&self, a: &OperatorMatrix) -> OperatorMatrix {
        self.raising.matmul(a).add(&self.lowering.matmul(&a.adjoint()))
    }

    /// Projector onto boson vacuum, where `[m, m†] = 1` is exact.
    fn vacuum(&self) -> OperatorMatrix {
        diag_projector(self.dim(), |k| self.boson_number(k) == 0)
    }

    /// Projector onto states with at most one excitation counting the qubit.
    fn single_excitation(&self) -> OperatorMatrix {
        diag_projector(self.dim(), |k| {
            self.boson_number(k) + usize::from(self.qubit_excited(k)) <= 1
        })
    }
}

fn normalized(v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0).then(|| v.into_iter().map(|x| x / n).collect())
}

/// Mode coefficients over `(a_1, b_1, …, a_4, b_4)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeBasis {
    pub coupled: Vec<f64>,
    /// Named uncoupled modes; combinations with zero norm are omitted.
    pub uncoupled: Vec<(String, Vec<f64>)>,
}

/// The coupled mode `c` and the uncoupled `d_f`, `d_12`, `d_34`, `d` for class
/// populations `n_f`.
pub fn quasimagnon_modes(n_f: [f64; 4]) -> Result<ModeBasis> {
    if n_f.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter("class populations must be finite and non-negative".into()));
    }
    let total: f64 = n_f.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("total population is zero".into()));
    }
    let s = 1.0 / 2f64.sqrt();
    let c_f = |f: usize| {
        let mut v = vec![0.0; 8];
        v[2 * f] = s;
        v[2 * f + 1] = s;
        v
    };
    let lin = |terms: &[(f64, Vec<f64>)]| {
        let mut v = vec![0.0; 8];
        for (w, t) in terms {
            for (a, b) in v.iter_mut().zip(t) {
                *a += w * b;
            }
        }
        v
    };
    let coupled = (0..8).map(|j| (n_f[j / 2] / (2.0 * total)).sqrt()).collect();
    let mut uncoupled = Vec::new();
    for f in 0..4 {
        let mut v = vec![0.0; 8];
        v[2 * f] = s;
        v[2 * f + 1] = -s;
        uncoupled.push((format!("d_{}", f + 1), v));
    }
    let n12 = n_f[0] + n_f[1];
    let n34 = n_f[2] + n_f[3];
    let pair = |i: usize, j: usize, total: f64| {
        let d = lin(&[(n_f[j].sqrt(), c_f(i)), (-n_f[i].sqrt(), c_f(j))]);
        normalized(d.into_iter().map(|x| x / total.sqrt()).collect())
    };
    if n12 > 0.0 {
        if let Some(v) = pair(0, 1, n12) {
            uncoupled.push(("d_12".into(), v));
        }
    }
    if n34 > 0.0 {
        if let Some(v) = pair(2, 3, n34) {
            uncoupled.push(("d_34".into(), v));
        }
    }
    if n12 > 0.0 && n34 > 0.0 {
        let c12 = lin(&[(n_f[0].sqrt(), c_f(0)), (n_f[1].sqrt(), c_f(1))]);
        let c34 = lin(&[(n_f[2].sqrt(), c_f(2)), (n_f[3].sqrt(), c_f(3))]);
        let c12: Vec<f64> = c12.into_iter().map(|x| x / n12.sqrt()).collect();
        let c34: Vec<f64> = c34.into_iter().map(|x| x / n34.sqrt()).collect();
        let d = lin(&[(n34.sqrt(), c12), (-n12.sqrt(), c34)]);
        uncoupled.push(("d".into(), d.into_iter().map(|x| x / total.sqrt()).collect()));
    }
    Ok(ModeBasis { coupled, uncoupled })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecouplingCheck {
    /// `‖H_int − η(σ_+c + σ_−c†)‖` with `η = √(2N) g`.
    pub interaction: ResidualReport,
    /// Largest `‖[H_int, u†u] P‖` over the uncoupled modes, `P` projecting
    /// onto at most one excitation.
    pub uncoupled: ResidualReport,
    /// `‖([c, c†] − 1) P_0‖` on the boson vacuum.
    pub canonical: ResidualReport,
    /// `‖W Wᵀ − 1‖` for the stacked mode coefficients.
    pub orthonormality: ResidualReport,
}

impl DecouplingCheck {
    pub fn reports(&self) -> [&ResidualReport; 4] {
        [&self.interaction, &self.uncoupled, &self.canonical, &self.orthonormality]
    }
}

pub fn check_mode_decoupling(n_f: [f64; 4], g: f64) -> Result<DecouplingCheck> {
    let basis = quasimagnon_modes(n_f)?;
    let space = ModeSpace::new(8)?;
    let total: f64 = n_f.iter().sum();
    let label = format!("({}, {}, {}, {})", n_f[0], n_f[1], n_f[2], n_f[3]);

    let mut h_int = OperatorMatrix::zeros(space.dim(), space.dim());
    for f in 0..4 {
        let eta_f = g * n_f[f].sqrt();
        if eta_f == 0.0 {
            continue;
        }
        let ab = space.modes[2 * f].add(&space.modes[2 * f + 1]);
        h_int = h_int.add(&space.exchange(&ab).scale(re(eta_f)));
    }
    let c = space.combine(&basis.coupled);
    let eta = (2.0 * total).sqrt() * g;
    let interaction = h_int.sub(&space.exchange(&c).scale(re(eta)));

    let p1 = space.single_excitation();
    let mut worst_uncoupled: f64 = 0.0;
    for (_, coeffs) in &basis.uncoupled {
        let u = space.combine(coeffs);
        let r = h_int.commutator(&u.adjoint().matmul(&u)).matmul(&p1);
        worst_uncoupled = worst_uncoupled.max(op_norm(&r));
    }

    let p0 = space.vacuum();
    let canon = c.commutator(&c.adjoint()).sub(&OperatorMatrix::identity(space.dim())).matmul(&p0);

    let mut rows = vec![basis.coupled.clone()];
    rows.extend(basis.uncoupled.iter().map(|(_, v)| v.clone()));
    let w = Array2::from_shape_fn((rows.len(), 8), |(i, j)| rows[i][j]);
    let gram = w.dot(&w.t());
    let ortho = gram
        .indexed_iter()
        .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    Ok(DecouplingCheck {
        interaction: ResidualReport::below(format!("mode decoupling H_int {label}"), op_norm(&interaction), IDENTITY_TOL),
        uncoupled: ResidualReport::below(format!("mode decoupling [H,u+u] {label}"), worst_uncoupled, IDENTITY_TOL),
        canonical: ResidualReport::below(format!("mode decoupling [c,c+]-1 {label}"), op_norm(&canon), IDENTITY_TOL),
        orthonormality: ResidualReport::below(format!("mode decoupling unitarity {label}"), ortho, IDENTITY_TOL),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InhomogeneousCheck {
    /// `G = √(Σ_f G_f²)`.
    pub g_total: f64,
    /// Coefficients of `c` over `(a_{fi}, b_{fi})` in class-major order.
    pub coefficients: Vec<f64>,
    pub interaction: ResidualReport,
    pub canonical: ResidualReport,
}

/// `couplings[f][i]` is `g_i` of center `i` in class `f`.
pub fn check_inhomogeneous_mode(couplings: &[Vec<f64>]) -> Result<InhomogeneousCheck> {
    let centers: Vec<f64> = couplings.iter().flatten().copied().collect();
    if centers.is_empty() || centers.len() > MAX_ENSEMBLE_SITES {
        return Err(Error::InvalidParameter(format!(
            "need 1 to {MAX_ENSEMBLE_SITES} centers, got {}",
            centers.len()
        )));
    }
    if centers.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParameter("couplings must be finite".into()));
    }
    let g_f: Vec<f64> = couplings
        .iter()
        .map(|class| (2.0 * class.iter().map(|g| g * g).sum::<f64>()).sqrt())
        .collect();
    let g_total = g_f.iter().map(|g| g * g).sum::<f64>().sqrt();
    if !(g_total > 0.0) {
        return Err(Error::InvalidParameter("all couplings are zero".into()));
    }
    // c = (1/G) Σ_f G_f c_f with c_f = (1/G_f) Σ_i g_i (a_fi + b_fi).
    let mut coefficients = Vec::with_capacity(2 * centers.len());
    for (class, gf) in couplings.iter().zip(&g_f) {
        for g in class {
            let w = if *gf > 0.0 { gf / g_total * g / gf } else { 0.0 };
            coefficients.push(w);
            coefficients.push(w);
        }
    }

    let space = ModeSpace::new(2 * centers.len())?;
    let mut h_int = OperatorMatrix::zeros(space.dim(), space.dim());
    for (i, g) in centers.iter().enumerate() {
        if *g != 0.0 {
            let ab = space.modes[2 * i].add(&space.modes[2 * i + 1]);
            h_int = h_int.add(&space.exchange(&ab).scale(re(*g)));
        }
    }
    let c = space.combine(&coefficients);
    let interaction = h_int.sub(&space.exchange(&c).scale(re(g_total)));
    let canon = c
        .commutator(&c.adjoint())
        .sub(&OperatorMatrix::identity(space.dim()))
        .matmul(&space.vacuum());
    let label = format!("{couplings:?}");
    Ok(InhomogeneousCheck {
        g_total,
        coefficients,
        interaction: ResidualReport::below(format!("inhomogeneous mode H_int {label}"), op_norm(&interaction), IDENTITY_TOL),
        canonical: ResidualReport::below(format!("inhomogeneous mode [c,c+]-1 {label}"), op_norm(&canon), IDENTITY_TOL),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrohlichCheck {
    /// `(s, R(s))` pairs.
    pub residuals: Vec<(f64, f64)>,
    pub slope: ResidualReport,
    /// Induced `σ_x` coefficient at the smallest scale against `Ω_R/2`.
    pub sigma_x_coefficient: f64,
    pub sigma_x_expected: f64,
    pub projection: ResidualReport,
}

/// Fock levels kept when comparing transformed and effective Hamiltonians;
/// the top levels carry the truncated commutator `[c, c†] ≠ 1`.
fn interior_levels(fock_dim: usize) -> usize {
    fock_dim.saturating_sub(2).max(1)
}

/// Canonical transform `e^{−S} H e^{S}` with `S = (η/Δ')(σ_−c† − σ_+c)` at
/// couplings and drive scaled by `s`, compared with the effective Hamiltonian
/// on the interior Fock levels.
pub fn frohlich_residual(p: &PhysicalParams, eta_scales: &[f64]) -> Result<FrohlichCheck> {
    if p.fock_dim > MAX_FROHLICH_FOCK {
        return Err(Error::InvalidDimension {
            what: "Fock space for the canonical-transformation check",
            dim: p.fock_dim,
        });
    }
    if eta_scales.len() < 2 || eta_scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter("need at least two positive scales".into()));
    }
    let d = model::derive(p)?;
    let detuning = d.dispersive_detuning();
    if detuning == 0.0 {
        return Err(Error::InvalidParameter("zero detuning".into()));
    }
    let ops = CompositeOps::new(p.fock_dim)?;
    let keep = interior_levels(p.fock_dim);
    let proj = diag_projector(ops.dim(), |k| k % p.fock_dim < keep);
    let generator = ops
        .lowering
        .matmul(&ops.c_dag)
        .sub(&ops.raising.matmul(&ops.c))
        .to_dense();

    let transform = |s: f64, h: &OperatorMatrix| -> Result<Array2<Complex64>> {
        let eta = s * d.eta;
        let sgen = generator.mapv(|z| z * (eta / detuning));
        let e_plus = linalg::expm(&sgen)?;
        let e_minus = linalg::expm(&sgen.mapv(|z| -z))?;
        Ok(e_minus.dot(&h.to_dense()).dot(&e_plus))
    };

    let mut residuals = Vec::with_capacity(eta_scales.len());
    for &s in eta_scales {
        let (eta, eps) = (s * d.eta, s * d.eps0);
        let h = model::rotframe_with(&ops, d.delta_c, d.delta_d, eta, eps);
        let chi = eta * eta / detuning;
        let omega_r = 2.0 * eta * eps / detuning;
        let h_eff = model::effective_with(&ops, d.delta_c, d.delta_d, chi, omega_r, eps);
        let diff = OperatorMatrix::from_dense(transform(s, &h)? - h_eff.to_dense());
        residuals.push((s, op_norm(&proj.matmul(&diff).matmul(&proj))));
    }

    let xs: Vec<f64> = residuals.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|(_, r)| r.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InvalidParameter("scales must be distinct".into()));
    }
    let slope = sxy / sxx;

    // σ_x ⊗ 1 projection of the transformed drive at the smallest scale.
    let s_min = eta_scales.iter().copied().fold(f64::INFINITY, f64::min);
    let drive = ops.c.add(&ops.c_dag).scale(re(s_min * d.eps0));
    let moved = transform(s_min, &drive)?;
    let probe = proj.matmul(&ops.sigma_x).matmul(&proj).to_dense();
    let coefficient = linalg::trace(&probe.dot(&moved)).re / linalg::trace(&probe.dot(&probe)).re;
    let expected = (s_min * d.eta) * (s_min * d.eps0) / detuning;

    Ok(FrohlichCheck {
        residuals,
        slope: ResidualReport::at_least("canonical transform residual slope", slope, FROHLICH_MIN_SLOPE),
        sigma_x_coefficient: coefficient,
        sigma_x_expected: expected,
        projection: ResidualReport::below(
            "canonical transform sigma_x coefficient",
            ((coefficient - expected) / expected).abs(),
            RABI_PROJECTION_TOL,
        ),
    })
}

pub const FROHLICH_SCALES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// Parameters for the canonical-transformation check: the base preset on a
/// small Fock space.
pub fn frohlich_params() -> PhysicalParams {
    PhysicalParams {
        fock_dim: MAX_FROHLICH_FOCK,
        alpha: re(1.0),
        ..PhysicalParams::base()
    }
}

/// Every check, in a fixed order.
pub fn run_suite() -> Result<Vec<ResidualReport>> {
    let mut out = Vec::new();
    for n in 1..=3 {
        out.push(check_hubbard_algebra(&hubbard_ensemble(n)?));
    }
    for n in 1..=3 {
        out.push(check_schwinger_algebra(n, 3)?);
    }
    let mut one_excitation = Vec::new();
    for n in 2..=4 {
        let c = check_contraction(n, 2)?;
        out.push(c.identity.clone());
        if n == 2 || n == 4 {
            one_excitation.push(c.deviations[1].1);
        }
        if n == 4 {
            out.push(ResidualReport::below("contraction polarized state N=4", c.deviations[0].1, IDENTITY_TOL));
        }
    }
    let ratio = one_excitation[0] / one_excitation[1];
    out.push(ResidualReport::below(
        "contraction 1-excitation halving N=2->4",
        (ratio / 2.0 - 1.0).abs(),
        CONTRACTION_RATIO_TOL,
    ));
    for n_f in [[1.0, 1.0, 1.0, 1.0], [4.0, 1.0, 1.0, 1.0], [1.0, 0.0, 0.0, 0.0]] {
        let c = check_mode_decoupling(n_f, 1.0)?;
        out.extend(c.reports().into_iter().cloned());
    }
    for g in [vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![vec![1.0, 2.0]], vec![vec![0.7]]] {
        let c = check_inhomogeneous_mode(&g)?;
        out.push(c.interaction);
        out.push(c.canonical);
    }
    let f = frohlich_residual(&frohlich_params(), &FROHLICH_SCALES)?;
    out.push(f.slope);
    out.push(f.projection);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn single_site_matrix_units() {
        let ops = hubbard_ensemble(1).unwrap();
        for m in 0..3 {
            for n in 0..3 {
                let dense = ops.x[m][n].to_dense();
                for ((i, j), v) in dense.indexed_iter() {
                    let want = if i == m && j == n { ONE } else { ZERO };
                    assert_eq!(*v, want);
                }
            }
        }
        assert_eq!(check_hubbard_algebra(&ops).residual, 0.0);
    }

    #[test]
    fn completeness_and_adjoints() {
        let ops = hubbard_ensemble(2).unwrap();
        let sum = ops.x[0][0].add(&ops.x[1][1]).add(&ops.x[2][2]).to_dense();
        assert!(linalg::max_abs(&(sum - linalg::identity(9).mapv(|z| z * 2.0))) < 1e-15);
        let ops3 = hubbard_ensemble(3).unwrap();
        let diff = ops3.x[PLUS][MINUS].sub(&ops3.x[MINUS][PLUS].adjoint());
        assert_eq!(diff.nnz(), 0);
    }

    #[test]
    fn ensemble_size_limits() {
        assert!(matches!(hubbard_ensemble(0), Err(Error::EnsembleSize(0))));
        assert!(matches!(hubbard_ensemble(5), Err(Error::EnsembleSize(5))));
    }

    #[test]
    fn hubbard_and_schwinger_algebra() {
        for n in 1..=4 {
            assert!(check_hubbard_algebra(&hubbard_ensemble(n).unwrap()).passed);
        }
        for n in 1..=3 {
            assert!(check_schwinger_algebra(n, 3).unwrap().passed);
        }
    }

    #[test]
    fn schwinger_outside_the_sector_breaks() {
        // Without projection the top occupation truncates x†x products.
        let d = 3;
        let a = crate::operators::annihilation(d).unwrap();
        let id = OperatorMatrix::identity(d);
        let modes = [
            crate::operators::tensor(&crate::operators::tensor(&a, &id), &id),
            crate::operators::tensor(&crate::operators::tensor(&id, &a), &id),
            crate::operators::tensor(&crate::operators::tensor(&id, &id), &a),
        ];
        let x: Vec<Vec<OperatorMatrix>> = (0..3)
            .map(|m| (0..3).map(|n| modes[m].adjoint().matmul(&modes[n])).collect())
            .collect();
        assert!(hubbard_algebra_residual(&x) > 0.1);
    }

    #[test]
    fn contraction_identity_and_scaling() {
        for n in 2..=4 {
            let c = check_contraction(n, 2).unwrap();
            assert!(c.identity.passed, "{:?}", c.identity);
            assert_abs_diff_eq!(c.deviations[0].1, 0.0, epsilon = 1e-14);
            for &(k, dev) in &c.deviations {
                assert_abs_diff_eq!(dev, 2.0 * k as f64 / n as f64, epsilon = 1e-12);
            }
        }
        let d2 = check_contraction(2, 1).unwrap().deviations[1].1;
        let d4 = check_contraction(4, 1).unwrap().deviations[1].1;
        assert_abs_diff_eq!(d2 / d4, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn decoupling_identities() {
        for n_f in [[1.0, 1.0, 1.0, 1.0], [4.0, 1.0, 1.0, 1.0]] {
            let c = check_mode_decoupling(n_f, 1.0).unwrap();
            for r in c.reports() {
                assert!(r.passed, "{r:?}");
            }
        }
    }

    #[test]
    fn single_class_mode() {
        let basis = quasimagnon_modes([1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(basis.coupled[0], s, epsilon = 1e-15);
        assert_abs_diff_eq!(basis.coupled[1], s, epsilon = 1e-15);
        assert!(basis.coupled[2..].iter().all(|v| *v == 0.0));
        let c = check_mode_decoupling([1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(c.interaction.passed);
        assert!(matches!(quasimagnon_modes([0.0; 4]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn uniform_coupling_is_the_homogeneous_mode() {
        let c = check_inhomogeneous_mode(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(c.interaction.passed && c.canonical.passed);
        assert_abs_diff_eq!(c.g_total, 8f64.sqrt(), epsilon = 1e-15);
        assert!(c.coefficients.iter().all(|w| (w - 1.0 / 8f64.sqrt()).abs() < 1e-15));
    }

    #[test]
    fn unequal_and_single_centers() {
        let c = check_inhomogeneous_mode(&[vec![1.0, 2.0]]).unwrap();
        assert_abs_diff_eq!(c.g_total, 10f64.sqrt(), epsilon = 1e-15);
        assert!(c.interaction.passed && c.canonical.passed);
        let single = check_inhomogeneous_mode(&[vec![-0.7]]).unwrap();
        assert_abs_diff_eq!(single.coefficients[0], -1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert!(single.interaction.passed);
        assert!(check_inhomogeneous_mode(&[vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn frohlich_scaling_and_projection() {
        let f = frohlich_residual(&frohlich_params(), &FROHLICH_SCALES).unwrap();
        assert!(f.slope.passed, "{:?}", f.residuals);
        assert!(f.projection.passed, "{} vs {}", f.sigma_x_coefficient, f.sigma_x_expected);
        assert!(frohlich_residual(&PhysicalParams::base(), &FROHLICH_SCALES).is_err());
    }

    #[test]
    fn frohlich_vanishes_without_coupling() {
        // s → 0 with fixed detunings: S = 0 and H = H_eff.
        let ops = CompositeOps::new(5).unwrap();
        let h = model::rotframe_with(&ops, 0.3, -0.2, 0.0, 0.0);
        let h_eff = model::effective_with(&ops, 0.3, -0.2, 0.0, 0.0, 0.0);
        assert_eq!(h.sub(&h_eff).nnz(), 0);
    }

    #[test]
    fn suite_passes() {
        for r in run_suite().unwrap() {
            assert!(r.passed, "{}", r.line());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn decoupling_holds_for_any_populations(n in proptest::array::uniform4(0.1f64..10.0)) {
            let c = check_mode_decoupling(n, 0.7).unwrap();
            for r in c.reports() {
                prop_assert!(r.passed, "{}", r.line());
            }
        }

        #[test]
        fn inhomogeneous_identity_for_any_couplings(g in proptest::collection::vec(-2.0f64..2.0, 1..=4)) {
            prop_assume!(g.iter().any(|x| x.abs() > 1e-3));
            let c = check_inhomogeneous_mode(&[g]).unwrap();
            prop_assert!(c.interaction.passed && c.canonical.passed);
        }
    }
}
