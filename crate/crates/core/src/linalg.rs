//! Dense complex linear algebra used throughout the crate: Kronecker
//! products, commutators, norms, a Hermitian eigenvalue wrapper and the
//! matrix exponential.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn dagger(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().as_standard_layout().mapv(|z| z.conj())
}

pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        let mut block = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
        block.zip_mut_with(b, |o, &y| *o = x * y);
    }
    out
}

pub fn commutator(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    a.dot(b) - b.dot(a)
}

pub fn trace(a: &Array2<Complex64>) -> Complex64 {
    a.diag().sum()
}

/// Maximum absolute column sum.
pub fn norm_1(a: &Array2<Complex64>) -> f64 {
    a.axis_iter(Axis(1))
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_frobenius(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral norm (largest singular value) by power iteration on `A†A`.
///
/// The start vector is a fixed quasi-random sequence so results are
/// reproducible; Frobenius norm acts as an upper bound for the iteration.
pub fn operator_norm(a: &Array2<Complex64>) -> f64 {
    let fro = norm_frobenius(a);
    if fro == 0.0 {
        return 0.0;
    }
    let n = a.ncols();
    let ah = dagger(a);
    let mut v = Array1::from_shape_fn(n, |k| {
        let t = (k as f64 + 1.0) * 0.618_033_988_749_895;
        Complex64::new(1.0 + (t.fract() - 0.5), (2.0 * t).fract() - 0.5)
    });
    let scale = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|z| z / scale);
    let mut sigma = 0.0;
    for _ in 0..1000 {
        let w = ah.dot(&a.dot(&v));
        let lam = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if lam == 0.0 {
            return sigma;
        }
        let next = lam.sqrt();
        v = w.mapv(|z| z / lam);
        if (next - sigma).abs() <= 1e-13 * next {
            sigma = next;
            break;
        }
        sigma = next;
    }
    sigma.min(fro)
}

/// Relative anti-Hermitian part, `‖A − A†‖_F / ‖A‖_F` (0 for the zero matrix).
pub fn hermiticity_residual(a: &Array2<Complex64>) -> f64 {
    let nrm = norm_frobenius(a);
    if nrm == 0.0 {
        return 0.0;
    }
    norm_frobenius(&(a - &dagger(a))) / nrm
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn eigvalsh(a: &Array2<Complex64>) -> Vec<f64> {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (a[[i, j]] + a[[j, i]].conj()));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Solves `A X = B` by LU factorisation with partial pivoting.
pub fn solve(a: Array2<Complex64>, b: Array2<Complex64>) -> Result<Array2<Complex64>> {
    let mut a = a.as_standard_layout().into_owned();
    let mut b = b.as_standard_layout().into_owned();
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.nrows(),
        });
    }
    let m = b.ncols();
    let a_s = a.as_slice_mut().ok_or_else(|| Error::Numerical("non-contiguous matrix".into()))?;
    let b_s = b.as_slice_mut().ok_or_else(|| Error::Numerical("non-contiguous matrix".into()))?;
    let scale = a_s.iter().map(|z| z.norm()).fold(0.0, f64::max);

    for k in 0..n {
        let (mut piv, mut best) = (k, 0.0);
        for r in k..n {
            let v = a_s[r * n + k].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= f64::EPSILON * scale * n as f64 {
            return Err(Error::Numerical("singular matrix in linear solve".into()));
        }
        if piv != k {
            for j in 0..n {
                a_s.swap(k * n + j, piv * n + j);
            }
            for j in 0..m {
                b_s.swap(k * m + j, piv * m + j);
            }
        }
        let (a_top, a_rest) = a_s.split_at_mut((k + 1) * n);
        let pivot_row = &a_top[k * n..];
        let inv = ONE / pivot_row[k];
        let (b_top, b_rest) = b_s.split_at_mut((k + 1) * m);
        let b_pivot = &b_top[k * m..];
        for (a_row, b_row) in a_rest.chunks_exact_mut(n).zip(b_rest.chunks_exact_mut(m)) {
            let f = a_row[k] * inv;
            if f == ZERO {
                continue;
            }
            a_row[k] = f;
            for (x, p) in a_row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                *x -= f * p;
            }
            for (x, p) in b_row.iter_mut().zip(b_pivot) {
                *x -= f * p;
            }
        }
    }

    for k in (0..n).rev() {
        let (b_head, b_tail) = b_s.split_at_mut((k + 1) * m);
        let row = &mut b_head[k * m..];
        for j in k + 1..n {
            let f = a_s[k * n + j];
            if f == ZERO {
                continue;
            }
            let other = &b_tail[(j - k - 1) * m..(j - k) * m];
            for (x, y) in row.iter_mut().zip(other) {
                *x -= f * y;
            }
        }
        let inv = ONE / a_s[k * n + k];
        for x in row.iter_mut() {
            *x *= inv;
        }
    }
    Ok(b)
}

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("unsupported Padé degree"),
    }
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant, degree chosen from the 1-norm (Higham 2005).
pub fn expm(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("non-finite matrix in expm".into()));
    }
    let eye = identity(n);

    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            let b = pade_coefficients(m);
            let a2 = a.dot(a);
            let mut powers = vec![eye.clone()];
            for _ in 0..m / 2 {
                let next = powers.last().unwrap().dot(&a2);
                powers.push(next);
            }
            let mut u_inner = Array2::<Complex64>::zeros((n, n));
            let mut v = Array2::<Complex64>::zeros((n, n));
            for (k, p) in powers.iter().enumerate() {
                u_inner.scaled_add(re(b[2 * k + 1]), p);
                v.scaled_add(re(b[2 * k]), p);
            }
            let u = a.dot(&u_inner);
            return solve(&v - &u, &v + &u);
        }
    }

    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(s));
    let b = pade_coefficients(13);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let mut w1 = &a6 * re(b[13]);
    w1.scaled_add(re(b[11]), &a4);
    w1.scaled_add(re(b[9]), &a2);
    let mut w2 = a6.dot(&w1);
    w2.scaled_add(re(b[7]), &a6);
    w2.scaled_add(re(b[5]), &a4);
    w2.scaled_add(re(b[3]), &a2);
    w2.scaled_add(re(b[1]), &eye);
    let u = scaled.dot(&w2);

    let mut z1 = &a6 * re(b[12]);
    z1.scaled_add(re(b[10]), &a4);
    z1.scaled_add(re(b[8]), &a2);
    let mut v = a6.dot(&z1);
    v.scaled_add(re(b[6]), &a6);
    v.scaled_add(re(b[4]), &a4);
    v.scaled_add(re(b[2]), &a2);
    v.scaled_add(re(b[0]), &eye);

    let mut r = solve(&v - &u, &v + &u)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Truncated Taylor series with many terms, valid for small norms.
    fn taylor_exp(a: &Array2<Complex64>, terms: usize) -> Array2<Complex64> {
        let n = a.nrows();
        let mut acc = identity(n);
        let mut term = identity(n);
        for k in 1..terms {
            term = term.dot(a).mapv(|z| z / k as f64);
            acc += &term;
        }
        acc
    }

    #[test]
    fn expm_matches_taylor_for_every_pade_degree() {
        let base = array![
            [re(0.3), Complex64::new(0.1, -0.2), re(0.0)],
            [Complex64::new(-0.4, 0.1), re(-0.2), Complex64::new(0.0, 0.5)],
            [re(0.2), re(0.1), Complex64::new(0.1, 0.1)]
        ];
        for scale in [0.01, 0.2, 0.8, 1.8, 4.0, 20.0] {
            let a = base.mapv(|z| z * scale);
            let got = expm(&a).unwrap();
            // Taylor of A/2^k squared k times as an independent route.
            let k = 8;
            let mut want = taylor_exp(&a.mapv(|z| z / 2f64.powi(k)), 30);
            for _ in 0..k {
                want = want.dot(&want);
            }
            let err = max_abs(&(&got - &want)) / max_abs(&want);
            assert!(err < 1e-12, "scale {scale}: rel err {err}");
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let theta = 2.5;
        let a = array![[re(0.0), re(-theta)], [re(theta), re(0.0)]];
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]].re - theta.cos()).abs() < 1e-14);
        assert!((e[[1, 0]].re - theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = array![
            [re(0.0), re(2.0), re(1.0)],
            [Complex64::new(1.0, 1.0), re(1.0), re(0.0)],
            [re(3.0), re(0.0), Complex64::new(0.0, -1.0)]
        ];
        let x = array![[re(1.0), re(0.5)], [Complex64::new(0.0, 2.0), re(-1.0)], [re(-3.0), re(2.0)]];
        let b = a.dot(&x);
        let got = solve(a, b).unwrap();
        assert!(max_abs(&(&got - &x)) < 1e-13);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let a = array![[re(3.0), re(0.0)], [re(0.0), Complex64::new(0.0, -5.0)]];
        assert!((operator_norm(&a) - 5.0).abs() < 1e-10);
    }

    #[test]
    fn eigvalsh_of_pauli_y() {
        let y = array![[re(0.0), Complex64::new(0.0, -1.0)], [Complex64::new(0.0, 1.0), re(0.0)]];
        let ev = eigvalsh(&y);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }
}
