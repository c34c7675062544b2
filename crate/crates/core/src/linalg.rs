//! Dense complex-matrix helpers shared by the model and dynamics modules.

use faer::{c64, Mat, MatRef, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Elementwise tolerance used to classify a matrix as (anti-)Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

/// `sign = +1` tests `M = M^dagger`, `sign = -1` tests `M = -M^dagger`.
fn is_self_adjoint_up_to(m: MatRef<'_, c64>, sign: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let tol = HERMITIAN_TOL * max_abs(m).max(1.0);
    for j in 0..m.ncols() {
        for i in 0..=j {
            let d = m[(i, j)] - m[(j, i)].conj() * sign;
            if d.norm() > tol {
                return false;
            }
        }
    }
    true
}

pub fn is_hermitian(m: MatRef<'_, c64>) -> bool {
    is_self_adjoint_up_to(m, 1.0)
}

pub fn is_anti_hermitian(m: MatRef<'_, c64>) -> bool {
    is_self_adjoint_up_to(m, -1.0)
}

pub fn is_real(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

pub fn real_part(m: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

pub fn to_complex(m: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| c64::new(m[(i, j)], 0.0))
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order.
pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if is_real(m) {
        real_part(m)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::NumericalFailure(format!("symmetric eigensolve: {e:?}")))
    } else {
        m.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::NumericalFailure(format!("hermitian eigensolve: {e:?}")))
    }
}

/// Largest eigenvalue magnitude of a Hermitian matrix.
pub fn hermitian_spectral_norm(m: MatRef<'_, c64>) -> Result<f64> {
    let ev = hermitian_eigenvalues(m)?;
    Ok(match (ev.first(), ev.last()) {
        (Some(lo), Some(hi)) => lo.abs().max(hi.abs()),
        _ => 0.0,
    })
}

/// Largest singular value of an arbitrary matrix.
pub fn largest_singular_value(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::NumericalFailure(format!("singular values: {e:?}")))?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

/// Lanczos iteration budget before [`top_singular_value`] falls back to a
/// dense solve.
pub const LANCZOS_MAX_STEPS: usize = 120;

/// Largest singular value of `x` by Lanczos on `x x^dagger`, applied through
/// matrix-vector products with full reorthogonalization. The start vector is
/// a fixed-seed Gaussian, so results are reproducible. The squared value is
/// accurate to about `eps ||x||_F^2` in absolute terms. Falls back to the
/// dense Gram eigensolve when the iteration has not converged after
/// [`LANCZOS_MAX_STEPS`] steps.
pub fn top_singular_value(x: MatRef<'_, c64>) -> Result<f64> {
    top_singular_value_within(x, 0.0)
}

/// [`top_singular_value`], also stopping once the result is known to within
/// `abs_tol`: every Lanczos estimate `theta` satisfies
/// `theta <= sigma^2 <= ||x||_F^2`, so the iteration ends when that bracket
/// is narrower than `abs_tol^2`.
pub fn top_singular_value_within(x: MatRef<'_, c64>, abs_tol: f64) -> Result<f64> {
    let (m, n) = (x.nrows(), x.ncols());
    if m == 0 || n == 0 {
        return Ok(0.0);
    }
    let Some(cols) = (0..n)
        .map(|c| x.col(c).try_as_col_major().map(|c| c.as_slice()))
        .collect::<Option<Vec<&[c64]>>>()
    else {
        return top_singular_value_within(x.to_owned().as_ref(), abs_tol);
    };
    let dot = |a: &[c64], b: &[c64]| a.iter().zip(b).fold(ZERO, |acc, (u, v)| acc + u.conj() * v);
    let norm = |a: &[c64]| a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    // w = x x^dagger q
    let apply = |q: &[c64]| {
        let mut w = vec![ZERO; m];
        for col in &cols {
            let y = dot(col, q);
            for (wi, ci) in w.iter_mut().zip(col.iter()) {
                *wi += ci * y;
            }
        }
        w
    };

    let steps = m.min(LANCZOS_MAX_STEPS);
    // Rounding in each product is of order eps ||x||_F^2; changes below that
    // are noise.
    let frobenius_sq: f64 = cols.iter().map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>()).sum();
    let floor = 16.0 * f64::EPSILON * frobenius_sq;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x5eed);
    let mut q: Vec<c64> = (0..m)
        .map(|_| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let start_norm = norm(&q);
    q.iter_mut().for_each(|v| *v /= start_norm);
    let mut basis: Vec<Vec<c64>> = Vec::with_capacity(steps);
    let (mut diag, mut off) = (Vec::<f64>::new(), Vec::<f64>::new());
    let mut previous = f64::NAN;
    for k in 0..steps {
        let mut w = apply(&q);
        diag.push(dot(&q, &w).re);
        basis.push(q);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = norm(&w);
        let top = top_tridiagonal_eigenvalue(&diag, &off)?;
        let scale = top.abs().max(f64::MIN_POSITIVE);
        let exhausted = beta <= 1e-14 * scale || k + 1 == m;
        let bracketed = frobenius_sq - top <= abs_tol * abs_tol;
        if exhausted || bracketed || (previous - top).abs() <= 1e-15 * scale + floor {
            return Ok(top.max(0.0).sqrt());
        }
        previous = top;
        off.push(beta);
        q = w.into_iter().map(|v| v / beta).collect();
    }
    let gram = x * x.adjoint();
    let ev = hermitian_eigenvalues(gram.as_ref())?;
    Ok(ev.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off`, by Sturm-sequence bisection.
fn top_tridiagonal_eigenvalue(diag: &[f64], off: &[f64]) -> Result<f64> {
    let k = diag.len();
    if k == 0 {
        return Ok(0.0);
    }
    // Gershgorin interval.
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < k { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..k).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NumericalFailure("non-finite Lanczos coefficients".into()));
    }
    // Number of eigenvalues strictly below `x`.
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let b2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            d = diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    while hi - lo > 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Dimension above which [`operator_norm`] switches from dense
/// factorizations to [`top_singular_value`].
pub const DENSE_NORM_LIMIT: usize = 256;

/// Operator norm. Up to [`DENSE_NORM_LIMIT`], Hermitian and anti-Hermitian
/// inputs go through a symmetric eigensolve and anything else through the
/// singular values. Larger matrices use Lanczos.
pub fn operator_norm(m: MatRef<'_, c64>) -> Result<f64> {
    if m.nrows().max(m.ncols()) > DENSE_NORM_LIMIT {
        top_singular_value(m)
    } else if is_hermitian(m) {
        hermitian_spectral_norm(m)
    } else if is_anti_hermitian(m) {
        let h = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * I);
        hermitian_spectral_norm(h.as_ref())
    } else {
        largest_singular_value(m)
    }
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b - b * a
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            best = best.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    best
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix,
/// with the phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = Mat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im)
    });
    let qr = g.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    Mat::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q[(i, j)] * phase
    })
}

/// Random Hermitian matrix with standard normal entries (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = Mat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im)
    });
    Mat::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_unitary(6, &mut rng);
        let prod = u.adjoint() * &u;
        let id = Mat::<c64>::identity(6, 6);
        assert!(max_abs_diff(prod.as_ref(), id.as_ref()) < 1e-13);
    }

    #[test]
    fn norm_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(8, &mut rng);
        let via_eig = operator_norm(h.as_ref()).unwrap();
        let via_svd = largest_singular_value(h.as_ref()).unwrap();
        assert!((via_eig - via_svd).abs() < 1e-12 * via_svd);
        let ah = Mat::from_fn(8, 8, |i, j| h[(i, j)] * I);
        assert!(is_anti_hermitian(ah.as_ref()));
        assert!((operator_norm(ah.as_ref()).unwrap() - via_svd).abs() < 1e-12 * via_svd);
    }

    #[test]
    fn lanczos_matches_dense_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (m, n) in [(1, 1), (5, 3), (40, 40), (200, 150)] {
            let x = Mat::<c64>::from_fn(m, n, |_, _| {
                c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let dense = largest_singular_value(x.as_ref()).unwrap();
            let lanczos = top_singular_value(x.as_ref()).unwrap();
            assert!((dense - lanczos).abs() <= 1e-12 * dense, "{m}x{n}: {dense} vs {lanczos}");
        }
        // A degenerate spectrum and a rank-one matrix.
        let id = Mat::<c64>::identity(64, 64);
        assert!((top_singular_value(id.as_ref()).unwrap() - 1.0).abs() < 1e-14);
        let r1 = Mat::<c64>::from_fn(30, 30, |i, j| c64::new((i + 1) as f64 * 0.1, 0.0) * c64::new(1.0, j as f64 * 0.01));
        let dense = largest_singular_value(r1.as_ref()).unwrap();
        assert!((dense - top_singular_value(r1.as_ref()).unwrap()).abs() <= 1e-12 * dense);
        assert_eq!(top_singular_value(Mat::<c64>::zeros(4, 4).as_ref()).unwrap(), 0.0);
    }

    #[test]
    fn absolute_tolerance_stops_on_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = Mat::<c64>::from_fn(300, 300, |_, _| {
            c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 1e-17
        });
        let dense = largest_singular_value(x.as_ref()).unwrap();
        let fast = top_singular_value_within(x.as_ref(), 1e-13).unwrap();
        assert!(fast <= dense * (1.0 + 1e-12) && dense - fast <= 1e-13);
        // a tolerance far below the value changes nothing
        let y = Mat::<c64>::from_fn(300, 300, |i, j| x[(i, j)] * 1e17);
        let exact = largest_singular_value(y.as_ref()).unwrap();
        assert!((top_singular_value_within(y.as_ref(), 1e-13).unwrap() - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn large_operator_norm_agrees_with_the_eigensolve() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = DENSE_NORM_LIMIT + 44;
        let x = Mat::<c64>::from_fn(n, n, |_, _| c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let h = &x + x.adjoint();
        let dense = hermitian_spectral_norm(h.as_ref()).unwrap();
        assert!((operator_norm(h.as_ref()).unwrap() - dense).abs() <= 1e-12 * dense);
    }
}
