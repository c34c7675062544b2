//! Site-by-site kernels `K`, `F` and the diagonal-filled long-range coupling,
//! the `J_a` series built from them, and the two kernel inequalities checked
//! by exhaustive scans.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CouplingSplit, LatticeSpec};

use super::BoundParams;

/// Largest series order `a` accepted by [`j_a_series`].
pub const J_SERIES_CAP: usize = 12;

/// Slack allowed on the `<= 1` kernel ratios before they count as violations.
const RATIO_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    K,
    F,
    Jlr,
}

/// Kernels with a closed-form shape in the distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeKernel {
    /// Flat inside `2R`, exponential decay on the scale `2 chi` outside.
    K,
    /// Flat inside `6R`, `(6R/d)^alpha` outside.
    F,
}

#[derive(Clone, Debug)]
pub struct Kernel {
    pub kind: KernelKind,
    pub values: Mat<f64>,
    pub radius: f64,
    pub chi: f64,
    pub alpha: f64,
}

impl Kernel {
    pub fn n_sites(&self) -> usize {
        self.values.nrows()
    }

    fn check_same_lattice(&self, other: &Kernel) -> Result<()> {
        if self.n_sites() != other.n_sites() {
            return Err(Error::invalid(format!(
                "kernels live on lattices of {} and {} sites",
                self.n_sites(),
                other.n_sites()
            )));
        }
        Ok(())
    }
}

pub fn k_shape(d: f64, radius: f64, chi: f64) -> f64 {
    if d <= 2.0 * radius {
        1.0
    } else {
        (-(d - 2.0 * radius) / (2.0 * chi)).exp()
    }
}

pub fn f_shape(d: f64, radius: f64, alpha: f64) -> f64 {
    if d <= 6.0 * radius {
        1.0
    } else {
        (6.0 * radius / d).powf(alpha)
    }
}

/// Tabulate `K` or `F` over every site pair. `radius` may be zero, in which
/// case the flat region shrinks to the diagonal.
pub fn build_kernel(
    lattice: &LatticeSpec,
    kind: ShapeKernel,
    radius: f64,
    chi: f64,
    alpha: f64,
) -> Result<Kernel> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("radius must be nonnegative, got {radius}")));
    }
    if !(chi >= 1.0) {
        return Err(Error::invalid(format!("chi must be at least 1, got {chi}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    let dist = lattice.distance_matrix();
    let n = lattice.n_sites();
    let values = match kind {
        ShapeKernel::K => Mat::from_fn(n, n, |y, z| k_shape(dist[(y, z)], radius, chi)),
        ShapeKernel::F => Mat::from_fn(n, n, |y, z| f_shape(dist[(y, z)], radius, alpha)),
    };
    Ok(Kernel {
        kind: match kind {
            ShapeKernel::K => KernelKind::K,
            ShapeKernel::F => KernelKind::F,
        },
        values,
        radius,
        chi,
        alpha,
    })
}

/// `J^lr` with each diagonal entry replaced by `kappa * lambda_chi`.
pub fn jlr_matrix_with_diagonal(split: &CouplingSplit, kappa: f64) -> Kernel {
    let n = split.n_sites();
    let diag = kappa * split.lambda_chi;
    let values = Mat::from_fn(n, n, |y, z| if y == z { diag } else { split.long[(y, z)] });
    Kernel {
        kind: KernelKind::Jlr,
        values,
        radius: 0.0,
        chi: split.chi,
        alpha: split.alpha,
    }
}

/// Row vector times matrix, `out[z] = sum_y v[y] m[y, z]`.
fn row_times(v: &[f64], m: &Mat<f64>) -> Vec<f64> {
    (0..m.ncols())
        .map(|z| v.iter().enumerate().map(|(y, &vy)| vy * m[(y, z)]).sum())
        .collect()
}

/// Row `i` of `K (J^lr K)^a`, without prefactor.
pub fn series_row(k: &Kernel, jlr: &Kernel, a: usize, i: usize) -> Result<Vec<f64>> {
    k.check_same_lattice(jlr)?;
    let n = k.n_sites();
    if i >= n {
        return Err(Error::invalid(format!("site {i} outside {n}-site lattice")));
    }
    if a > J_SERIES_CAP {
        return Err(Error::ResourceLimit(format!(
            "series order {a} exceeds the cap of {J_SERIES_CAP}"
        )));
    }
    let mut row: Vec<f64> = (0..n).map(|z| k.values[(i, z)]).collect();
    for _ in 0..a {
        row = row_times(&row, &jlr.values);
        row = row_times(&row, &k.values);
    }
    Ok(row)
}

/// `kappa^2 (2 kappa^2 c^2)^a [K (J^lr K)^a]_{ij}`.
pub fn j_a_series(
    k: &Kernel,
    jlr: &Kernel,
    a: usize,
    i: usize,
    j: usize,
    params: &BoundParams,
) -> Result<f64> {
    if a == 0 {
        return Err(Error::invalid("series order must be at least 1"));
    }
    if j >= k.n_sites() {
        return Err(Error::invalid(format!("site {j} outside {}-site lattice", k.n_sites())));
    }
    let row = series_row(k, jlr, a, i)?;
    Ok(series_prefactor(params.kappa, params.c, a) * row[j])
}

pub fn series_prefactor(kappa: f64, c: f64, a: usize) -> f64 {
    let k2 = kappa * kappa;
    k2 * (2.0 * k2 * c * c).powi(a as i32)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionReport {
    /// Largest `G / (2 kappa lambda_chi F)` over all pairs.
    pub max_ratio: f64,
    pub argmax: (usize, usize),
    /// Same, restricted to `d <= 6R`.
    pub trivial_max: f64,
    pub trivial_argmax: (usize, usize),
    /// Same, restricted to `d > 6R`; `None` when no pair is that far apart.
    pub algebraic_max: Option<f64>,
    pub algebraic_argmax: Option<(usize, usize)>,
    /// `vt > alpha ln alpha`, so the far branch is held to the bound.
    pub algebraic_asserted: bool,
    /// `lambda_chi = 0`: nothing to convolve.
    pub degenerate: bool,
    /// `max_z sum_y K(z, y) / R^D`, or `None` at `R = 0`.
    pub fitted_b: Option<f64>,
    pub passed: bool,
}

fn argmax_over<I: Iterator<Item = (f64, (usize, usize))>>(it: I) -> Option<(f64, (usize, usize))> {
    it.fold(None, |best, (v, p)| match best {
        Some((bv, _)) if bv >= v => best,
        _ => Some((v, p)),
    })
}

/// Exhaustive check of `sum_y K(z1, y) J^lr(y, z2) <= 2 kappa lambda_chi F(z1, z2)`.
pub fn verify_convolution(
    lattice: &LatticeSpec,
    k: &Kernel,
    jlr: &Kernel,
    f: &Kernel,
    params: &BoundParams,
) -> Result<ConvolutionReport> {
    k.check_same_lattice(jlr)?;
    k.check_same_lattice(f)?;
    if k.n_sites() != lattice.n_sites() {
        return Err(Error::invalid("kernels and lattice have different sizes"));
    }
    let n = k.n_sites();
    let radius = k.radius;
    let vt = if k.chi > 0.0 { radius / k.chi } else { 0.0 };
    let algebraic_asserted = vt > params.alpha * params.alpha.ln();
    let fitted_b = (radius > 0.0).then(|| {
        let mass = (0..n)
            .map(|z| (0..n).map(|y| k.values[(z, y)]).sum::<f64>())
            .fold(0.0, f64::max);
        mass / radius.powi(lattice.dim() as i32)
    });

    if params.lambda_chi == 0.0 {
        return Ok(ConvolutionReport {
            max_ratio: 0.0,
            argmax: (0, 0),
            trivial_max: 0.0,
            trivial_argmax: (0, 0),
            algebraic_max: None,
            algebraic_argmax: None,
            algebraic_asserted,
            degenerate: true,
            fitted_b,
            passed: true,
        });
    }

    let g = &k.values * &jlr.values;
    let dist = lattice.distance_matrix();
    let scale = 2.0 * params.kappa * params.lambda_chi;
    // (ratio, pair, far) for every pair, reduced row by row in index order.
    let rows: Vec<(Option<(f64, (usize, usize))>, Option<(f64, (usize, usize))>)> = (0..n)
        .into_par_iter()
        .map(|z1| {
            let ratios = (0..n).map(|z2| (g[(z1, z2)] / (scale * f.values[(z1, z2)]), (z1, z2)));
            let near = argmax_over(ratios.clone().filter(|(_, (a, b))| dist[(*a, *b)] <= 6.0 * radius));
            let far = argmax_over(ratios.filter(|(_, (a, b))| dist[(*a, *b)] > 6.0 * radius));
            (near, far)
        })
        .collect();
    let near = argmax_over(rows.iter().filter_map(|r| r.0)).unwrap_or((0.0, (0, 0)));
    let far = argmax_over(rows.iter().filter_map(|r| r.1));
    let (max_ratio, argmax) = match far {
        Some(fm) if fm.0 > near.0 => fm,
        _ => near,
    };
    let mut passed = near.0 <= 1.0 + RATIO_SLACK;
    if algebraic_asserted {
        if let Some((v, _)) = far {
            passed &= v <= 1.0 + RATIO_SLACK;
        }
    }
    Ok(ConvolutionReport {
        max_ratio,
        argmax,
        trivial_max: near.0,
        trivial_argmax: near.1,
        algebraic_max: far.map(|x| x.0),
        algebraic_argmax: far.map(|x| x.1),
        algebraic_asserted,
        degenerate: false,
        fitted_b,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproducibilityReport {
    /// `max_{z1,z3} sum_{z2} F(z1,z2) F(z2,z3) / (R^D F(z1,z3))`
    pub g: f64,
    pub worst_pair: (usize, usize),
    /// Largest single contribution `F(z1,z2) F(z2,z3)` for the worst pair.
    pub dominant_z2: usize,
    pub radius: f64,
}

pub fn verify_reproducibility(f: &Kernel, dim: usize) -> Result<ReproducibilityReport> {
    if !(f.radius > 0.0) {
        return Err(Error::invalid(format!(
            "reproducibility needs R > 0, got {}",
            f.radius
        )));
    }
    let n = f.n_sites();
    let ff = &f.values * &f.values;
    let rd = f.radius.powi(dim as i32);
    let rows: Vec<(f64, (usize, usize))> = (0..n)
        .into_par_iter()
        .map(|z1| {
            argmax_over((0..n).map(|z3| (ff[(z1, z3)] / (rd * f.values[(z1, z3)]), (z1, z3))))
                .expect("lattice has at least two sites")
        })
        .collect();
    let (g, worst_pair) = argmax_over(rows.into_iter()).expect("nonempty");
    let (z1, z3) = worst_pair;
    let dominant_z2 = argmax_over((0..n).map(|z2| (f.values[(z1, z2)] * f.values[(z2, z3)], (z2, z2))))
        .map_or(z1, |(_, (z2, _))| z2);
    Ok(ReproducibilityReport {
        g,
        worst_pair,
        dominant_z2,
        radius: f.radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{BoundParams, KAPPA, SHELL_C};
    use proptest::prelude::*;

    fn chain(n: usize) -> LatticeSpec {
        LatticeSpec::chain(n).unwrap()
    }

    fn params(split: &CouplingSplit) -> BoundParams {
        BoundParams::new(split.alpha, 1, split.j0, split.chi, split.lambda_sr, split.lambda_chi, 1.0)
    }

    #[test]
    fn shape_examples() {
        assert_eq!(k_shape(4.0, 2.0, 3.0), 1.0);
        assert!((k_shape(4.0 + 6.0, 2.0, 3.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((f_shape(24.0, 2.0, 3.0) - 0.125).abs() < 1e-15);
        assert_eq!(f_shape(12.0, 2.0, 3.0), 1.0);
    }

    #[test]
    fn kernel_entries_lie_in_unit_interval() {
        let l = chain(30);
        for kind in [ShapeKernel::K, ShapeKernel::F] {
            let k = build_kernel(&l, kind, 1.3, 2.0, 3.0).unwrap();
            for y in 0..30 {
                for z in 0..30 {
                    let v = k.values[(y, z)];
                    assert!(v > 0.0 && v <= 1.0);
                }
            }
        }
        assert!(build_kernel(&l, ShapeKernel::K, -1.0, 2.0, 3.0).is_err());
        assert!(build_kernel(&l, ShapeKernel::K, 1.0, 0.5, 3.0).is_err());
    }

    #[test]
    fn jlr_diagonal_and_off_diagonal() {
        let l = chain(50);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 2.0).unwrap();
        let j = jlr_matrix_with_diagonal(&s, KAPPA);
        for y in 0..50 {
            assert_eq!(j.values[(y, y)], KAPPA * s.lambda_chi);
            for z in 0..50 {
                if y != z {
                    assert_eq!(j.values[(y, z)], s.long[(y, z)]);
                }
            }
        }
        let empty = CouplingSplit::new(&chain(5), 3.0, 1.0, 10.0).unwrap();
        let j = jlr_matrix_with_diagonal(&empty, KAPPA);
        assert!((0..5).all(|y| (0..5).all(|z| j.values[(y, z)] == 0.0)));
    }

    /// Direct nested sums over every intermediate index.
    fn nested(k: &Mat<f64>, j: &Mat<f64>, a: usize, i: usize, end: usize) -> f64 {
        let n = k.nrows();
        fn rec(k: &Mat<f64>, j: &Mat<f64>, left: usize, from: usize, end: usize, n: usize) -> f64 {
            if left == 0 {
                return k[(from, end)];
            }
            let mut total = 0.0;
            for y in 0..n {
                for z in 0..n {
                    total += k[(from, y)] * j[(y, z)] * rec(k, j, left - 1, z, end, n);
                }
            }
            total
        }
        rec(k, j, a, i, end, n)
    }

    #[test]
    fn series_matches_nested_sum_oracle() {
        for (n, a) in [(20, 1), (12, 2), (8, 3)] {
            let l = chain(n);
            let s = CouplingSplit::new(&l, 3.0, 1.0, 2.0).unwrap();
            let p = params(&s);
            let k = build_kernel(&l, ShapeKernel::K, 1.5, 2.0, 3.0).unwrap();
            let j = jlr_matrix_with_diagonal(&s, KAPPA);
            let pre = KAPPA * KAPPA * (2.0 * KAPPA * KAPPA * SHELL_C * SHELL_C).powi(a as i32);
            for (i, end) in [(0, n - 1), (n / 2, 1), (3, 3)] {
                let fast = j_a_series(&k, &j, a, i, end, &p).unwrap();
                let slow = pre * nested(&k.values, &j.values, a, i, end);
                assert!(((fast - slow) / slow).abs() <= 1e-12, "n={n} a={a}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn series_vanishes_without_long_part_and_respects_cap() {
        let l = chain(6);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 10.0).unwrap();
        let p = params(&s);
        let k = build_kernel(&l, ShapeKernel::K, 1.0, 10.0, 3.0).unwrap();
        let j = jlr_matrix_with_diagonal(&s, KAPPA);
        for a in 1..=4 {
            assert_eq!(j_a_series(&k, &j, a, 0, 5, &p).unwrap(), 0.0);
        }
        assert!(matches!(
            j_a_series(&k, &j, J_SERIES_CAP + 1, 0, 5, &p),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn flat_kernel_convolution_is_below_trivial_bound() {
        let l = chain(20);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 2.0).unwrap();
        let p = params(&s);
        let radius = 20.0;
        let k = build_kernel(&l, ShapeKernel::K, radius, 2.0, 3.0).unwrap();
        let f = build_kernel(&l, ShapeKernel::F, radius, 2.0, 3.0).unwrap();
        let j = jlr_matrix_with_diagonal(&s, KAPPA);
        let rep = verify_convolution(&l, &k, &j, &f, &p).unwrap();
        // G row sums are at most (kappa + 1) lambda_chi
        assert!(rep.max_ratio <= (KAPPA + 1.0) / (2.0 * KAPPA) + 1e-12);
        assert!(rep.passed && !rep.degenerate);
        assert!(rep.algebraic_max.is_none());
    }

    #[test]
    fn convolution_without_long_part_is_degenerate() {
        let l = chain(6);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 10.0).unwrap();
        let p = params(&s);
        let k = build_kernel(&l, ShapeKernel::K, 1.0, 10.0, 3.0).unwrap();
        let f = build_kernel(&l, ShapeKernel::F, 1.0, 10.0, 3.0).unwrap();
        let rep = verify_convolution(&l, &k, &jlr_matrix_with_diagonal(&s, KAPPA), &f, &p).unwrap();
        assert!(rep.degenerate && rep.passed);
        assert_eq!(rep.max_ratio, 0.0);
    }

    #[test]
    fn convolution_report_matches_pair_scan() {
        let l = chain(60);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 2.0).unwrap();
        let p = params(&s);
        let radius = 3.0;
        let k = build_kernel(&l, ShapeKernel::K, radius, 2.0, 3.0).unwrap();
        let f = build_kernel(&l, ShapeKernel::F, radius, 2.0, 3.0).unwrap();
        let j = jlr_matrix_with_diagonal(&s, KAPPA);
        let rep = verify_convolution(&l, &k, &j, &f, &p).unwrap();
        let mut best = 0.0f64;
        for z1 in 0..60 {
            for z2 in 0..60 {
                let mut g = 0.0;
                for y in 0..60 {
                    g += k.values[(z1, y)] * j.values[(y, z2)];
                }
                best = best.max(g / (2.0 * KAPPA * s.lambda_chi * f.values[(z1, z2)]));
            }
        }
        assert!((rep.max_ratio - best).abs() <= 1e-12 * best);
        assert!(rep.trivial_max <= 1.0);
    }

    #[test]
    fn flat_reproducibility_counts_sites() {
        let l = chain(10);
        let f = build_kernel(&l, ShapeKernel::F, 5.0, 1.0, 3.0).unwrap();
        let rep = verify_reproducibility(&f, 1).unwrap();
        assert!((rep.g - 10.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn reproducibility_matches_triple_scan() {
        let l = chain(40);
        let f = build_kernel(&l, ShapeKernel::F, 2.0, 1.0, 3.0).unwrap();
        let rep = verify_reproducibility(&f, 1).unwrap();
        let mut best = 0.0f64;
        for z1 in 0..40 {
            for z3 in 0..40 {
                let s: f64 = (0..40).map(|z2| f.values[(z1, z2)] * f.values[(z2, z3)]).sum();
                best = best.max(s / (2.0 * f.values[(z1, z3)]));
            }
        }
        assert!((rep.g - best).abs() <= 1e-12 * best);
        assert!(rep.g.is_finite());
    }

    proptest! {
        #[test]
        fn shapes_are_bounded_and_nonincreasing(
            d in 0.0f64..200.0,
            step in 0.0f64..20.0,
            radius in 0.1f64..10.0,
            chi in 1.0f64..5.0,
        ) {
            let (k, f) = (k_shape(d, radius, chi), f_shape(d, radius, 3.0));
            prop_assert!(k > 0.0 && k <= 1.0 && f > 0.0 && f <= 1.0);
            prop_assert!(k_shape(d + step, radius, chi) <= k);
            prop_assert!(f_shape(d + step, radius, 3.0) <= f);
        }
    }
}
