//! Heisenberg-picture evolution `A(t) = e^{iHt} A e^{-iHt}`.
//!
//! Two independent routes build the propagator `U(t) = e^{-iHt}`:
//! a dense spectral decomposition of `H`, and an adaptive Lanczos (Krylov)
//! exponential applied to every basis column.

use std::str::FromStr;

use faer::{c64, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ZERO};
use crate::model::DenseOperator;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMethod {
    #[default]
    DenseExpm,
    Krylov,
}

impl FromStr for EvolutionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense_expm" | "dense" | "spectral" => Ok(EvolutionMethod::DenseExpm),
            "krylov" | "lanczos" => Ok(EvolutionMethod::Krylov),
            other => Err(Error::invalid(format!("unknown evolution method `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Stop when the a-posteriori error estimate of a column drops below this.
    pub tolerance: f64,
    /// Largest subspace dimension before reporting non-convergence.
    pub max_dim: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tolerance: 1e-10,
            max_dim: 256,
        }
    }
}

#[derive(Clone, Debug)]
struct Spectrum {
    energies: Vec<f64>,
    vectors: CMat,
    /// The eigenvectors again, when `H` is real symmetric.
    real_vectors: Option<Mat<f64>>,
}

/// Time-evolution engine for a fixed Hermitian Hamiltonian.
#[derive(Clone, Debug)]
pub struct Propagator {
    h: CMat,
    method: EvolutionMethod,
    krylov: KrylovOptions,
    spectrum: Option<Spectrum>,
}

impl Propagator {
    pub fn new(h: &DenseOperator, method: EvolutionMethod) -> Result<Self> {
        Self::with_options(h, method, KrylovOptions::default())
    }

    pub fn with_options(
        h: &DenseOperator,
        method: EvolutionMethod,
        krylov: KrylovOptions,
    ) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::invalid("Hamiltonian is not Hermitian"));
        }
        let spectrum = match method {
            EvolutionMethod::DenseExpm => Some(diagonalize(&h.matrix)?),
            EvolutionMethod::Krylov => None,
        };
        Ok(Propagator {
            h: h.matrix.clone(),
            method,
            krylov,
            spectrum,
        })
    }

    pub fn method(&self) -> EvolutionMethod {
        self.method
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `e^{-iHt}`
    pub fn unitary(&self, t: f64) -> Result<CMat> {
        match &self.spectrum {
            Some(s) => Ok(spectral_unitary(s, t)),
            None => self.krylov_unitary(t),
        }
    }

    /// Heisenberg-evolved operator `e^{iHt} A e^{-iHt}`.
    pub fn evolve(&self, a: &DenseOperator, t: f64) -> Result<DenseOperator> {
        self.frame(a)?.at(t)
    }

    /// Precompute whatever depends only on `A` so that many times can be
    /// evaluated cheaply.
    pub fn frame<'a>(&'a self, a: &DenseOperator) -> Result<HeisenbergFrame<'a>> {
        if a.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "operator dimension {} does not match Hamiltonian dimension {}",
                a.dim(),
                self.dim()
            )));
        }
        let rotated = self
            .spectrum
            .as_ref()
            .map(|s| s.vectors.adjoint() * &a.matrix * &s.vectors);
        let rotated_real = match (&self.spectrum, &rotated) {
            (Some(Spectrum { real_vectors: Some(_), .. }), Some(r)) if linalg::is_real(r.as_ref()) => {
                Some(linalg::real_part(r.as_ref()))
            }
            _ => None,
        };
        Ok(HeisenbergFrame {
            propagator: self,
            operator: a.clone(),
            rotated,
            rotated_real,
        })
    }

    fn krylov_unitary(&self, t: f64) -> Result<CMat> {
        let dim = self.dim();
        let mut u = Mat::<c64>::zeros(dim, dim);
        for k in 0..dim {
            let col = self.krylov_apply(k, t)?;
            for (i, v) in col.into_iter().enumerate() {
                u[(i, k)] = v;
            }
        }
        Ok(u)
    }

    /// `e^{-iHt} e_k` by Lanczos with full reorthogonalization.
    fn krylov_apply(&self, k: usize, t: f64) -> Result<Vec<c64>> {
        let dim = self.dim();
        let mut start = vec![ZERO; dim];
        start[k] = c64::new(1.0, 0.0);
        if t == 0.0 {
            return Ok(start);
        }
        let max_dim = self.krylov.max_dim.min(dim).max(1);
        let mut basis: Vec<Vec<c64>> = vec![start];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let last_estimate = loop {
            let m = basis.len() - 1;
            let mut w = matvec(&self.h, &basis[m]);
            let alpha = dot(&basis[m], &w).re;
            axpy(&mut w, -c64::new(alpha, 0.0), &basis[m]);
            if m > 0 {
                axpy(&mut w, -c64::new(betas[m - 1], 0.0), &basis[m - 1]);
            }
            for _ in 0..2 {
                for q in &basis {
                    let proj = dot(q, &w);
                    axpy(&mut w, -proj, q);
                }
            }
            alphas.push(alpha);
            let beta = norm(&w);
            let coeffs = small_exponential(&alphas, &betas, t)?;
            let breakdown = beta <= 1e-13 * (1.0 + alpha.abs());
            let estimate = beta * coeffs[m].norm();
            if breakdown || estimate < self.krylov.tolerance {
                let mut out = vec![ZERO; dim];
                for (c, q) in coeffs.iter().zip(&basis) {
                    axpy(&mut out, *c, q);
                }
                return Ok(out);
            }
            if basis.len() >= max_dim {
                break estimate;
            }
            betas.push(beta);
            let inv = 1.0 / beta;
            basis.push(w.into_iter().map(|x| x * inv).collect());
        };
        Err(Error::NumericalFailure(format!(
            "Krylov exponential did not converge for column {k} at t = {t}: \
             subspace dimension {max_dim}, error estimate {last_estimate:.3e}, \
             tolerance {:.1e}",
            self.krylov.tolerance
        )))
    }
}

/// Operator `A` prepared for repeated evaluation of `A(t)`.
pub struct HeisenbergFrame<'a> {
    propagator: &'a Propagator,
    operator: DenseOperator,
    /// `V^dagger A V` in the eigenbasis of `H` (dense route only).
    rotated: Option<CMat>,
    /// The same when both `V` and `V^dagger A V` are real, which halves the
    /// work of each evaluation.
    rotated_real: Option<Mat<f64>>,
}

impl HeisenbergFrame<'_> {
    pub fn at(&self, t: f64) -> Result<DenseOperator> {
        let full: std::collections::BTreeSet<usize> = (0..self.operator.n_sites).collect();
        let support = if t == 0.0 {
            self.operator.support.clone()
        } else {
            full
        };
        let matrix = match (&self.propagator.spectrum, &self.rotated) {
            (Some(Spectrum { real_vectors: Some(v), energies: e, .. }), Some(_)) if self.rotated_real.is_some() => {
                let rot = self.rotated_real.as_ref().expect("checked above");
                let n = rot.nrows();
                let mut cos_part = Mat::<f64>::zeros(n, n);
                let mut sin_part = Mat::<f64>::zeros(n, n);
                for col in 0..n {
                    let (src, c, s) = (rot.col_as_slice(col), cos_part.col_as_slice_mut(col), sin_part.col_as_slice_mut(col));
                    for row in 0..n {
                        let (sin, cos) = ((e[row] - e[col]) * t).sin_cos();
                        c[row] = src[row] * cos;
                        s[row] = src[row] * sin;
                    }
                }
                let re = v * cos_part * v.transpose();
                let im = v * sin_part * v.transpose();
                Mat::from_fn(n, n, |i, j| c64::new(re[(i, j)], im[(i, j)]))
            }
            (Some(s), Some(rot)) => {
                let e = &s.energies;
                let phased = Mat::from_fn(rot.nrows(), rot.ncols(), |m, n| {
                    let (sin, cos) = ((e[m] - e[n]) * t).sin_cos();
                    rot[(m, n)] * c64::new(cos, sin)
                });
                &s.vectors * phased * s.vectors.adjoint()
            }
            _ => {
                let u = self.propagator.unitary(t)?;
                u.adjoint() * &self.operator.matrix * &u
            }
        };
        Ok(DenseOperator {
            matrix,
            n_sites: self.operator.n_sites,
            support,
        })
    }
}

/// Heisenberg evolution of `a` under `h` for a single time.
pub fn heisenberg_evolve(
    h: &DenseOperator,
    a: &DenseOperator,
    t: f64,
    method: EvolutionMethod,
) -> Result<DenseOperator> {
    Propagator::new(h, method)?.evolve(a, t)
}

/// Eigendecomposition of `h`, block by block when its nonzero pattern
/// splits into several connected components (conserved parity or
/// magnetization, for instance).
fn diagonalize(h: &CMat) -> Result<Spectrum> {
    let blocks = coupled_blocks(h);
    if blocks.len() <= 1 {
        return diagonalize_dense(h);
    }
    let n = h.nrows();
    let real = linalg::is_real(h.as_ref());
    let mut energies = Vec::with_capacity(n);
    let mut vectors = CMat::zeros(n, n);
    let mut real_vectors = real.then(|| Mat::<f64>::zeros(n, n));
    for block in &blocks {
        let sub = CMat::from_fn(block.len(), block.len(), |p, q| h[(block[p], block[q])]);
        let s = diagonalize_dense(&sub)?;
        for k in 0..block.len() {
            let col = energies.len();
            energies.push(s.energies[k]);
            let (src, dst) = (s.vectors.col_as_slice(k), vectors.col_as_slice_mut(col));
            for (p, &row) in block.iter().enumerate() {
                dst[row] = src[p];
            }
            if let (Some(rv), Some(sr)) = (real_vectors.as_mut(), s.real_vectors.as_ref()) {
                let (src, dst) = (sr.col_as_slice(k), rv.col_as_slice_mut(col));
                for (p, &row) in block.iter().enumerate() {
                    dst[row] = src[p];
                }
            }
        }
    }
    Ok(Spectrum { energies, vectors, real_vectors })
}

/// Connected components of the graph whose edges are the nonzero
/// off-diagonal entries of `h`, in order of their smallest index.
fn coupled_blocks(h: &CMat) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for (i, v) in h.col_as_slice(j).iter().enumerate() {
            if i != j && *v != ZERO {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

fn diagonalize_dense(h: &CMat) -> Result<Spectrum> {
    let fail = |e| Error::NumericalFailure(format!("Hamiltonian eigensolve: {e:?}"));
    if linalg::is_real(h.as_ref()) {
        let evd = linalg::real_part(h.as_ref())
            .self_adjoint_eigen(Side::Lower)
            .map_err(fail)?;
        let energies = (0..h.nrows()).map(|i| evd.S()[i]).collect();
        Ok(Spectrum {
            energies,
            vectors: linalg::to_complex(evd.U()),
            real_vectors: Some(evd.U().to_owned()),
        })
    } else {
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(fail)?;
        let energies = (0..h.nrows()).map(|i| evd.S()[i].re).collect();
        Ok(Spectrum {
            energies,
            vectors: evd.U().to_owned(),
            real_vectors: None,
        })
    }
}

fn spectral_unitary(s: &Spectrum, t: f64) -> CMat {
    let v = &s.vectors;
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, k| {
        let (sin, cos) = (-s.energies[k] * t).sin_cos();
        v[(i, k)] * c64::new(cos, sin)
    });
    scaled * v.adjoint()
}

/// `e^{-i T t} e_1` for the real symmetric tridiagonal `T` with diagonal
/// `alphas` and off-diagonal `betas`.
fn small_exponential(alphas: &[f64], betas: &[f64], t: f64) -> Result<Vec<c64>> {
    let m = alphas.len();
    let tri = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let evd = tri
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("tridiagonal eigensolve: {e:?}")))?;
    let u = evd.U();
    let s = evd.S();
    Ok((0..m)
        .map(|i| {
            (0..m).fold(ZERO, |acc, k| {
                let (sin, cos) = (-s[k] * t).sin_cos();
                acc + c64::new(cos, sin) * (u[(i, k)] * u[(0, k)])
            })
        })
        .collect())
}

fn matvec(h: &CMat, x: &[c64]) -> Vec<c64> {
    let mut y = vec![ZERO; h.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == ZERO {
            continue;
        }
        for (yi, &hij) in y.iter_mut().zip(h.col_as_slice(j)) {
            *yi += hij * xj;
        }
    }
    y
}

fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

fn axpy(y: &mut [c64], a: c64, x: &[c64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn norm(x: &[c64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}
