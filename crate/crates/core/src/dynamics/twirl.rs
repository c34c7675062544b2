//! Haar averaging over a region and the quasi-local shell decomposition of an
//! evolved operator.

use std::collections::BTreeSet;

use faer::{c64, Mat};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::model::{bit_of, operator_norm, DenseOperator};

use super::evolve::{EvolutionMethod, Propagator};

/// `c = 2 (1 + e)`
pub const SHELL_CONSTANT: f64 = 2.0 * (1.0 + std::f64::consts::E);

/// Exact Haar twirl `int dU U A U^dagger` over unitaries on `complement`:
/// the normalized partial trace over `complement`, tensored back with the
/// identity there.
pub fn haar_twirl(a: &DenseOperator, complement: &BTreeSet<usize>) -> Result<DenseOperator> {
    let n = a.n_sites;
    if let Some(&bad) = complement.iter().find(|&&s| s >= n) {
        return Err(Error::invalid(format!("site {bad} outside {n}-site register")));
    }
    if complement.is_empty() {
        return Ok(a.clone());
    }
    let dim = a.dim();
    let comp_mask: usize = complement.iter().map(|&s| bit_of(n, s)).sum();
    let keep_mask = (dim - 1) & !comp_mask;
    let kept_bits: Vec<usize> = (0..n)
        .map(|b| 1usize << b)
        .filter(|b| b & keep_mask != 0)
        .collect();
    let compress = |m: usize| -> usize {
        kept_bits
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &b)| if m & b != 0 { acc | (1 << k) } else { acc })
    };
    let index: Vec<usize> = (0..dim).map(compress).collect();
    let red_dim = 1usize << kept_bits.len();
    let mut reduced = Mat::<c64>::zeros(red_dim, red_dim);
    for col in 0..dim {
        let col_env = col & comp_mask;
        let rc = index[col];
        for row in 0..dim {
            if row & comp_mask == col_env {
                reduced[(index[row], rc)] += a.matrix[(row, col)];
            }
        }
    }
    let weight = 1.0 / (1usize << complement.len()) as f64;
    let matrix = Mat::from_fn(dim, dim, |row, col| {
        if row & comp_mask == col & comp_mask {
            reduced[(index[row], index[col])] * weight
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let support = a
        .support
        .iter()
        .copied()
        .filter(|s| !complement.contains(s))
        .collect();
    Ok(DenseOperator {
        matrix,
        n_sites: n,
        support,
    })
}

/// `A(t)`, the projections `A(l,t)` onto each ball, and the shells
/// `A^l(t) = A(l,t) - A(l-1,t)`.
#[derive(Clone, Debug)]
pub struct ShellOperators {
    pub evolved: DenseOperator,
    pub projected: Vec<DenseOperator>,
    pub deltas: Vec<DenseOperator>,
}

/// `A(t) = sum_l A^l(t)` with `A^l` supported on the ball of radius
/// `R + l chi` around the centre.
#[derive(Clone, Debug, Serialize)]
pub struct QuasiLocalDecomposition {
    pub center: usize,
    pub chi: f64,
    pub velocity: f64,
    pub time: f64,
    /// `R = chi v t`
    pub radius: f64,
    /// Ball radii `R + l chi` for each shell in the schedule.
    pub radius_schedule: Vec<f64>,
    /// The operators themselves; only [`quasilocal_decompose`] keeps them.
    #[serde(skip)]
    pub operators: Option<ShellOperators>,
    /// `||A^l(t)||`
    pub delta_norms: Vec<f64>,
    /// `||A(l,t) - A(t)||`
    pub truncation_norms: Vec<f64>,
    /// `2 ||A|| e^{-l}`
    pub truncation_bounds: Vec<f64>,
    /// `c ||A|| e^{-l}`
    pub delta_bounds: Vec<f64>,
    /// The schedule stopped early because a ball covered the whole lattice.
    pub truncated: bool,
}

impl QuasiLocalDecomposition {
    pub fn shells(&self) -> usize {
        self.radius_schedule.len()
    }

    /// Shells whose measured truncation error exceeds `2 ||A|| e^{-l}`.
    pub fn truncation_violations(&self) -> Vec<usize> {
        self.truncation_norms
            .iter()
            .zip(&self.truncation_bounds)
            .enumerate()
            .filter(|(_, (m, b))| m > b)
            .map(|(l, _)| l)
            .collect()
    }
}

/// Build the shell decomposition of `A(t)` evolved under the short-range
/// Hamiltonian `h_sr`.
#[allow(clippy::too_many_arguments)]
pub fn quasilocal_decompose(
    lattice: &LatticeSpec,
    h_sr: &DenseOperator,
    a: &DenseOperator,
    center: usize,
    t: f64,
    chi: f64,
    velocity: f64,
    max_shell: usize,
) -> Result<QuasiLocalDecomposition> {
    let mut all = decompose_times(lattice, h_sr, a, center, &[t], chi, velocity, max_shell, true)?;
    Ok(all.remove(0))
}

/// [`quasilocal_decompose`] at several times, diagonalizing `h_sr` once.
/// Only the norms are kept, so `operators` is `None`.
#[allow(clippy::too_many_arguments)]
pub fn quasilocal_decompose_times(
    lattice: &LatticeSpec,
    h_sr: &DenseOperator,
    a: &DenseOperator,
    center: usize,
    times: &[f64],
    chi: f64,
    velocity: f64,
    max_shell: usize,
) -> Result<Vec<QuasiLocalDecomposition>> {
    decompose_times(lattice, h_sr, a, center, times, chi, velocity, max_shell, false)
}
#[allow(clippy::too_many_arguments)]
fn decompose_times(
    lattice: &LatticeSpec,
    h_sr: &DenseOperator,
    a: &DenseOperator,
    center: usize,
    times: &[f64],
    chi: f64,
    velocity: f64,
    max_shell: usize,
    keep: bool,
) -> Result<Vec<QuasiLocalDecomposition>> {
    if h_sr.n_sites != lattice.n_sites() || a.n_sites != lattice.n_sites() {
        return Err(Error::invalid("operator and lattice sizes differ"));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::invalid(format!("need t >= 0; got t = {t}")));
    }
    if !(chi >= 1.0) || !(velocity >= 0.0) {
        return Err(Error::invalid(format!("need chi >= 1, v >= 0; got chi = {chi}, v = {velocity}")));
    }
    let a_norm = operator_norm(a)?;
    let prop = Propagator::new(h_sr, EvolutionMethod::DenseExpm)?;
    let frame = prop.frame(a)?;
    times
        .iter()
        .map(|&t| decompose_evolved(lattice, frame.at(t)?, a_norm, center, t, chi, velocity, max_shell, keep))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn decompose_evolved(
    lattice: &LatticeSpec,
    evolved: DenseOperator,
    a_norm: f64,
    center: usize,
    t: f64,
    chi: f64,
    velocity: f64,
    max_shell: usize,
    keep: bool,
) -> Result<QuasiLocalDecomposition> {
    let radius = chi * velocity * t;
    let n = lattice.n_sites();

    let mut out = QuasiLocalDecomposition {
        center,
        chi,
        velocity,
        time: t,
        radius,
        radius_schedule: Vec::new(),
        operators: None,
        delta_norms: Vec::new(),
        truncation_norms: Vec::new(),
        truncation_bounds: Vec::new(),
        delta_bounds: Vec::new(),
        truncated: false,
    };
    let (mut projected, mut deltas) = (Vec::new(), Vec::new());
    let mut previous: Option<DenseOperator> = None;
    for shell in 0..=max_shell {
        let r = radius + shell as f64 * chi;
        let ball = lattice.ball(center, r)?;
        let complement: BTreeSet<usize> = (0..n).filter(|s| !ball.contains(s)).collect();
        let proj = haar_twirl(&evolved, &complement)?;
        let delta = match &previous {
            Some(prev) => proj.sub(prev),
            None => proj.clone(),
        };
        let decay = (-(shell as f64)).exp();
        out.radius_schedule.push(r);
        out.delta_norms.push(operator_norm(&delta)?);
        out.truncation_norms.push(if complement.is_empty() {
            0.0
        } else {
            operator_norm(&proj.sub(&evolved))?
        });
        out.truncation_bounds.push(2.0 * a_norm * decay);
        out.delta_bounds.push(SHELL_CONSTANT * a_norm * decay);
        if keep {
            deltas.push(delta);
            projected.push(proj.clone());
        }
        previous = Some(proj);
        if complement.is_empty() {
            out.truncated = shell < max_shell;
            break;
        }
    }
    if keep {
        out.operators = Some(ShellOperators { evolved, projected, deltas });
    }
    Ok(out)
}
