//! Analytic commutator bounds for power-law interactions and numerical checks
//! of the kernel inequalities behind them.
//!
//! All bounds assume unit-norm operators `A` and `B`.

mod estimates;
mod kernel;

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

pub use estimates::{
    bound_curve, bound_hastings_koma, bound_paper, bound_scaling_form, bound_short_range,
    optimize_cutoff, scaling_gamma, zeta_exponent, BoundCurve, BoundValue, BoundVariant,
    CouplingModel, CutoffChoice, CutoffMode, CutoffOptimizer, InfiniteChain, LatticeCouplings,
};
pub use kernel::{
    build_kernel, f_shape, j_a_series, jlr_matrix_with_diagonal, k_shape, series_prefactor,
    series_row, verify_convolution, verify_reproducibility, ConvolutionReport, Kernel, KernelKind,
    ReproducibilityReport, ShapeKernel, J_SERIES_CAP,
};

/// `c = 2 (1 + e)`, the shell-sum constant.
pub const SHELL_C: f64 = 2.0 * (1.0 + E);

/// `kappa = sum_{l >= 0} e^{-l} = e / (e - 1)`
pub const KAPPA: f64 = E / (E - 1.0);

/// `kappa^2` with the factor `2 * 6^alpha` folded in, as happens when the
/// `F` chain is contracted into a single power of `R / r`.
pub fn effective_kappa_sq(alpha: f64) -> f64 {
    2.0 * 6f64.powf(alpha) * KAPPA * KAPPA
}

/// Which `kappa^2` multiplies the long-range term of the bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// Plain `kappa^2`, the closed form as written.
    #[default]
    Literal,
    /// [`effective_kappa_sq`], carrying the absorbed `2 * 6^alpha`.
    Explicit,
}

/// Constants of the bound at a fixed cutoff `chi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    pub dim: usize,
    pub j0: f64,
    pub chi: f64,
    /// `v = 4 e lambda_sr`
    pub v: f64,
    pub lambda_sr: f64,
    pub lambda_chi: f64,
    pub c: f64,
    pub kappa: f64,
    /// Reproducibility constant of `F` at the radius these parameters were
    /// built for.
    pub g: f64,
    /// Half-space constant, when fitted.
    pub b: Option<f64>,
    pub prefactor: Prefactor,
}

impl BoundParams {
    pub fn new(
        alpha: f64,
        dim: usize,
        j0: f64,
        chi: f64,
        lambda_sr: f64,
        lambda_chi: f64,
        g: f64,
    ) -> Self {
        BoundParams {
            alpha,
            dim,
            j0,
            chi,
            v: 4.0 * E * lambda_sr,
            lambda_sr,
            lambda_chi,
            c: SHELL_C,
            kappa: KAPPA,
            g,
            b: None,
            prefactor: Prefactor::Literal,
        }
    }

    /// `R = chi v t`
    pub fn radius(&self, t: f64) -> f64 {
        self.chi * self.v * t
    }

    /// `g * 4 kappa^3 c^2`
    pub fn vartheta(&self) -> f64 {
        self.g * 4.0 * self.kappa.powi(3) * self.c * self.c
    }

    /// `v_chi = vartheta R^D lambda_chi`, zero when `R = 0`.
    pub fn v_chi(&self, t: f64) -> f64 {
        let r = self.radius(t);
        if r == 0.0 || self.lambda_chi == 0.0 {
            return 0.0;
        }
        self.vartheta() * r.powi(self.dim as i32) * self.lambda_chi
    }

    pub fn long_range_kappa_sq(&self) -> f64 {
        match self.prefactor {
            Prefactor::Literal => self.kappa * self.kappa,
            Prefactor::Explicit => effective_kappa_sq(self.alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let geometric: f64 = (0..200).map(|l| (-(l as f64)).exp()).sum();
        assert!((KAPPA - geometric).abs() < 1e-12);
        assert!((SHELL_C - 2.0 * (1.0 + 1f64.exp())).abs() < 1e-12);
        assert!((effective_kappa_sq(2.0) - 72.0 * KAPPA * KAPPA).abs() < 1e-9);
    }

    #[test]
    fn velocities_follow_radius() {
        let mut p = BoundParams::new(3.0, 1, 1.0, 2.0, 2.25, 0.1, 1.5);
        assert!((p.v - 4.0 * E * 2.25).abs() < 1e-12);
        let t = 0.7;
        let r = p.radius(t);
        assert!((r - 2.0 * p.v * t).abs() < 1e-12);
        assert!((p.v_chi(t) - 1.5 * 4.0 * KAPPA.powi(3) * SHELL_C.powi(2) * r * 0.1).abs() < 1e-9);
        assert_eq!(p.v_chi(0.0), 0.0);
        p.chi = 4.0;
        assert!((p.radius(t) - 2.0 * r).abs() < 1e-12);
        assert!((p.v_chi(t) - 2.0 * 1.5 * 4.0 * KAPPA.powi(3) * SHELL_C.powi(2) * r * 0.1).abs() < 1e-9);
    }
}
