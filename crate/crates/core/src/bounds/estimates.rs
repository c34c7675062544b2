//! Closed-form bounds on `||[A(t), B]||`, the cutoff optimization, and bound
//! surfaces over `(r, t)` grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CouplingSplit, LatticeSpec};

use super::kernel::{build_kernel, verify_reproducibility, ShapeKernel};
use super::{BoundParams, Prefactor};

/// Anything that can supply the split rates and the reproducibility constant
/// for a given cutoff and radius.
pub trait CouplingModel: Send + Sync {
    fn dim(&self) -> usize;
    fn alpha(&self) -> f64;
    fn j0(&self) -> f64;
    fn prefactor(&self) -> Prefactor;
    /// `(lambda_sr, lambda_chi)` at cutoff `chi`.
    fn rates(&self, chi: f64) -> Result<(f64, f64)>;
    /// Reproducibility constant `g` of `F` at radius `R > 0`.
    fn reproducibility(&self, radius: f64) -> Result<f64>;
    /// Cutoff beyond which the split stops changing.
    fn chi_ceiling(&self) -> f64;

    /// Bound constants at cutoff `chi` and time `t`; `g` is fitted at
    /// `R = chi v t` and set to zero when `R = 0`.
    fn params(&self, chi: f64, t: f64) -> Result<BoundParams> {
        if !(chi >= 1.0) {
            return Err(Error::invalid(format!("chi must be at least 1, got {chi}")));
        }
        let (lambda_sr, lambda_chi) = self.rates(chi)?;
        let mut p = BoundParams::new(self.alpha(), self.dim(), self.j0(), chi, lambda_sr, lambda_chi, 0.0);
        p.prefactor = self.prefactor();
        let radius = p.radius(t);
        if radius > 0.0 && lambda_chi > 0.0 {
            p.g = self.reproducibility(radius)?;
        }
        Ok(p)
    }
}

/// Couplings of a finite lattice; `g` is refitted on the lattice for each
/// radius.
#[derive(Clone, Debug)]
pub struct LatticeCouplings {
    pub lattice: LatticeSpec,
    pub alpha: f64,
    pub j0: f64,
    pub prefactor: Prefactor,
}

impl LatticeCouplings {
    pub fn new(lattice: LatticeSpec, alpha: f64, j0: f64) -> Result<Self> {
        // validates alpha and j0
        CouplingSplit::new(&lattice, alpha, j0, 1.0)?;
        Ok(LatticeCouplings {
            lattice,
            alpha,
            j0,
            prefactor: Prefactor::Literal,
        })
    }
}

impl CouplingModel for LatticeCouplings {
    fn dim(&self) -> usize {
        self.lattice.dim()
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn j0(&self) -> f64 {
        self.j0
    }
    fn prefactor(&self) -> Prefactor {
        self.prefactor
    }
    fn rates(&self, chi: f64) -> Result<(f64, f64)> {
        let s = CouplingSplit::new(&self.lattice, self.alpha, self.j0, chi)?;
        Ok((s.lambda_sr, s.lambda_chi))
    }
    fn reproducibility(&self, radius: f64) -> Result<f64> {
        let f = build_kernel(&self.lattice, ShapeKernel::F, radius, 1.0, self.alpha)?;
        Ok(verify_reproducibility(&f, self.dim())?.g)
    }
    fn chi_ceiling(&self) -> f64 {
        self.lattice.diameter().max(1.0)
    }
}

/// Unbounded chain with couplings `j0 / d^alpha`, `alpha > 1`, and a fixed
/// reproducibility constant.
#[derive(Clone, Debug)]
pub struct InfiniteChain {
    pub alpha: f64,
    pub j0: f64,
    pub g: f64,
    pub prefactor: Prefactor,
}

impl InfiniteChain {
    pub fn new(alpha: f64, j0: f64, g: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!(
                "an infinite chain needs alpha > 1, got {alpha}"
            )));
        }
        if !(j0 > 0.0) || !j0.is_finite() {
            return Err(Error::invalid(format!("j0 must be positive, got {j0}")));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::invalid(format!("g must be positive, got {g}")));
        }
        Ok(InfiniteChain {
            alpha,
            j0,
            g,
            prefactor: Prefactor::Literal,
        })
    }

    /// `sum_{d > m} d^{-alpha}`: 64 explicit terms, then Euler-Maclaurin.
    fn tail(&self, m: u64) -> f64 {
        const EXPLICIT: u64 = 64;
        let a = self.alpha;
        let head: f64 = (m + 1..=m + EXPLICIT).map(|d| (d as f64).powf(-a)).sum();
        let x = (m + EXPLICIT + 1) as f64;
        let integral = x.powf(1.0 - a) / (a - 1.0);
        let f0 = x.powf(-a);
        let f1 = -a * x.powf(-a - 1.0);
        let f3 = -a * (a + 1.0) * (a + 2.0) * x.powf(-a - 3.0);
        head + integral + f0 / 2.0 - f1 / 12.0 + f3 / 720.0
    }
}

impl CouplingModel for InfiniteChain {
    fn dim(&self) -> usize {
        1
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn j0(&self) -> f64 {
        self.j0
    }
    fn prefactor(&self) -> Prefactor {
        self.prefactor
    }
    fn rates(&self, chi: f64) -> Result<(f64, f64)> {
        if !(chi >= 1.0) || !chi.is_finite() {
            return Err(Error::invalid(format!("chi must be finite and at least 1, got {chi}")));
        }
        let m = chi.floor() as u64;
        let long = self.tail(m);
        let short = self.tail(0) - long;
        Ok((2.0 * self.j0 * short, 2.0 * self.j0 * long))
    }
    fn reproducibility(&self, _radius: f64) -> Result<f64> {
        Ok(self.g)
    }
    fn chi_ceiling(&self) -> f64 {
        f64::INFINITY
    }
}

fn check_point(r: f64, t: f64) -> Result<()> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("distance must be finite and nonnegative, got {r}")));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("time must be finite and nonnegative, got {t}")));
    }
    Ok(())
}

/// `2 e^{vt - r/chi}`
pub fn bound_short_range(params: &BoundParams, r: f64, t: f64) -> Result<f64> {
    check_point(r, t)?;
    Ok(2.0 * (params.v * t - r / params.chi).exp())
}

/// `e^{vt} / r^alpha`, with unit prefactor by convention.
pub fn bound_hastings_koma(params: &BoundParams, r: f64, t: f64) -> Result<f64> {
    check_point(r, t)?;
    if r < 1.0 {
        return Err(Error::invalid(format!("distance must be at least 1, got {r}")));
    }
    Ok((params.v * t - params.alpha * r.ln()).exp())
}

/// A bound evaluated at one point, with its validity flags.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    /// `min(2, value)`
    pub clipped: f64,
    pub chi: f64,
    /// `r > 6R`
    pub beyond_six_radii: bool,
    /// `vt > alpha ln alpha`
    pub beyond_alpha_log_alpha: bool,
}

impl BoundValue {
    fn new(value: f64, chi: f64, beyond_six_radii: bool, beyond_alpha_log_alpha: bool) -> Self {
        BoundValue {
            value,
            clipped: value.min(2.0),
            chi,
            beyond_six_radii,
            beyond_alpha_log_alpha,
        }
    }

    pub fn in_regime(&self) -> bool {
        self.beyond_six_radii && self.beyond_alpha_log_alpha
    }
}

/// `2 c kappa e^{vt - r/chi} + 4 c kappa_lr^2 e^{v_chi t} (R / r)^alpha`,
/// where `kappa_lr^2` is `kappa^2` unless the explicit prefactor is selected.
pub fn bound_paper(params: &BoundParams, r: f64, t: f64) -> Result<BoundValue> {
    check_point(r, t)?;
    if r == 0.0 {
        return Err(Error::invalid("distance must be positive"));
    }
    let radius = params.radius(t);
    let short = 2.0 * params.c * params.kappa * (params.v * t - r / params.chi).exp();
    let long = if radius == 0.0 {
        0.0
    } else {
        4.0 * params.c
            * params.long_range_kappa_sq()
            * (params.v_chi(t) * t + params.alpha * (radius / r).ln()).exp()
    };
    let vt = params.v * t;
    Ok(BoundValue::new(
        short + long,
        params.chi,
        r > 6.0 * radius,
        vt > params.alpha * params.alpha.ln(),
    ))
}

/// `gamma = (1 + D) / (alpha - 2D)`
pub fn scaling_gamma(alpha: f64, dim: usize) -> Result<f64> {
    let d = dim as f64;
    if !(alpha > 2.0 * d) {
        return Err(Error::UnsupportedRegime(format!(
            "cutoff scaling needs alpha > 2D = {}, got alpha = {alpha}",
            2.0 * d
        )));
    }
    Ok((1.0 + d) / (alpha - 2.0 * d))
}

/// Light-cone exponent `zeta = 1 / (1 + gamma)`.
pub fn zeta_exponent(alpha: f64, dim: usize) -> Result<f64> {
    Ok(1.0 / (1.0 + scaling_gamma(alpha, dim)?))
}

/// `exp(vt - r / t^gamma) + t^{alpha (1 + gamma)} / r^alpha`, the bound with
/// the cutoff grown as `t^gamma` and constant prefactors dropped.
pub fn bound_scaling_form(alpha: f64, dim: usize, v: f64, r: f64, t: f64) -> Result<f64> {
    check_point(r, t)?;
    if r == 0.0 {
        return Err(Error::invalid("distance must be positive"));
    }
    let gamma = scaling_gamma(alpha, dim)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let front = (v * t - r / t.powf(gamma)).exp();
    let tail = (alpha * ((1.0 + gamma) * t.ln() - r.ln())).exp();
    Ok(front + tail)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    /// `chi = max(1, chi0 t^gamma)`.
    #[default]
    Scaling,
    /// Golden-section minimization over `chi`.
    Numeric,
}

impl std::str::FromStr for CutoffMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaling" => Ok(CutoffMode::Scaling),
            "numeric" => Ok(CutoffMode::Numeric),
            other => Err(Error::invalid(format!("unknown cutoff mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffChoice {
    pub chi_star: f64,
    pub bound: BoundValue,
    pub mode: CutoffMode,
}

/// Largest `chi` tried when looking for `chi0` on an unbounded lattice.
const CHI_SEARCH_LIMIT: f64 = 1e12;
const CHI_TOLERANCE: f64 = 1e-6;

/// Cutoff optimization for one coupling model, with `chi0` computed once.
pub struct CutoffOptimizer<'a, M: CouplingModel + ?Sized> {
    model: &'a M,
    /// `(gamma, chi0)` when `alpha > 2D`.
    scaling: Option<(f64, f64)>,
}

impl<'a, M: CouplingModel + ?Sized> CutoffOptimizer<'a, M> {
    pub fn new(model: &'a M) -> Result<Self> {
        let scaling = match scaling_gamma(model.alpha(), model.dim()) {
            Ok(gamma) => Some((gamma, Self::solve_chi0(model)?)),
            Err(_) => None,
        };
        Ok(CutoffOptimizer { model, scaling })
    }

    /// `chi0` with `v_chi(chi0) * 1 = 1` at `t = 1`, or 1 if already below.
    fn solve_chi0(model: &M) -> Result<f64> {
        let excess = |chi: f64| -> Result<f64> { Ok(model.params(chi, 1.0)?.v_chi(1.0) - 1.0) };
        if excess(1.0)? <= 0.0 {
            return Ok(1.0);
        }
        let ceiling = model.chi_ceiling().min(CHI_SEARCH_LIMIT);
        let mut hi = 2.0f64.min(ceiling);
        while excess(hi)? > 0.0 {
            if hi >= ceiling {
                return Err(Error::NumericalFailure(format!(
                    "v_chi stays above 1 for every cutoff up to {ceiling}"
                )));
            }
            hi = (hi * 2.0).min(ceiling);
        }
        let mut lo = (hi / 2.0).max(1.0);
        while hi - lo > CHI_TOLERANCE * hi {
            let mid = 0.5 * (lo + hi);
            if excess(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    pub fn chi0(&self) -> Option<f64> {
        self.scaling.map(|s| s.1)
    }

    pub fn scaling_chi(&self, t: f64) -> Result<f64> {
        let (gamma, chi0) = self.scaling.ok_or_else(|| {
            Error::UnsupportedRegime(format!(
                "cutoff scaling needs alpha > 2D, got alpha = {} with D = {}",
                self.model.alpha(),
                self.model.dim()
            ))
        })?;
        Ok((chi0 * t.powf(gamma)).max(1.0))
    }

    fn evaluate(&self, chi: f64, r: f64, t: f64) -> Result<BoundValue> {
        bound_paper(&self.model.params(chi, t)?, r, t)
    }

    /// Largest `chi` keeping `R(chi) <= r / 6`, at least 1.
    fn upper_cutoff(&self, r: f64, t: f64) -> Result<f64> {
        let ceiling = self.model.chi_ceiling().min(r.max(1.0));
        let radius = |chi: f64| -> Result<f64> { Ok(self.model.params(chi, t)?.radius(t)) };
        let target = r / 6.0;
        if radius(1.0)? >= target {
            return Ok(1.0);
        }
        if radius(ceiling)? <= target {
            return Ok(ceiling);
        }
        let (mut lo, mut hi) = (1.0, ceiling);
        while hi - lo > CHI_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if radius(mid)? <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    fn golden_section(&self, lo: f64, hi: f64, r: f64, t: f64) -> Result<(f64, BoundValue)> {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = self.evaluate(x1, r, t)?;
        let mut f2 = self.evaluate(x2, r, t)?;
        while b - a > CHI_TOLERANCE {
            if f1.value <= f2.value {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = self.evaluate(x1, r, t)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = self.evaluate(x2, r, t)?;
            }
        }
        Ok(if f1.value <= f2.value { (x1, f1) } else { (x2, f2) })
    }

    pub fn optimize(&self, r: f64, t: f64, mode: CutoffMode) -> Result<CutoffChoice> {
        check_point(r, t)?;
        match mode {
            CutoffMode::Scaling => {
                let chi = self.scaling_chi(t)?;
                Ok(CutoffChoice {
                    chi_star: chi,
                    bound: self.evaluate(chi, r, t)?,
                    mode,
                })
            }
            CutoffMode::Numeric => {
                let hi = self.upper_cutoff(r, t)?;
                let mut candidates = vec![(1.0, self.evaluate(1.0, r, t)?)];
                if hi > 1.0 {
                    candidates.push(self.golden_section(1.0, hi, r, t)?);
                    candidates.push((hi, self.evaluate(hi, r, t)?));
                }
                if self.scaling.is_some() {
                    let chi = self.scaling_chi(t)?;
                    candidates.push((chi, self.evaluate(chi, r, t)?));
                }
                let (chi_star, bound) = candidates
                    .into_iter()
                    .reduce(|best, c| if c.1.value < best.1.value { c } else { best })
                    .expect("at least one candidate");
                Ok(CutoffChoice { chi_star, bound, mode })
            }
        }
    }
}

/// One-shot [`CutoffOptimizer::optimize`].
pub fn optimize_cutoff<M: CouplingModel + ?Sized>(
    model: &M,
    r: f64,
    t: f64,
    mode: CutoffMode,
) -> Result<CutoffChoice> {
    CutoffOptimizer::new(model)?.optimize(r, t, mode)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    ShortRange,
    HastingsKoma,
    PaperFixedChi,
    #[default]
    PaperOptimized,
    /// Prefactor-free form with `chi` grown as `t^gamma`.
    ScalingForm,
}

impl std::str::FromStr for BoundVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "short_range" => Ok(BoundVariant::ShortRange),
            "hastings_koma" => Ok(BoundVariant::HastingsKoma),
            "paper_fixed_chi" => Ok(BoundVariant::PaperFixedChi),
            "paper_optimized" => Ok(BoundVariant::PaperOptimized),
            "scaling_form" => Ok(BoundVariant::ScalingForm),
            other => Err(Error::invalid(format!("unknown bound variant `{other}`"))),
        }
    }
}

/// A bound tabulated on an `(r, t)` grid; row `p` holds `radii[p]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub variant: BoundVariant,
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub unclipped: Vec<Vec<f64>>,
    pub chi: Vec<Vec<f64>>,
    pub beyond_six_radii: Vec<Vec<bool>>,
    pub beyond_alpha_log_alpha: Vec<Vec<bool>>,
}

/// Evaluate `variant` on every grid point. `chi` fixes the cutoff for the
/// short-range, Hastings-Koma and fixed-cutoff variants; `velocity` is the
/// `v` of the scaling form.
pub fn bound_curve<M: CouplingModel + ?Sized>(
    model: &M,
    variant: BoundVariant,
    chi: f64,
    mode: CutoffMode,
    velocity: f64,
    radii: &[f64],
    times: &[f64],
) -> Result<BoundCurve> {
    if radii.is_empty() || times.is_empty() {
        return Err(Error::invalid("bound grid needs at least one distance and one time"));
    }
    let optimizer = match variant {
        BoundVariant::PaperOptimized => Some(CutoffOptimizer::new(model)?),
        _ => None,
    };
    let gamma = match variant {
        BoundVariant::ScalingForm => scaling_gamma(model.alpha(), model.dim())?,
        _ => 0.0,
    };
    let alpha = model.alpha();
    let rows: Vec<Vec<BoundValue>> = radii
        .par_iter()
        .map(|&r| {
            times
                .iter()
                .map(|&t| -> Result<BoundValue> {
                    match variant {
                        BoundVariant::ShortRange | BoundVariant::HastingsKoma => {
                            let p = model.params(chi, t)?;
                            let value = if variant == BoundVariant::ShortRange {
                                bound_short_range(&p, r, t)?
                            } else {
                                bound_hastings_koma(&p, r, t)?
                            };
                            let regime = bound_paper(&p, r.max(f64::MIN_POSITIVE), t)?;
                            Ok(BoundValue::new(
                                value,
                                chi,
                                regime.beyond_six_radii,
                                regime.beyond_alpha_log_alpha,
                            ))
                        }
                        BoundVariant::PaperFixedChi => bound_paper(&model.params(chi, t)?, r, t),
                        BoundVariant::PaperOptimized => Ok(optimizer
                            .as_ref()
                            .expect("built above")
                            .optimize(r, t, mode)?
                            .bound),
                        BoundVariant::ScalingForm => {
                            let value = bound_scaling_form(alpha, model.dim(), velocity, r, t)?;
                            let cutoff = t.powf(gamma).max(1.0);
                            Ok(BoundValue::new(
                                value,
                                cutoff,
                                r > 6.0 * cutoff * velocity * t,
                                velocity * t > alpha * alpha.ln(),
                            ))
                        }
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let pick = |f: &dyn Fn(&BoundValue) -> f64| -> Vec<Vec<f64>> {
        rows.iter().map(|row| row.iter().map(f).collect()).collect()
    };
    let flag = |f: &dyn Fn(&BoundValue) -> bool| -> Vec<Vec<bool>> {
        rows.iter().map(|row| row.iter().map(f).collect()).collect()
    };
    Ok(BoundCurve {
        variant,
        radii: radii.to_vec(),
        times: times.to_vec(),
        values: pick(&|b| b.clipped),
        unclipped: pick(&|b| b.value),
        chi: pick(&|b| b.chi),
        beyond_six_radii: flag(&|b| b.beyond_six_radii),
        beyond_alpha_log_alpha: flag(&|b| b.beyond_alpha_log_alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{effective_kappa_sq, KAPPA, SHELL_C};
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn chain_model(n: usize, alpha: f64) -> LatticeCouplings {
        LatticeCouplings::new(LatticeSpec::chain(n).unwrap(), alpha, 1.0).unwrap()
    }

    #[test]
    fn short_range_examples() {
        let p = BoundParams::new(3.0, 1, 1.0, 2.0, 1.0, 0.0, 1.0);
        assert!((bound_short_range(&p, 2.0, 0.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(bound_short_range(&p, 0.0, 0.0).unwrap(), 2.0);
        let mut last = f64::INFINITY;
        for r in 0..50 {
            let b = bound_short_range(&p, r as f64, 0.3).unwrap();
            assert!(b < last);
            last = b;
        }
    }

    #[test]
    fn hastings_koma_examples() {
        let p = BoundParams::new(3.0, 1, 1.0, 1.0, 2.0, 0.5, 1.0);
        assert!((bound_hastings_koma(&p, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let a = bound_hastings_koma(&p, 5.0, 0.4).unwrap();
        let b = bound_hastings_koma(&p, 10.0, 0.4).unwrap();
        assert!((a / b - 8.0).abs() < 1e-12);
        let doubled = bound_hastings_koma(&p, 5.0, 0.4 + 2f64.ln() / p.v).unwrap();
        assert!((doubled / a - 2.0).abs() < 1e-12);
        let shifted = bound_hastings_koma(&p, 5.0, 0.4 + 3.0 * 2f64.ln() / p.v).unwrap();
        assert!((shifted / a - 8.0).abs() < 1e-11);
        assert!(bound_hastings_koma(&p, 0.5, 0.0).is_err());
    }

    #[test]
    fn paper_bound_matches_hand_evaluation() {
        let model = chain_model(40, 3.0);
        let (chi, t, r) = (2.0, 0.05, 35.0);
        let split = CouplingSplit::new(&model.lattice, 3.0, 1.0, chi).unwrap();
        let p = model.params(chi, t).unwrap();
        let v = 4.0 * E * split.lambda_sr;
        let big_r = chi * v * t;
        let c = 2.0 * (1.0 + E);
        let kappa = E / (E - 1.0);
        let vartheta = p.g * 4.0 * kappa * kappa * kappa * c * c;
        let v_chi = vartheta * big_r * split.lambda_chi;
        let expect = 2.0 * c * kappa
            * ((v * t - r / chi).exp() + 2.0 * kappa * (v_chi * t).exp() / (r / big_r).powf(3.0));
        let got = bound_paper(&p, r, t).unwrap();
        assert!(expect.is_finite());
        assert!(((got.value - expect) / expect).abs() < 1e-12, "{} vs {expect}", got.value);
        assert!(got.beyond_six_radii);
        assert_eq!(got.clipped, expect.min(2.0));
    }

    #[test]
    fn paper_bound_without_long_part() {
        let model = chain_model(6, 3.0);
        let p = model.params(10.0, 0.01).unwrap();
        assert_eq!(p.lambda_chi, 0.0);
        let (r, t) = (5.0, 0.01);
        let big_r = p.radius(t);
        let b = bound_paper(&p, r, t).unwrap();
        let expect = 2.0 * SHELL_C * KAPPA * ((p.v * t - r / 10.0).exp() + 2.0 * KAPPA * (r / big_r).powf(-3.0));
        assert!(((b.value - expect) / expect).abs() < 1e-12);
        assert!(b.value >= SHELL_C * KAPPA * bound_short_range(&p, r, t).unwrap());
    }

    #[test]
    fn explicit_prefactor_scales_long_term() {
        let model = chain_model(30, 3.0);
        let mut p = model.params(2.0, 0.05).unwrap();
        let literal = bound_paper(&p, 25.0, 0.05).unwrap().value;
        let short = 2.0 * SHELL_C * KAPPA * (p.v * 0.05 - 12.5f64).exp();
        p.prefactor = Prefactor::Explicit;
        let explicit = bound_paper(&p, 25.0, 0.05).unwrap().value;
        let ratio = (explicit - short) / (literal - short);
        assert!((ratio - effective_kappa_sq(3.0) / (KAPPA * KAPPA)).abs() < 1e-6 * ratio);
    }

    #[test]
    fn exponents() {
        assert_eq!(scaling_gamma(4.0, 1).unwrap(), 1.0);
        assert_eq!(scaling_gamma(3.0, 1).unwrap(), 2.0);
        assert!(matches!(scaling_gamma(2.0, 1), Err(Error::UnsupportedRegime(_))));
        assert!((zeta_exponent(3.0, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((zeta_exponent(4.0, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(zeta_exponent(1e9, 1).unwrap() > 1.0 - 1e-8);
        assert!(zeta_exponent(4.0, 2).is_err());
    }

    #[test]
    fn infinite_chain_rates_match_direct_sums() {
        let chain = InfiniteChain::new(3.0, 1.0, 2.0).unwrap();
        let (sr, lr) = chain.rates(4.5).unwrap();
        let direct_sr: f64 = (1..=4).map(|d| 2.0 / (d as f64).powi(3)).sum();
        let direct_lr: f64 = (5..2_000_000).map(|d| 2.0 / (d as f64).powi(3)).sum();
        assert!((sr - direct_sr).abs() < 1e-13);
        assert!((lr - direct_lr).abs() < 1e-11);
        // Apery's constant
        assert!((sr + lr - 2.0 * 1.202_056_903_159_594_3).abs() < 1e-13);
        assert!(InfiniteChain::new(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn scaling_cutoff_hits_unit_long_range_exponent() {
        let chain = InfiniteChain::new(4.0, 1.0, 2.0).unwrap();
        let opt = CutoffOptimizer::new(&chain).unwrap();
        let chi0 = opt.chi0().unwrap();
        let v_chi = |chi: f64| chain.params(chi, 1.0).unwrap().v_chi(1.0);
        assert!(chi0 > 1.0);
        assert!(v_chi(chi0) <= 1.0);
        assert!(v_chi(chi0 * (1.0 - 1e-5)) > 1.0);
        assert_eq!(opt.scaling_chi(10.0).unwrap(), (chi0 * 10.0).max(1.0));
        assert!(matches!(
            optimize_cutoff(&InfiniteChain::new(2.0, 1.0, 2.0).unwrap(), 10.0, 1.0, CutoffMode::Scaling),
            Err(Error::UnsupportedRegime(_))
        ));
    }

    #[test]
    fn numeric_never_exceeds_scaling() {
        let model = chain_model(10, 3.0);
        let opt = CutoffOptimizer::new(&model).unwrap();
        for r in 1..10 {
            for k in 0..8 {
                let t = 0.1 * k as f64;
                let s = opt.optimize(r as f64, t, CutoffMode::Scaling).unwrap();
                let n = opt.optimize(r as f64, t, CutoffMode::Numeric).unwrap();
                assert!(n.bound.value <= s.bound.value);
                assert!(n.chi_star >= 1.0);
            }
        }
    }

    #[test]
    fn curve_clips_and_keeps_raw_values() {
        let model = chain_model(8, 3.0);
        let radii = [1.0, 3.0, 7.0];
        let times = [0.0, 0.5, 1.0];
        let curve = bound_curve(&model, BoundVariant::PaperFixedChi, 1.0, CutoffMode::Scaling, 1.0, &radii, &times).unwrap();
        for (row, raw) in curve.values.iter().zip(&curve.unclipped) {
            for (v, u) in row.iter().zip(raw) {
                assert!(*v >= 0.0 && *v <= 2.0);
                assert_eq!(*v, u.min(2.0));
            }
        }
        assert!(bound_curve(&model, BoundVariant::HastingsKoma, 1.0, CutoffMode::Scaling, 1.0, &[0.5], &times).is_err());
    }

    proptest! {
        #[test]
        fn paper_bound_monotone(r in 1.0f64..30.0, dr in 0.0f64..10.0, t in 0.0f64..2.0, dt in 0.0f64..1.0) {
            let model = chain_model(12, 3.0);
            let p = model.params(2.0, t).unwrap();
            let near = bound_paper(&p, r, t).unwrap().value;
            let far = bound_paper(&p, r + dr, t).unwrap().value;
            prop_assert!(far <= near * (1.0 + 1e-12));
            // g is refitted with R, so compare at a fixed g
            let mut q = model.params(2.0, t + dt).unwrap();
            q.g = p.g;
            let later = bound_paper(&q, r, t + dt).unwrap().value;
            prop_assert!(later >= near * (1.0 - 1e-12));
        }

        #[test]
        fn zeta_increases_with_alpha(alpha in 2.01f64..50.0, step in 0.01f64..10.0) {
            let a = zeta_exponent(alpha, 1).unwrap();
            let b = zeta_exponent(alpha + step, 1).unwrap();
            prop_assert!(b > a && a > 0.0 && b < 1.0);
        }
    }
}
