//! Light-cone fronts: where a commutator or bound surface first reaches a
//! threshold, and the power law `t ~ r^zeta` fitted through those points.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundCurve;
use crate::dynamics::CommutatorProfile;
use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const MIN_FIT_POINTS: usize = 5;

/// A table of values over distances (rows) and ascending times (columns).
pub trait Surface {
    fn distances(&self) -> &[f64];
    fn times(&self) -> &[f64];
    fn row(&self, index: usize) -> &[f64];
}

impl Surface for BoundCurve {
    fn distances(&self) -> &[f64] {
        &self.radii
    }
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn row(&self, index: usize) -> &[f64] {
        &self.values[index]
    }
}

impl Surface for CommutatorProfile {
    fn distances(&self) -> &[f64] {
        &self.distances
    }
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn row(&self, index: usize) -> &[f64] {
        &self.values[index]
    }
}

/// Surface given directly as a grid, mainly for synthetic inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSurface {
    pub distances: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl GridSurface {
    pub fn from_fn(distances: &[f64], times: &[f64], f: impl Fn(f64, f64) -> f64) -> Self {
        let values = distances
            .iter()
            .map(|&r| times.iter().map(|&t| f(r, t)).collect())
            .collect();
        GridSurface {
            distances: distances.to_vec(),
            times: times.to_vec(),
            values,
        }
    }
}

impl Surface for GridSurface {
    fn distances(&self) -> &[f64] {
        &self.distances
    }
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn row(&self, index: usize) -> &[f64] {
        &self.values[index]
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 2), got {epsilon}")));
    }
    Ok(())
}

/// First time each row reaches `epsilon`, linearly interpolated between grid
/// times. Rows that never reach it are dropped; repeated distances keep the
/// earliest crossing. Points come back sorted by distance.
pub fn extract_front<S: Surface + ?Sized>(surface: &S, epsilon: f64) -> Result<Vec<(f64, f64)>> {
    check_epsilon(epsilon)?;
    let times = surface.times();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (p, &r) in surface.distances().iter().enumerate() {
        let row = surface.row(p);
        if row.len() != times.len() {
            return Err(Error::invalid(format!(
                "row {p} has {} values for {} times",
                row.len(),
                times.len()
            )));
        }
        let Some(k) = row.iter().position(|&v| v >= epsilon) else {
            continue;
        };
        let t = if k == 0 {
            times[0]
        } else {
            let (v0, v1) = (row[k - 1], row[k]);
            let (t0, t1) = (times[k - 1], times[k]);
            if v1.is_finite() {
                t0 + (epsilon - v0) / (v1 - v0) * (t1 - t0)
            } else {
                t1
            }
        };
        points.push((r, t));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup_by(|later, earlier| later.0 == earlier.0);
    Ok(points)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Decreasing,
    Increasing,
    Constant,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaProbe {
    pub beta: f64,
    pub times: Vec<f64>,
    /// The surface along `r = t^beta`.
    pub values: Vec<f64>,
    pub trend: Trend,
}

impl BetaProbe {
    pub fn decreasing(&self) -> bool {
        self.trend == Trend::Decreasing
    }
}

fn trend(values: &[f64]) -> Trend {
    let mut up = false;
    let mut down = false;
    for w in values.windows(2) {
        if w[1] > w[0] {
            up = true;
        } else if w[1] < w[0] {
            down = true;
        } else if w[1] != w[0] {
            // NaN
            return Trend::Mixed;
        }
    }
    match (up, down) {
        (false, false) => Trend::Constant,
        (false, true) => Trend::Decreasing,
        (true, false) => Trend::Increasing,
        (true, true) => Trend::Mixed,
    }
}

/// Evaluate `bound(r, t)` along the ray `r = t^beta`.
pub fn beta_probe(
    bound: impl Fn(f64, f64) -> Result<f64>,
    beta: f64,
    times: &[f64],
) -> Result<BetaProbe> {
    if !(beta > 0.0) {
        return Err(Error::invalid(format!("beta must be positive, got {beta}")));
    }
    let values = times
        .iter()
        .map(|&t| bound(t.powf(beta), t))
        .collect::<Result<Vec<_>>>()?;
    Ok(BetaProbe {
        beta,
        times: times.to_vec(),
        trend: trend(&values),
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontFit {
    pub epsilon: Option<f64>,
    /// Points used in the fit, ascending in `r`.
    pub points: Vec<(f64, f64)>,
    pub zeta_hat: f64,
    pub zeta_stderr: f64,
    /// `ln t = intercept + zeta ln r`
    pub intercept: f64,
    pub fit_window: (f64, f64),
    pub n: usize,
    /// `zeta_hat` lies in `(0, 1.5]`.
    pub sane: bool,
    pub beta_probes: Vec<BetaProbe>,
}

/// Least-squares slope of `ln t` against `ln r` over points inside `window`
/// (inclusive).
pub fn fit_exponent(points: &[(f64, f64)], window: (f64, f64)) -> Result<FrontFit> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::invalid(format!("fit window ({lo}, {hi}) is empty")));
    }
    let mut used: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(r, _)| r >= lo && r <= hi)
        .collect();
    if let Some(&(r, t)) = used.iter().find(|&&(r, t)| !(r > 0.0 && t > 0.0)) {
        return Err(Error::invalid(format!("fit needs r, t > 0, got ({r}, {t})")));
    }
    used.sort_by(|a, b| a.0.total_cmp(&b.0));
    used.dedup_by(|later, earlier| later.0 == earlier.0);
    let n = used.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{n} front points in window ({lo}, {hi}); at least {MIN_FIT_POINTS} needed"
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(FrontFit {
        epsilon: None,
        points: used,
        zeta_hat: slope,
        zeta_stderr: stderr,
        intercept,
        fit_window: window,
        n,
        sane: slope > 0.0 && slope <= 1.5,
        beta_probes: Vec::new(),
    })
}

/// [`extract_front`] followed by [`fit_exponent`].
pub fn fit_front<S: Surface + ?Sized>(surface: &S, epsilon: f64, window: (f64, f64)) -> Result<FrontFit> {
    let points = extract_front(surface, epsilon)?;
    let mut fit = fit_exponent(&points, window)?;
    fit.epsilon = Some(epsilon);
    Ok(fit)
}

/// `n` points spaced evenly in `ln x` from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}
