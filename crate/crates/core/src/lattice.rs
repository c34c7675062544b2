//! Finite hypercubic lattices with open boundaries and power-law couplings.
//!
//! Sites are indexed in row-major order over their integer coordinates (the
//! last axis varies fastest). Couplings saturate `J(y,z) = j0 / d(y,z)^alpha`
//! and are split at a cutoff `chi` into a short part (`d <= chi`) and a long
//! part (`d > chi`).

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance between two lattice sites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    /// Manhattan (taxicab) distance.
    Graph,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "graph" | "manhattan" => Ok(Metric::Graph),
            other => Err(Error::invalid(format!("unknown metric `{other}`"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Euclidean => f.write_str("euclidean"),
            Metric::Graph => f.write_str("graph"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    extents: Vec<usize>,
    metric: Metric,
    sites: Vec<Vec<i64>>,
}

impl LatticeSpec {
    /// Build an open-boundary lattice with `1 <= D <= 3` axes, each at least
    /// two sites long.
    pub fn new(extents: &[usize], metric: Metric) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::invalid("lattice extents must be nonempty"));
        }
        if extents.len() > 3 {
            return Err(Error::invalid(format!(
                "lattice dimension {} exceeds 3",
                extents.len()
            )));
        }
        if let Some(bad) = extents.iter().find(|&&e| e < 2) {
            return Err(Error::invalid(format!("lattice extent {bad} is below 2")));
        }
        let n: usize = extents.iter().product();
        let mut sites = Vec::with_capacity(n);
        for mut index in 0..n {
            let mut coord = vec![0i64; extents.len()];
            for axis in (0..extents.len()).rev() {
                coord[axis] = (index % extents[axis]) as i64;
                index /= extents[axis];
            }
            sites.push(coord);
        }
        Ok(LatticeSpec {
            extents: extents.to_vec(),
            metric,
            sites,
        })
    }

    /// Euclidean chain of `n` sites.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(&[n], Metric::Euclidean)
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn coord(&self, site: usize) -> Result<&[i64]> {
        self.sites
            .get(site)
            .map(|c| c.as_slice())
            .ok_or_else(|| Error::invalid(format!("site index {site} out of range")))
    }

    pub fn index_of(&self, coord: &[i64]) -> Option<usize> {
        if coord.len() != self.dim() {
            return None;
        }
        let mut index = 0usize;
        for (&c, &e) in coord.iter().zip(&self.extents) {
            if c < 0 || c as usize >= e {
                return None;
            }
            index = index * e + c as usize;
        }
        Some(index)
    }

    pub fn distance(&self, y: usize, z: usize) -> Result<f64> {
        let a = self.coord(y)?;
        let b = self.coord(z)?;
        Ok(self.coord_distance(a, b))
    }

    fn coord_distance(&self, a: &[i64], b: &[i64]) -> f64 {
        match self.metric {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| ((x - y) * (x - y)) as f64)
                .sum::<f64>()
                .sqrt(),
            Metric::Graph => a.iter().zip(b).map(|(x, y)| (x - y).abs() as f64).sum(),
        }
    }

    /// All pairwise distances as an `n x n` matrix.
    pub fn distance_matrix(&self) -> Mat<f64> {
        let n = self.n_sites();
        Mat::from_fn(n, n, |y, z| self.coord_distance(&self.sites[y], &self.sites[z]))
    }

    /// Largest distance between any two sites (the corner-to-corner distance).
    pub fn diameter(&self) -> f64 {
        let far: Vec<i64> = self.extents.iter().map(|&e| e as i64 - 1).collect();
        self.coord_distance(&vec![0; self.dim()], &far)
    }

    /// Sites within `radius` of `center`, in index order.
    pub fn ball(&self, center: usize, radius: f64) -> Result<Vec<usize>> {
        let c = self.coord(center)?;
        Ok((0..self.n_sites())
            .filter(|&s| self.coord_distance(c, &self.sites[s]) <= radius)
            .collect())
    }
}

/// Which part of the coupling matrix a Hamiltonian is built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingPart {
    #[default]
    Full,
    Short,
    Long,
}

impl FromStr for CouplingPart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(CouplingPart::Full),
            "short" | "sr" => Ok(CouplingPart::Short),
            "long" | "lr" => Ok(CouplingPart::Long),
            other => Err(Error::invalid(format!("unknown coupling part `{other}`"))),
        }
    }
}

/// Power-law couplings split at the cutoff `chi`.
#[derive(Clone, Debug)]
pub struct CouplingSplit {
    pub full: Mat<f64>,
    pub short: Mat<f64>,
    pub long: Mat<f64>,
    pub chi: f64,
    pub alpha: f64,
    pub j0: f64,
    /// `max_y sum_z J^sr(y,z)`
    pub lambda_sr: f64,
    /// `max_y sum_z J^lr(y,z)`
    pub lambda_chi: f64,
}

impl CouplingSplit {
    pub fn new(lattice: &LatticeSpec, alpha: f64, j0: f64, chi: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if !(j0 > 0.0) || !j0.is_finite() {
            return Err(Error::invalid(format!("j0 must be positive, got {j0}")));
        }
        if !(chi >= 1.0) {
            return Err(Error::invalid(format!("chi must be at least 1, got {chi}")));
        }
        let n = lattice.n_sites();
        let dist = lattice.distance_matrix();
        let full = Mat::from_fn(n, n, |y, z| {
            if y == z {
                0.0
            } else {
                j0 / dist[(y, z)].powf(alpha)
            }
        });
        let short = Mat::from_fn(n, n, |y, z| {
            if dist[(y, z)] <= chi {
                full[(y, z)]
            } else {
                0.0
            }
        });
        let long = Mat::from_fn(n, n, |y, z| {
            if dist[(y, z)] > chi {
                full[(y, z)]
            } else {
                0.0
            }
        });
        let lambda_sr = max_row_sum(&short);
        let lambda_chi = max_row_sum(&long);
        Ok(CouplingSplit {
            full,
            short,
            long,
            chi,
            alpha,
            j0,
            lambda_sr,
            lambda_chi,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.full.nrows()
    }

    pub fn part(&self, part: CouplingPart) -> &Mat<f64> {
        match part {
            CouplingPart::Full => &self.full,
            CouplingPart::Short => &self.short,
            CouplingPart::Long => &self.long,
        }
    }
}

pub(crate) fn max_row_sum(m: &Mat<f64>) -> f64 {
    (0..m.nrows())
        .map(|y| (0..m.ncols()).map(|z| m[(y, z)]).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_construction() {
        let l = LatticeSpec::new(&[5], Metric::Euclidean).unwrap();
        assert_eq!(l.n_sites(), 5);
        assert_eq!(l.dim(), 1);
        let g = LatticeSpec::new(&[3, 3], Metric::Euclidean).unwrap();
        assert_eq!(g.n_sites(), 9);
        assert_eq!(g.dim(), 2);
        assert_eq!(g.coord(5).unwrap(), &[1, 2]);
        assert_eq!(g.index_of(&[1, 2]), Some(5));
        for s in 0..g.n_sites() {
            assert_eq!(g.index_of(g.coord(s).unwrap()), Some(s));
        }
    }

    #[test]
    fn rejects_degenerate_extents() {
        assert!(matches!(
            LatticeSpec::new(&[], Metric::Euclidean),
            Err(Error::InvalidInput(_))
        ));
        assert!(LatticeSpec::new(&[1], Metric::Euclidean).is_err());
        assert!(LatticeSpec::new(&[2, 2, 2, 2], Metric::Graph).is_err());
    }

    #[test]
    fn distances() {
        let c = LatticeSpec::chain(5).unwrap();
        assert_eq!(c.distance(0, 3).unwrap(), 3.0);
        assert_eq!(c.distance(2, 2).unwrap(), 0.0);
        assert!(c.distance(0, 5).is_err());
        let g = LatticeSpec::new(&[3, 3], Metric::Euclidean).unwrap();
        let d = g.distance(g.index_of(&[0, 0]).unwrap(), g.index_of(&[1, 1]).unwrap());
        assert!((d.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let m = LatticeSpec::new(&[3, 3], Metric::Graph).unwrap();
        assert_eq!(m.distance(0, 4).unwrap(), 2.0);
        assert!((g.diameter() - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn interior_lambda_sr() {
        let l = LatticeSpec::chain(7).unwrap();
        let s = CouplingSplit::new(&l, 3.0, 1.0, 2.0).unwrap();
        // interior row: two neighbours at distance 1 and two at distance 2
        assert!((s.lambda_sr - 2.25).abs() < 1e-14);
    }

    #[test]
    fn lambda_chi_approaches_zeta_tail() {
        let l = LatticeSpec::chain(200).unwrap();
        let s = CouplingSplit::new(&l, 3.0, 1.0, 2.0).unwrap();
        // independent oracle: centre-row sum, then the analytic tail
        let centre: f64 = (3..=100).map(|d| 1.0 / (d as f64).powi(3)).sum::<f64>()
            + (3..=99).map(|d| 1.0 / (d as f64).powi(3)).sum::<f64>();
        assert!((s.lambda_chi - centre).abs() < 1e-14);
        // 2 (zeta(3) - 1 - 1/8)
        let limit = 2.0 * (1.202_056_903_159_594_3 - 1.125);
        assert!((s.lambda_chi - limit).abs() < 2e-4);
    }

    #[test]
    fn cutoff_beyond_diameter_empties_long_part() {
        let l = LatticeSpec::chain(6).unwrap();
        let s = CouplingSplit::new(&l, 2.0, 1.0, 10.0).unwrap();
        assert_eq!(s.lambda_chi, 0.0);
        for y in 0..6 {
            for z in 0..6 {
                assert_eq!(s.long[(y, z)], 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let l = LatticeSpec::chain(4).unwrap();
        assert!(CouplingSplit::new(&l, 0.0, 1.0, 1.0).is_err());
        assert!(CouplingSplit::new(&l, -1.0, 1.0, 1.0).is_err());
        assert!(CouplingSplit::new(&l, 3.0, 1.0, 0.5).is_err());
        assert!(CouplingSplit::new(&l, 3.0, 0.0, 1.0).is_err());
    }
}
