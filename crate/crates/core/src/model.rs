//! Two-body spin Hamiltonians `H = sum_{y<z} J(y,z) V_y V_z` and their dense
//! matrix realization.
//!
//! Site `k` of an `n`-site register is bit `n - 1 - k` of the computational
//! basis index, so site 0 is the leftmost tensor factor.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CouplingPart, CouplingSplit, LatticeSpec};
use crate::linalg::{self, CMat, I, ONE, ZERO};

/// Default cap on the number of sites a dense operator may span.
pub const DEFAULT_SITE_CAP: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliKind {
    X,
    Y,
    Z,
}

impl PauliKind {
    pub const ALL: [PauliKind; 3] = [PauliKind::X, PauliKind::Y, PauliKind::Z];

    /// Whether the operator flips the computational-basis bit.
    fn flips(self) -> bool {
        !matches!(self, PauliKind::Z)
    }

    /// Matrix element picked up when acting on a site holding `bit`.
    fn phase(self, bit: bool) -> c64 {
        match (self, bit) {
            (PauliKind::X, _) => ONE,
            (PauliKind::Y, false) => I,
            (PauliKind::Y, true) => -I,
            (PauliKind::Z, false) => ONE,
            (PauliKind::Z, true) => -ONE,
        }
    }

    /// 2x2 matrix in the `{|0>, |1>}` basis.
    pub fn matrix(self) -> [[c64; 2]; 2] {
        match self {
            PauliKind::X => [[ZERO, ONE], [ONE, ZERO]],
            PauliKind::Y => [[ZERO, -I], [I, ZERO]],
            PauliKind::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

impl FromStr for PauliKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "X" | "x" => Ok(PauliKind::X),
            "Y" | "y" => Ok(PauliKind::Y),
            "Z" | "z" => Ok(PauliKind::Z),
            other => Err(Error::invalid(format!("unknown operator kind `{other}`"))),
        }
    }
}

impl fmt::Display for PauliKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PauliKind::X => "X",
            PauliKind::Y => "Y",
            PauliKind::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Bond interaction type. `XY` splits each coupling evenly between an `XX`
/// and a `YY` term so that the summed bond strength stays `J(y,z)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Interaction {
    #[default]
    XX,
    ZZ,
    XY,
}

impl FromStr for Interaction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "XX" => Ok(Interaction::XX),
            "ZZ" => Ok(Interaction::ZZ),
            "XY" => Ok(Interaction::XY),
            other => Err(Error::invalid(format!("unknown interaction `{other}`"))),
        }
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Interaction::XX => "XX",
            Interaction::ZZ => "ZZ",
            Interaction::XY => "XY",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub kind: PauliKind,
    pub y: usize,
    pub z: usize,
    pub coupling: f64,
}

#[derive(Clone, Debug)]
pub struct SpinModel {
    pub lattice: LatticeSpec,
    pub terms: Vec<Term>,
}

impl SpinModel {
    /// One term per unordered pair `y < z` with a nonzero coupling in the
    /// chosen part of the split.
    pub fn build(
        lattice: &LatticeSpec,
        split: &CouplingSplit,
        part: CouplingPart,
        interaction: Interaction,
    ) -> Result<Self> {
        let n = lattice.n_sites();
        if split.n_sites() != n {
            return Err(Error::invalid(format!(
                "coupling split has {} sites, lattice has {n}",
                split.n_sites()
            )));
        }
        let couplings = split.part(part);
        let mut terms = Vec::new();
        for y in 0..n {
            for z in (y + 1)..n {
                let j = couplings[(y, z)];
                if j == 0.0 {
                    continue;
                }
                match interaction {
                    Interaction::XX => terms.push(Term { kind: PauliKind::X, y, z, coupling: j }),
                    Interaction::ZZ => terms.push(Term { kind: PauliKind::Z, y, z, coupling: j }),
                    Interaction::XY => {
                        terms.push(Term { kind: PauliKind::X, y, z, coupling: 0.5 * j });
                        terms.push(Term { kind: PauliKind::Y, y, z, coupling: 0.5 * j });
                    }
                }
            }
        }
        Self::from_terms(lattice, terms)
    }

    pub fn from_terms(lattice: &LatticeSpec, terms: Vec<Term>) -> Result<Self> {
        let n = lattice.n_sites();
        for t in &terms {
            if t.y == t.z {
                return Err(Error::invalid(format!("term acts twice on site {}", t.y)));
            }
            if t.y >= n || t.z >= n {
                return Err(Error::invalid(format!(
                    "term ({}, {}) outside the {n}-site lattice",
                    t.y, t.z
                )));
            }
            if !(t.coupling >= 0.0) || !t.coupling.is_finite() {
                return Err(Error::invalid(format!(
                    "coupling {} on ({}, {}) must be finite and nonnegative",
                    t.coupling, t.y, t.z
                )));
            }
        }
        Ok(SpinModel {
            lattice: lattice.clone(),
            terms,
        })
    }

    /// Random model for test vectors: every pair gets a term of each Pauli
    /// kind with a uniform coupling in `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(lattice: &LatticeSpec, rng: &mut R) -> Self {
        let n = lattice.n_sites();
        let mut terms = Vec::new();
        for y in 0..n {
            for z in (y + 1)..n {
                for kind in PauliKind::ALL {
                    terms.push(Term { kind, y, z, coupling: rng.random::<f64>() });
                }
            }
        }
        SpinModel {
            lattice: lattice.clone(),
            terms,
        }
    }

    /// Union of the two term lists on the same lattice.
    pub fn merged(&self, other: &SpinModel) -> Result<SpinModel> {
        if self.lattice != other.lattice {
            return Err(Error::invalid("cannot merge models on different lattices"));
        }
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Ok(SpinModel {
            lattice: self.lattice.clone(),
            terms,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn assemble(&self) -> Result<DenseOperator> {
        self.assemble_with_cap(DEFAULT_SITE_CAP)
    }

    pub fn assemble_with_cap(&self, cap: usize) -> Result<DenseOperator> {
        let n = self.n_sites();
        check_cap(n, cap)?;
        let dim = 1usize << n;
        let mut h = Mat::<c64>::zeros(dim, dim);
        for term in &self.terms {
            let by = bit_of(n, term.y);
            let bz = bit_of(n, term.z);
            let flip = if term.kind.flips() { by | bz } else { 0 };
            for col in 0..dim {
                let amp = term.kind.phase(col & by != 0) * term.kind.phase(col & bz != 0);
                h[(col ^ flip, col)] += amp * term.coupling;
            }
        }
        let support = self.terms.iter().flat_map(|t| [t.y, t.z]).collect();
        Ok(DenseOperator {
            matrix: h,
            n_sites: n,
            support,
        })
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "{n} sites exceed the dense-matrix cap of {cap}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn bit_of(n_sites: usize, site: usize) -> usize {
    1usize << (n_sites - 1 - site)
}

/// Operator on the full register with its best-known support.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: CMat,
    pub n_sites: usize,
    pub support: BTreeSet<usize>,
}

impl DenseOperator {
    pub fn zeros(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        DenseOperator {
            matrix: Mat::zeros(dim, dim),
            n_sites,
            support: BTreeSet::new(),
        }
    }

    pub fn identity(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        DenseOperator {
            matrix: Mat::identity(dim, dim),
            n_sites,
            support: BTreeSet::new(),
        }
    }

    /// Product of single-site Paulis, e.g. `[(0, Z), (1, X)]` for `Z (x) X`.
    pub fn pauli_string(n_sites: usize, factors: &[(usize, PauliKind)]) -> Result<Self> {
        check_cap(n_sites, DEFAULT_SITE_CAP)?;
        let mut seen = BTreeSet::new();
        for &(s, _) in factors {
            if s >= n_sites {
                return Err(Error::invalid(format!("site {s} outside {n_sites}-site register")));
            }
            if !seen.insert(s) {
                return Err(Error::invalid(format!("site {s} repeated in Pauli string")));
            }
        }
        let dim = 1usize << n_sites;
        let flip: usize = factors
            .iter()
            .filter(|(_, k)| k.flips())
            .map(|&(s, _)| bit_of(n_sites, s))
            .sum();
        let mut m = Mat::<c64>::zeros(dim, dim);
        for col in 0..dim {
            let amp = factors.iter().fold(ONE, |acc, &(s, k)| {
                acc * k.phase(col & bit_of(n_sites, s) != 0)
            });
            m[(col ^ flip, col)] = amp;
        }
        Ok(DenseOperator {
            matrix: m,
            n_sites,
            support: seen,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        linalg::is_hermitian(self.matrix.as_ref())
    }

    pub fn norm(&self) -> Result<f64> {
        operator_norm(self)
    }

    pub fn scaled(&self, s: c64) -> DenseOperator {
        DenseOperator {
            matrix: Mat::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(i, j)] * s),
            n_sites: self.n_sites,
            support: self.support.clone(),
        }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix + &other.matrix,
            n_sites: self.n_sites,
            support: self.support.union(&other.support).copied().collect(),
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: &self.matrix - &other.matrix,
            n_sites: self.n_sites,
            support: self.support.union(&other.support).copied().collect(),
        }
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            matrix: linalg::commutator(self.matrix.as_ref(), other.matrix.as_ref()),
            n_sites: self.n_sites,
            support: self.support.union(&other.support).copied().collect(),
        }
    }
}

/// Unity-norm Pauli operator on a single site of the lattice.
pub fn site_operator(lattice: &LatticeSpec, site: usize, kind: &str) -> Result<DenseOperator> {
    let kind: PauliKind = kind.parse()?;
    if site >= lattice.n_sites() {
        return Err(Error::invalid(format!("site index {site} out of range")));
    }
    DenseOperator::pauli_string(lattice.n_sites(), &[(site, kind)])
}

/// Largest singular value; equals the largest eigenvalue magnitude for
/// Hermitian and anti-Hermitian operators.
pub fn operator_norm(op: &DenseOperator) -> Result<f64> {
    linalg::operator_norm(op.matrix.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Metric;
    use crate::linalg::max_abs_diff;

    fn chain(n: usize) -> LatticeSpec {
        LatticeSpec::chain(n).unwrap()
    }

    #[test]
    fn two_site_model_has_one_term() {
        let l = chain(2);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 1.0).unwrap();
        let m = SpinModel::build(&l, &s, CouplingPart::Full, Interaction::XX).unwrap();
        assert_eq!(m.terms, vec![Term { kind: PauliKind::X, y: 0, z: 1, coupling: 1.0 }]);
        let h = m.assemble().unwrap();
        assert!(h.is_hermitian());
        assert!((h.norm().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn term_counts_follow_the_partition() {
        let l = chain(4);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 1.0).unwrap();
        let short = SpinModel::build(&l, &s, CouplingPart::Short, Interaction::ZZ).unwrap();
        assert_eq!(short.terms.len(), 3);
        let wide = CouplingSplit::new(&l, 3.0, 1.0, 5.0).unwrap();
        let long = SpinModel::build(&l, &wide, CouplingPart::Long, Interaction::XX).unwrap();
        assert!(long.terms.is_empty());
        let h = long.assemble().unwrap();
        assert_eq!(h.norm().unwrap(), 0.0);
        let xy = SpinModel::build(&l, &s, CouplingPart::Short, Interaction::XY).unwrap();
        assert_eq!(xy.terms.len(), 6);
    }

    #[test]
    fn three_site_xx_chain_norm() {
        // Oracle: explicit Kronecker products and a dense eigensolve.
        let x = PauliKind::X.matrix();
        let id = [[ONE, ZERO], [ZERO, ONE]];
        let kron3 = |a: [[c64; 2]; 2], b: [[c64; 2]; 2], c: [[c64; 2]; 2]| {
            Mat::from_fn(8, 8, |r, col| {
                a[r >> 2][col >> 2] * b[(r >> 1) & 1][(col >> 1) & 1] * c[r & 1][col & 1]
            })
        };
        let oracle = kron3(x, x, id) + kron3(id, x, x);
        let l = chain(3);
        let s = CouplingSplit::new(&l, 3.0, 1.0, 1.0).unwrap();
        let h = SpinModel::build(&l, &s, CouplingPart::Short, Interaction::XX)
            .unwrap()
            .assemble()
            .unwrap();
        assert!(max_abs_diff(h.matrix.as_ref(), oracle.as_ref()) < 1e-15);
        let ev = linalg::hermitian_eigenvalues(oracle.as_ref()).unwrap();
        let spectral = ev[0].abs().max(ev[7].abs());
        // commuting terms: x0 x1 + x1 x2 over x_i = +-1 takes values {-2, 0, 2}
        assert!((spectral - 2.0).abs() < 1e-12);
        assert!((h.norm().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn site_operators_embed_pauli_matrices() {
        let l = chain(2);
        let z0 = site_operator(&l, 0, "Z").unwrap();
        let diag: Vec<f64> = (0..4).map(|i| z0.matrix[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        let x1 = site_operator(&l, 1, "X").unwrap();
        assert_eq!(x1.matrix[(1, 0)], ONE);
        assert_eq!(x1.matrix[(0, 1)], ONE);
        assert_eq!(x1.matrix[(2, 0)], ZERO);
        assert!((x1.norm().unwrap() - 1.0).abs() < 1e-14);
        assert!(site_operator(&l, 0, "W").is_err());
        assert!(site_operator(&l, 2, "X").is_err());
    }

    #[test]
    fn pauli_norms() {
        let l = chain(1usize.max(2));
        let x = site_operator(&l, 0, "X").unwrap();
        let y = site_operator(&l, 0, "Y").unwrap();
        let c = x.commutator(&y);
        let z = site_operator(&l, 0, "Z").unwrap();
        // [X, Y] = 2 i Z
        let expect = z.scaled(c64::new(0.0, 2.0));
        assert!(max_abs_diff(c.matrix.as_ref(), expect.matrix.as_ref()) < 1e-15);
        assert!((operator_norm(&c).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(operator_norm(&DenseOperator::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn assembly_cap() {
        let l = LatticeSpec::new(&[4, 4], Metric::Euclidean).unwrap();
        let s = CouplingSplit::new(&l, 3.0, 1.0, 1.0).unwrap();
        let m = SpinModel::build(&l, &s, CouplingPart::Short, Interaction::ZZ).unwrap();
        assert!(matches!(m.assemble(), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn term_validation() {
        let l = chain(3);
        let bad = vec![Term { kind: PauliKind::X, y: 1, z: 1, coupling: 1.0 }];
        assert!(SpinModel::from_terms(&l, bad).is_err());
        let neg = vec![Term { kind: PauliKind::X, y: 0, z: 1, coupling: -1.0 }];
        assert!(SpinModel::from_terms(&l, neg).is_err());
    }
}
