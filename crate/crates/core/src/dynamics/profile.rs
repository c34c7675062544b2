//! Commutator-norm profiles `C_r(t) = ||[A(t), B_j]||` from exact dynamics.

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CouplingPart;
use crate::linalg::{self, I, ZERO};
use crate::model::{bit_of, DenseOperator, Interaction, PauliKind, SpinModel};

use super::evolve::{EvolutionMethod, Propagator};

/// Parameters the profile was computed for, carried along for output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub alpha: f64,
    pub chi: f64,
    pub j0: f64,
    pub interaction: Interaction,
    pub part: CouplingPart,
    pub n_sites: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRequest {
    pub source_kind: PauliKind,
    pub source_site: usize,
    pub probe_kind: PauliKind,
    pub probes: Vec<usize>,
    pub times: Vec<f64>,
    pub method: EvolutionMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorProfile {
    pub source_site: usize,
    pub probe_sites: Vec<usize>,
    /// `r = d(i, j)` for each probe.
    pub distances: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[p][k] = C` at probe `p`, time `times[k]`.
    pub values: Vec<Vec<f64>>,
    pub model: ModelDescriptor,
}

impl CommutatorProfile {
    /// Largest value at or above which a commutator of unit-norm operators
    /// cannot lie.
    pub const CEILING: f64 = 2.0;
}

/// Absolute resolution of [`pauli_commutator_norm`], relative to
/// `||A||_F / sqrt(dim)`.
pub const NORM_RESOLUTION: f64 = 1e-13;

/// `||[A, P_site]||` for a single-site Pauli `P`, by rotating `P` to `Z` and
/// reducing to the off-diagonal block in the `Z` eigenbasis:
/// `||[A, Z]|| = 2 max(||A_01||, ||A_10||)`.
pub fn pauli_commutator_norm(a: &DenseOperator, site: usize, kind: PauliKind) -> Result<f64> {
    let n = a.n_sites;
    if site >= n {
        return Err(Error::invalid(format!("site {site} outside {n}-site register")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = c64::new(1.0, 0.0);
    let u = match kind {
        PauliKind::Z => [[one, ZERO], [ZERO, one]],
        PauliKind::X => [[one * h, one * h], [one * h, -one * h]],
        // (S H) Z (S H)^dagger = Y with S = diag(1, i)
        PauliKind::Y => [[one * h, one * h], [I * h, -I * h]],
    };
    let bit = bit_of(n, site);
    let m = &a.matrix;
    let idx: [Vec<usize>; 2] = [
        (0..m.nrows()).filter(|k| k & bit == 0).collect(),
        (0..m.nrows()).filter(|k| k & bit != 0).collect(),
    ];
    // Block (p, q) of U^dagger A U, where U acts on `site` only.
    let block = |p: usize, q: usize| {
        let (rows, cols) = (&idx[p], &idx[q]);
        let mut out = Mat::<c64>::zeros(rows.len(), cols.len());
        for x in 0..2 {
            for y in 0..2 {
                let w = u[x][p].conj() * u[y][q];
                if w == ZERO {
                    continue;
                }
                for (c, &src_col) in idx[y].iter().enumerate() {
                    let src = m.col_as_slice(src_col);
                    let dst = out.col_as_slice_mut(c);
                    for (d, &r) in dst.iter_mut().zip(&idx[x]) {
                        *d += w * src[r];
                    }
                }
            }
        }
        out
    };
    // Block norms are resolved to 1e-13 of the typical size of A, so blocks
    // made of rounding noise do not run Lanczos to its step cap.
    let typical = (0..m.ncols())
        .map(|c| m.col_as_slice(c).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt()
        / (m.nrows().max(1) as f64).sqrt();
    let tol = NORM_RESOLUTION * typical;
    let (upper, lower) = (block(0, 1), block(1, 0));
    let sigma = linalg::top_singular_value_within(upper.as_ref(), tol)?;
    if is_adjoint_of(&lower, &upper) {
        return Ok(2.0 * sigma);
    }
    Ok(2.0 * sigma.max(linalg::top_singular_value_within(lower.as_ref(), tol)?))
}

/// `lower == upper^dagger` up to rounding, as holds for Hermitian `A`; then
/// both blocks share their singular values to within `||lower - upper^dagger||_F`.
fn is_adjoint_of(lower: &Mat<c64>, upper: &Mat<c64>) -> bool {
    let (mut diff, mut scale) = (0.0_f64, 0.0_f64);
    for j in 0..lower.ncols() {
        for (i, l) in lower.col_as_slice(j).iter().enumerate() {
            let u = upper.col_as_slice(i)[j].conj();
            diff += (l - u).norm_sqr();
            scale += u.norm_sqr();
        }
    }
    diff <= 1e-26 * scale
}

/// `||[A, B]||` through the anti-Hermitian commutator, for arbitrary `B`.
pub fn commutator_norm(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    linalg::operator_norm(linalg::commutator(a.matrix.as_ref(), b.matrix.as_ref()).as_ref())
}

/// Exact commutator profile for `A` of `source_kind` on `source_site` against
/// single-site probes of `probe_kind`.
pub fn commutator_profile(
    model: &SpinModel,
    descriptor: ModelDescriptor,
    request: &ProfileRequest,
) -> Result<CommutatorProfile> {
    let n = model.n_sites();
    if request.source_site >= n {
        return Err(Error::invalid(format!("source site {} out of range", request.source_site)));
    }
    if let Some(&p) = request.probes.iter().find(|&&p| p >= n) {
        return Err(Error::invalid(format!("probe site {p} out of range")));
    }
    if request.times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    if !(request.times[0] >= 0.0) {
        return Err(Error::invalid("times must start at or after zero"));
    }
    if request.times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times must be strictly ascending"));
    }
    let h = model.assemble()?;
    let a = DenseOperator::pauli_string(n, &[(request.source_site, request.source_kind)])?;
    let propagator = Propagator::new(&h, request.method)?;
    let frame = propagator.frame(&a)?;

    let columns: Vec<Vec<f64>> = request
        .times
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            let at = frame.at(t)?;
            request
                .probes
                .iter()
                .map(|&j| {
                    pauli_commutator_norm(&at, j, request.probe_kind)
                        .map(|c| c.min(CommutatorProfile::CEILING))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let values = (0..request.probes.len())
        .map(|p| columns.iter().map(|col| col[p]).collect())
        .collect();
    let distances = request
        .probes
        .iter()
        .map(|&j| model.lattice.distance(request.source_site, j))
        .collect::<Result<_>>()?;
    Ok(CommutatorProfile {
        source_site: request.source_site,
        probe_sites: request.probes.clone(),
        distances,
        times: request.times.clone(),
        values,
        model: descriptor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{CouplingSplit, LatticeSpec};
    use crate::model::Term;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn descriptor(n: usize) -> ModelDescriptor {
        ModelDescriptor {
            alpha: 3.0,
            chi: 1.0,
            j0: 1.0,
            interaction: Interaction::XX,
            part: CouplingPart::Full,
            n_sites: n,
        }
    }

    #[test]
    fn block_route_matches_dense_commutator() {
        let l = LatticeSpec::chain(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let h = SpinModel::random(&l, &mut rng).assemble().unwrap();
        let a = DenseOperator::pauli_string(4, &[(0, PauliKind::Y)]).unwrap();
        let at = Propagator::new(&h, EvolutionMethod::DenseExpm).unwrap().evolve(&a, 0.6).unwrap();
        // also a non-Hermitian operator
        let skew = at.add(&DenseOperator::pauli_string(4, &[(2, PauliKind::X)]).unwrap().scaled(I));
        for op in [&at, &skew] {
            for site in 0..4 {
                for kind in PauliKind::ALL {
                    let b = DenseOperator::pauli_string(4, &[(site, kind)]).unwrap();
                    let fast = pauli_commutator_norm(op, site, kind).unwrap();
                    let dense = commutator_norm(op, &b).unwrap();
                    assert!((fast - dense).abs() < 1e-11 * dense.max(1.0), "{site} {kind}");
                }
            }
        }
    }

    #[test]
    fn two_spin_ising_profile() {
        let l = LatticeSpec::chain(2).unwrap();
        let model = SpinModel::from_terms(&l, vec![Term { kind: PauliKind::X, y: 0, z: 1, coupling: 1.0 }]).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).chain([std::f64::consts::FRAC_PI_4 + 3.0]).collect();
        let req = ProfileRequest {
            source_kind: PauliKind::Z,
            source_site: 0,
            probe_kind: PauliKind::Z,
            probes: vec![1],
            times: times.clone(),
            method: EvolutionMethod::DenseExpm,
        };
        let p = commutator_profile(&model, descriptor(2), &req).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let expect = 2.0 * (2.0 * t).sin().abs();
            assert!((p.values[0][k] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn profile_invariants() {
        let l = LatticeSpec::chain(5).unwrap();
        let s = CouplingSplit::new(&l, 3.0, 1.0, 1.0).unwrap();
        let model = SpinModel::build(&l, &s, CouplingPart::Full, Interaction::XX).unwrap();
        let req = ProfileRequest {
            source_kind: PauliKind::Z,
            source_site: 0,
            probe_kind: PauliKind::Z,
            probes: vec![0, 1, 2, 3, 4],
            times: vec![0.0, 0.5, 1.0],
            method: EvolutionMethod::DenseExpm,
        };
        let p = commutator_profile(&model, descriptor(5), &req).unwrap();
        for (row, &j) in p.values.iter().zip(&p.probe_sites) {
            assert!(row[0] < 1e-13, "C(t=0) must vanish for probe {j}");
            assert!(row.iter().all(|&c| (0.0..=2.0).contains(&c)));
        }
        assert_eq!(p.distances, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_bad_time_grid() {
        let l = LatticeSpec::chain(2).unwrap();
        let model = SpinModel::from_terms(&l, vec![]).unwrap();
        let mut req = ProfileRequest {
            source_kind: PauliKind::Z,
            source_site: 0,
            probe_kind: PauliKind::Z,
            probes: vec![1],
            times: vec![0.5, 0.2],
            method: EvolutionMethod::DenseExpm,
        };
        assert!(commutator_profile(&model, descriptor(2), &req).is_err());
        req.times = vec![-0.1, 0.2];
        assert!(commutator_profile(&model, descriptor(2), &req).is_err());
    }
}
