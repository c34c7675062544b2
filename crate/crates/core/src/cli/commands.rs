//! The work behind each subcommand, on an already normalized config.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::bounds::{
    bound_curve, build_kernel, jlr_matrix_with_diagonal, verify_convolution, verify_reproducibility,
    BoundCurve, BoundParams, CouplingModel, InfiniteChain, LatticeCouplings, ShapeKernel, KAPPA,
};
use crate::dynamics::{commutator_profile, quasilocal_decompose_times, ModelDescriptor, ProfileRequest};
use crate::front::{beta_probe, extract_front, fit_front};
use crate::lattice::{CouplingPart, CouplingSplit, LatticeSpec};
use crate::model::{DenseOperator, Interaction, PauliKind, SpinModel};

use super::config::{Command, Geometry, RunConfig};
use super::record::Outcome;
use super::CliError;

fn lattice(config: &RunConfig) -> Result<LatticeSpec, CliError> {
    match config.geometry()? {
        Geometry::Finite(e) => Ok(LatticeSpec::new(&e, config.metric.unwrap_or_default())?),
        Geometry::InfiniteChain => Err(CliError::Invalid("invalid value for `lattice`: needs a finite lattice".into())),
    }
}

fn interaction(config: &RunConfig) -> Result<Option<Interaction>, CliError> {
    match config.interaction.as_deref().unwrap_or("xx") {
        s if s.eq_ignore_ascii_case("random") => Ok(None),
        s => Ok(Some(s.parse().map_err(|e| {
            CliError::Invalid(format!("invalid value for `interaction`: {e}"))
        })?)),
    }
}

fn alpha(config: &RunConfig) -> f64 {
    config.alpha.expect("normalized config has alpha")
}

pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    match config.command() {
        Command::Simulate => simulate(config),
        Command::Bound => bound(config),
        Command::Front => front(config),
        Command::Verify => verify(config),
        Command::Sweep => Err(CliError::Invalid("sweeps run through the sweep driver".into())),
    }
}

fn simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = lattice(config)?;
    let (alpha, j0, chi) = (alpha(config), config.j0.unwrap_or(1.0), config.chi.unwrap_or(1.0));
    let part = config.part.unwrap_or_default();
    let kind = interaction(config)?;
    let model = match kind {
        None => SpinModel::random(&lattice, &mut ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0))),
        Some(kind) => {
            let split = CouplingSplit::new(&lattice, alpha, j0, chi)?;
            SpinModel::build(&lattice, &split, part, kind)?
        }
    };
    let descriptor = ModelDescriptor {
        alpha,
        chi,
        j0,
        interaction: kind.unwrap_or_default(),
        part,
        n_sites: lattice.n_sites(),
    };
    let request = ProfileRequest {
        source_kind: config.source_kind.unwrap_or(PauliKind::Z),
        source_site: config.source_site.unwrap_or(0),
        probe_kind: config.probe_kind.unwrap_or(PauliKind::Z),
        probes: config.probes.clone().unwrap_or_default(),
        times: config.time_grid(),
        method: config.method.unwrap_or_default(),
    };
    let profile = commutator_profile(&model, descriptor, &request)?;
    let epsilon = config.epsilon.unwrap_or(crate::front::DEFAULT_EPSILON);
    let front = extract_front(&profile, epsilon)?;

    let mut rows = Vec::new();
    for (p, &j) in profile.probe_sites.iter().enumerate() {
        for (k, &t) in profile.times.iter().enumerate() {
            rows.push((j, profile.distances[p], t, profile.values[p][k]));
        }
    }
    let in_range = profile
        .values
        .iter()
        .flatten()
        .all(|&c| (0.0..=crate::dynamics::CommutatorProfile::CEILING).contains(&c));
    let mut assertions = BTreeMap::new();
    assertions.insert("values_within_trivial_bound".to_string(), in_range);
    Ok(Outcome {
        payload: json!({ "profile": profile, "front": { "epsilon": epsilon, "points": front } }),
        rows: Some(rows),
        regime_flags: BTreeMap::new(),
        assertions,
    })
}

fn coupling_model(config: &RunConfig) -> Result<Box<dyn CouplingModel>, CliError> {
    let (alpha, j0) = (alpha(config), config.j0.unwrap_or(1.0));
    let prefactor = config.prefactor.unwrap_or_default();
    Ok(match config.geometry()? {
        Geometry::Finite(_) => {
            let mut m = LatticeCouplings::new(lattice(config)?, alpha, j0)?;
            m.prefactor = prefactor;
            Box::new(m)
        }
        Geometry::InfiniteChain => {
            let mut m = InfiniteChain::new(alpha, j0, config.g.unwrap_or(1.0))?;
            m.prefactor = prefactor;
            Box::new(m)
        }
    })
}

fn curve_for(config: &RunConfig, model: &dyn CouplingModel, radii: &[f64], times: &[f64]) -> crate::Result<BoundCurve> {
    bound_curve(
        model,
        config.variant.unwrap_or_default(),
        config.chi.unwrap_or(1.0),
        config.cutoff_mode.unwrap_or_default(),
        config.velocity.unwrap_or(1.0),
        radii,
        times,
    )
}

fn regime_counts(curve: &BoundCurve) -> BTreeMap<String, Value> {
    let total = curve.radii.len() * curve.times.len();
    let six: usize = curve.beyond_six_radii.iter().flatten().filter(|&&b| b).count();
    let alog: usize = curve.beyond_alpha_log_alpha.iter().flatten().filter(|&&b| b).count();
    let both: usize = curve
        .beyond_six_radii
        .iter()
        .flatten()
        .zip(curve.beyond_alpha_log_alpha.iter().flatten())
        .filter(|(a, b)| **a && **b)
        .count();
    BTreeMap::from([
        ("points".to_string(), json!(total)),
        ("points_beyond_six_radii".to_string(), json!(six)),
        ("points_beyond_alpha_log_alpha".to_string(), json!(alog)),
        ("points_in_regime".to_string(), json!(both)),
    ])
}

fn bound(config: &RunConfig) -> Result<Outcome, CliError> {
    let model = coupling_model(config)?;
    let curve = curve_for(config, model.as_ref(), &config.radius_grid(), &config.time_grid())?;
    let mut rows = Vec::new();
    for (p, &r) in curve.radii.iter().enumerate() {
        for (k, &t) in curve.times.iter().enumerate() {
            rows.push((p, r, t, curve.values[p][k]));
        }
    }
    Ok(Outcome {
        regime_flags: regime_counts(&curve),
        payload: serde_json::to_value(&curve)?,
        rows: Some(rows),
        assertions: BTreeMap::new(),
    })
}

fn front(config: &RunConfig) -> Result<Outcome, CliError> {
    let model = coupling_model(config)?;
    let curve = curve_for(config, model.as_ref(), &config.radius_grid(), &config.time_grid())?;
    let epsilon = config.epsilon.unwrap_or(crate::front::DEFAULT_EPSILON);
    let window = (
        config.fit_r_min.unwrap_or(f64::NEG_INFINITY),
        config.fit_r_max.unwrap_or(f64::INFINITY),
    );
    let mut fit = fit_front(&curve, epsilon, window)?;
    let beta_times = config.beta_times.clone().unwrap_or_default();
    for &beta in config.betas.as_deref().unwrap_or_default() {
        let probe = beta_probe(
            |r, t| Ok(curve_for(config, model.as_ref(), &[r], &[t])?.unclipped[0][0]),
            beta,
            &beta_times,
        )?;
        fit.beta_probes.push(probe);
    }
    let mut flags = regime_counts(&curve);
    flags.insert("fit_points".into(), json!(fit.n));
    let mut assertions = BTreeMap::new();
    assertions.insert("zeta_hat_sane".to_string(), fit.sane);
    Ok(Outcome {
        payload: serde_json::to_value(&fit)?,
        rows: None,
        regime_flags: flags,
        assertions,
    })
}

/// Quasi-locality is checked by exact evolution, so only small lattices.
pub const VERIFY_DYNAMICS_SITE_CAP: usize = 12;

fn verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let lattice = lattice(config)?;
    let (alpha, j0, chi) = (alpha(config), config.j0.unwrap_or(1.0), config.chi.unwrap_or(1.0));
    let radius = config.radius.expect("normalized verify config has radius");
    let split = CouplingSplit::new(&lattice, alpha, j0, chi)?;
    let k = build_kernel(&lattice, ShapeKernel::K, radius, chi, alpha)?;
    let f = build_kernel(&lattice, ShapeKernel::F, radius, chi, alpha)?;
    let jlr = jlr_matrix_with_diagonal(&split, KAPPA);
    let reproducibility = verify_reproducibility(&f, lattice.dim())?;
    let mut params = BoundParams::new(
        alpha,
        lattice.dim(),
        j0,
        chi,
        split.lambda_sr,
        split.lambda_chi,
        reproducibility.g,
    );
    let convolution = verify_convolution(&lattice, &k, &jlr, &f, &params)?;
    params.b = convolution.fitted_b;

    let mut assertions = BTreeMap::new();
    assertions.insert(
        "convolution_trivial_branch".to_string(),
        convolution.trivial_max <= 1.0 + 1e-12,
    );
    if convolution.algebraic_asserted {
        assertions.insert(
            "convolution_algebraic_branch".to_string(),
            convolution.algebraic_max.is_none_or(|m| m <= 1.0 + 1e-12),
        );
    }

    let quasi_locality = if lattice.n_sites() <= VERIFY_DYNAMICS_SITE_CAP {
        let kind = interaction(config)?.ok_or_else(|| {
            CliError::Invalid("invalid value for `interaction`: verify needs xx, zz or xy".into())
        })?;
        let h_sr = SpinModel::build(&lattice, &split, CouplingPart::Short, kind)?.assemble()?;
        let site = config.source_site.unwrap_or(0);
        if site >= lattice.n_sites() {
            return Err(CliError::Invalid(format!("invalid value for `source_site`: {site} out of range")));
        }
        let a = DenseOperator::pauli_string(lattice.n_sites(), &[(site, config.source_kind.unwrap_or(PauliKind::Z))])?;
        let times = config.shell_times.as_deref().unwrap_or_default();
        let max_shell = config.max_shell.unwrap_or(10);
        let reports = quasilocal_decompose_times(&lattice, &h_sr, &a, site, times, chi, params.v, max_shell)?;
        for (d, t) in reports.iter().zip(times) {
            assertions.insert(format!("quasi_locality_t={t}"), d.truncation_violations().is_empty());
        }
        serde_json::to_value(&reports)?
    } else {
        json!({ "skipped": format!("lattice has more than {VERIFY_DYNAMICS_SITE_CAP} sites") })
    };

    let vt = radius / chi;
    let flags = BTreeMap::from([
        ("vt".to_string(), json!(vt)),
        ("algebraic_branch_asserted".to_string(), json!(convolution.algebraic_asserted)),
        ("degenerate".to_string(), json!(convolution.degenerate)),
    ]);
    Ok(Outcome {
        payload: json!({
            "params": params,
            "convolution": convolution,
            "reproducibility": reproducibility,
            "quasi_locality": quasi_locality,
        }),
        rows: None,
        regime_flags: flags,
        assertions,
    })
}
