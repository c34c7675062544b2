//! Flat JSON run configuration, command-line overrides and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bounds::{BoundVariant, CutoffMode, Prefactor};
use crate::dynamics::EvolutionMethod;
use crate::lattice::{CouplingPart, Metric};
use crate::model::PauliKind;

use super::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Bound,
    Front,
    Verify,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Simulate => "simulate",
            Command::Bound => "bound",
            Command::Front => "front",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        })
    }
}

/// `[8]`, `[4, 4]`, a bare chain length `8`, or the string `"infinite"` for
/// an unbounded chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeKey {
    Extents(Vec<usize>),
    Chain(usize),
    Named(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Every key a config file or flag may set. Unset keys are omitted when the
/// config is serialized, so the serialized form is canonical.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    /// `xx`, `zz`, `xy`, or `random` (seeded by `seed`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interaction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<CouplingPart>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_kind: Option<PauliKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_site: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_kind: Option<PauliKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<EvolutionMethod>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_spacing: Option<Spacing>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_spacing: Option<Spacing>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<BoundVariant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_mode: Option<CutoffMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefactor: Option<Prefactor>,
    /// `v` of the scaling form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
    /// Reproducibility constant for the infinite chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_times: Option<Vec<f64>>,

    /// Short-range light-cone radius `R` for the kernel checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shell_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_shell: Option<usize>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_command: Option<Command>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

pub const DEFAULT_OUTPUT_DIR: &str = "lightcone-out";
const INFINITE: &str = "infinite";

fn missing(key: &str) -> CliError {
    CliError::Invalid(format!("missing required key `{key}`"))
}

fn bad(key: &str, why: impl fmt::Display) -> CliError {
    CliError::Invalid(format!("invalid value for `{key}`: {why}"))
}

/// Turn a flag value into JSON: JSON literals pass through, comma lists
/// become arrays, anything else is a string.
fn flag_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        return Value::Array(raw.split(',').map(|part| flag_value(part.trim())).collect());
    }
    Value::String(raw.to_string())
}

/// Parse `--key value` pairs. Keys may use `-` or `_`.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, Value)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(stripped) = arg.strip_prefix("--") else {
            return Err(CliError::Invalid(format!("expected `--key value`, found `{arg}`")));
        };
        let (key, value) = match stripped.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Invalid(format!("flag `--{stripped}` needs a value")))?;
                (stripped.to_string(), v.clone())
            }
        };
        out.push((key.replace('-', "_"), flag_value(&value)));
    }
    Ok(out)
}

/// A scalar flag value for a list-valued key becomes a one-element list.
fn as_list_if_needed(key: &str, value: &Value) -> Value {
    let accepts = |v: &Value| {
        let single: Map<String, Value> = [(key.to_string(), v.clone())].into_iter().collect();
        serde_json::from_value::<RunConfig>(Value::Object(single)).is_ok()
    };
    let wrapped = Value::Array(vec![value.clone()]);
    if !value.is_array() && !accepts(value) && accepts(&wrapped) {
        wrapped
    } else {
        value.clone()
    }
}

fn deserialize_map(map: Map<String, Value>) -> Result<RunConfig, CliError> {
    match serde_json::from_value::<RunConfig>(Value::Object(map.clone())) {
        Ok(cfg) => Ok(cfg),
        Err(whole) => {
            // Find the offending key so the message can name it.
            for (k, v) in map {
                let single: Map<String, Value> = [(k.clone(), v)].into_iter().collect();
                if let Err(e) = serde_json::from_value::<RunConfig>(Value::Object(single)) {
                    let msg = e.to_string();
                    if msg.starts_with("unknown field") {
                        return Err(CliError::Invalid(format!("unknown key `{k}`")));
                    }
                    return Err(bad(&k, msg));
                }
            }
            Err(CliError::Invalid(whole.to_string()))
        }
    }
}

/// Read the optional config file and apply flag overrides on top.
pub fn load_config(
    command: Command,
    path: Option<&Path>,
    overrides: &[(String, Value)],
) -> Result<RunConfig, CliError> {
    let mut map = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text)
                .map_err(|e| CliError::Invalid(format!("config {} is not valid JSON: {e}", p.display())))?
            {
                Value::Object(m) => m,
                _ => return Err(CliError::Invalid("config must be a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    let mut seen: Map<String, Value> = Map::new();
    for (k, v) in overrides {
        if let Some(prev) = seen.get(k) {
            if prev != v {
                return Err(CliError::Invalid(format!("conflicting values for `{k}`: {prev} and {v}")));
            }
        }
        seen.insert(k.clone(), v.clone());
        map.insert(k.clone(), as_list_if_needed(k, v));
    }
    let mut cfg = deserialize_map(map)?;
    match cfg.command {
        Some(c) if c != command => {
            return Err(CliError::Invalid(format!(
                "conflicting values for `command`: config says `{c}`, invocation says `{command}`"
            )))
        }
        _ => cfg.command = Some(command),
    }
    Ok(cfg)
}

/// Concrete geometry after validation.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Finite(Vec<usize>),
    InfiniteChain,
}

fn grid(lo: f64, hi: f64, n: usize, spacing: Spacing) -> Vec<f64> {
    match (n, spacing) {
        (1, _) => vec![lo],
        (_, Spacing::Linear) => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
        (_, Spacing::Log) => crate::front::log_grid(lo, hi, n),
    }
}

fn check_positive(key: &str, v: Option<f64>) -> Result<(), CliError> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(bad(key, format!("must be positive, got {x}"))),
        _ => Ok(()),
    }
}

fn check_ascending(key: &str, xs: &[f64], allow_zero: bool) -> Result<(), CliError> {
    if xs.is_empty() {
        return Err(bad(key, "list is empty"));
    }
    if xs.iter().any(|x| !x.is_finite() || *x < 0.0 || (!allow_zero && *x == 0.0)) {
        return Err(bad(key, "entries must be finite and positive"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad(key, "entries must be strictly ascending"));
    }
    Ok(())
}

impl RunConfig {
    pub fn command(&self) -> Command {
        self.command.unwrap_or(Command::Simulate)
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        match &self.lattice {
            None => Err(missing("lattice")),
            Some(LatticeKey::Extents(e)) => Ok(Geometry::Finite(e.clone())),
            Some(LatticeKey::Chain(n)) => Ok(Geometry::Finite(vec![*n])),
            Some(LatticeKey::Named(n)) if n == INFINITE => Ok(Geometry::InfiniteChain),
            Some(LatticeKey::Named(n)) => Err(bad("lattice", format!("expected extents or \"{INFINITE}\", got \"{n}\""))),
        }
    }

    fn finite_extents(&self) -> Result<Vec<usize>, CliError> {
        match self.geometry()? {
            Geometry::Finite(e) => Ok(e),
            Geometry::InfiniteChain => Err(bad("lattice", "this command needs a finite lattice")),
        }
    }

    /// Validate the keys `command` needs and fill in documented defaults.
    pub fn normalized(&self) -> Result<RunConfig, CliError> {
        let mut c = self.clone();
        let cmd = c.command();
        check_positive("j0", c.j0)?;
        check_positive("velocity", c.velocity)?;
        check_positive("g", c.g)?;
        if let Some(a) = c.alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(bad("alpha", format!("must be positive, got {a}")));
            }
        }
        if let Some(x) = c.chi {
            if !(x >= 1.0) || !x.is_finite() {
                return Err(bad("chi", format!("must be at least 1, got {x}")));
            }
        }
        if let Some(e) = c.epsilon {
            if !(e > 0.0 && e < 2.0) {
                return Err(bad("epsilon", format!("must lie in (0, 2), got {e}")));
            }
        }
        if c.workers == Some(0) {
            return Err(bad("workers", "must be at least 1"));
        }
        if let Some(i) = &c.interaction {
            if !["xx", "zz", "xy", "random"].contains(&i.to_ascii_lowercase().as_str()) {
                return Err(bad("interaction", format!("expected xx, zz, xy or random, got `{i}`")));
            }
        }
        if c.times.is_some() && (c.t_min.is_some() || c.t_max.is_some() || c.t_points.is_some() || c.t_spacing.is_some()) {
            return Err(CliError::Invalid("conflicting keys: `times` together with `t_min`/`t_max`/`t_points`/`t_spacing`".into()));
        }
        if c.radii.is_some() && (c.r_min.is_some() || c.r_max.is_some() || c.r_points.is_some() || c.r_spacing.is_some()) {
            return Err(CliError::Invalid("conflicting keys: `radii` together with `r_min`/`r_max`/`r_points`/`r_spacing`".into()));
        }
        c.j0.get_or_insert(1.0);
        c.chi.get_or_insert(1.0);
        c.seed.get_or_insert(0);

        if cmd == Command::Sweep {
            let alphas = c.alpha_grid.clone().ok_or_else(|| missing("alpha_grid"))?;
            if alphas.is_empty() {
                return Err(bad("alpha_grid", "grid is empty"));
            }
            if alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return Err(bad("alpha_grid", "entries must be positive"));
            }
            let chis = c.chi_grid.get_or_insert_with(|| vec![self.chi.unwrap_or(1.0)]).clone();
            if chis.is_empty() {
                return Err(bad("chi_grid", "grid is empty"));
            }
            if chis.iter().any(|x| !(*x >= 1.0)) {
                return Err(bad("chi_grid", "entries must be at least 1"));
            }
            let inner = *c.sweep_command.get_or_insert(Command::Front);
            if inner == Command::Sweep {
                return Err(bad("sweep_command", "a sweep cannot run sweeps"));
            }
            // Every point must be valid on its own.
            let probe = c.point(alphas[0], chis[0]);
            probe.normalized()?;
            return Ok(c);
        }

        c.alpha.ok_or_else(|| missing("alpha"))?;
        let geometry = c.geometry()?;
        if let Geometry::Finite(e) = &geometry {
            crate::lattice::LatticeSpec::new(e, c.metric.unwrap_or_default()).map_err(|e| bad("lattice", e))?;
            c.lattice = Some(LatticeKey::Extents(e.clone()));
        }
        match cmd {
            Command::Simulate => {
                let extents = c.finite_extents()?;
                let n: usize = extents.iter().product();
                c.metric.get_or_insert(Metric::default());
                c.interaction.get_or_insert_with(|| "xx".into());
                c.part.get_or_insert(CouplingPart::Full);
                c.source_kind.get_or_insert(PauliKind::Z);
                let src = *c.source_site.get_or_insert(0);
                if src >= n {
                    return Err(bad("source_site", format!("site {src} outside {n}-site lattice")));
                }
                c.probe_kind.get_or_insert(PauliKind::Z);
                let probes = c.probes.get_or_insert_with(|| (0..n).collect());
                if probes.is_empty() {
                    return Err(bad("probes", "list is empty"));
                }
                if let Some(p) = probes.iter().find(|&&p| p >= n) {
                    return Err(bad("probes", format!("site {p} outside {n}-site lattice")));
                }
                c.method.get_or_insert(EvolutionMethod::DenseExpm);
                c.epsilon.get_or_insert(crate::front::DEFAULT_EPSILON);
                c.fill_times(None)?;
            }
            Command::Bound | Command::Front => {
                c.variant.get_or_insert(BoundVariant::PaperOptimized);
                c.cutoff_mode.get_or_insert(CutoffMode::Numeric);
                c.prefactor.get_or_insert(Prefactor::Literal);
                c.velocity.get_or_insert(1.0);
                match geometry {
                    Geometry::InfiniteChain => {
                        c.g.get_or_insert(1.0);
                    }
                    Geometry::Finite(_) => {
                        c.metric.get_or_insert(Metric::default());
                        if c.g.is_some() {
                            return Err(bad("g", "g is fitted on finite lattices and cannot be set"));
                        }
                    }
                }
                c.fill_radii()?;
                if cmd == Command::Front {
                    c.epsilon.get_or_insert(crate::front::DEFAULT_EPSILON);
                    let radii = c.radius_grid();
                    let lo = *c.fit_r_min.get_or_insert(radii[0]);
                    let hi = *c.fit_r_max.get_or_insert(*radii.last().unwrap());
                    if !(lo <= hi) {
                        return Err(bad("fit_r_max", format!("must be at least fit_r_min = {lo}")));
                    }
                    let betas = c.betas.get_or_insert_with(Vec::new).clone();
                    if betas.iter().any(|b| !(*b > 0.0)) {
                        return Err(bad("betas", "entries must be positive"));
                    }
                    if !betas.is_empty() {
                        let bt = c.beta_times.get_or_insert_with(|| crate::front::log_grid(1e2, 1e4, 21));
                        check_ascending("beta_times", bt, false)?;
                    }
                    let r_max = *radii.last().unwrap();
                    c.fill_times(Some((1e-2, r_max.max(1.0), 2000, Spacing::Log)))?;
                } else {
                    c.fill_times(None)?;
                }
            }
            Command::Verify => {
                c.finite_extents()?;
                c.metric.get_or_insert(Metric::default());
                let r = c.radius.ok_or_else(|| missing("radius"))?;
                if !(r > 0.0) || !r.is_finite() {
                    return Err(bad("radius", format!("must be positive, got {r}")));
                }
                c.interaction.get_or_insert_with(|| "xx".into());
                c.source_kind.get_or_insert(PauliKind::Z);
                c.source_site.get_or_insert(0);
                let st = c.shell_times.get_or_insert_with(|| vec![0.1, 0.2, 0.5]);
                check_ascending("shell_times", st, true)?;
                c.max_shell.get_or_insert(10);
            }
            Command::Sweep => unreachable!(),
        }
        Ok(c)
    }

    fn fill_times(&mut self, default: Option<(f64, f64, usize, Spacing)>) -> Result<(), CliError> {
        if let Some(ts) = &self.times {
            return check_ascending("times", ts, true);
        }
        let (dlo, dhi, dn, ds) = default.unwrap_or((0.0, f64::NAN, 21, Spacing::Linear));
        let spacing = *self.t_spacing.get_or_insert(ds);
        let hi = match self.t_max {
            Some(h) => h,
            None if dhi.is_finite() => dhi,
            None => return Err(missing("times")),
        };
        let lo_default = if spacing == Spacing::Log { dlo.max(1e-3) } else { dlo };
        let lo = *self.t_min.get_or_insert(lo_default);
        self.t_max = Some(hi);
        let n = *self.t_points.get_or_insert(dn);
        if n == 0 {
            return Err(bad("t_points", "must be at least 1"));
        }
        if !(lo >= 0.0) || !(hi > lo) {
            return Err(bad("t_max", format!("need 0 <= t_min < t_max, got {lo} and {hi}")));
        }
        if spacing == Spacing::Log && lo == 0.0 {
            return Err(bad("t_min", "log spacing needs t_min > 0"));
        }
        Ok(())
    }

    fn fill_radii(&mut self) -> Result<(), CliError> {
        if let Some(rs) = &self.radii {
            return check_ascending("radii", rs, false);
        }
        let geometry = self.geometry()?;
        self.r_spacing.get_or_insert(match geometry {
            Geometry::Finite(_) => Spacing::Linear,
            Geometry::InfiniteChain => Spacing::Log,
        });
        let (lo, hi, n) = match geometry {
            Geometry::Finite(ref e) => {
                let lattice = crate::lattice::LatticeSpec::new(e, self.metric.unwrap_or_default())
                    .map_err(|e| bad("lattice", e))?;
                let diameter = lattice.diameter();
                let lo = *self.r_min.get_or_insert(1.0);
                let hi = *self.r_max.get_or_insert(diameter);
                let n = *self.r_points.get_or_insert((hi - lo).round().max(0.0) as usize + 1);
                (lo, hi, n)
            }
            Geometry::InfiniteChain => {
                let hi = self.r_max.ok_or_else(|| missing("r_max"))?;
                let lo = *self.r_min.get_or_insert(1.0);
                let n = *self.r_points.get_or_insert(21);
                (lo, hi, n)
            }
        };
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(bad("r_max", format!("need 0 < r_min <= r_max, got {lo} and {hi}")));
        }
        if n == 0 || (n == 1 && hi > lo) {
            return Err(bad("r_points", format!("need at least 2 points for ({lo}, {hi})")));
        }
        Ok(())
    }

    /// Time grid of a normalized config.
    pub fn time_grid(&self) -> Vec<f64> {
        if let Some(ts) = &self.times {
            return ts.clone();
        }
        grid(
            self.t_min.unwrap_or(0.0),
            self.t_max.unwrap_or(0.0),
            self.t_points.unwrap_or(1),
            self.t_spacing.unwrap_or_default(),
        )
    }

    /// Distance grid of a normalized config.
    pub fn radius_grid(&self) -> Vec<f64> {
        if let Some(rs) = &self.radii {
            return rs.clone();
        }
        grid(
            self.r_min.unwrap_or(1.0),
            self.r_max.unwrap_or(1.0),
            self.r_points.unwrap_or(1),
            self.r_spacing.unwrap_or_default(),
        )
    }

    /// The single-point config a sweep runs at `(alpha, chi)`.
    pub fn point(&self, alpha: f64, chi: f64) -> RunConfig {
        let mut p = self.clone();
        p.command = Some(self.sweep_command.unwrap_or(Command::Front));
        p.alpha = Some(alpha);
        p.chi = Some(chi);
        p.alpha_grid = None;
        p.chi_grid = None;
        p.sweep_command = None;
        p
    }

    /// The part of the config that determines results: everything except
    /// where they are written and how many threads compute them.
    pub fn hashed_view(&self) -> RunConfig {
        let mut v = self.clone();
        v.output_dir = None;
        v.workers = None;
        v
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| bad("command", format!("unknown command `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn over(pairs: &[&str]) -> Vec<(String, Value)> {
        parse_overrides(&pairs.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn minimal_simulate_config_gets_defaults() {
        let cfg = load_config(
            Command::Simulate,
            None,
            &over(&["--lattice", "[6]", "--alpha", "3", "--times", "0,0.5,1"]),
        )
        .unwrap()
        .normalized()
        .unwrap();
        assert_eq!(cfg.j0, Some(1.0));
        assert_eq!(cfg.chi, Some(1.0));
        assert_eq!(cfg.probes, Some((0..6).collect()));
        assert_eq!(cfg.source_kind, Some(PauliKind::Z));
        assert_eq!(cfg.time_grid(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn single_flag_value_fills_a_list_key() {
        let cfg = load_config(Command::Bound, None, &over(&["--times", "2", "--alpha", "3"])).unwrap();
        assert_eq!(cfg.times, Some(vec![2.0]));
        assert_eq!(cfg.alpha, Some(3.0));
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"lattice": [4], "alpha": 3, "t_max": 1}"#).unwrap();
        let cfg = load_config(Command::Simulate, Some(&path), &over(&["--alpha", "4"])).unwrap();
        assert_eq!(cfg.alpha, Some(4.0));
        let err = load_config(Command::Simulate, Some(&path), &over(&["--alpha", "-1"]))
            .unwrap()
            .normalized()
            .unwrap_err();
        assert!(err.to_string().contains("`alpha`"), "{err}");
    }

    #[test]
    fn errors_name_the_key() {
        let e = load_config(Command::Simulate, None, &over(&["--alpah", "3"])).unwrap_err();
        assert!(e.to_string().contains("`alpah`"));
        let e = load_config(Command::Simulate, None, &over(&["--alpha", "three"])).unwrap_err();
        assert!(e.to_string().contains("`alpha`"));
        let e = load_config(Command::Simulate, None, &over(&["--lattice", "[4]"]))
            .unwrap()
            .normalized()
            .unwrap_err();
        assert!(e.to_string().contains("`alpha`"));
        let e = load_config(Command::Simulate, None, &over(&["--lattice", "[4]", "--alpha", "3"]))
            .unwrap()
            .normalized()
            .unwrap_err();
        assert!(e.to_string().contains("`times`"));
    }

    #[test]
    fn conflicts_are_rejected() {
        assert!(load_config(Command::Simulate, None, &over(&["--alpha", "3", "--alpha", "4"])).is_err());
        let e = load_config(
            Command::Simulate,
            None,
            &over(&["--lattice", "[4]", "--alpha", "3", "--times", "0,1", "--t-max", "2"]),
        )
        .unwrap()
        .normalized()
        .unwrap_err();
        assert!(e.to_string().contains("conflicting"));
        let e = load_config(Command::Bound, None, &over(&["--command", "simulate"])).unwrap_err();
        assert!(e.to_string().contains("conflicting"));
    }

    #[test]
    fn sweep_needs_a_grid() {
        let e = load_config(Command::Sweep, None, &over(&["--lattice", "infinite", "--alpha-grid", "[]"]))
            .unwrap()
            .normalized()
            .unwrap_err();
        assert!(e.to_string().contains("`alpha_grid`"));
    }

    #[test]
    fn hash_view_drops_placement_keys() {
        let mut a = RunConfig { alpha: Some(3.0), workers: Some(4), output_dir: Some("x".into()), ..Default::default() };
        let b = a.hashed_view();
        assert_eq!(b.workers, None);
        assert_eq!(b.output_dir, None);
        a.workers = None;
        a.output_dir = None;
        assert_eq!(a, b);
    }

    #[test]
    fn flag_values_parse_as_json_or_lists() {
        assert_eq!(flag_value("4"), Value::from(4));
        assert_eq!(flag_value("xx"), Value::from("xx"));
        assert_eq!(flag_value("1,2"), serde_json::json!([1, 2]));
        assert_eq!(flag_value("[8]"), serde_json::json!([8]));
    }
}
