//! Run configuration: TOML files layered over built-in presets.
//!
//! Resolution order, later wins: built-in defaults, the base preset
//! (`[presets] base = ...` or an explicit preset name), the file itself,
//! then `key=value` overrides with dotted keys such as `solver.k_max=10`.
//! Unknown keys anywhere are rejected.

use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::experiments::{Experiment, NoiseSpec, Phantom, RateStudySpec};
use crate::grids::{GammaGrid, SpaceGrid, TimeGrid};
use crate::inverse::{default_params, POINCARE_UNIT};
use crate::pde::ForwardConfig;
use crate::pdsolver::Inertia;
use crate::temporal::RegularizerWeights;

const PRESETS: &[(&str, &str)] = &[
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2-u1", include_str!("../presets/fig2-u1.toml")),
    ("fig2-u2", include_str!("../presets/fig2-u2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4-u1", include_str!("../presets/fig4-u1.toml")),
    ("fig4-u2", include_str!("../presets/fig4-u2.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| {
            let known: Vec<_> = preset_names().collect();
            Error::Config(format!("unknown preset {name:?}; known presets: {}", known.join(", ")))
        })
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub presets: PresetSection,
    pub grids: GridSection,
    pub gamma: GammaSection,
    pub regularization: RegularizationSection,
    pub solver: SolverSection,
    pub noise: NoiseSection,
    pub phantom: PhantomSection,
    pub output: OutputSection,
    pub rates: RatesSection,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PresetSection {
    pub base: Option<String>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub nx: usize,
    pub nt: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 65, nt: 257 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GammaSection {
    /// Uniform Γ with this many intervals, unless `knots` is given.
    pub intervals: usize,
    pub knots: Option<Vec<f64>>,
}

impl Default for GammaSection {
    fn default() -> Self {
        Self { intervals: 16, knots: None }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RegularizationSection {
    pub lambda: f64,
    pub mu: f64,
}

impl Default for RegularizationSection {
    fn default() -> Self {
        Self { lambda: 1e-4, mu: 1e-5 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    /// Defaults to the cocoercivity constant.
    pub alpha: Option<f64>,
    /// Defaults to `0.95 / ‖D_Γ‖²`.
    pub beta: Option<f64>,
    pub cocoercivity: f64,
    pub k_max: usize,
    pub max_outer: usize,
    pub tol_update: f64,
    /// `"fista"` or `"off"`.
    pub inertia: String,
    pub sigma: f64,
    pub rho_exponent: f64,
    pub divergence_factor: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: None,
            cocoercivity: POINCARE_UNIT,
            k_max: 5,
            max_outer: 20_000,
            tol_update: 1e-6,
            inertia: "fista".into(),
            sigma: 1.0,
            rho_exponent: 2.0,
            divergence_factor: 1e6,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub delta: f64,
    pub seed: u64,
    pub literal_sigma: bool,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { delta: 1e-2, seed: 20240917, literal_sigma: false }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomSection {
    pub name: String,
}

impl Default for PhantomSection {
    fn default() -> Self {
        Self { name: "u1".into() }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Record wall-clock seconds in rate tables.
    pub timing: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    pub lambda0: Option<f64>,
    pub mu0: Option<f64>,
    pub delta0: Option<f64>,
    pub levels: usize,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self { lambda0: None, mu0: None, delta0: None, levels: 5 }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| Error::Config(format!("{origin}: {e}")))
}

/// Recursive merge; tables merge key by key, everything else is replaced.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn base_name(t: &Table) -> Option<String> {
    t.get("presets")?.as_table()?.get("base")?.as_str().map(str::to_owned)
}

/// The preset chain below `table`, flattened.
fn expand(table: Table, explicit_base: Option<&str>, depth: usize) -> Result<Table> {
    if depth > 8 {
        return Err(Error::Config("preset chain too deep".into()));
    }
    let base = match (explicit_base, base_name(&table)) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("preset {a:?} requested but the file is based on {b:?}")));
        }
        (Some(a), _) => Some(a.to_owned()),
        (None, b) => b,
    };
    let mut out = match base {
        Some(name) => expand(parse_table(preset_source(&name)?, &format!("preset {name}"))?, None, depth + 1)?,
        None => Table::new(),
    };
    merge(&mut out, table);
    Ok(out)
}

fn parse_override(spec: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not of the form key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is malformed")));
    }
    let raw = raw.trim();
    // Anything that is not a TOML literal is taken as a bare string.
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()));
    Ok((path, value))
}

fn apply_override(table: &mut Table, path: &[String], value: Value) -> Result<()> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path {}: {p} is not a section", path.join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

impl Config {
    /// Builds a configuration from optional file contents, an optional
    /// preset name and overrides.
    pub fn resolve(file: Option<&str>, preset: Option<&str>, overrides: &[String]) -> Result<Self> {
        let user = match file {
            Some(text) => parse_table(text, "config")?,
            None => Table::new(),
        };
        let mut table = expand(user, preset, 0)?;
        for o in overrides {
            let (path, value) = parse_override(o)?;
            apply_override(&mut table, &path, value)?;
        }
        let cfg: Config = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::resolve(None, Some(name), &[])
    }

    fn check(&self) -> Result<()> {
        self.phantom()?;
        self.inertia()?;
        if !(self.noise.delta >= 0.0) {
            return Err(Error::Config(format!("noise.delta must be >= 0, got {}", self.noise.delta)));
        }
        if !(self.solver.tol_update >= 0.0) {
            return Err(Error::Config(format!("solver.tol_update must be >= 0, got {}", self.solver.tol_update)));
        }
        Ok(())
    }

    pub fn phantom(&self) -> Result<Phantom> {
        self.phantom.name.parse()
    }

    fn inertia(&self) -> Result<Inertia> {
        match self.solver.inertia.as_str() {
            "fista" => Ok(Inertia::SafeguardedFista { sigma: self.solver.sigma, rho_exponent: self.solver.rho_exponent }),
            "off" => Ok(Inertia::Off),
            other => Err(Error::Config(format!("solver.inertia must be \"fista\" or \"off\", got {other:?}"))),
        }
    }

    pub fn grids(&self) -> Result<(SpaceGrid, TimeGrid, GammaGrid)> {
        let space = SpaceGrid::new(self.grids.nx)?;
        let time = TimeGrid::new(self.grids.nt)?;
        let gamma = match &self.gamma.knots {
            Some(k) => GammaGrid::from_knots(k, &time)?,
            None => GammaGrid::uniform(self.gamma.intervals, &time)?,
        };
        Ok((space, time, gamma))
    }

    pub fn experiment(&self) -> Result<Experiment> {
        let (space, time, gamma) = self.grids()?;
        let forward = ForwardConfig::with_zero_initial(space, time);
        let c = self.solver.cocoercivity;
        let mut params = default_params(&gamma, &forward, c)?;
        if let Some(a) = self.solver.alpha {
            params.alpha = a;
        }
        if let Some(b) = self.solver.beta {
            params.beta = b;
        }
        params.k_max = self.solver.k_max;
        params.max_outer = self.solver.max_outer;
        params.tol_update = self.solver.tol_update;
        params.inertia = self.inertia()?;
        params.divergence_factor = self.solver.divergence_factor;
        Ok(Experiment {
            forward,
            gamma,
            phantom: self.phantom()?,
            noise: NoiseSpec { delta: self.noise.delta, seed: self.noise.seed, literal_sigma: self.noise.literal_sigma },
            weights: RegularizerWeights::new(self.regularization.lambda, self.regularization.mu)?,
            cocoercivity: c,
            params,
        })
    }

    /// Rate-study parameters; unset starting values fall back to the
    /// regularization and noise sections.
    pub fn rate_spec(&self) -> Result<RateStudySpec> {
        let spec = RateStudySpec {
            lambda0: self.rates.lambda0.unwrap_or(self.regularization.lambda),
            mu0: self.rates.mu0.unwrap_or(self.regularization.mu),
            delta0: self.rates.delta0.unwrap_or(self.noise.delta),
            levels: self.rates.levels,
        };
        spec.validate()?;
        Ok(spec)
    }
}
