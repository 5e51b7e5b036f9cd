//! JSON experiment configs.
//!
//! A config has four sections: `potential`, `schemes`, `params` and
//! `output`. Unknown keys are rejected so that typos surface as errors
//! instead of silently falling back to defaults.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::integrators::{PhaseState, SchemeId};
use crate::potentials::{PerturbedQuadratic, Potential, QuadraticPotential};

/// A config problem, located in the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            message: message.into(),
        }
    }

    /// Points the error at the first occurrence of `"key"` in `source`.
    fn at_key(mut self, source: &str, key: &str) -> Self {
        let needle = format!("\"{key}\"");
        if let Some(offset) = source.find(&needle) {
            let before = &source[..offset];
            self.line = Some(before.matches('\n').count() + 1);
            self.column = Some(offset - before.rfind('\n').map_or(0, |i| i + 1) + 1);
        }
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// One number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    One(f64),
    Many(Vec<f64>),
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::One(x) => vec![*x],
            Grid::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    /// `quadratic` or `perturbed_quadratic`.
    pub name: String,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default, rename = "M")]
    pub big_m: Option<f64>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub diagonal: Option<Vec<f64>>,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub x: Vec<f64>,
    #[serde(default)]
    pub v: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMode {
    #[default]
    Reports,
    Table1,
}

/// Parameters shared by all commands; each command reads what it needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default)]
    pub h: Option<Grid>,
    #[serde(default)]
    pub gamma: Option<Grid>,
    /// Chain length.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub z0: Option<StartSpec>,
    #[serde(default)]
    pub z0_tilde: Option<StartSpec>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub mode: Option<CertifyMode>,
    /// Explicit certificate constants; all three or none.
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    /// Stepsize of the limit-deviation sweep.
    #[serde(default)]
    pub deviation_h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// A parsed and validated experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub schemes: Vec<String>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A potential built from its spec.
pub enum BuiltPotential {
    Quadratic(QuadraticPotential),
    Perturbed(PerturbedQuadratic),
}

impl BuiltPotential {
    pub fn as_dyn(&self) -> &dyn Potential {
        match self {
            BuiltPotential::Quadratic(q) => q,
            BuiltPotential::Perturbed(q) => q,
        }
    }
}

fn base_quadratic(spec: &PotentialSpec) -> Result<QuadraticPotential, String> {
    let given = [spec.diagonal.is_some(), spec.matrix.is_some(), spec.m.is_some() || spec.big_m.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err("give exactly one of `diagonal`, `matrix`, or `m`/`M`".into());
    }
    if let Some(d) = &spec.diagonal {
        return QuadraticPotential::diagonal(d.clone()).map_err(|e| e.to_string());
    }
    if let Some(rows) = &spec.matrix {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(format!("`matrix` must be square, got {n} rows of unequal length"));
        }
        let q = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        return QuadraticPotential::dense(q).map_err(|e| e.to_string());
    }
    let (Some(m), Some(big_m)) = (spec.m, spec.big_m) else {
        return Err("`m` and `M` must be given together".into());
    };
    let dim = spec.dim.unwrap_or(2);
    match dim {
        0 => Err("`dim` must be at least 1".into()),
        1 if m != big_m => Err("a 1-D quadratic needs m == M".into()),
        2 => QuadraticPotential::anisotropic(m, big_m).map_err(|e| e.to_string()),
        _ if m == big_m => QuadraticPotential::isotropic(dim, m).map_err(|e| e.to_string()),
        _ => {
            // log-spaced curvatures from m to M
            let r = (big_m / m).ln();
            let mut diag: Vec<f64> = (0..dim)
                .map(|i| m * (r * i as f64 / (dim - 1) as f64).exp())
                .collect();
            diag[dim - 1] = big_m;
            QuadraticPotential::diagonal(diag).map_err(|e| e.to_string())
        }
    }
}

impl PotentialSpec {
    pub fn build(&self) -> Result<BuiltPotential, String> {
        match self.name.as_str() {
            "quadratic" => {
                if self.epsilon.is_some() {
                    return Err("`epsilon` only applies to perturbed_quadratic".into());
                }
                base_quadratic(self).map(BuiltPotential::Quadratic)
            }
            "perturbed_quadratic" => {
                let eps = self.epsilon.ok_or("perturbed_quadratic needs `epsilon`")?;
                let base = base_quadratic(self)?;
                PerturbedQuadratic::new(base, eps)
                    .map(BuiltPotential::Perturbed)
                    .map_err(|e| e.to_string())
            }
            other => Err(format!(
                "unknown potential `{other}`; expected quadratic or perturbed_quadratic"
            )),
        }
    }
}

/// Everything a command needs, resolved from a config.
pub struct Resolved {
    pub config: ExperimentConfig,
    pub potential: BuiltPotential,
    pub schemes: Vec<SchemeId>,
    source: String,
}

impl fmt::Debug for Resolved {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Resolved")
            .field("config", &self.config)
            .field("schemes", &self.schemes)
            .finish_non_exhaustive()
    }
}

impl Resolved {
    /// Wraps a message as an error pointing at `key`.
    pub fn error_at(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::new(message).at_key(&self.source, key)
    }

    pub fn m(&self) -> f64 {
        self.potential.as_dyn().convexity()
    }

    pub fn big_m(&self) -> f64 {
        self.potential.as_dyn().smoothness()
    }

    /// A non-empty grid of positive finite values, or `default` when absent.
    pub fn grid(&self, key: &str, grid: Option<&Grid>, default: Option<&[f64]>) -> Result<Vec<f64>, ConfigError> {
        let values = match (grid, default) {
            (Some(g), _) => g.values(),
            (None, Some(d)) => d.to_vec(),
            (None, None) => return Err(self.error_at("params", format!("`params.{key}` is required"))),
        };
        if values.is_empty() {
            return Err(self.error_at(key, format!("`{key}` grid is empty")));
        }
        if let Some(bad) = values.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(self.error_at(key, format!("`{key}` values must be positive and finite, got {bad}")));
        }
        Ok(values)
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.config.params.seeds.clone().unwrap_or_else(|| vec![0])
    }

    /// Starting state from `key`, or `fill` in every position coordinate
    /// with zero velocity.
    pub fn start(&self, key: &str, spec: Option<&StartSpec>, fill: f64) -> Result<PhaseState, ConfigError> {
        let dim = self.potential.as_dyn().dim();
        let Some(s) = spec else {
            return Ok(PhaseState::at_rest(vec![fill; dim]));
        };
        let v = s.v.clone().unwrap_or_else(|| vec![0.0; dim]);
        if s.x.len() != dim || v.len() != dim {
            return Err(self.error_at(key, format!("`{key}` must have dimension {dim}")));
        }
        PhaseState::new(s.x.clone(), v).map_err(|e| self.error_at(key, e.to_string()))
    }
}

/// Parses and validates a config document.
pub fn parse_config(source: &str) -> Result<Resolved, ConfigError> {
    let config: ExperimentConfig = serde_json::from_str(source).map_err(|e| ConfigError {
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })?;
    let potential = config
        .potential
        .build()
        .map_err(|msg| ConfigError::new(msg).at_key(source, "potential"))?;
    if config.schemes.is_empty() {
        return Err(ConfigError::new(format!(
            "`schemes` is empty; list one or more of: {}",
            SchemeId::ALL.map(|s| s.name()).join(", ")
        ))
        .at_key(source, "schemes"));
    }
    let mut schemes = Vec::with_capacity(config.schemes.len());
    for name in &config.schemes {
        let id: SchemeId = name
            .parse()
            .map_err(|e: crate::error::Error| ConfigError::new(e.to_string()).at_key(source, name))?;
        schemes.push(id);
    }
    let p = &config.params;
    let abc = [p.a.is_some(), p.b.is_some(), p.c.is_some()];
    if abc.iter().any(|&x| x) && !abc.iter().all(|&x| x) {
        return Err(ConfigError::new("give all of `a`, `b`, `c` or none").at_key(source, "params"));
    }
    Ok(Resolved {
        config,
        potential,
        schemes,
        source: source.to_string(),
    })
}
