//! Experiment configuration: JSON schema, parsing and validation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, HermitianOp, RegisterShape};
use crate::states::HypergraphHamiltonian;

/// Largest total dimension accepted without `allow_large`.
pub const MAX_DIM: usize = 1 << 12;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    W1,
    Lipschitz,
    Recovery,
    Dobrushin,
    Curvature,
    Tci,
    Concentration,
    Ensembles,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::W1 => "w1",
            Task::Lipschitz => "lipschitz",
            Task::Recovery => "recovery",
            Task::Dobrushin => "dobrushin",
            Task::Curvature => "curvature",
            Task::Tci => "tci",
            Task::Concentration => "concentration",
            Task::Ensembles => "ensembles",
        }
    }
}

/// Hyperedge term; entries are `[re, im]` pairs, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub sites: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub d: usize,
    pub sites: Vec<usize>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub quadrature: f64,
    pub w1_gap: f64,
    pub slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quadrature: 1e-8, w1_gap: 1e-6, slack: 1e-6 }
    }
}

fn default_trials() -> usize {
    20
}

/// Parsed configuration as written by the user, echoed into reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// Validated configuration with the Hamiltonian assembled.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub spec: ConfigSpec,
    pub hamiltonian: HypergraphHamiltonian,
    pub betas: Vec<f64>,
}

fn config_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config { path: path.into(), msg: msg.into() }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, false)
}

/// Parses and validates; registers above [`MAX_DIM`] need `allow_large`.
pub fn parse_config_with(text: &str, allow_large: bool) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: ConfigSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    validate(spec, allow_large)
}

fn edge_matrix(edge: &EdgeSpec, i: usize, dim: usize) -> Result<CMatrix> {
    let path = format!("system.edges[{i}].matrix");
    if edge.matrix.len() != dim || edge.matrix.iter().any(|r| r.len() != dim) {
        return Err(config_err(path, format!("edge {i} on sites {:?} needs a {dim}×{dim} matrix", edge.sites)));
    }
    let m = CMatrix::from_fn(dim, dim, |r, c| c64(edge.matrix[r][c][0], edge.matrix[r][c][1]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(config_err(path, format!("edge {i} has non-finite entries")));
    }
    let dev = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > HERMITIAN_TOL {
        return Err(config_err(path, format!("edge {i} on sites {:?} is not Hermitian (max |M − M†| = {dev:e})", edge.sites)));
    }
    Ok(m)
}

pub fn validate(spec: ConfigSpec, allow_large: bool) -> Result<ExperimentConfig> {
    if spec.tasks.is_empty() {
        return Err(config_err("tasks", "at least one task is required"));
    }
    let betas = match (&spec.beta, &spec.beta_grid) {
        (Some(b), None) => vec![*b],
        (None, Some(g)) if !g.is_empty() => g.clone(),
        (None, Some(_)) => return Err(config_err("beta_grid", "grid is empty")),
        (Some(_), Some(_)) => return Err(config_err("beta", "give either beta or beta_grid, not both")),
        (None, None) => return Err(config_err("beta", "missing inverse temperature")),
    };
    for (i, b) in betas.iter().enumerate() {
        if !(b.is_finite() && *b >= 0.0) {
            let path = if spec.beta.is_some() { "beta".to_string() } else { format!("beta_grid[{i}]") };
            return Err(config_err(path, format!("inverse temperature {b} must be finite and ≥ 0")));
        }
    }
    let t = &spec.tolerances;
    for (name, v) in [("quadrature", t.quadrature), ("w1_gap", t.w1_gap), ("slack", t.slack)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(config_err(format!("tolerances.{name}"), format!("must be positive, got {v}")));
        }
    }
    let sys = &spec.system;
    if sys.d < 2 {
        return Err(config_err("system.d", format!("local dimension {} must be at least 2", sys.d)));
    }
    let shape = RegisterShape::new(sys.sites.clone(), sys.d).map_err(|e| config_err("system.sites", e.to_string()))?;
    let too_large = (sys.d as f64).powi(sys.sites.len() as i32) > MAX_DIM as f64;
    if too_large && !allow_large {
        return Err(config_err("system.sites", format!("total dimension {}^{} exceeds {MAX_DIM}; pass --allow-large", sys.d, sys.sites.len())));
    }
    let mut edges = Vec::with_capacity(sys.edges.len());
    for (i, edge) in sys.edges.iter().enumerate() {
        let local = RegisterShape::new(edge.sites.clone(), sys.d)
            .map_err(|e| config_err(format!("system.edges[{i}].sites"), e.to_string()))?;
        if let Some(s) = edge.sites.iter().find(|s| !shape.contains(**s)) {
            return Err(config_err(format!("system.edges[{i}].sites"), format!("site {s} is not in system.sites")));
        }
        let m = edge_matrix(edge, i, local.dim())?;
        edges.push((edge.sites.clone(), HermitianOp::from_raw(local, m)));
    }
    let hamiltonian = HypergraphHamiltonian::new(shape, edges).map_err(|e| config_err("system.edges", e.to_string()))?;
    Ok(ExperimentConfig { spec, hamiltonian, betas })
}
