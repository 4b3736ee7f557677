//! Run configuration: the JSON document, flag overrides, and the resolved form
//! every command works from.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use symnet_core::fourier::{DEFAULT_CORRECTION_TRUNCATION, DEFAULT_TRUNCATION};
use symnet_core::kernel::unit_spacing_radius;
use symnet_core::quadrature::{DEFAULT_TENSOR_TOL, DEFAULT_TOL};
use symnet_core::{ConnectionKernel, NetworkModel, Space};

use crate::CliError;

pub const DEFAULT_TAIL_TRUNCATION: usize = 1 << 20;
pub const DEFAULT_N: usize = 256;
pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_SEED: u64 = 20240917;
pub const DEFAULT_SWEEP_K: [u32; 6] = [1, 2, 4, 6, 10, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Closed,
    Leading,
    Full,
    Quadrature,
    Lattice,
    Mc,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::Closed, Mode::Leading, Mode::Full, Mode::Quadrature, Mode::Lattice, Mode::Mc];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Closed => "closed",
            Mode::Leading => "leading",
            Mode::Full => "full",
            Mode::Quadrature => "quadrature",
            Mode::Lattice => "lattice",
            Mode::Mc => "mc",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode '{s}' (expected one of closed, leading, full, quadrature, lattice, mc, all)"))
    }
}

/// Parses `a,b,c`; `all` selects every mode.
pub fn parse_modes(list: &str) -> Result<Vec<Mode>, String> {
    let mut out = Vec::new();
    for part in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if part == "all" {
            out.extend(Mode::ALL);
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err("mode list is empty".into());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format '{s}' (expected csv or json)")),
        }
    }
}

/// Either explicit points or `count` evenly spaced points from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Points(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Grid::Points(v) => v.clone(),
            Grid::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                _ => {
                    let h = (stop - start) / (*count - 1) as f64;
                    let mut v: Vec<f64> = (0..*count).map(|i| start + h * i as f64).collect();
                    // land exactly on the endpoint
                    *v.last_mut().unwrap() = *stop;
                    v
                }
            },
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kernel: Option<ConnectionKernel>,
    pub radius: Option<f64>,
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComputeSpec {
    pub modes: Option<Vec<Mode>>,
    pub truncation: Option<usize>,
    pub correction_truncation: Option<usize>,
    pub tail_truncation: Option<usize>,
    pub tol: Option<f64>,
    pub tensor_tol: Option<f64>,
    pub k: Option<Vec<u32>>,
    pub b_grid: Option<Grid>,
    pub phi_grid: Option<Grid>,
    pub sweep_k: Option<Vec<u32>>,
    pub max_sep: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Option<Format>,
    pub path: Option<String>,
}

/// The JSON configuration document. Every section and field is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub compute: ComputeSpec,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Command-line values that override the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub p: Option<f64>,
    pub phi: Option<f64>,
    pub radius: Option<f64>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub modes: Option<Vec<Mode>>,
    pub format: Option<Format>,
    pub out: Option<String>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if self.p.is_some() || self.phi.is_some() {
            let (mut p, mut phi) = match &cfg.model.kernel {
                None => (0.1, 1.0),
                Some(ConnectionKernel::UniformWindow { p, phi }) => (*p, *phi),
                Some(_) => {
                    return Err(CliError::Config(
                        "--p/--phi only apply to a uniform window kernel".into(),
                    ))
                }
            };
            p = self.p.unwrap_or(p);
            phi = self.phi.unwrap_or(phi);
            cfg.model.kernel = Some(ConnectionKernel::UniformWindow { p, phi });
        }
        if let Some(r) = self.radius {
            cfg.model.radius = Some(r);
        }
        if let Some(n) = self.n {
            cfg.mc.n = Some(n);
        }
        if let Some(t) = self.trials {
            cfg.mc.trials = Some(t);
        }
        if let Some(s) = self.seed {
            cfg.mc.seed = Some(s);
        }
        if let Some(m) = &self.modes {
            cfg.compute.modes = Some(m.clone());
        }
        if let Some(f) = self.format {
            cfg.output.format = Some(f);
        }
        if let Some(o) = &self.out {
            cfg.output.path = Some(o.clone());
        }
        Ok(())
    }
}

/// Everything a command needs, with defaults filled in and checked.
/// Serialized as-is for the digest, so field order is part of the format.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub model: NetworkModel,
    /// Lattice sides for the lattice and Monte Carlo modes.
    pub lattice: Vec<usize>,
    pub modes: Vec<Mode>,
    pub truncation: usize,
    pub correction_truncation: usize,
    pub tail_truncation: usize,
    pub tol: f64,
    pub tensor_tol: f64,
    pub k: Vec<u32>,
    pub b_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub sweep_k: Vec<u32>,
    pub max_sep: usize,
    pub trials: usize,
    pub seed: u64,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<String>,
}

fn check_grid(name: &str, v: &[f64], lo: f64, lo_open: bool, hi: f64) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!("{name} is empty")));
    }
    if v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CliError::Config(format!("{name} must be strictly increasing")));
    }
    let bad = |x: f64| !x.is_finite() || x > hi || x < lo || (lo_open && x == lo);
    if let Some(x) = v.iter().find(|&&x| bad(x)) {
        let open = if lo_open { "(" } else { "[" };
        return Err(CliError::Config(format!("{name} point {x} outside {open}{lo}, {hi}]")));
    }
    Ok(())
}

impl Resolved {
    pub fn new(cfg: &RunConfig, default_modes: &[Mode]) -> Result<Self, CliError> {
        let kernel = cfg
            .model
            .kernel
            .clone()
            .unwrap_or(ConnectionKernel::UniformWindow { p: 0.1, phi: 1.0 });
        let violations = kernel.validate();
        if !violations.is_empty() {
            return Err(CliError::Config(
                symnet_core::Error::InvalidKernel(violations).to_string(),
            ));
        }
        let dim = kernel.dim();
        let (space, lattice) = if matches!(kernel, ConnectionKernel::Product { .. }) {
            let (radii, dims) = match (&cfg.model.radii, &cfg.mc.dims) {
                (Some(r), Some(d)) => (r.clone(), d.clone()),
                (Some(r), None) => (r.clone(), r.iter().map(|x| (2.0 * PI * x).round() as usize).collect()),
                (None, Some(d)) => (d.iter().map(|&n| unit_spacing_radius(n)).collect(), d.clone()),
                (None, None) => {
                    return Err(CliError::Config(
                        "torus model needs model.radii or mc.dims".into(),
                    ))
                }
            };
            if dims.len() != dim || radii.len() != dim {
                return Err(CliError::Config(format!(
                    "torus has {dim} kernel factors but {} radii and {} lattice sides",
                    radii.len(),
                    dims.len()
                )));
            }
            (Space::Torus { radii }, dims)
        } else {
            if cfg.model.radii.is_some() || cfg.mc.dims.is_some() {
                return Err(CliError::Config("radii/dims given for a circle model".into()));
            }
            let (radius, n) = match (cfg.model.radius, cfg.mc.n) {
                (Some(r), Some(n)) => (r, n),
                (Some(r), None) => (r, (2.0 * PI * r).round() as usize),
                (None, n) => {
                    let n = n.unwrap_or(DEFAULT_N);
                    (unit_spacing_radius(n), n)
                }
            };
            (Space::Circle { radius }, vec![n])
        };
        let model = NetworkModel::new(space, kernel).map_err(|e| CliError::Config(e.to_string()))?;
        if model.mean_degree().is_degenerate() {
            return Err(CliError::Config(symnet_core::Error::ZeroMeanDegree.to_string()));
        }

        let c = &cfg.compute;
        let modes = {
            let mut m = c.modes.clone().unwrap_or_else(|| default_modes.to_vec());
            m.sort();
            m.dedup();
            m
        };
        let b_grid = c
            .b_grid
            .clone()
            .unwrap_or(Grid::Range { start: 0.0, stop: PI, count: 33 })
            .points();
        let phi_grid = c
            .phi_grid
            .clone()
            .unwrap_or(Grid::Range { start: PI / 100.0, stop: PI, count: 100 })
            .points();
        check_grid("b_grid", &b_grid, 0.0, false, PI)?;
        check_grid("phi_grid", &phi_grid, 0.0, true, PI)?;
        let k = c.k.clone().unwrap_or_else(|| vec![0, 1, 2]);
        let sweep_k = c.sweep_k.clone().unwrap_or_else(|| DEFAULT_SWEEP_K.to_vec());
        if k.is_empty() || sweep_k.is_empty() {
            return Err(CliError::Config("k lists must not be empty".into()));
        }
        if sweep_k.contains(&0) {
            return Err(CliError::Config("sweep_k entries must be at least 1".into()));
        }
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(CliError::Config(format!("{name} must be positive, got {x}")))
            }
        };
        let trials = cfg.mc.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 && modes.contains(&Mode::Mc) {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        let truncation = c.truncation.unwrap_or(DEFAULT_TRUNCATION);
        if truncation == 0 {
            return Err(CliError::Config("truncation must be at least 1".into()));
        }
        if lattice.iter().product::<usize>() < 3 {
            return Err(CliError::Config("lattice needs at least 3 nodes".into()));
        }
        Ok(Self {
            model,
            lattice,
            modes,
            truncation,
            correction_truncation: c.correction_truncation.unwrap_or(DEFAULT_CORRECTION_TRUNCATION),
            tail_truncation: c.tail_truncation.unwrap_or(DEFAULT_TAIL_TRUNCATION).max(1),
            tol: positive("tol", c.tol.unwrap_or(DEFAULT_TOL))?,
            tensor_tol: positive("tensor_tol", c.tensor_tol.unwrap_or(DEFAULT_TENSOR_TOL))?,
            k,
            b_grid,
            phi_grid,
            sweep_k,
            max_sep: c.max_sep.unwrap_or(6),
            trials,
            seed: cfg.mc.seed.unwrap_or(DEFAULT_SEED),
            format: cfg.output.format.unwrap_or_default(),
            out: cfg.output.path.clone(),
        })
    }

    pub fn has(&self, m: Mode) -> bool {
        self.modes.contains(&m)
    }

    /// `p` and `phi` when the model is a circle with a uniform window.
    pub fn uniform(&self) -> Option<(f64, f64)> {
        match (self.model.space(), self.model.kernel()) {
            (Space::Circle { .. }, ConnectionKernel::UniformWindow { p, phi }) => Some((*p, *phi)),
            _ => None,
        }
    }

    pub fn radius(&self) -> f64 {
        self.model.radii()[0]
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.model.space(), Space::Circle { .. })
    }

    /// Lattice step along the first axis closest to angle `b`.
    pub fn offset_for(&self, b: f64) -> usize {
        let n = self.lattice[0];
        ((b * n as f64 / (2.0 * PI)).round() as usize).min(n / 2)
    }

    pub fn lattice_angle(&self, offset: usize) -> f64 {
        2.0 * PI * offset as f64 / self.lattice[0] as f64
    }
}
