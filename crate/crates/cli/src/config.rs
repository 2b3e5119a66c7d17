use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use goursat_ernst::boundary_data::DatumSpec;
use goursat_ernst::exact_solutions::ExactId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Solve,
    Verify,
    Convergence,
    Boundary,
    Linear,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub x: DatumSpec,
    pub y: DatumSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub delta: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            delta: 0.2,
            nx: 10,
            ny: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Bound on the per-point invariant residuals.
    pub invariant: f64,
    /// Bound on the error against a closed-form solution.
    pub exact: f64,
    /// Bound on predicted vs extrapolated boundary limits.
    pub boundary_limit: f64,
    /// Bound on the disagreement between the two linear routes.
    pub linear_routes: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            invariant: 1e-8,
            exact: 1e-6,
            boundary_limit: 1e-3,
            linear_routes: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub nodes_per_loop: usize,
    /// Node counts visited by the convergence study.
    pub convergence_nodes: Vec<usize>,
    pub tolerances: Tolerances,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            nodes_per_loop: 128,
            convergence_nodes: vec![32, 64, 128],
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_mode() -> Mode {
    Mode::Solve
}

impl RunConfig {
    pub fn with_family(spec: DatumSpec, mode: Mode) -> Self {
        RunConfig {
            data: DataConfig { x: spec.clone(), y: spec },
            grid: GridSection::default(),
            solver: SolverSection::default(),
            mode,
            output: OutputSection::default(),
        }
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let g = &self.grid;
        if !(g.delta > 0.0 && g.delta < 1.0) {
            bail!("delta = {} must lie in (0, 1)", g.delta);
        }
        if g.nx < 2 || g.ny < 2 {
            bail!("grid {}x{} needs at least 2 points per axis", g.nx, g.ny);
        }
        let nodes = std::iter::once(self.solver.nodes_per_loop).chain(self.solver.convergence_nodes.iter().copied());
        for n in nodes {
            if n < 16 || n % 2 != 0 {
                bail!("nodes_per_loop = {n} must be even and at least 16");
            }
        }
        if self.mode == Mode::Linear && !(self.data.x.is_linear() && self.data.y.is_linear()) {
            bail!("linear mode needs collinear data on both edges");
        }
        if self.mode != Mode::Linear && (self.data.x.is_linear() != self.data.y.is_linear()) {
            bail!("the two edges mix linear and Ernst data");
        }
        if self.mode == Mode::Convergence && self.exact().is_none() {
            bail!("convergence mode needs a family with a closed-form solution");
        }
        Ok(())
    }

    /// Closed-form solution matching the data, when there is one.
    pub fn exact(&self) -> Option<ExactId> {
        match (&self.data.x, &self.data.y) {
            (DatumSpec::KhanPenrose, DatumSpec::KhanPenrose) | (DatumSpec::KhanPenroseLog, DatumSpec::KhanPenroseLog) => {
                Some(ExactId::KhanPenrose)
            }
            (DatumSpec::NutkuHalil, DatumSpec::NutkuHalil) => Some(ExactId::NutkuHalil),
            _ => None,
        }
    }
}

/// Parses `nx,ny`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected nx,ny, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}
