//! Run configuration from flags and an optional JSON file; flags win.
//!
//! JSON schema (every field optional):
//!
//! ```json
//! {
//!   "matrix": "cdde2",                  // collection name or .mtx path
//!   "generate": "31,31,64,64",          // or "cdde2-twin" / "pde2961-twin", or {"nx":..,"ny":..,"px":..,"py":..}
//!   "s": 16,
//!   "seed": 0,
//!   "tol": 1e-15,
//!   "max_iter": 961,
//!   "solvers": ["1", "bl-cirs-ortho"],  // numbers 1-5 or names
//!   "out": "results",
//!   "emit": ["csv", "plot", "bounds", "summary"],
//!   "rhs_dist": "symmetric",            // or "unit"
//!   "cache_dir": "/path/to/cache",
//!   "record_gap_every": 1
//! }
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use blcirs::ingest::{ConvectionDiffusion, MatrixSource, ProblemSpec, RhsDistribution};
use blcirs::{SolverOptions, Variant};
use clap::Args;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Emit {
    Csv,
    Plot,
    Bounds,
    Summary,
}

impl FromStr for Emit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Emit::Csv),
            "plot" | "svg" => Ok(Emit::Plot),
            "bounds" => Ok(Emit::Bounds),
            "summary" => Ok(Emit::Summary),
            other => Err(format!("unknown artifact '{other}' (expected csv, plot, bounds, summary)")),
        }
    }
}

/// Problem and solver flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ProblemArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Collection matrix name (e.g. cdde2, Group/name) or path to a .mtx file.
    #[arg(long, conflicts_with = "generate")]
    pub matrix: Option<String>,
    /// Generated convection-diffusion problem: nx,ny,px,py or cdde2-twin / pde2961-twin.
    #[arg(long)]
    pub generate: Option<String>,
    /// Number of right-hand sides [default: 16].
    #[arg(long)]
    pub s: Option<usize>,
    /// Seed for the random right-hand side [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative residual tolerance [default: 1e-15].
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap [default: n].
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Solver number 1-5 or name; repeatable or comma separated [default: all].
    #[arg(long = "solver", value_delimiter = ',')]
    pub solvers: Vec<String>,
    /// Output directory; must exist.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Artifacts to write: csv, plot, bounds, summary [default: csv,summary].
    #[arg(long, value_delimiter = ',')]
    pub emit: Vec<String>,
    /// Right-hand-side entries: symmetric (-1,1) or unit (0,1) [default: symmetric].
    #[arg(long)]
    pub rhs_dist: Option<String>,
    /// Cache directory for downloaded matrices.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Measure true residuals every this many iterations; 0 only at the end [default: 1].
    #[arg(long)]
    pub record_gap_every: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GenerateField {
    Text(String),
    Grid { nx: usize, ny: usize, px: f64, py: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    matrix: Option<String>,
    generate: Option<GenerateField>,
    s: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    solvers: Option<Vec<String>>,
    out: Option<PathBuf>,
    emit: Option<Vec<String>>,
    rhs_dist: Option<String>,
    cache_dir: Option<PathBuf>,
    record_gap_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub solvers: Vec<SolverOptions>,
    pub output_dir: Option<PathBuf>,
    pub emit: BTreeSet<Emit>,
    pub cache_dir: Option<PathBuf>,
}

pub fn parse_generate(text: &str) -> Result<ConvectionDiffusion> {
    match text.trim().to_ascii_lowercase().as_str() {
        "cdde2-twin" | "cdde2" => return Ok(ConvectionDiffusion::CDDE2_TWIN),
        "pde2961-twin" | "pde2961" => return Ok(ConvectionDiffusion::PDE2961_TWIN),
        _ => {}
    }
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        bail!("--generate expects nx,ny,px,py or a twin name, got '{text}'");
    }
    let nx: usize = parts[0].parse().with_context(|| format!("bad nx '{}'", parts[0]))?;
    let ny: usize = parts[1].parse().with_context(|| format!("bad ny '{}'", parts[1]))?;
    let px: f64 = parts[2].parse().with_context(|| format!("bad px '{}'", parts[2]))?;
    let py: f64 = parts[3].parse().with_context(|| format!("bad py '{}'", parts[3]))?;
    if nx < 2 || ny < 2 {
        bail!("grid must be at least 2x2, got {nx}x{ny}");
    }
    if !px.is_finite() || !py.is_finite() {
        bail!("convection coefficients must be finite");
    }
    Ok(ConvectionDiffusion { nx, ny, px, py })
}

fn matrix_source(name: &str) -> MatrixSource {
    let p = Path::new(name);
    if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")) || p.is_file() {
        MatrixSource::MatrixMarketFile(p.to_path_buf())
    } else {
        MatrixSource::SuiteSparse(name.to_string())
    }
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

impl ProblemArgs {
    /// Merges flags over the config file. `default_solvers` applies when
    /// neither names a solver.
    pub fn resolve(&self, default_solvers: &[Variant]) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };

        let source = if let Some(m) = &self.matrix {
            matrix_source(m)
        } else if let Some(g) = &self.generate {
            MatrixSource::Generated(parse_generate(g)?)
        } else if let Some(m) = &file.matrix {
            if file.generate.is_some() {
                bail!("config sets both 'matrix' and 'generate'");
            }
            matrix_source(m)
        } else {
            match &file.generate {
                Some(GenerateField::Text(t)) => MatrixSource::Generated(parse_generate(t)?),
                Some(GenerateField::Grid { nx, ny, px, py }) => {
                    MatrixSource::Generated(parse_generate(&format!("{nx},{ny},{px},{py}"))?)
                }
                None => bail!("no problem given: use --matrix or --generate"),
            }
        };

        let s = self.s.or(file.s).unwrap_or(16);
        if s == 0 {
            bail!("--s must be at least 1");
        }
        let seed = self.seed.or(file.seed).unwrap_or(0);
        let tol = self.tol.or(file.tol).unwrap_or(1e-15);
        if !(tol > 0.0) {
            bail!("--tol must be positive, got {tol}");
        }
        let max_iter = self.max_iter.or(file.max_iter);
        let gap_every = self.record_gap_every.or(file.record_gap_every).unwrap_or(1);
        let rhs_dist = match self.rhs_dist.as_ref().or(file.rhs_dist.as_ref()) {
            Some(d) => d.parse::<RhsDistribution>().map_err(anyhow::Error::msg)?,
            None => RhsDistribution::Symmetric,
        };

        let names: Vec<String> = if !self.solvers.is_empty() {
            self.solvers.clone()
        } else {
            file.solvers.clone().unwrap_or_default()
        };
        let mut variants: Vec<Variant> = Vec::new();
        for n in names.iter().filter(|n| !n.trim().is_empty()) {
            let v: Variant = n.parse().map_err(anyhow::Error::msg)?;
            if !variants.contains(&v) {
                variants.push(v);
            }
        }
        if variants.is_empty() {
            variants = default_solvers.to_vec();
        }
        let solvers = variants
            .into_iter()
            .map(|v| SolverOptions {
                variant: v,
                tol,
                max_iter,
                seed,
                record_gap_every: gap_every,
            })
            .collect();

        let emit_names: Vec<String> = if !self.emit.is_empty() {
            self.emit.clone()
        } else {
            file.emit.clone().unwrap_or_else(|| vec!["csv".into(), "summary".into()])
        };
        let emit = emit_names
            .iter()
            .filter(|e| !e.trim().is_empty())
            .map(|e| e.parse::<Emit>().map_err(anyhow::Error::msg))
            .collect::<Result<BTreeSet<_>>>()?;

        let mut problem = ProblemSpec::new(source, s, seed);
        problem.rhs_dist = rhs_dist;
        Ok(RunConfig {
            problem,
            solvers,
            output_dir: self.out.clone().or(file.out),
            emit,
            cache_dir: self.cache_dir.clone().or(file.cache_dir),
        })
    }
}

impl RunConfig {
    /// The output directory, which must already exist.
    pub fn require_output_dir(&self) -> Result<&Path> {
        let dir = self.output_dir.as_deref().context("--out is required")?;
        if !dir.is_dir() {
            bail!("output directory {} does not exist", dir.display());
        }
        Ok(dir)
    }
}
