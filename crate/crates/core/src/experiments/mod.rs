//! Named experiments with versioned JSON configs, pass/fail checks and CSV tables.
//!
//! Every run is a pure function of its config and seed: tables are written
//! with 17 significant digits and reports carry no timings, so reruns diff
//! cleanly.

mod potentials;
mod profiles;
mod relaxation;
mod solvers;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::elliptic::{assemble, CoefficientSet, DiscreteOperator};
use crate::error::{Error, Result};
use crate::grid::{build_masked_grid, Shape};
use crate::linalg::LinearOptions;

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that overrides the config seed.
pub const SEED_ENV: &str = "MEL_SEED";

/// Catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExperimentInfo {
    pub id: &'static str,
    /// Acceptance criterion covered by this experiment.
    pub criterion: u8,
    /// Laboratory module exercised.
    pub module: &'static str,
    pub summary: &'static str,
    /// Mathematical result being probed.
    pub topic: &'static str,
}

/// Input of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Experiment parameters; omitted fields take their defaults.
    #[serde(default)]
    pub params: Value,
    /// Overrides the linear solver stopping rule of grid experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearOptions>,
}

impl ExperimentConfig {
    /// Default parameters for `id`.
    pub fn new(id: &str) -> Self {
        ExperimentConfig {
            schema: SCHEMA_VERSION,
            id: id.to_string(),
            seed: 0,
            out_dir: None,
            params: Value::Null,
            linear: None,
        }
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Parse and validate a JSON config; syntax errors report line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            Error::config(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Replace the seed by a decimal value, as read from [`SEED_ENV`].
    pub fn override_seed(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::config(SEED_ENV, format!("expected an unsigned integer, got {v:?}")))?;
        }
        Ok(())
    }

    /// Apply [`SEED_ENV`] if set.
    pub fn apply_env(&mut self) -> Result<()> {
        let v = std::env::var(SEED_ENV).ok();
        self.override_seed(v.as_deref())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema),
            ));
        }
        if let Some(lin) = &self.linear {
            if !(lin.tol > 0.0 && lin.tol < 1.0) {
                return Err(Error::config("linear.tol", "must lie in (0, 1)"));
            }
            if lin.max_iter == Some(0) {
                return Err(Error::config("linear.max_iter", "must be positive"));
            }
        }
        (entry(&self.id)?.drive)(None, &self.params).map(|_| ())
    }
}

/// One tolerance test of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn bounded(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Check { name: name.into(), value, lower, upper, passed }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::bounded(name, value, None, Some(bound))
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::bounded(name, value, Some(bound), None)
    }

    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self::bounded(name, value, Some(lower), Some(upper))
    }

    /// `value` within `rel` of `target`.
    pub fn relative(name: impl Into<String>, value: f64, target: f64, rel: f64) -> Self {
        let (a, b) = (target * (1.0 - rel), target * (1.0 + rel));
        Self::within(name, value, a.min(b), a.max(b))
    }

    /// Boolean predicate, recorded as 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, lower: Some(1.0), upper: None, passed: ok }
    }

    pub fn finite(name: impl Into<String>, value: f64) -> Self {
        Self::bounded(name, value, None, None)
    }

    /// `lower ≤ value ≤ upper` as a single line.
    pub fn describe(&self) -> String {
        let mut s = format!("{} = {:.6e}", self.name, self.value);
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => write!(s, " in [{l:.6e}, {u:.6e}]"),
            (Some(l), None) => write!(s, " >= {l:.6e}"),
            (None, Some(u)) => write!(s, " <= {u:.6e}"),
            (None, None) => write!(s, " finite"),
        }
        .expect("writing to a String");
        s
    }
}

/// JSON summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub id: String,
    pub criterion: u8,
    pub module: String,
    pub seed: u64,
    /// Parameters after defaults were filled in.
    pub params: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Named CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width of table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Report and tables of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub report: Report,
    pub tables: Vec<Table>,
}

impl Artifacts {
    pub fn passed(&self) -> bool {
        self.report.passed
    }

    /// Write `<id>.json` and `<id>-<table>.csv` into `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let mut paths = Vec::with_capacity(self.tables.len() + 1);
        let json = dir.join(format!("{}.json", self.report.id));
        std::fs::write(&json, self.report.to_json()?)?;
        paths.push(json);
        for t in &self.tables {
            let p = dir.join(format!("{}-{}.csv", self.report.id, t.name));
            std::fs::write(&p, t.to_csv()?)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

/// Checks and tables produced by an experiment body.
#[derive(Debug, Default)]
struct Outcome {
    checks: Vec<Check>,
    tables: Vec<Table>,
}

/// Run-wide settings shared by experiment bodies.
struct Context {
    seed: u64,
    linear: Option<LinearOptions>,
}

impl Context {
    /// Laplacian on the masked lattice of `shape`.
    fn laplacian(&self, dim: usize, shape: Shape, h: f64) -> Result<DiscreteOperator> {
        let grid = Arc::new(build_masked_grid(dim, shape, h)?);
        let op = assemble(&grid, &CoefficientSet::laplacian())?;
        Ok(match self.linear {
            Some(o) => op.with_options(o),
            None => op,
        })
    }
}

trait Experiment {
    type Params: Serialize + DeserializeOwned + Default;
    fn check(_p: &Self::Params) -> Result<()> {
        Ok(())
    }
    fn run(ctx: &Context, p: &Self::Params) -> Result<Outcome>;
}

type Driver = fn(Option<&Context>, &Value) -> Result<Option<(Value, Outcome)>>;

/// Parse the parameters, validate them and, given a context, run.
fn drive<E: Experiment>(ctx: Option<&Context>, raw: &Value) -> Result<Option<(Value, Outcome)>> {
    let params: E::Params = match raw {
        Value::Null => E::Params::default(),
        v => serde_json::from_value(v.clone()).map_err(|e| Error::config("params", e.to_string()))?,
    };
    E::check(&params)?;
    let Some(ctx) = ctx else { return Ok(None) };
    let out = E::run(ctx, &params)?;
    Ok(Some((serde_json::to_value(&params)?, out)))
}

struct Entry {
    info: ExperimentInfo,
    drive: Driver,
}

const fn info(id: &'static str, criterion: u8, module: &'static str, summary: &'static str, topic: &'static str) -> ExperimentInfo {
    ExperimentInfo { id, criterion, module, summary, topic }
}

static ENTRIES: [Entry; 12] = [
    Entry {
        info: info(
            "explicit-profiles",
            1,
            "radial-lab",
            "Radial ODE residuals of the explicit singular profiles c r^(-2/(q-1))",
            "explicit isolated singular solutions of absorption and source equations",
        ),
        drive: drive::<profiles::ExplicitProfiles>,
    },
    Entry {
        info: info(
            "green-oracle",
            2,
            "elliptic-core",
            "Grid Green function of the unit ball against the method of images",
            "Green potential of a Dirac mass",
        ),
        drive: drive::<potentials::GreenOracle>,
    },
    Entry {
        info: info(
            "dichotomy",
            3,
            "radial-lab",
            "Backward radial shots classified as strong, weak or regular singularities",
            "isolated singularities: strong/weak dichotomy for subcritical absorption",
        ),
        drive: drive::<profiles::Dichotomy>,
    },
    Entry {
        info: info(
            "relaxation-2d",
            4,
            "absorption-solver",
            "Recovered atom mass of e^u - 1 in the disk clips at 4pi/a",
            "relaxation of supercritical atoms for exponential absorption in the plane",
        ),
        drive: drive::<relaxation::Relaxation2d>,
    },
    Entry {
        info: info(
            "interior-collapse",
            5,
            "absorption-solver",
            "L1 norm of solutions with mollified Dirac data collapses for critical power absorption",
            "nonexistence for point data at and above the interior critical exponent",
        ),
        drive: drive::<relaxation::InteriorCollapse>,
    },
    Entry {
        info: info(
            "sigma-threshold",
            6,
            "source-solver",
            "Source threshold from C0 versus theta scan, and monotone iteration below/above it",
            "existence threshold for the source problem with measure data",
        ),
        drive: drive::<solvers::SigmaThreshold>,
    },
    Entry {
        info: info(
            "boundary-exponent",
            7,
            "trace-lab",
            "Boundary Dirac trace atom, normal-ray slope and supercritical trace collapse in the disk",
            "boundary critical exponent (n+1)/(n-1) and boundary traces",
        ),
        drive: drive::<solvers::BoundaryExponent>,
    },
    Entry {
        info: info(
            "cap-eigen",
            8,
            "radial-lab",
            "Existence of positive cap eigenfunctions against q < (n+1)/(n-1)",
            "separable boundary singularities and the spherical cap problem",
        ),
        drive: drive::<profiles::CapEigen>,
    },
    Entry {
        info: info(
            "marcinkiewicz",
            9,
            "measure-model",
            "Weak-Lp embedding margins and weak norms of Green and Poisson potentials",
            "Marcinkiewicz estimates for potentials of measures",
        ),
        drive: drive::<potentials::Marcinkiewicz>,
    },
    Entry {
        info: info(
            "kernel-estimates",
            10,
            "elliptic-core",
            "Sampled two-sided Green/Poisson bounds, 3-G inequality and kernel equivalence",
            "pointwise estimates of Green and Poisson kernels",
        ),
        drive: drive::<potentials::KernelEstimates>,
    },
    Entry {
        info: info(
            "capacity-scaling",
            11,
            "capacity-lab",
            "Point capacity under refinement in n = 3 and n = 5, and removability against collapse",
            "Bessel capacities and removable point singularities",
        ),
        drive: drive::<potentials::CapacityScaling>,
    },
    Entry {
        info: info(
            "order-stability",
            12,
            "absorption-solver",
            "Comparison principle on random ordered pairs, a-priori bound, conformal energy drift, reruns",
            "comparison principle, a-priori estimates and the conformal first integral",
        ),
        drive: drive::<solvers::OrderStability>,
    },
];

/// Registered experiments in criterion order.
pub fn catalog() -> Vec<ExperimentInfo> {
    ENTRIES.iter().map(|e| e.info).collect()
}

fn entry(id: &str) -> Result<&'static Entry> {
    ENTRIES.iter().find(|e| e.info.id == id).ok_or_else(|| {
        let known: Vec<&str> = ENTRIES.iter().map(|e| e.info.id).collect();
        Error::config("id", format!("unknown experiment {id:?}; known: {}", known.join(", ")))
    })
}

/// Run an experiment; artifacts are written to `out_dir` when it is set.
pub fn run(config: &ExperimentConfig) -> Result<Artifacts> {
    config.validate()?;
    let e = entry(&config.id)?;
    let ctx = Context { seed: config.seed, linear: config.linear };
    let (params, out) = (e.drive)(Some(&ctx), &config.params)?.expect("a context was supplied");
    let passed = out.checks.iter().all(|c| c.passed);
    let artifacts = Artifacts {
        report: Report {
            schema: SCHEMA_VERSION,
            id: e.info.id.to_string(),
            criterion: e.info.criterion,
            module: e.info.module.to_string(),
            seed: config.seed,
            params,
            checks: out.checks,
            passed,
        },
        tables: out.tables,
    };
    if let Some(dir) = &config.out_dir {
        artifacts.write(dir)?;
    }
    Ok(artifacts)
}

/// Size the global worker pool used by parallel sweeps. Only the first call takes effect.
pub fn configure_jobs(jobs: usize) -> Result<()> {
    if jobs == 0 {
        return Err(Error::config("jobs", "must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| Error::config("jobs", e.to_string()))
}

fn require(ok: bool, field: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("params.{field}"), message))
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    !v.is_empty() && v.windows(2).all(|w| w[1] < w[0]) && v.iter().all(|x| *x > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_covers_every_criterion_once() {
        let c = catalog();
        assert!(c.len() >= 12);
        let mut crit: Vec<u8> = c.iter().map(|e| e.criterion).collect();
        crit.sort();
        assert_eq!(crit, (1..=12).collect::<Vec<u8>>());
        let find = |id: &str| c.iter().find(|e| e.id == id).unwrap().module;
        assert_eq!(find("sigma-threshold"), "source-solver");
        assert_eq!(find("cap-eigen"), "radial-lab");
    }

    #[test]
    fn defaults_validate() {
        for e in catalog() {
            ExperimentConfig::new(e.id).validate().unwrap();
        }
    }

    #[test]
    fn config_errors_name_their_location() {
        let err = ExperimentConfig::from_json("{\"schema\": 1, \"id\": \"nope\"}").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "id"), "{err}");
        let err = ExperimentConfig::from_json("{\n  \"schema\": 1,\n  \"id\": \"dichotomy\",,\n}").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field.starts_with("line 3")), "{err}");
        let err = ExperimentConfig::from_json("{\"schema\": 2, \"id\": \"dichotomy\"}").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "schema"));
        let err = ExperimentConfig::from_json("{\"schema\": 1, \"id\": \"dichotomy\", \"params\": {\"pts\": 3}}")
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "params"), "{err}");
        let err = ExperimentConfig::from_json("{\"schema\": 1, \"id\": \"dichotomy\", \"params\": {\"points\": 0}}")
            .unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "params.points"), "{err}");
        assert!(run(&ExperimentConfig::new("unknown-id")).is_err());
    }

    #[test]
    fn seed_override() {
        let mut c = ExperimentConfig::new("dichotomy").with_seed(3);
        c.override_seed(None).unwrap();
        assert_eq!(c.seed, 3);
        c.override_seed(Some(" 42 ")).unwrap();
        assert_eq!(c.seed, 42);
        assert!(c.override_seed(Some("-1")).is_err());
    }

    #[test]
    fn checks_and_tables_render() {
        assert!(Check::relative("x", 1.04, 1.0, 0.05).passed);
        assert!(!Check::relative("x", 1.06, 1.0, 0.05).passed);
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed);
        assert!(Check::holds("x", true).passed);
        let mut t = Table::new("t", &["a", "b", "c"]);
        t.push(vec![0.1.into(), 3usize.into(), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b,c\n1.0000000000000001e-1,3,\"x,y\"\n");
    }

    #[test]
    fn explicit_profiles_run_and_write() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new("explicit-profiles");
        cfg.out_dir = Some(dir.path().to_path_buf());
        let a = run(&cfg).unwrap();
        assert!(a.passed());
        let json = std::fs::read_to_string(dir.path().join("explicit-profiles.json")).unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a.report);
        let csv = std::fs::read_to_string(dir.path().join("explicit-profiles-residuals.csv")).unwrap();
        assert_eq!(csv, a.tables[0].to_csv().unwrap());
    }
}
