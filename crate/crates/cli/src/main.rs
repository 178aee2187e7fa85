//! `melab`: runs catalog experiments and individual solves, writing CSV tables
//! and JSON reports.
//!
//! Exit status is 0 on success, 1 on any error and 2 when `--check` is given
//! and a verdict fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod parse;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use melab::absorption::{radial_relaxation_sweep, solve_absorption, AbsorptionOptions, RadialRelaxation, Schedule, Verdict};
use melab::capacity::{capacity_scaling_study, sobolev_capacity, CapacityProblem, CompactSet};
use melab::elliptic::{assemble, ball_green_closed_form, green_potential, CoefficientSet, DiscreteOperator};
use melab::experiments::{self, catalog, Artifacts, ExperimentConfig, Table};
use melab::grid::{build_masked_grid, GridFunction, Shape};
use melab::linalg::LinearOptions;
use melab::measure::MeasureData;
use melab::nonlinearity::Nonlinearity;
use melab::source::{estimate_c0, sigma_threshold, solve_source, SourceConfig, SourceOptions};
use melab::trace::{classify_boundary, trace_measure};

use parse::{Numbers, SetSpec, WeightedPoint};

#[derive(Parser)]
#[command(name = "melab", version, about = "Numerical laboratory for semilinear elliptic equations with measure data")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Exit with status 2 when a verdict fails.
    #[arg(long, global = true)]
    check: bool,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Relative residual target of linear solves.
    #[arg(long, global = true)]
    lin_tol: Option<f64>,
    /// Iteration cap of linear solves.
    #[arg(long, global = true)]
    lin_maxiter: Option<usize>,
}

impl Global {
    fn linear(&self) -> Result<Option<LinearOptions>> {
        if self.lin_tol.is_none() && self.lin_maxiter.is_none() {
            return Ok(None);
        }
        let base = LinearOptions::default();
        let o = LinearOptions { tol: self.lin_tol.unwrap_or(base.tol), max_iter: self.lin_maxiter.or(base.max_iter), ..base };
        if !(o.tol > 0.0 && o.tol < 1.0) {
            bail!("--lin-tol must lie in (0, 1), got {}", o.tol);
        }
        if o.max_iter == Some(0) {
            bail!("--lin-maxiter must be positive");
        }
        Ok(Some(o))
    }
}

#[derive(Subcommand)]
enum Command {
    /// List the registered experiments.
    List {
        /// Print the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run one experiment from a JSON config file or by id.
    Run(RunArgs),
    /// Run every registered experiment with its default parameters.
    CheckAll {
        /// Directory for reports and tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Green potential of a measure, compared with the closed form on the unit disk or ball.
    Green(GreenArgs),
    /// Solve the absorption problem `-Δu + g(u) = λ`, `u = μ` on the boundary.
    SolveAbsorption(AbsorptionArgs),
    /// Solve the source problem `-Δu = u^q + σλ` by monotone iteration.
    SolveSource(SourceArgs),
    /// Radial relaxation sweep of a point mass by truncation or mollification.
    Sweep(SweepArgs),
    /// Backward radial shots classified by the strong/weak dichotomy.
    Radial(RadialArgs),
    /// Sobolev capacity of a compact set under lattice refinement.
    Capacity(CapacityArgs),
    /// Boundary trace of a disk solution read from CSV.
    Trace(TraceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(required_unless_present = "id", conflicts_with = "id")]
    config: Option<PathBuf>,
    /// Experiment id, run with default parameters unless `--params` is given.
    #[arg(long)]
    id: Option<String>,
    /// Parameter overrides as a JSON object.
    #[arg(long, requires = "id")]
    params: Option<String>,
    /// Directory for reports and tables; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// disk, ball or rectangle:lo1,lo2[,lo3]:hi1,hi2[,hi3].
    #[arg(long, default_value = "disk", value_parser = parse::shape)]
    shape: Shape,
    /// Lattice spacing, e.g. 1/32.
    #[arg(long, value_parser = parse::number)]
    h: f64,
}

impl GridArgs {
    fn operator(&self, linear: Option<LinearOptions>) -> Result<DiscreteOperator> {
        let grid = Arc::new(build_masked_grid(self.dim, self.shape.clone(), self.h)?);
        let op = assemble(&grid, &CoefficientSet::laplacian())?;
        Ok(match linear {
            Some(o) => op.with_options(o),
            None => op,
        })
    }
}

#[derive(Args)]
struct MeasureArgs {
    /// Interior point mass `x,y[,z]:weight`; repeatable.
    #[arg(long = "atom", value_parser = parse::weighted_point)]
    atoms: Vec<WeightedPoint>,
    /// Boundary point mass `x,y[,z]:weight`; repeatable.
    #[arg(long = "boundary-atom", value_parser = parse::weighted_point)]
    boundary_atoms: Vec<WeightedPoint>,
    /// JSON file holding a measure; point masses are added to it.
    #[arg(long)]
    measure: Option<PathBuf>,
}

impl MeasureArgs {
    fn build(&self, shape: &Shape, dim: usize) -> Result<MeasureData> {
        let mut m = match &self.measure {
            Some(path) => serde_json::from_str(&read(path)?).with_context(|| format!("parsing measure {}", path.display()))?,
            None => MeasureData::zero(),
        };
        for (x, w) in &self.atoms {
            check_dim(x, dim)?;
            m = m.add(&MeasureData::dirac(shape, x, *w)?);
        }
        for (a, w) in &self.boundary_atoms {
            check_dim(a, dim)?;
            m = m.add(&MeasureData::boundary_dirac(shape, a, *w)?);
        }
        Ok(m)
    }

    fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.boundary_atoms.is_empty() && self.measure.is_none()
    }
}

#[derive(Args)]
struct GreenArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Defaults to a unit atom at the origin.
    #[command(flatten)]
    measure: MeasureArgs,
    /// Grid function CSV of the potential.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comparison table against the closed form (single interior atom in the unit disk or ball).
    #[arg(long)]
    oracle: Option<PathBuf>,
    /// Distance band `lo,hi` from the atom over which the error is measured.
    #[arg(long, value_parser = parse::list, default_value = "0.2,0.8")]
    band: Numbers,
    /// Largest admissible relative error in the band.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
}

#[derive(Args)]
struct AbsorptionArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Nonlinearity: power:q=.., exp:a=.. or expodd:a=...
    #[arg(long, default_value = "power:q=2")]
    nl: String,
    #[command(flatten)]
    measure: MeasureArgs,
    /// Increasing truncation levels of g.
    #[arg(long, value_parser = parse::list)]
    truncation: Option<Numbers>,
    /// Relative tolerance of the Newton correction.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Also solve from the lower and upper monotone starts.
    #[arg(long)]
    bracket: bool,
    /// Grid function CSV of the solution.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SourceArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Absolute scale σ of the data.
    #[arg(long, value_parser = parse::number, conflicts_with = "sigma_factor")]
    sigma: Option<f64>,
    /// Scale σ as a multiple of the estimated threshold σ₀.
    #[arg(long, value_parser = parse::number)]
    sigma_factor: Option<f64>,
    /// Defaults to a unit atom at the origin.
    #[command(flatten)]
    measure: MeasureArgs,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Grid function CSV of the solution.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Space dimension of the unit ball.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value = "exp:a=1")]
    nl: String,
    /// Atom mass, e.g. 8pi.
    #[arg(long, value_parser = parse::number)]
    mass: f64,
    /// Increasing truncation levels.
    #[arg(long, value_parser = parse::list, required_unless_present = "widths", conflicts_with = "widths")]
    truncation: Option<Numbers>,
    /// Decreasing mollification radii.
    #[arg(long, value_parser = parse::list)]
    widths: Option<Numbers>,
    #[arg(long, default_value_t = 3000)]
    cells: usize,
    #[arg(long, value_parser = parse::number, default_value = "1e-9")]
    r_min: f64,
    /// Radius at which the flux is read.
    #[arg(long, value_parser = parse::number, default_value = "0.5")]
    probe: f64,
    /// Clip core radius for truncation stages.
    #[arg(long, value_parser = parse::number, default_value = "0")]
    core: f64,
    /// Stage table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RadialArgs {
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, value_parser = parse::number, default_value = "1e-5")]
    r_end: f64,
    /// Directory for the report and shot table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Derivative order, 1 or 2.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// point[@x,..] or ball:r[@x,..].
    #[arg(long, value_parser = parse::set, default_value = "point")]
    set: SetSpec,
    /// Strictly decreasing spacings, e.g. 1/8,1/16,1/32.
    #[arg(long, value_parser = parse::list, required = true)]
    h_list: Numbers,
    /// Half-width of the enclosing cube.
    #[arg(long)]
    half_width: Option<f64>,
    /// Scaling table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Grid function CSV of a solution on the disk.
    #[arg(long)]
    solution: PathBuf,
    /// Spacing of the grid the solution lives on.
    #[arg(long, value_parser = parse::number)]
    h: f64,
    /// Two slice levels `t1,t2` for the Richardson extrapolation.
    #[arg(long, value_parser = parse::list)]
    t_list: Numbers,
    /// Nonlinearity used to classify boundary nodes before extracting atoms.
    #[arg(long)]
    nl: Option<String>,
    /// Probe radius of the classification; must exceed 8h.
    #[arg(long, value_parser = parse::number, default_value = "0.5")]
    r_probe: f64,
    /// Trace table CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if cli.global.check => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Returns the verdict of the command.
fn execute(cli: &Cli) -> Result<bool> {
    if let Some(jobs) = cli.global.jobs {
        experiments::configure_jobs(jobs)?;
    }
    let linear = cli.global.linear()?;
    match &cli.command {
        Command::List { json } => list(*json),
        Command::Run(a) => run(a, linear),
        Command::CheckAll { out } => check_all(out.as_deref(), linear),
        Command::Green(a) => green(a, linear),
        Command::SolveAbsorption(a) => absorption(a, linear),
        Command::SolveSource(a) => source(a, linear),
        Command::Sweep(a) => sweep(a),
        Command::Radial(a) => radial(a, linear),
        Command::Capacity(a) => capacity(a),
        Command::Trace(a) => trace(a),
    }
}

fn list(json: bool) -> Result<bool> {
    let entries = catalog();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries)?);
    } else {
        for e in entries {
            println!("{:<20} {:>2}  {:<18} {}", e.id, e.criterion, e.module, e.summary);
        }
    }
    Ok(true)
}

fn run(a: &RunArgs, linear: Option<LinearOptions>) -> Result<bool> {
    let mut config = match (&a.config, &a.id) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(id)) => {
            let params = match &a.params {
                Some(p) => serde_json::from_str(p).context("parsing --params")?,
                None => serde_json::Value::Null,
            };
            ExperimentConfig::new(id).with_params(params)
        }
        (None, None) => bail!("either a config file or --id is required"),
    };
    config.apply_env()?;
    if a.out.is_some() {
        config.out_dir = a.out.clone();
    }
    if linear.is_some() {
        config.linear = linear;
    }
    let artifacts = experiments::run(&config)?;
    print_report(&artifacts)?;
    Ok(artifacts.passed())
}

fn check_all(out: Option<&Path>, linear: Option<LinearOptions>) -> Result<bool> {
    let mut all = true;
    for e in catalog() {
        let mut config = ExperimentConfig::new(e.id);
        config.apply_env()?;
        config.out_dir = out.map(Path::to_path_buf);
        config.linear = linear;
        let artifacts = experiments::run(&config).with_context(|| format!("experiment {}", e.id))?;
        let passed = artifacts.passed();
        all &= passed;
        println!("{} {:>2} {}", if passed { "PASS" } else { "FAIL" }, e.criterion, e.id);
        for c in artifacts.report.failed_checks() {
            println!("     {}", c.describe());
        }
    }
    Ok(all)
}

fn print_report(a: &Artifacts) -> Result<()> {
    print!("{}", a.report.to_json()?);
    Ok(())
}

fn green(a: &GreenArgs, linear: Option<LinearOptions>) -> Result<bool> {
    let g = &a.grid;
    let op = g.operator(linear)?;
    let lambda = if a.measure.is_empty() {
        MeasureData::dirac(&g.shape, &vec![0.0; g.dim], 1.0)?
    } else {
        a.measure.build(&g.shape, g.dim)?
    };
    if lambda.has_boundary() {
        bail!("the Green potential takes interior data only");
    }
    let u = green_potential(&op, &lambda)?;
    if let Some(path) = &a.out {
        write(path, &u.to_csv())?;
    }
    let closed_form = matches!((&g.shape, g.dim), (Shape::Disk, 2) | (Shape::Ball, 3))
        && lambda.atoms.len() == 1
        && lambda.densities.is_empty();
    let [lo, hi] = a.band.0[..] else { bail!("--band takes two values") };
    let mut summary = json!({ "nodes": u.len(), "sup": u.sup_abs() });
    let mut passed = true;
    if closed_form {
        let atom = &lambda.atoms[0];
        let mut table = Table::new("oracle", &["node", "distance", "u_grid", "u_oracle", "rel_err"]);
        let mut worst = 0.0f64;
        for (i, &v) in u.values().iter().enumerate() {
            let x = &u.grid().node_position(i)[..g.dim];
            let r = x.iter().zip(&atom.x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            if r == 0.0 {
                continue;
            }
            let exact = atom.w * ball_green_closed_form(x, &atom.x, g.dim)?;
            let rel = (v - exact).abs() / exact.abs();
            if r >= lo && r <= hi {
                worst = worst.max(rel);
            }
            table.push(vec![i.into(), r.into(), v.into(), exact.into(), rel.into()]);
        }
        if let Some(path) = &a.oracle {
            write(path, &table.to_csv()?)?;
        }
        passed = worst <= a.tol;
        summary["max_rel_err"] = json!(worst);
        summary["tol"] = json!(a.tol);
        summary["passed"] = json!(passed);
    } else if a.oracle.is_some() {
        bail!("the closed form needs a single interior atom in the unit disk (dim 2) or ball (dim 3)");
    }
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(passed)
}

fn absorption(a: &AbsorptionArgs, linear: Option<LinearOptions>) -> Result<bool> {
    let g = &a.grid;
    let nl = Nonlinearity::parse(&a.nl)?;
    let data = a.measure.build(&g.shape, g.dim)?;
    let op = g.operator(linear)?;
    let mut opts = AbsorptionOptions { bracket: a.bracket, ..Default::default() };
    if let Some(t) = &a.truncation {
        opts.truncation = t.0.clone();
    }
    if let Some(t) = a.tol {
        opts.tol = t;
    }
    if let Some(m) = a.max_iter {
        opts.max_iter = m;
    }
    let (u, report) = solve_absorption(&op, &nl, &data.interior(), &data.boundary(), &opts)?;
    if let Some(path) = &a.out {
        write(path, &u.to_csv())?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.converged())
}

fn source(a: &SourceArgs, linear: Option<LinearOptions>) -> Result<bool> {
    let g = &a.grid;
    let lambda = if a.measure.is_empty() {
        MeasureData::dirac(&g.shape, &vec![0.0; g.dim], 1.0)?
    } else {
        a.measure.build(&g.shape, g.dim)?
    };
    let op = g.operator(linear)?;
    let mut summary = json!({ "q": a.q });
    let sigma = match (a.sigma, a.sigma_factor) {
        (Some(s), _) => s,
        (None, factor) => {
            let c0 = estimate_c0(&op, &lambda, a.q)?;
            let s0 = sigma_threshold(a.q, c0)?;
            summary["c0"] = json!(c0);
            summary["sigma0"] = json!(s0);
            factor.unwrap_or(1.0) * s0
        }
    };
    let mut options = SourceOptions::default();
    if let Some(m) = a.max_iter {
        options.max_iter = m;
    }
    let cfg = SourceConfig { q: a.q, sigma, lambda, options };
    cfg.validate()?;
    let (u, report) = solve_source(&op, &cfg)?;
    if let Some(path) = &a.out {
        write(path, &u.to_csv())?;
    }
    summary["sigma"] = json!(sigma);
    summary["report"] = serde_json::to_value(&report)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(report.converged())
}

fn sweep(a: &SweepArgs) -> Result<bool> {
    let schedule = match (&a.truncation, &a.widths) {
        (Some(t), _) => Schedule::Truncation(t.0.clone()),
        (None, Some(w)) => Schedule::Mollification(w.0.clone()),
        (None, None) => bail!("either --truncation or --widths is required"),
    };
    let report = radial_relaxation_sweep(&RadialRelaxation {
        n: a.n,
        nl: Nonlinearity::parse(&a.nl)?,
        mass: a.mass,
        schedule,
        cells: a.cells,
        r_min: a.r_min,
        probe: a.probe,
        core: a.core,
    })?;
    let mut table = Table::new("stages", &["stage", "parameter", "recovered_mass", "l1_norm", "iterations", "verdict"]);
    for (i, s) in report.stages.iter().enumerate() {
        table.push(vec![
            i.into(),
            s.parameter.into(),
            s.mass.into(),
            s.l1_norm.into(),
            s.iterations.into(),
            s.verdict.to_string().into(),
        ]);
    }
    emit(a.out.as_deref(), &table.to_csv()?)?;
    if a.out.is_some() {
        println!("{}", json!({ "limit": report.limit, "l1_strictly_decreasing": report.l1_strictly_decreasing() }));
    }
    Ok(report.stages.iter().all(|s| s.verdict == Verdict::Converged))
}

fn radial(a: &RadialArgs, linear: Option<LinearOptions>) -> Result<bool> {
    let params = json!({ "q": a.q, "n": a.n, "points": a.points, "r_end": a.r_end });
    let mut config = ExperimentConfig::new("dichotomy").with_params(params);
    config.apply_env()?;
    config.out_dir = a.out.clone();
    config.linear = linear;
    let artifacts = experiments::run(&config)?;
    print_report(&artifacts)?;
    Ok(artifacts.passed())
}

fn capacity(a: &CapacityArgs) -> Result<bool> {
    let set = a.set.build(a.n).map_err(anyhow::Error::msg)?;
    let h_list = &a.h_list.0;
    let origin = set == CompactSet::point(a.n) && a.half_width.is_none();
    let (rows, slope) = if origin {
        let s = capacity_scaling_study(a.n, a.m, a.p, h_list)?;
        (s.rows.iter().map(|r| (r.h, r.estimate)).collect::<Vec<_>>(), s.slope)
    } else {
        if h_list.windows(2).any(|w| w[1] >= w[0]) {
            bail!("--h-list must be strictly decreasing");
        }
        let mut rows = Vec::with_capacity(h_list.len());
        for &h in h_list {
            let prob = CapacityProblem { half_width: a.half_width, ..CapacityProblem::new(a.n, a.m, a.p, set.clone(), h) };
            rows.push((h, sobolev_capacity(&prob)?.value));
        }
        let slope = fit_slope(&rows);
        (rows, slope)
    };
    let mut table = Table::new("scaling", &["h", "estimate", "ratio", "log_ratio"]);
    for (i, &(h, v)) in rows.iter().enumerate() {
        let (ratio, log_ratio) = match i.checked_sub(1).map(|j| rows[j]) {
            Some((h0, v0)) => (v / v0, (v / v0).ln() / (h / h0).ln()),
            None => (f64::NAN, f64::NAN),
        };
        table.push(vec![h.into(), v.into(), ratio.into(), log_ratio.into()]);
    }
    emit(a.out.as_deref(), &table.to_csv()?)?;
    if a.out.is_some() {
        println!("{}", json!({ "slope": slope }));
    }
    Ok(rows.iter().all(|(_, v)| v.is_finite()))
}

/// Least-squares slope of `ln v` against `ln h`.
fn fit_slope(rows: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|(h, v)| (h.ln(), v.ln())).collect();
    let k = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / k, b + y / k));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        f64::NAN
    }
}

fn trace(a: &TraceArgs) -> Result<bool> {
    let grid = Arc::new(build_masked_grid(2, Shape::Disk, a.h)?);
    let text = read(&a.solution)?;
    let u = GridFunction::from_csv(grid, &text)?;
    let classification = match &a.nl {
        Some(nl) => Some(classify_boundary(&u, &Nonlinearity::parse(nl)?, a.r_probe)?),
        None => None,
    };
    let tm = trace_measure(&u, &a.t_list.0, classification.as_ref())?;
    emit(a.out.as_deref(), &tm.to_csv())?;
    let summary = json!({
        "regular_mass": tm.regular_mass(),
        "atom_mass": tm.atom_mass(),
        "total_mass": tm.total_mass(),
        "atoms": tm.atoms.len(),
    });
    if a.out.is_some() {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    Ok(tm.total_mass().is_finite())
}

fn check_dim(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        bail!("point {x:?} has {} coordinates, expected {dim}", x.len());
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Write to `path`, or to stdout without one.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
