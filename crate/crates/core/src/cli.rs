//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or unreadable input, 2 infeasible or
//! degenerate parameters, 3 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rustfft::num_complex::Complex64;
use serde_json::{json, Value};

use crate::central_config::{nested_polygon_seed, polygon_config, solve_cc, CcSolveOptions, CentralConfig, CC_TOLERANCE};
use crate::continuation::{continue_branch, verify_asymptotics, BranchPoint, BranchSettings, BranchStatus};
use crate::error::{Error, Result};
use crate::evolution::{
    reconstruct, step_plan, FilamentStepper, FilamentState, PdeStepper, ScalarWave, DEFAULT_SAMPLES,
};
use crate::field::io::{fmt_f64, read_coeffs, write_coeffs};
use crate::field::{Grid2D, SymmetricField, DEFAULT_PADDING, DEFAULT_TRUNCATION};
use crate::residual::ResidualWorkspace;
use crate::spectrum::{
    bifurcation_frequency, certify_gap, resonant_set, OperatorParams, DEFAULT_EPSILON, ZERO_TOLERANCE,
};

/// Relative `--out` paths are resolved against this directory when set.
pub const OUT_DIR_ENV: &str = "VORTEX_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_USAGE,
        Error::Precondition(_) | Error::Infeasible(_) | Error::Degenerate(_) => EXIT_INFEASIBLE,
        Error::SymmetryViolation { .. }
        | Error::Domain { .. }
        | Error::Divergence { .. }
        | Error::Continuation { .. }
        | Error::Singularity { .. }
        | Error::Collision { .. } => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Parser)]
#[command(name = "vortex-filaments", version, about = "Central configurations, bifurcating standing waves and filament dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Regular or nested-polygon central configuration.
    Cc(CcArgs),
    /// Bifurcation frequency, resonant set and spectral gap.
    Spectrum(SpectrumArgs),
    /// Continue a standing-wave branch from its bifurcation point.
    Branch(BranchArgs),
    /// Integrate the scalar equation or the filament system.
    Evolve(EvolveArgs),
    /// Filament curves of a computed standing wave at time t.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Args)]
pub struct CcArgs {
    /// Number of outer filaments.
    #[arg(long)]
    pub n: usize,
    /// Circulation magnitude of the central filament.
    #[arg(long)]
    pub kappa: f64,
    /// Ring radii of a nested-polygon seed.
    #[arg(long, value_delimiter = ',', requires = "offsets")]
    pub nested: Option<Vec<f64>>,
    /// Angular offset of each ring.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "nested")]
    pub offsets: Option<Vec<f64>>,
    #[arg(long, default_value_t = CC_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub q: i64,
    /// Bifurcation wavenumber; ω is then ω₀.
    #[arg(long, conflicts_with = "omega", required_unless_present = "omega")]
    pub k0: Option<i64>,
    /// Arbitrary frequency.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Scan box `J,K` over `|j| ≤ J`, `|k| ≤ K`.
    #[arg(long, default_value = "400,80", value_parser = parse_pair)]
    pub scan: (i64, i64),
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BranchArgs {
    #[arg(long)]
    pub q: i64,
    #[arg(long)]
    pub k0: i64,
    #[arg(long, default_value_t = 5e-4)]
    pub db: f64,
    #[arg(long, default_value_t = 2e-2)]
    pub bmax: f64,
    /// Truncation `J,K`.
    #[arg(long, value_parser = parse_pair)]
    pub trunc: Option<(i64, i64)>,
    #[arg(long, default_value_t = crate::continuation::BRANCH_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = 25)]
    pub max_iter: usize,
    #[arg(long, default_value_t = DEFAULT_PADDING)]
    pub padding: usize,
    /// Write each point's coefficients as `point_NNNN.csv` into this directory.
    #[arg(long)]
    pub dump_fields: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Integrate the scalar equation.
    #[arg(long, conflicts_with = "filaments", required_unless_present = "filaments")]
    pub pde: bool,
    /// Integrate the filament system.
    #[arg(long)]
    pub filaments: bool,
    /// `constant:A`, `file:PATH` (scalar, columns `s,re,im`),
    /// `homographic:poly,N,KAPPA`, or `file:PATH` (filaments, columns
    /// `filament,t,s,re,im`, with `--config`).
    #[arg(long)]
    pub init: String,
    /// Central configuration JSON for filament data read from a file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dt: f64,
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Emit a snapshot every this many steps (default: first and last only).
    #[arg(long)]
    pub every: Option<usize>,
    /// Write the `t,mass,energy` series here.
    #[arg(long)]
    pub invariants: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// JSON-lines output of `branch`, run with `--dump-fields`.
    #[arg(long)]
    pub branch: PathBuf,
    #[arg(long)]
    pub point: usize,
    /// Central configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(i64, i64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.trim().parse().map_err(|_| format!("bad integer {a:?}"))?,
            b.trim().parse().map_err(|_| format!("bad integer {b:?}"))?,
        )),
        _ => Err(format!("expected J,K, got {s:?}")),
    }
}

/// Runs the CLI with the process environment and standard streams.
pub fn main_with_env() -> i32 {
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    run(std::env::args_os(), out_dir, &mut std::io::stdout(), &mut std::io::stderr())
}

/// Parses `args` (program name first) and executes the command.
pub fn run(
    args: impl IntoIterator<Item = impl Into<OsString> + Clone>,
    out_dir: Option<PathBuf>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    let ctx = Context { out_dir, stderr };
    match dispatch(cli.command, ctx, stdout) {
        Ok(code) => code,
        Err((e, stderr)) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

struct Context<'a> {
    out_dir: Option<PathBuf>,
    stderr: &'a mut dyn Write,
}

impl Context<'_> {
    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    fn sink<'w>(&self, out: &Option<PathBuf>, stdout: &'w mut dyn Write) -> Result<Box<dyn Write + 'w>> {
        Ok(match out {
            Some(p) => {
                let p = self.resolve(p);
                if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(parent)?;
                }
                Box::new(std::io::BufWriter::new(File::create(p)?))
            }
            None => Box::new(stdout),
        })
    }
}

fn dispatch<'a>(cmd: Command, mut ctx: Context<'a>, stdout: &mut dyn Write) -> std::result::Result<i32, (Error, &'a mut dyn Write)> {
    let result = match cmd {
        Command::Cc(a) => cmd_cc(&a, &mut ctx, stdout),
        Command::Spectrum(a) => cmd_spectrum(&a, &mut ctx, stdout),
        Command::Branch(a) => cmd_branch(&a, &mut ctx, stdout),
        Command::Evolve(a) => cmd_evolve(&a, &mut ctx, stdout),
        Command::Reconstruct(a) => cmd_reconstruct(&a, &mut ctx, stdout),
    };
    result.map_err(|e| (e, ctx.stderr))
}

fn cmd_cc(a: &CcArgs, ctx: &mut Context, stdout: &mut dyn Write) -> Result<i32> {
    let settings = json!({
        "n": a.n, "kappa": a.kappa, "nested": a.nested, "offsets": a.offsets,
        "tol": a.tol, "max_iter": a.max_iter,
    });
    let (config, iterations) = match (&a.nested, &a.offsets) {
        (Some(radii), Some(offsets)) => {
            if radii.is_empty() || !a.n.is_multiple_of(radii.len()) {
                return Err(Error::Config(format!(
                    "n = {} is not a multiple of the ring count {}",
                    a.n,
                    radii.len()
                )));
            }
            let seed = nested_polygon_seed(a.n / radii.len(), radii, offsets)?;
            let sol = solve_cc(&seed, a.kappa, CcSolveOptions { tol: a.tol, max_iter: a.max_iter })?;
            (sol.config, sol.iterations)
        }
        _ => (polygon_config(a.n, a.kappa)?, 0),
    };
    let residual = config.residual()?;
    let mut doc = serde_json::to_value(&config)?;
    doc["residual"] = json!(residual);
    doc["iterations"] = json!(iterations);
    doc["settings"] = settings;
    let mut out = ctx.sink(&a.out, stdout)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    out.flush()?;
    if residual > a.tol {
        writeln!(ctx.stderr, "error: residual {residual:.3e} exceeds tolerance {:.3e}", a.tol)?;
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

fn cmd_spectrum(a: &SpectrumArgs, ctx: &mut Context, stdout: &mut dyn Write) -> Result<i32> {
    let (scan_j, scan_k) = a.scan;
    if scan_j < 0 || scan_k < 0 {
        return Err(Error::Config("scan bounds must be non-negative".into()));
    }
    let mut doc = json!({
        "settings": {
            "q": a.q, "k0": a.k0, "omega": a.omega, "scan": [scan_j, scan_k],
            "epsilon": a.epsilon, "zero_tolerance": ZERO_TOLERANCE,
        }
    });
    let omega = match (a.k0, a.omega) {
        (Some(k0), _) => {
            let bif = bifurcation_frequency(a.q, k0)?;
            doc["k0"] = json!(k0);
            doc["j0"] = json!(bif.j0);
            doc["omega0"] = json!(bif.omega0);
            bif.omega0
        }
        (None, Some(w)) => w,
        (None, None) => return Err(Error::Config("one of --k0 or --omega is required".into())),
    };
    let params = OperatorParams::new(a.q, omega)?.with_epsilon(a.epsilon);
    let resonant = resonant_set(&params, scan_j, scan_k);
    let sites: Vec<(i64, i64)> = resonant.iter().map(|r| (r.j, r.k)).collect();
    doc["omega"] = json!(omega);
    doc["resonant"] = json!(sites.iter().map(|(j, k)| [j, k]).collect::<Vec<_>>());
    doc["resonant_modes"] = serde_json::to_value(&resonant)?;
    match certify_gap(&params, &sites, scan_j, scan_k) {
        Ok(cert) => doc["gap"] = serde_json::to_value(cert)?,
        Err(e @ Error::Precondition(_)) => {
            doc["gap"] = Value::Null;
            doc["gap_error"] = json!(e.to_string());
        }
        Err(e) => return Err(e),
    }
    let mut out = ctx.sink(&a.out, stdout)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn truncation(pair: Option<(i64, i64)>) -> Result<Grid2D> {
    let (j, k) = pair.unwrap_or((DEFAULT_TRUNCATION as i64, DEFAULT_TRUNCATION as i64));
    if j < 0 || k < 0 {
        return Err(Error::Config("truncation must be non-negative".into()));
    }
    Grid2D::for_truncation(j as usize, k as usize)
}

fn cmd_branch(a: &BranchArgs, ctx: &mut Context, stdout: &mut dyn Write) -> Result<i32> {
    let bif = bifurcation_frequency(a.q, a.k0)?;
    let grid = truncation(a.trunc)?;
    let settings = BranchSettings {
        db: a.db,
        b_max: a.bmax,
        tol: a.tol,
        max_iter: a.max_iter,
        db_min: a.db / 64.0,
    };
    settings.validate()?;
    let ws = ResidualWorkspace::new(grid, a.q, a.padding)?;
    let branch = continue_branch(&bif, settings, &ws)?;

    let dump = a.dump_fields.as_ref().map(|d| ctx.resolve(d));
    if let Some(dir) = &dump {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = ctx.sink(&a.out, stdout)?;
    let header = json!({
        "settings": {
            "q": a.q, "k0": a.k0, "truncation": [grid.j_max(), grid.k_max()], "padding": a.padding,
            "db": settings.db, "b_max": settings.b_max, "tol": settings.tol,
            "max_iter": settings.max_iter, "db_min": settings.db_min,
        },
        "bifurcation": bif,
    });
    writeln!(out, "{header}")?;
    for (i, p) in branch.points.iter().enumerate() {
        let mut line = json!({
            "index": i, "b": p.b, "omega": p.omega, "residual": p.residual_norm, "iters": p.newton_iters,
        });
        if let Some(dir) = &dump {
            let path = dir.join(format!("point_{i:04}.csv"));
            write_coeffs(&p.v.embed(), std::io::BufWriter::new(File::create(&path)?))?;
            line["field"] = json!(path.to_string_lossy());
        }
        writeln!(out, "{line}")?;
    }
    let mut tail = json!({ "status": branch.status });
    match verify_asymptotics(&branch, &ws) {
        Ok(report) => tail["report"] = serde_json::to_value(report)?,
        Err(e @ Error::Precondition(_)) => {
            tail["report"] = Value::Null;
            tail["report_error"] = json!(e.to_string());
        }
        Err(e) => return Err(e),
    }
    writeln!(out, "{tail}")?;
    out.flush()?;
    if let BranchStatus::Terminated { at_b, reason } = &branch.status {
        writeln!(ctx.stderr, "error: continuation stopped at b = {at_b:e}: {reason}")?;
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

/// A stored branch: bifurcation data, truncation and the point records.
struct StoredBranch {
    q: i64,
    k0: i64,
    grid: Grid2D,
    points: Vec<Value>,
    base: PathBuf,
}

fn read_branch(path: &Path) -> Result<StoredBranch> {
    let reader = BufReader::new(File::open(path)?);
    let mut header: Option<Value> = None;
    let mut points = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line)?;
        if v.get("settings").is_some() {
            header = Some(v);
        } else if v.get("b").is_some() {
            points.push(v);
        }
    }
    let header = header.ok_or_else(|| Error::Parse("branch file has no settings header".into()))?;
    let s = &header["settings"];
    let int = |v: &Value, what: &str| v.as_i64().ok_or_else(|| Error::Parse(format!("header lacks {what}")));
    let trunc = s["truncation"]
        .as_array()
        .filter(|t| t.len() == 2)
        .ok_or_else(|| Error::Parse("header lacks truncation".into()))?;
    let grid = Grid2D::for_truncation(int(&trunc[0], "J")? as usize, int(&trunc[1], "K")? as usize)?;
    Ok(StoredBranch {
        q: int(&s["q"], "q")?,
        k0: int(&s["k0"], "k0")?,
        grid,
        points,
        base: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

fn load_point(stored: &StoredBranch, index: usize) -> Result<BranchPoint> {
    let rec = stored.points.get(index).ok_or_else(|| {
        Error::Config(format!("point {index} out of range (branch has {})", stored.points.len()))
    })?;
    let num = |key: &str| rec[key].as_f64().ok_or_else(|| Error::Parse(format!("point lacks {key}")));
    let (b, omega) = (num("b")?, num("omega")?);
    let v = match rec.get("field").and_then(Value::as_str) {
        Some(f) => {
            let direct = PathBuf::from(f);
            let path = if direct.exists() { direct } else { stored.base.join(f) };
            let coeffs = read_coeffs(BufReader::new(File::open(path)?), Some(stored.grid))?;
            SymmetricField::restrict(&coeffs)?
        }
        None if b == 0.0 => SymmetricField::zeros(stored.grid),
        None => {
            return Err(Error::Config(
                "branch was written without --dump-fields; only the trivial point can be reconstructed".into(),
            ))
        }
    };
    Ok(BranchPoint {
        b,
        omega,
        v,
        residual_norm: num("residual")?,
        newton_iters: rec["iters"].as_u64().unwrap_or(0) as usize,
    })
}

fn read_config(path: &Path) -> Result<CentralConfig> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

const CURVE_HEADER: [&str; 5] = ["filament", "t", "s", "re", "im"];

fn write_curves(w: &mut csv::Writer<impl Write>, t: f64, curves: &[Vec<Complex64>]) -> Result<()> {
    for (j, c) in curves.iter().enumerate() {
        let ns = c.len();
        for (m, u) in c.iter().enumerate() {
            let s = 2.0 * std::f64::consts::PI * m as f64 / ns as f64;
            w.write_record([j.to_string(), fmt_f64(t), fmt_f64(s), fmt_f64(u.re), fmt_f64(u.im)])?;
        }
    }
    Ok(())
}

fn cmd_reconstruct(a: &ReconstructArgs, ctx: &mut Context, stdout: &mut dyn Write) -> Result<i32> {
    let stored = read_branch(&a.branch)?;
    let bif = bifurcation_frequency(stored.q, stored.k0)?;
    let bp = load_point(&stored, a.point)?;
    let cfg = read_config(&a.config)?;
    let curves = reconstruct(&bp, &bif, &cfg, a.t, a.samples)?;
    writeln!(
        ctx.stderr,
        "{}",
        json!({"settings": {"branch": a.branch, "point": a.point, "b": bp.b, "omega": bp.omega,
               "q": stored.q, "k0": stored.k0, "t": a.t, "samples": a.samples, "n": cfg.n, "kappa": cfg.kappa}})
    )?;
    let mut w = csv::Writer::from_writer(ctx.sink(&a.out, stdout)?);
    w.write_record(CURVE_HEADER)?;
    write_curves(&mut w, a.t, &curves)?;
    w.flush()?;
    Ok(EXIT_OK)
}

enum Initial {
    Scalar(ScalarWave),
    Filaments { state: FilamentState, homographic: Option<ScalarWave> },
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Config(format!("not a number: {s:?}")))
}

fn read_scalar_file(path: &Path) -> Result<ScalarWave> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["s", "re", "im"] {
        return Err(Error::Parse(format!("expected header s,re,im, found {}", header.join(","))));
    }
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        values.push(Complex64::new(parse_f64(&rec[1])?, parse_f64(&rec[2])?));
    }
    ScalarWave::new(values)
}

fn read_filament_file(path: &Path, cfg: CentralConfig) -> Result<FilamentState> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != CURVE_HEADER {
        return Err(Error::Parse(format!(
            "expected header {}, found {}",
            CURVE_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut curves: Vec<Vec<Complex64>> = vec![Vec::new(); cfg.n + 1];
    let mut time = None;
    for rec in r.records() {
        let rec = rec?;
        let j: usize = rec[0].trim().parse().map_err(|_| Error::Parse(format!("bad filament index {:?}", &rec[0])))?;
        let t = parse_f64(&rec[1])?;
        // Only the first time slice is used.
        if *time.get_or_insert(t) != t {
            continue;
        }
        let c = curves
            .get_mut(j)
            .ok_or_else(|| Error::Parse(format!("filament index {j} exceeds n = {}", cfg.n)))?;
        c.push(Complex64::new(parse_f64(&rec[3])?, parse_f64(&rec[4])?));
    }
    FilamentState::new(cfg, curves, time.unwrap_or(0.0))
}

fn parse_init(a: &EvolveArgs) -> Result<Initial> {
    let (kind, rest) = a
        .init
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("--init {:?}: expected KIND:ARGS", a.init)))?;
    match (kind, a.pde) {
        ("constant", true) => Ok(Initial::Scalar(ScalarWave::constant(
            a.samples,
            Complex64::new(parse_f64(rest)?, 0.0),
        )?)),
        ("file", true) => Ok(Initial::Scalar(read_scalar_file(Path::new(rest))?)),
        ("homographic", false) => {
            let parts: Vec<&str> = rest.split(',').collect();
            let (n, kappa, amp) = match parts.as_slice() {
                ["poly", n, kappa] => (n, kappa, 1.0),
                ["poly", n, kappa, amp] => (n, kappa, parse_f64(amp)?),
                _ => return Err(Error::Config(format!("--init homographic:{rest}: expected poly,N,KAPPA[,A]"))),
            };
            let n: usize = n.trim().parse().map_err(|_| Error::Config(format!("bad filament count {n:?}")))?;
            let cfg = polygon_config(n, parse_f64(kappa)?)?;
            let w = ScalarWave::constant(a.samples, Complex64::new(amp, 0.0))?;
            let state = FilamentState::homographic(cfg, &w)?;
            Ok(Initial::Filaments { state, homographic: Some(w) })
        }
        ("file", false) => {
            let cfg_path = a
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("--init file:PATH with --filaments needs --config".into()))?;
            let state = read_filament_file(Path::new(rest), read_config(cfg_path)?)?;
            Ok(Initial::Filaments { state, homographic: None })
        }
        _ => Err(Error::Config(format!(
            "--init {:?} is not valid with --{}",
            a.init,
            if a.pde { "pde" } else { "filaments" }
        ))),
    }
}

fn cmd_evolve(a: &EvolveArgs, ctx: &mut Context, stdout: &mut dyn Write) -> Result<i32> {
    let (steps, dt) = step_plan(a.horizon, a.dt)?;
    let every = a.every.unwrap_or(steps.max(1));
    if every == 0 {
        return Err(Error::Config("--every must be positive".into()));
    }
    let init = parse_init(a)?;
    let mut settings = json!({
        "mode": if a.pde { "pde" } else { "filaments" }, "init": a.init, "dt": dt,
        "T": a.horizon, "steps": steps, "every": every,
    });

    let mut w = csv::Writer::from_writer(ctx.sink(&a.out, stdout)?);
    w.write_record(CURVE_HEADER)?;
    let mut series: Vec<[f64; 3]> = Vec::new();
    let mut failure: Option<Error> = None;
    match init {
        Initial::Scalar(w0) => {
            settings["samples"] = json!(w0.ns());
            let stepper = PdeStepper::new(w0.ns(), dt)?;
            write_curves(&mut w, 0.0, std::slice::from_ref(&w0.values))?;
            series.push([0.0, w0.mass(), w0.energy()]);
            let mut io_err = None;
            let end = stepper.evolve(&w0, steps, |i, cur| {
                if i % every == 0 || i == steps {
                    let t = i as f64 * dt;
                    if let Err(e) = write_curves(&mut w, t, std::slice::from_ref(&cur.values)) {
                        io_err.get_or_insert(e);
                    }
                    series.push([t, cur.mass(), cur.energy()]);
                }
            });
            if let Some(e) = io_err {
                return Err(e);
            }
            if let Err(e) = end {
                failure = Some(e);
            }
        }
        Initial::Filaments { state, homographic } => {
            settings["samples"] = json!(state.ns());
            settings["n"] = json!(state.config.n);
            settings["kappa"] = json!(state.config.kappa);
            let stepper = FilamentStepper::new(&state.config, state.ns(), dt)?;
            write_curves(&mut w, state.time, &state.curves)?;
            series.push([state.time, state.invariants().1, state.hamiltonian()]);
            let mut io_err = None;
            let end = stepper.evolve(&state, steps, |i, cur| {
                if i % every == 0 || i == steps {
                    if let Err(e) = write_curves(&mut w, cur.time, &cur.curves) {
                        io_err.get_or_insert(e);
                    }
                    series.push([cur.time, cur.invariants().1, cur.hamiltonian()]);
                }
            });
            if let Some(e) = io_err {
                return Err(e);
            }
            match (end, homographic) {
                (Ok(end), Some(w0)) => {
                    let scalar = PdeStepper::new(w0.ns(), dt)?.evolve(&w0, steps, |_, _| {})?;
                    settings["homographic_closure"] = json!(end.homographic_distance(&scalar));
                }
                (Ok(_), None) => {}
                (Err(e), _) => failure = Some(e),
            }
        }
    }
    w.flush()?;
    writeln!(ctx.stderr, "{}", json!({ "settings": settings }))?;
    if let Some(path) = &a.invariants {
        let path = ctx.resolve(path);
        let mut iw = csv::Writer::from_path(path)?;
        iw.write_record(["t", "mass", "energy"])?;
        for [t, m, e] in &series {
            iw.write_record([fmt_f64(*t), fmt_f64(*m), fmt_f64(*e)])?;
        }
        iw.flush()?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(EXIT_OK),
    }
}
