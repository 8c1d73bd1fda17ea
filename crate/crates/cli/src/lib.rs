//! Command-line front end for `kstab`.
//!
//! Every command prints one JSON [`RunReport`] on stdout. Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | completed, including an `UNSTABLE` verdict |
//! | 1 | internal or I/O error |
//! | 2 | usage error |
//! | 3 | malformed input (JSON, rationals, PL functions, example names) |
//! | 4 | half-spaces do not describe a valid polytope |
//! | 5 | polytope is not Delzant |
//! | 6 | numerical failure (point outside `P`, non-convex potential, empty mask) |

use clap::{Args, Parser, Subcommand, ValueEnum};
use kstab::extremal::{check_positivity, futaki_from_l, solve_extremal_affine};
use kstab::io::{self, ExtremalReport, PlJson, PolytopeJson, SimplePlJson};
use kstab::library;
use kstab::plfunc::{pl_terms_of, subdivide};
use kstab::polynomial::PolynomialJson;
use kstab::potential::{
    abreu_residual, crease_jump_integral, kenergy, Convention, PotentialGrid, QuadConfig, ResidualSource,
    SymplecticPotential,
};
use kstab::rational::{self, format_rational, Rational};
use kstab::stability::{search_destabilizer, SearchConfig};
use kstab::{Error as CoreError, Polynomial, Polytope};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
    #[error("polytope is not Delzant")]
    NotDelzant(Box<RunReport>),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::NotDelzant(_) => 5,
            CliError::Usage(_) => 2,
        }
    }
}

fn core_exit_code(e: &CoreError) -> i32 {
    use CoreError::*;
    match e {
        ParseRational(_) | Parse(_) | UnknownExample(_) | EmptyPl | ZeroSlope | CreaseOutside => 3,
        ZeroDimension
        | CountMismatch { .. }
        | DimensionMismatch { .. }
        | ZeroNormal(_)
        | Unbounded
        | Empty
        | LowerDimensional
        | DuplicateFacet { .. }
        | Redundant(_) => 4,
        Singular | OutsideInterior { .. } | NotConvex { .. } | EmptyMask => 6,
        BadHeight | BadParameter(_) => 2,
        Internal(_) => 1,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kstab",
    version,
    about = "Exact toric K-stability checks on Delzant polytopes"
)]
pub struct Cli {
    /// Worker threads (affects running time only, never output).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Include wall-clock timings in the report (makes output run-dependent).
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
#[group(required = true, multiple = false)]
pub struct Input {
    /// Polytope JSON: {"dimension": n, "normals": [[..],..], "offsets": ["p/q",..]}.
    #[arg(long, value_name = "FILE")]
    pub polytope: Option<PathBuf>,
    /// Built-in example: interval, square, simplex, cube, trapezoid(k).
    #[arg(long, value_name = "NAME")]
    pub example: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    #[command(flatten)]
    pub input: Input,
    /// Skip the Delzant requirement (the computations only need the normals).
    #[arg(long)]
    pub allow_non_delzant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Paper,
    GuilleminHalf,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Paper => Convention::Paper,
            ConventionArg::GuilleminHalf => Convention::GuilleminHalf,
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct PotentialArgs {
    /// Normalization of the canonical potential.
    #[arg(long, value_enum, default_value = "paper")]
    pub convention: ConventionArg,
    /// Polynomial added to the canonical potential:
    /// {"nvars": n, "terms": [{"exp": [..], "coef": "p/q"}, ..]}.
    #[arg(long, value_name = "FILE")]
    pub correction: Option<PathBuf>,
}

fn parse_spacing(text: &str) -> std::result::Result<f64, String> {
    let h = match text.parse::<f64>() {
        Ok(h) => h,
        Err(_) => kstab::rational::to_f64(&kstab::rational::parse_rational(text).map_err(|e| e.to_string())?),
    };
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(format!("spacing must be positive, got {text}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResidualMode {
    /// Analytic Hessian of the potential.
    Analytic,
    /// Central differences of the potential sampled on the grid.
    Grid,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the polytope and check the Delzant condition.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Extremal affine function s = rbar + theta and positivity of s on P.
    Extremal {
        #[command(flatten)]
        common: Common,
    },
    /// Exact L(f) and relative Futaki invariant -L(f)/(2 Vol P) of a PL function.
    Futaki {
        #[command(flatten)]
        common: Common,
        /// PL JSON: {"pieces": [{"A": [..], "a": "p/q"}, ..]} or {"a": [..], "c": "p/q"}.
        #[arg(
            long,
            value_name = "FILE",
            conflicts_with = "pl_json",
            required_unless_present = "pl_json"
        )]
        pl: Option<PathBuf>,
        /// PL JSON given inline.
        #[arg(long, value_name = "JSON")]
        pl_json: Option<String>,
    },
    /// Search simple PL functions max{0, <a,x> + c} for destabilizers.
    ///
    /// CSV columns (--emit-csv): direction, best_offset, best_L, best_ratio.
    Search {
        #[command(flatten)]
        common: Common,
        /// Bound on the components of the crease directions.
        #[arg(long, default_value_t = 3)]
        height: u32,
        /// Interpolation nodes per segment (default n + 3).
        #[arg(long)]
        nodes: Option<usize>,
        /// Root refinement tolerance (rational).
        #[arg(long, default_value = "1/1000000000000")]
        tolerance: String,
        /// Write the per-direction CSV here.
        #[arg(long, value_name = "PATH")]
        emit_csv: Option<PathBuf>,
    },
    /// Modified K-energy F(u) = -∫ log det D²u + L(u).
    Kenergy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Target for the quadrature error estimate.
        #[arg(long, default_value_t = 1e-7)]
        quad_tol: f64,
        /// Cap on quadrature cells per simplex.
        #[arg(long, default_value_t = 20_000)]
        max_cells: usize,
        /// Also evaluate the crease jump integral of this PL function.
        #[arg(long, value_name = "FILE")]
        jump_pl: Option<PathBuf>,
    },
    /// Abreu residual -Σ ∂²U^{ij}/∂x_i∂x_j - s on a grid.
    ///
    /// CSV columns (--emit-csv): x0, .., x{n-1}, residual.
    Residual {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Grid spacing h, as a decimal or a fraction such as 1/64.
        #[arg(long, default_value = "1/64", value_parser = parse_spacing)]
        grid: f64,
        /// Distance to every facet required of residual points (default 5h).
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long, value_enum, default_value = "analytic")]
        mode: ResidualMode,
        /// Write the per-point CSV here.
        #[arg(long, value_name = "PATH")]
        emit_csv: Option<PathBuf>,
    },
}

/// Machine-readable result of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    /// True when every number in `results` is exact.
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_seconds: f64,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })
}

fn load_polytope(input: &Input) -> Result<(Polytope, Value), CliError> {
    match (&input.polytope, &input.example) {
        (Some(path), _) => {
            let j = io::parse_polytope_json(&read(path)?)?;
            let echo = serde_json::to_value(&j).expect("serializable");
            Ok((Polytope::try_from(j)?, echo))
        }
        (None, Some(name)) => Ok((library::example(name)?, json!({ "example": name }))),
        (None, None) => Err(CliError::Usage("one of --polytope or --example is required".into())),
    }
}

fn delzant_json(p: &Polytope) -> (bool, Value) {
    let report = p.check_delzant();
    let offending: Vec<Value> = report
        .offending
        .iter()
        .map(|v| {
            json!({
                "vertex": v.vertex.iter().map(format_rational).collect::<Vec<_>>(),
                "facets": v.facets,
                "determinant": v.determinant.as_ref().map(|d| d.to_string()),
            })
        })
        .collect();
    (
        report.is_delzant,
        json!({ "delzant": report.is_delzant, "offending": offending }),
    )
}

fn load_checked(common: &Common) -> Result<(Polytope, Value), CliError> {
    let (p, echo) = load_polytope(&common.input)?;
    if !common.allow_non_delzant {
        let (ok, details) = delzant_json(&p);
        if !ok {
            return Err(CliError::NotDelzant(Box::new(RunReport {
                command: "delzant-check".into(),
                inputs: echo,
                results: details,
                exact: true,
                timings: None,
            })));
        }
    }
    Ok((p, echo))
}

fn load_potential(p: &Polytope, args: &PotentialArgs) -> Result<(SymplecticPotential, Value), CliError> {
    let u = SymplecticPotential::canonical(p, args.convention.into());
    let convention = serde_json::to_value(Convention::from(args.convention)).expect("serializable");
    match &args.correction {
        None => Ok((u, json!({ "convention": convention, "correction": null }))),
        Some(path) => {
            let j: PolynomialJson = serde_json::from_str(&read(path)?).map_err(|e| CoreError::Parse(e.to_string()))?;
            let echo = serde_json::to_value(&j).expect("serializable");
            let g = Polynomial::try_from(j)?;
            Ok((
                u.with_correction(g)?,
                json!({ "convention": convention, "correction": echo }),
            ))
        }
    }
}

fn write_csv(path: &PathBuf, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Write {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
    w.write_record(header).map_err(|e| err(&e))?;
    for r in rows {
        w.write_record(r).map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Run one parsed command.
pub fn execute(command: &Command) -> Result<RunReport, CliError> {
    match command {
        Command::Validate { input } => {
            let (p, echo) = load_polytope(input)?;
            let (ok, details) = delzant_json(&p);
            let mut results = json!({
                "dimension": p.dim(),
                "facets": p.num_facets(),
                "vertices": p.vertices().iter()
                    .map(|v| v.iter().map(format_rational).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "polytope": to_value(&PolytopeJson::from(&p)),
            });
            results["delzant"] = details["delzant"].clone();
            results["offending"] = details["offending"].clone();
            let report = RunReport {
                command: "validate".into(),
                inputs: echo,
                results,
                exact: true,
                timings: None,
            };
            if ok {
                Ok(report)
            } else {
                Err(CliError::NotDelzant(Box::new(report)))
            }
        }
        Command::Extremal { common } => {
            let (p, echo) = load_checked(common)?;
            let ext = solve_extremal_affine(&p)?;
            let positive = check_positivity(&ext, &p);
            Ok(RunReport {
                command: "extremal".into(),
                inputs: echo,
                results: to_value(&ExtremalReport::new(&ext, positive)),
                exact: true,
                timings: None,
            })
        }
        Command::Futaki { common, pl, pl_json } => {
            let (p, echo) = load_checked(common)?;
            let text = match (pl, pl_json) {
                (Some(path), _) => read(path)?,
                (None, Some(t)) => t.clone(),
                (None, None) => return Err(CliError::Usage("--pl or --pl-json is required".into())),
            };
            let f = io::parse_pl_json(&text)?;
            let ext = solve_extremal_affine(&p)?;
            let sub = subdivide(&p, &f)?;
            let terms = pl_terms_of(&sub, &ext);
            let l = terms.l_value();
            let futaki = futaki_from_l(&l, &ext.vol);
            Ok(RunReport {
                command: "futaki".into(),
                inputs: json!({ "polytope": echo, "pl": to_value(&PlJson::from(&f)) }),
                results: json!({
                    "L": format_rational(&l),
                    "futaki": format_rational(&futaki),
                    "boundary_term": format_rational(&terms.boundary),
                    "interior_term": format_rational(&terms.interior),
                    "attained_pieces": sub.function.pieces().len(),
                    "creases": sub.creases.len(),
                }),
                exact: true,
                timings: None,
            })
        }
        Command::Search {
            common,
            height,
            nodes,
            tolerance,
            emit_csv,
        } => {
            let (p, echo) = load_checked(common)?;
            let ext = solve_extremal_affine(&p)?;
            let tol: Rational = rational::parse_rational(tolerance)?;
            let cfg = SearchConfig {
                height: *height,
                nodes: *nodes,
                tolerance: tol.clone(),
                threads: None,
            };
            let report = search_destabilizer(&p, &ext, &cfg)?;
            if let Some(path) = emit_csv {
                let rows: Vec<Vec<String>> = report
                    .per_direction
                    .iter()
                    .map(|d| {
                        let dir: Vec<String> = d.direction.iter().map(i64::to_string).collect();
                        vec![
                            format!("({})", dir.join(",")),
                            format_rational(&d.best_offset),
                            format_rational(&d.best_l),
                            format_rational(&d.best_ratio),
                        ]
                    })
                    .collect();
                let header = ["direction", "best_offset", "best_L", "best_ratio"].map(String::from);
                write_csv(path, &header, &rows)?;
            }
            let witness_pl = report
                .witness
                .as_ref()
                .map(|w| to_value(&SimplePlJson::from(&w.simple_pl())));
            let mut results = to_value(&report);
            results["witness_pl"] = witness_pl.unwrap_or(Value::Null);
            Ok(RunReport {
                command: "search".into(),
                inputs: json!({
                    "polytope": echo,
                    "height": height,
                    "nodes": nodes,
                    "tolerance": format_rational(&tol),
                }),
                results,
                exact: true,
                timings: None,
            })
        }
        Command::Kenergy {
            common,
            potential,
            quad_tol,
            max_cells,
            jump_pl,
        } => {
            let (p, echo) = load_checked(common)?;
            let ext = solve_extremal_affine(&p)?;
            let (u, pot_echo) = load_potential(&p, potential)?;
            let cfg = QuadConfig {
                tol: *quad_tol,
                max_cells: *max_cells,
                grading: true,
            };
            let k = kenergy(&p, &ext, &u, &cfg)?;
            let mut results = json!({ "kenergy": to_value(&k) });
            let mut inputs = json!({ "polytope": echo, "potential": pot_echo, "quad": to_value(&cfg) });
            if let Some(path) = jump_pl {
                let f = io::parse_pl_json(&read(path)?)?;
                let j = crease_jump_integral(&p, &u, &f, &cfg)?;
                let sub = subdivide(&p, &f)?;
                let l = pl_terms_of(&sub, &ext).l_value();
                results["jump_integral"] = to_value(&j);
                results["L_exact"] = Value::String(format_rational(&l));
                inputs["jump_pl"] = to_value(&PlJson::from(&f));
            }
            Ok(RunReport {
                command: "kenergy".into(),
                inputs,
                results,
                exact: false,
                timings: None,
            })
        }
        Command::Residual {
            common,
            potential,
            grid,
            margin,
            mode,
            emit_csv,
        } => {
            let (p, echo) = load_checked(common)?;
            let ext = solve_extremal_affine(&p)?;
            let (u, pot_echo) = load_potential(&p, potential)?;
            let margin = margin.unwrap_or(5.0 * grid);
            let field = match mode {
                ResidualMode::Analytic => abreu_residual(
                    &p,
                    &ext,
                    ResidualSource::Analytic {
                        potential: &u,
                        h: *grid,
                        margin,
                    },
                )?,
                ResidualMode::Grid => {
                    let g = PotentialGrid::new(&p, &u, *grid, margin)?;
                    abreu_residual(&p, &ext, ResidualSource::Grid(&g))?
                }
            };
            if let Some(path) = emit_csv {
                let n = p.dim();
                let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
                header.push("residual".into());
                let rows: Vec<Vec<String>> = field
                    .points
                    .iter()
                    .zip(&field.values)
                    .map(|(x, r)| x.iter().chain(std::iter::once(r)).map(|v| format!("{v:e}")).collect())
                    .collect();
                write_csv(path, &header, &rows)?;
            }
            Ok(RunReport {
                command: "residual".into(),
                inputs: json!({
                    "polytope": echo,
                    "potential": pot_echo,
                    "grid": grid,
                    "margin": margin,
                    "mode": match mode { ResidualMode::Analytic => "analytic", ResidualMode::Grid => "grid" },
                }),
                results: json!({
                    "sup_norm": field.sup_norm,
                    "points": field.points.len(),
                    "analytic_hessian": field.analytic_hessian,
                }),
                exact: false,
                timings: None,
            })
        }
    }
}

fn run_parsed(cli: &Cli) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let mut report = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| execute(&cli.command))?,
        None => execute(&cli.command)?,
    };
    if cli.timings {
        report.timings = Some(Timings {
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(report)
}

/// Parse arguments, run, print, and return the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let emit = |out: &mut dyn Write, r: &RunReport| {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(r).expect("serializable"));
    };
    match run_parsed(&cli) {
        Ok(report) => {
            emit(out, &report);
            0
        }
        Err(e) => {
            if let CliError::NotDelzant(report) = &e {
                emit(out, report);
            }
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
