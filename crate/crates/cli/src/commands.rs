use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use gh_core::correspondence::Correspondence;
use gh_core::generate::{generate, SpaceKind};
use gh_core::geodesic::{geodesic_point, verify_geodesic, GeodesicError, Optimality};
use gh_core::io::{parse_matrix, read_space, read_text, write_space, InterpolantFile, IoError, SpaceFormat};
use gh_core::metric::{diameter, FiniteMetricSpace};
use gh_core::solver::{brute_force_gh, convergence_experiment, exact_gh_with, net_approx_gh, GHResult, SolverOptions};
use serde::Serialize;
use thiserror::Error;

use crate::{Cli, Command, Format, Kind, Mode};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_INEXACT: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Inexact(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(IoError::Metric(_)) | CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) | CliError::Write { .. } => EXIT_IO,
            CliError::Inexact(_) => EXIT_INEXACT,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source }),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", text.trim_end()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Write { path: PathBuf::from("<stdout>"), source: e })
                }
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("finite values serialize");
    s.push('\n');
    s
}

fn options(cli: &Cli, budget: u64, greedy_seed: bool) -> SolverOptions {
    SolverOptions { budget, greedy_seed, initial: None, threads: cli.threads.max(1) }
}

pub fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Validate { path } => validate(path, cli.tol),
        Command::Gh { x, y, mode, eps, budget, no_seed, out } => {
            let (sx, sy) = (read_space(x, cli.tol)?, read_space(y, cli.tol)?);
            gh(&sx, &sy, *mode, *eps, &options(cli, *budget, !no_seed), out.as_deref())
        }
        Command::Geodesic { x, y, t, times, correspondence, budget, out, csv } => {
            let (sx, sy) = (read_space(x, cli.tol)?, read_space(y, cli.tol)?);
            let names = (x.display().to_string(), y.display().to_string());
            let opts = options(cli, *budget, true);
            let req = GeodesicRequest { t, times, correspondence: correspondence.as_deref(), out: out.as_deref(), csv: csv.as_deref() };
            geodesic(&sx, &sy, &names, &req, &opts)
        }
        Command::Generate { kind, n, dim, seed, format, out } => {
            let kind = match kind {
                Kind::Euclidean => SpaceKind::Euclidean,
                Kind::PerturbedUltrametric => SpaceKind::PerturbedUltrametric,
            };
            let space = generate(kind, *n, *dim, *seed).map_err(invalid)?;
            let format = match format {
                Format::Json => SpaceFormat::Json,
                Format::Csv => SpaceFormat::Csv,
            };
            emit(out.as_deref(), &write_space(&space, format))?;
            Ok(EXIT_OK)
        }
        Command::Experiment { x, y, schedule, budget, out, csv } => {
            let (sx, sy) = (read_space(x, cli.tol)?, read_space(y, cli.tol)?);
            let rep = convergence_experiment(&sx, &sy, schedule, &options(cli, *budget, true)).map_err(invalid)?;
            emit(out.as_deref(), &to_json(&rep))?;
            if let Some(path) = csv {
                emit(Some(path), &rep.to_csv())?;
            }
            let exact = rep.dgh_exact && rep.steps.iter().all(|s| s.exact);
            Ok(if exact { EXIT_OK } else { EXIT_INEXACT })
        }
    }
}

fn validate(path: &Path, tol: f64) -> Result<u8, CliError> {
    let text = read_text(path)?;
    let file = parse_matrix(&text, SpaceFormat::sniff(&text))?;
    match FiniteMetricSpace::with_labels(&file.dist, file.labels, tol) {
        Ok(space) => {
            println!("PASS n={} diam={}", space.len(), diameter(&space));
            Ok(EXIT_OK)
        }
        Err(e) => {
            println!("{e}");
            Ok(EXIT_INVALID)
        }
    }
}

#[derive(Serialize)]
struct NetOutput<'a> {
    #[serde(flatten)]
    result: &'a GHResult,
    error_bar: f64,
    net_x: &'a [usize],
    net_y: &'a [usize],
}

fn gh(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    mode: Mode,
    eps: Option<f64>,
    opts: &SolverOptions,
    out: Option<&Path>,
) -> Result<u8, CliError> {
    let (text, exact) = match mode {
        Mode::Exact => {
            let r = exact_gh_with(x, y, opts);
            (to_json(&r), r.exact)
        }
        Mode::Brute => {
            let r = brute_force_gh(x, y).map_err(invalid)?;
            (to_json(&r), r.exact)
        }
        Mode::Net => {
            let eps = eps.ok_or_else(|| invalid("--mode net requires --eps"))?;
            let a = net_approx_gh(x, y, eps, opts).map_err(invalid)?;
            let body = NetOutput { result: &a.result, error_bar: a.error_bar, net_x: &a.net_left, net_y: &a.net_right };
            (to_json(&body), a.result.exact)
        }
    };
    emit(out, &text)?;
    Ok(if exact { EXIT_OK } else { EXIT_INEXACT })
}

struct GeodesicRequest<'a> {
    t: &'a [f64],
    times: &'a [f64],
    correspondence: Option<&'a Path>,
    out: Option<&'a Path>,
    csv: Option<&'a Path>,
}

fn geodesic(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    names: &(String, String),
    req: &GeodesicRequest<'_>,
    opts: &SolverOptions,
) -> Result<u8, CliError> {
    // (correspondence, d_GH if known exactly, certified optimal)
    let (r, known, certified) = match req.correspondence {
        Some(path) => {
            let text = read_text(path)?;
            let c: Correspondence = serde_json::from_str(&text).map_err(|e| {
                if e.is_data() {
                    invalid(format!("{}: {e}", path.display()))
                } else {
                    IoError::Parse { line: e.line(), column: e.column(), msg: e.to_string() }.into()
                }
            })?;
            (c, None, true)
        }
        None => {
            let res = exact_gh_with(x, y, opts);
            let d = res.exact.then_some(res.distance);
            (res.incumbent, d, res.exact)
        }
    };

    if !req.times.is_empty() {
        if !certified {
            return Err(CliError::Inexact("no optimal correspondence certified within the budget".into()));
        }
        let how = known.map_or(Optimality::Solve(opts.budget), Optimality::Known);
        let rep = verify_geodesic(x, y, &r, req.times, how, opts).map_err(geodesic_error)?;
        emit(req.out, &to_json(&rep))?;
        if let Some(path) = req.csv {
            emit(Some(path), &rep.to_csv())?;
        }
        return Ok(if !rep.all_pass() {
            EXIT_INVALID
        } else if rep.all_exact() {
            EXIT_OK
        } else {
            EXIT_INEXACT
        });
    }

    let ts: &[f64] = if req.t.is_empty() { &[0.5] } else { req.t };
    let mut files = Vec::with_capacity(ts.len());
    for &t in ts {
        let g = geodesic_point(x, y, &r, t).map_err(geodesic_error)?;
        files.push(InterpolantFile::new(&g, &names.0, &names.1));
    }
    let text = if files.len() == 1 { to_json(&files[0]) } else { to_json(&files) };
    emit(req.out, &text)?;
    Ok(if certified { EXIT_OK } else { EXIT_INEXACT })
}

fn geodesic_error(e: GeodesicError) -> CliError {
    invalid(e)
}
