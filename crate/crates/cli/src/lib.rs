//! Command-line driver for `swave-core`.
//!
//! Progress goes to stderr. stdout carries JSON only: `kato` and
//! `background` print there when no `--out` is given.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod execute;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use swave_core::auxode::{AuxConstants, AuxFunctions};
use swave_core::background::{asymptotic_band_report, Background, BandReport};
use swave_core::kato::{self, ComparisonOde, KatoParams, Lifespan, Schedule};
use swave_core::par::Exec;

use crate::config::{parse_config, RunConfig};
use crate::output::{ensure_dir, sci, to_json, write_atomic, write_json, Envelope};

#[derive(Debug, Parser)]
#[command(name = "swave", version, about = "Semilinear waves on a Schwarzschild background")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Scenario file in `key = value` form.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory for CSV and JSON artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Repeat every run at dx/2 and record both lifespans.
    #[arg(long, global = true)]
    pub refine: bool,
    /// Worker threads for independent runs (default: all cores).
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic bands of r, F, Λ, W, f.
    Background(BackgroundArgs),
    /// Tables of φ₀, ψ₀, φ₁, W, f and the constants b, D, d±, e±, A.
    Aux,
    /// One simulation from the config.
    Run,
    /// Every point of the config's sweep.
    Sweep,
    /// Exponents, recurrence, thresholds, schedule; optionally the comparison ODE.
    Kato(KatoArgs),
}

#[derive(Debug, Args)]
pub struct BackgroundArgs {
    /// Ranges `a:b` on the tortoise line.
    #[arg(long = "range", value_name = "A:B", value_parser = parse_range)]
    pub ranges: Vec<(f64, f64)>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got {s:?}"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
    if !(a < b) {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

#[derive(Debug, Args)]
pub struct KatoArgs {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long = "mass", short = 'M', default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long = "R", default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps0: f64,
    /// Number of recurrence stages to tabulate.
    #[arg(long, default_value_t = 10)]
    pub stages: usize,
    /// Also integrate V″ = c (t+R)^{−q} V^p.
    #[arg(long)]
    pub ode: bool,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Defaults to the standard choice 3(p−1).
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub v0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub v0p: f64,
    #[arg(long, default_value_t = 1e6)]
    pub t_cap: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub rtol: f64,
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_config(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn require_config(g: &GlobalArgs) -> Result<RunConfig> {
    match &g.config {
        Some(p) => load_config(Some(p)),
        None => bail!("--config PATH is required for this subcommand"),
    }
}

/// Emits `value` to `dir/name` when `--out` is given, else to stdout.
fn emit<T: Serialize>(g: &GlobalArgs, name: &str, value: &T) -> Result<()> {
    match &g.out {
        Some(dir) => {
            ensure_dir(dir)?;
            let path = dir.join(name);
            write_json(&path, value)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{}", to_json(value)?),
    }
    Ok(())
}

pub const DEFAULT_BAND_RANGES: [(f64, f64); 2] = [(-40.0, -15.0), (10.0, 200.0)];

#[derive(Serialize)]
struct BandBody {
    report: BandReport,
}

fn cmd_background(g: &GlobalArgs, args: &BackgroundArgs) -> Result<()> {
    let cfg = load_config(g.config.as_deref())?;
    let ranges = if args.ranges.is_empty() {
        DEFAULT_BAND_RANGES.to_vec()
    } else {
        args.ranges.clone()
    };
    let lo = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let bg = Background::new(cfg.scenario.mass, lo, hi)?;
    let report = asymptotic_band_report(&bg, cfg.scenario.p, &ranges)?;
    emit(g, "background.json", &Envelope::new("background", BandBody { report }))
}

pub const AUX_CSV_HEADER: &str = "s,phi0,psi0,phi1,W,f";

#[derive(Serialize)]
struct AuxBody {
    mass: f64,
    p: f64,
    grid: swave_core::grid::Grid,
    constants: AuxConstants,
}

fn cmd_aux(g: &GlobalArgs, exec: Exec) -> Result<()> {
    let cfg = load_config(g.config.as_deref())?;
    let sc = &cfg.scenario;
    sc.validate()?;
    let grid = sc.grid()?;
    let bg = Background::new(sc.mass, grid.s_min(), grid.s_max())?;
    let table = bg.tabulate(&grid, sc.p, exec)?;
    let aux = AuxFunctions::build(&bg, &grid, exec)?;
    let body = AuxBody {
        mass: sc.mass,
        p: sc.p,
        grid,
        constants: aux.constants,
    };
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    let mut csv = String::with_capacity(grid.len * 150);
    csv.push_str(AUX_CSV_HEADER);
    csv.push('\n');
    for i in 0..grid.len {
        let row = [grid.s(i), aux.phi0[i], aux.psi0[i], aux.phi1[i], table.potential[i], table.weight[i]];
        csv.push_str(&row.map(sci).join(","));
        csv.push('\n');
    }
    let csv_path = dir.join("aux.csv");
    write_atomic(&csv_path, csv.as_bytes())?;
    let json_path = dir.join("aux_constants.json");
    write_json(&json_path, &Envelope::new("aux", body))?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

#[derive(Serialize)]
struct KatoBody {
    critical_exponents: Vec<(u32, f64)>,
    params: Option<KatoParams>,
    growth_condition: Option<bool>,
    /// `(a_k, p_k)` for `k = 0..=stages`.
    recurrence: Vec<(f64, f64)>,
    /// `(x₀, x₀(T₁))`.
    thresholds: Option<(f64, f64)>,
    schedule: Option<Schedule>,
    schedule_error: Option<String>,
    lifespan: Option<Lifespan>,
}

fn cmd_kato(g: &GlobalArgs, a: &KatoArgs) -> Result<()> {
    let critical_exponents = (2..=6)
        .map(|n| Ok((n, kato::critical_exponent(n)?)))
        .collect::<swave_core::Result<Vec<_>>>()?;
    let (q_std, a_std) = kato::exponent_choices(a.p, a.eps0);
    let recurrence = kato::recurrence_table(a_std, a.p, q_std, a.stages);
    let delta1 = kato::default_delta1(a.mass);
    let (schedule, schedule_error) = match kato::schedule(a.eps, a.p, a.mass, a.r, 1.0, delta1) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let params = schedule
        .is_some()
        .then(|| KatoParams::standard(a.p, a.mass, a.eps, a.r, a.eps0))
        .transpose()?;
    let lifespan = if a.ode {
        let ode = ComparisonOde {
            p: a.p,
            q: a.q.unwrap_or(q_std),
            r: a.r,
            c: a.c,
        };
        Some(kato::lifespan_ode(&ode, a.v0, a.v0p, a.t_cap, a.rtol)?)
    } else {
        None
    };
    let body = KatoBody {
        critical_exponents,
        growth_condition: params.map(|p| p.condition()),
        thresholds: params.as_ref().map(kato::thresholds),
        params,
        recurrence,
        schedule,
        schedule_error,
        lifespan,
    };
    emit(g, "kato.json", &Envelope::new("kato", body))
}

fn dispatch(cli: &Cli, exec: Exec) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Background(args) => cmd_background(g, args),
        Command::Aux => cmd_aux(g, exec),
        Command::Kato(args) => cmd_kato(g, args),
        Command::Run | Command::Sweep => {
            let name = if matches!(cli.command, Command::Run) { "run" } else { "sweep" };
            let cfg = require_config(g)?;
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let path = execute::execute_and_write(&cfg, &dir, g.refine, exec, name)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

/// Runs the parsed command inside a worker pool sized by `--workers`.
pub fn run(cli: &Cli) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.global.workers {
            builder = builder.num_threads(n as usize);
        }
        let pool = builder.build().context("building worker pool")?;
        let exec = if cli.global.workers == Some(1) { Exec::Sequential } else { Exec::Parallel };
        pool.install(|| dispatch(cli, exec))
    }
    #[cfg(not(feature = "parallel"))]
    {
        if cli.global.workers.is_some_and(|n| n > 1) {
            eprintln!("built without the `parallel` feature; running sequentially");
        }
        dispatch(cli, Exec::Sequential)
    }
}
