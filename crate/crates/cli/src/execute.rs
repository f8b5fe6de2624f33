//! Runs and sweeps: simulate, check, write one CSV per run and one summary.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use swave_core::diagnostics::{
    check_f0_identity, check_f1_lower_bound, check_holder_chain, fit_blowup_exponent, scenario_hash,
};
use swave_core::kato::{bootstrap_trace, KatoParams};
use swave_core::par::Exec;
use swave_core::wavesolver::{self, merge_refinement, BlowupReport, RunOutput, Scenario};

use crate::config::{CheckKind, RunConfig};
use crate::output::{write_atomic, write_json, Envelope};

pub const F0_IDENTITY_TOLERANCE: f64 = 0.02;
pub const F1_TOLERANCE: f64 = 1e-3;
pub const ALPHA_TOLERANCE: f64 = 0.1;
pub const BOOTSTRAP_EPS0: f64 = 0.1;
pub const BOOTSTRAP_SLACK: f64 = 0.1;
pub const BOOTSTRAP_STAGES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: Status,
    pub detail: Value,
}

impl CheckOutcome {
    fn judged<T: Serialize>(kind: CheckKind, passed: bool, report: &T) -> Self {
        Self {
            name: kind.name(),
            status: if passed { Status::Pass } else { Status::Fail },
            detail: serde_json::to_value(report).unwrap_or(Value::Null),
        }
    }

    fn skipped(kind: CheckKind, reason: impl std::fmt::Display) -> Self {
        Self {
            name: kind.name(),
            status: Status::Skipped,
            detail: json!({ "reason": reason.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub scenario_hash: String,
    pub scenario: Scenario,
    pub csv: String,
    pub report: BlowupReport,
    pub samples: usize,
    pub steps: u64,
    pub t_final: f64,
    pub support_leak: f64,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: RunConfig,
    pub refine: bool,
    pub detected: Vec<bool>,
    pub runs: Vec<RunSummary>,
}

pub fn run_checks(out: &RunOutput, sc: &Scenario, enabled: &[CheckKind]) -> Vec<CheckOutcome> {
    let window_end = out.report.pre_blowup_end();
    enabled
        .iter()
        .map(|&kind| match kind {
            CheckKind::F0Identity => match check_f0_identity(&out.series, window_end) {
                Ok(r) => CheckOutcome::judged(kind, r.relative_residual < F0_IDENTITY_TOLERANCE, &r),
                Err(e) => CheckOutcome::skipped(kind, e),
            },
            CheckKind::Holder => {
                let mut r = check_holder_chain(&out.series);
                r.monitor.clear();
                CheckOutcome::judged(kind, r.holds, &r)
            }
            CheckKind::F1Bound => {
                let r = check_f1_lower_bound(&out.series, F1_TOLERANCE);
                CheckOutcome::judged(kind, r.holds, &r)
            }
            CheckKind::BlowupFit => {
                if !out.report.detected {
                    return CheckOutcome::skipped(kind, "no blow-up detected");
                }
                match fit_blowup_exponent(&out.series.growth, sc.p) {
                    Ok(f) => {
                        let ok = f.alpha_relative_error() < ALPHA_TOLERANCE;
                        CheckOutcome::judged(kind, ok, &f)
                    }
                    Err(e) => CheckOutcome::skipped(kind, e),
                }
            }
            CheckKind::Bootstrap => {
                let params = match KatoParams::standard(sc.p, sc.mass, sc.eps, sc.half_width, BOOTSTRAP_EPS0) {
                    Ok(p) => p,
                    Err(e) => return CheckOutcome::skipped(kind, e),
                };
                match bootstrap_trace(&out.series, &params, BOOTSTRAP_STAGES, window_end) {
                    Ok(r) => {
                        let ok = r.measured_slope >= r.lower_exponent - BOOTSTRAP_SLACK;
                        CheckOutcome::judged(kind, ok, &r)
                    }
                    Err(e) => CheckOutcome::skipped(kind, e),
                }
            }
        })
        .collect()
}

pub fn csv_name(cfg: &RunConfig, index: usize) -> String {
    format!("{}_{index:03}.csv", cfg.outputs.csv_stem)
}

/// Runs every scenario of `cfg` (plus its `dx/2` twin when `refine`) and
/// writes the CSVs in index order.
///
/// Independent runs are dispatched with `exec`; everything that reaches the
/// disk is ordered by sweep index, so the output does not depend on the
/// number of workers.
pub fn execute(cfg: &RunConfig, out_dir: &Path, refine: bool, exec: Exec) -> Result<Summary> {
    cfg.validate()?;
    crate::output::ensure_dir(out_dir)?;
    let scenarios = cfg.scenarios();
    let mut jobs = scenarios.clone();
    if refine {
        jobs.extend(scenarios.iter().map(Scenario::refined));
    }
    eprintln!("running {} simulation(s)", jobs.len());
    let inner = if jobs.len() == 1 { exec } else { Exec::Sequential };
    let results = exec.map_jobs(&jobs, |sc| wavesolver::run(sc, inner));
    let mut results = results.into_iter();
    let coarse: Vec<_> = results.by_ref().take(scenarios.len()).collect();
    let fine: Vec<_> = results.collect();

    let mut runs = Vec::with_capacity(scenarios.len());
    for (index, (sc, res)) in scenarios.iter().zip(coarse).enumerate() {
        let out = res.with_context(|| format!("run {index} ({})", scenario_hash(sc)))?;
        let csv = csv_name(cfg, index);
        let path = out_dir.join(&csv);
        write_atomic(&path, out.series.to_csv().as_bytes())?;
        let mut report = out.report.clone();
        if let Some(res) = fine.get(index) {
            let f = res
                .as_ref()
                .map_err(Clone::clone)
                .with_context(|| format!("refined run {index}"))?;
            merge_refinement(&mut report, &f.report);
        }
        eprintln!(
            "[{index:03}] p={} eps={} s0={} dx={}: {}",
            sc.p,
            sc.eps,
            sc.s0,
            sc.dx,
            match report.t_est {
                Some(t) if report.detected => format!("blow-up, T_est = {t:.6}"),
                _ => format!("no blow-up up to t = {}", out.state.t),
            }
        );
        runs.push(RunSummary {
            index,
            scenario_hash: scenario_hash(sc),
            scenario: sc.clone(),
            csv,
            checks: run_checks(&out, sc, &cfg.checks),
            report,
            samples: out.series.samples.len(),
            steps: out.state.steps,
            t_final: out.state.t,
            support_leak: out.support_leak,
        });
    }
    let summary = Summary {
        config: cfg.clone(),
        refine,
        detected: runs.iter().map(|r| r.report.detected).collect(),
        runs,
    };
    Ok(summary)
}

/// `execute` plus the summary file; returns the summary path.
pub fn execute_and_write(
    cfg: &RunConfig,
    out_dir: &Path,
    refine: bool,
    exec: Exec,
    command: &'static str,
) -> Result<PathBuf> {
    if command == "run" && cfg.scenarios().len() != 1 {
        bail!("config defines a sweep; use the `sweep` subcommand");
    }
    if command == "sweep" && cfg.sweep.is_none() {
        bail!("config has no sweep.* keys");
    }
    let summary = execute(cfg, out_dir, refine, exec)?;
    let path = out_dir.join(&cfg.outputs.summary);
    write_json(&path, &Envelope::new(command, summary))?;
    Ok(path)
}
