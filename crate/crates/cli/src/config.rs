//! Line-oriented `key = value` configuration with dotted sections.
//!
//! ```text
//! # reference blow-up scenario
//! scenario.p = 2.0
//! scenario.eps = 0.5
//! scenario.s0 = 10
//! scenario.R = 2
//! sweep.p = 1.8, 2.0, 2.2
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use swave_core::wavesolver::Scenario;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Diagnostic checks that can be attached to each run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    F0Identity,
    Holder,
    F1Bound,
    BlowupFit,
    Bootstrap,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::F0Identity,
        CheckKind::Holder,
        CheckKind::F1Bound,
        CheckKind::BlowupFit,
        CheckKind::Bootstrap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::F0Identity => "f0_identity",
            CheckKind::Holder => "holder",
            CheckKind::F1Bound => "f1_bound",
            CheckKind::BlowupFit => "blowup_fit",
            CheckKind::Bootstrap => "bootstrap",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Every combination, `p` outermost and `dx` innermost.
    Cartesian,
    /// Element-wise; all given lists must have the same length.
    Zip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub mode: SweepMode,
    pub p: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub s0: Option<Vec<f64>>,
    pub dx: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    /// CSV file name stem; run `i` writes `{stem}_{i:03}.csv`.
    pub csv_stem: String,
    pub summary: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            csv_stem: "series".into(),
            summary: "summary.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub outputs: Outputs,
    pub checks: Vec<CheckKind>,
    pub sweep: Option<Sweep>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            outputs: Outputs::default(),
            checks: CheckKind::ALL.to_vec(),
            sweep: None,
        }
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64, ConfigError> {
    v.parse::<f64>().map_err(|_| ConfigError::Parse {
        line,
        message: format!("{key}: expected a number, got {v:?}"),
    })
}

fn parse_list(v: &str, line: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|x| parse_f64(x.trim(), line, key)).collect()
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut sweep = Sweep {
        mode: SweepMode::Cartesian,
        p: None,
        eps: None,
        s0: None,
        dx: None,
    };
    let mut has_sweep = false;
    let mut seen = BTreeSet::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: format!("{key}: missing value"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key {key}"),
            });
        }
        let num = || parse_f64(value, line, key);
        let sc = &mut cfg.scenario;
        match key {
            "scenario.p" => sc.p = num()?,
            "scenario.M" | "scenario.mass" => sc.mass = num()?,
            "scenario.eps" => sc.eps = num()?,
            "scenario.s0" => sc.s0 = num()?,
            "scenario.R" => sc.half_width = num()?,
            "scenario.dx" => sc.dx = num()?,
            "scenario.cfl" => sc.cfl = num()?,
            "scenario.t_max" => sc.t_max = num()?,
            "scenario.blowup_threshold" => sc.blowup_threshold = num()?,
            "scenario.dt_min" => sc.dt_min = num()?,
            "scenario.nonlinearity" => {
                sc.nonlinearity = match value {
                    "true" | "on" => true,
                    "false" | "off" => false,
                    _ => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("{key}: expected true or false, got {value:?}"),
                        })
                    }
                }
            }
            "scenario.sample_every" => {
                sc.sample_every = value.parse().map_err(|_| ConfigError::Parse {
                    line,
                    message: format!("{key}: expected a positive integer, got {value:?}"),
                })?
            }
            "output.csv" => cfg.outputs.csv_stem = value.to_string(),
            "output.summary" => cfg.outputs.summary = value.to_string(),
            "checks.enabled" => {
                let mut list = Vec::new();
                for name in value.split(',').map(str::trim) {
                    if name == "none" {
                        continue;
                    }
                    let c = CheckKind::parse(name).ok_or_else(|| ConfigError::Parse {
                        line,
                        message: format!("unknown check {name:?}"),
                    })?;
                    if !list.contains(&c) {
                        list.push(c);
                    }
                }
                list.sort();
                cfg.checks = list;
            }
            "sweep.mode" => {
                has_sweep = true;
                sweep.mode = match value {
                    "cartesian" => SweepMode::Cartesian,
                    "zip" => SweepMode::Zip,
                    _ => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("sweep.mode: expected cartesian or zip, got {value:?}"),
                        })
                    }
                }
            }
            "sweep.p" | "sweep.eps" | "sweep.s0" | "sweep.dx" => {
                has_sweep = true;
                let list = Some(parse_list(value, line, key)?);
                match key {
                    "sweep.p" => sweep.p = list,
                    "sweep.eps" => sweep.eps = list,
                    "sweep.s0" => sweep.s0 = list,
                    _ => sweep.dx = list,
                }
            }
            _ => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key {key}"),
                })
            }
        }
    }
    if has_sweep {
        cfg.sweep = Some(sweep);
    }
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.outputs.csv_stem.is_empty() || self.outputs.summary.is_empty() {
            return Err(ConfigError::Invalid("output names must be non-empty".into()));
        }
        for name in [&self.outputs.csv_stem, &self.outputs.summary] {
            if name.contains('/') || name.contains('\\') {
                return Err(ConfigError::Invalid(format!(
                    "output name {name:?} must be a bare file name"
                )));
            }
        }
        if let Some(sw) = &self.sweep {
            let lists = [&sw.p, &sw.eps, &sw.s0, &sw.dx];
            if lists.iter().all(|l| l.is_none()) {
                return Err(ConfigError::Invalid("sweep section lists no values".into()));
            }
            if lists.iter().any(|l| l.as_ref().is_some_and(|v| v.is_empty())) {
                return Err(ConfigError::Invalid("sweep lists must be non-empty".into()));
            }
            if sw.mode == SweepMode::Zip {
                let lens: BTreeSet<usize> = lists.iter().filter_map(|l| l.as_ref().map(Vec::len)).collect();
                if lens.len() > 1 {
                    return Err(ConfigError::Invalid(format!(
                        "zip sweep lists have different lengths {lens:?}"
                    )));
                }
            }
            for (i, sc) in self.scenarios().iter().enumerate() {
                sc.validate()
                    .map_err(|e| ConfigError::Invalid(format!("sweep point {i}: {e}")))?;
            }
        }
        Ok(())
    }

    /// The scenarios to run, in sweep-index order.
    pub fn scenarios(&self) -> Vec<Scenario> {
        let base = &self.scenario;
        let Some(sw) = &self.sweep else {
            return vec![base.clone()];
        };
        let pick = |l: &Option<Vec<f64>>, d: f64| l.clone().unwrap_or_else(|| vec![d]);
        let p = pick(&sw.p, base.p);
        let eps = pick(&sw.eps, base.eps);
        let s0 = pick(&sw.s0, base.s0);
        let dx = pick(&sw.dx, base.dx);
        let make = |p: f64, eps: f64, s0: f64, dx: f64| Scenario {
            p,
            eps,
            s0,
            dx,
            ..base.clone()
        };
        match sw.mode {
            SweepMode::Cartesian => {
                let mut out = Vec::with_capacity(p.len() * eps.len() * s0.len() * dx.len());
                for &a in &p {
                    for &b in &eps {
                        for &c in &s0 {
                            for &d in &dx {
                                out.push(make(a, b, c, d));
                            }
                        }
                    }
                }
                out
            }
            SweepMode::Zip => {
                let n = [p.len(), eps.len(), s0.len(), dx.len()].into_iter().max().unwrap_or(1);
                let at = |v: &Vec<f64>, i: usize| if v.len() == 1 { v[0] } else { v[i] };
                (0..n)
                    .map(|i| make(at(&p, i), at(&eps, i), at(&s0, i), at(&dx, i)))
                    .collect()
            }
        }
    }

    /// Canonical text form: every key, fixed order, shortest round-trip floats.
    pub fn to_canonical(&self) -> String {
        let sc = &self.scenario;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("scenario.p", sc.p.to_string());
        kv("scenario.M", sc.mass.to_string());
        kv("scenario.eps", sc.eps.to_string());
        kv("scenario.s0", sc.s0.to_string());
        kv("scenario.R", sc.half_width.to_string());
        kv("scenario.dx", sc.dx.to_string());
        kv("scenario.cfl", sc.cfl.to_string());
        kv("scenario.t_max", sc.t_max.to_string());
        kv("scenario.blowup_threshold", sc.blowup_threshold.to_string());
        kv("scenario.dt_min", sc.dt_min.to_string());
        kv("scenario.nonlinearity", sc.nonlinearity.to_string());
        kv("scenario.sample_every", sc.sample_every.to_string());
        kv("output.csv", self.outputs.csv_stem.clone());
        kv("output.summary", self.outputs.summary.clone());
        let checks: Vec<&str> = self.checks.iter().map(|c| c.name()).collect();
        kv(
            "checks.enabled",
            if checks.is_empty() { "none".into() } else { checks.join(", ") },
        );
        if let Some(sw) = &self.sweep {
            kv(
                "sweep.mode",
                match sw.mode {
                    SweepMode::Cartesian => "cartesian".into(),
                    SweepMode::Zip => "zip".into(),
                },
            );
            let list = |v: &Vec<f64>| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
            for (k, l) in [("sweep.p", &sw.p), ("sweep.eps", &sw.eps), ("sweep.s0", &sw.s0), ("sweep.dx", &sw.dx)] {
                if let Some(v) = l {
                    kv(k, list(v));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "scenario.p = 2.0\nscenario.eps = 0.5\nscenario.s0 = 10\nscenario.R = 2";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.scenario.mass, 1.0);
        assert_eq!(c.scenario.cfl, 0.9);
        assert_eq!(c.scenario.blowup_threshold, 1e8);
        assert_eq!(c.scenario.t_max, 100.0);
        assert_eq!(c.scenarios().len(), 1);
    }

    #[test]
    fn subcritical_threshold_is_rejected() {
        assert!(matches!(parse_config("scenario.p = 0.5"), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn sweep_list() {
        let c = parse_config(&format!("{MINIMAL}\nsweep.p = 1.8, 2.0, 2.2, 2.6")).unwrap();
        let ps: Vec<f64> = c.scenarios().iter().map(|s| s.p).collect();
        assert_eq!(ps, vec![1.8, 2.0, 2.2, 2.6]);
    }

    #[test]
    fn cartesian_and_zip_orders() {
        let c = parse_config("sweep.p = 2, 3\nsweep.eps = 0.1, 0.2").unwrap();
        let pts: Vec<(f64, f64)> = c.scenarios().iter().map(|s| (s.p, s.eps)).collect();
        assert_eq!(pts, vec![(2.0, 0.1), (2.0, 0.2), (3.0, 0.1), (3.0, 0.2)]);
        let z = parse_config("sweep.mode = zip\nsweep.p = 2, 3\nsweep.eps = 0.1, 0.2").unwrap();
        let pts: Vec<(f64, f64)> = z.scenarios().iter().map(|s| (s.p, s.eps)).collect();
        assert_eq!(pts, vec![(2.0, 0.1), (3.0, 0.2)]);
        assert!(parse_config("sweep.mode = zip\nsweep.p = 2, 3\nsweep.eps = 0.1").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("scenario.p = 2\n\n# note\nscenario.eps = abc").unwrap_err();
        assert_eq!(
            e,
            ConfigError::Parse {
                line: 4,
                message: "scenario.eps: expected a number, got \"abc\"".into()
            }
        );
        assert!(matches!(
            parse_config("scenario.p 2"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("scenario.p = 2\nscenario.p = 3"),
            Err(ConfigError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("scenario.q = 2"),
            Err(ConfigError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = format!("{MINIMAL}\nscenario.dx = 0.01 # finer\nchecks.enabled = holder, f0_identity\nsweep.eps = 0.1, 0.30000000000000004");
        let a = parse_config(&text).unwrap();
        let canon = a.to_canonical();
        let b = parse_config(&canon).unwrap();
        assert_eq!(a, b);
        assert_eq!(canon, b.to_canonical());
    }

    #[test]
    fn empty_sweep_list_is_rejected() {
        assert!(parse_config("sweep.p = ").is_err());
        assert!(matches!(parse_config("sweep.mode = zip"), Err(ConfigError::Invalid(_))));
    }
}
