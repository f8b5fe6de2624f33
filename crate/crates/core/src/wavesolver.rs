//! Explicit leapfrog integration of `v_tt − v_ss + W v = f |v|^p` on a
//! uniform tortoise grid, with blow-up detection.
//!
//! The domain is sized so the pulse never reaches the Dirichlet boundary,
//! and the update only sweeps the window where the field can be nonzero
//! (exact zeros stay exact zeros under the stencil).

use serde::{Deserialize, Serialize};

use crate::auxode::AuxFunctions;
use crate::background::{Background, CoefficientTable};
use crate::diagnostics::{DiagnosticsSeries, Sample, GROWTH_DECADES};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par::Exec;

/// Scenario parameters. `R` is `half_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub p: f64,
    pub mass: f64,
    pub eps: f64,
    pub s0: f64,
    pub half_width: f64,
    pub dx: f64,
    pub cfl: f64,
    pub t_max: f64,
    pub blowup_threshold: f64,
    pub nonlinearity: bool,
    /// Record diagnostics every this many steps.
    pub sample_every: usize,
    /// Smallest admissible adaptive step.
    pub dt_min: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            p: 2.0,
            mass: 1.0,
            eps: 0.5,
            s0: 10.0,
            half_width: 2.0,
            dx: 0.02,
            cfl: 0.9,
            t_max: 100.0,
            blowup_threshold: 1e8,
            nonlinearity: true,
            sample_every: 20,
            dt_min: 1e-12,
        }
    }
}

/// Margin between the light cone of the data and the Dirichlet boundary.
pub const DOMAIN_MARGIN: f64 = 5.0;
/// Adaptive cap `dt ≤ ADAPTIVE_FACTOR · sup|v|^{−(p−1)/2}`.
pub const ADAPTIVE_FACTOR: f64 = 0.1;

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.p > 1.0) || !self.p.is_finite() {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        if !(self.mass > 0.0) {
            return bad(format!("M must be positive, got {}", self.mass));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.half_width > 0.0) {
            return bad(format!("R must be positive, got {}", self.half_width));
        }
        if !(self.dx > 0.0 && self.dx <= self.half_width / 10.0) {
            return bad(format!(
                "dx must lie in (0, R/10] = (0, {}], got {}",
                self.half_width / 10.0,
                self.dx
            ));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if !(self.blowup_threshold > 0.0) {
            return bad(format!("blowup_threshold must be positive, got {}", self.blowup_threshold));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        if !self.s0.is_finite() {
            return bad(format!("s0 must be finite, got {}", self.s0));
        }
        Ok(())
    }

    pub fn base_dt(&self) -> f64 {
        self.cfl * self.dx
    }

    /// Aligned grid covering `[s₀ − R − t_max − 5, s₀ + R + t_max + 5]`.
    pub fn grid(&self) -> Result<Grid> {
        let reach = self.half_width + self.t_max + DOMAIN_MARGIN;
        Grid::covering(self.s0 - reach, self.s0 + reach, self.dx)
    }

    pub fn background(&self) -> Result<Background> {
        let g = self.grid()?;
        Background::new(self.mass, g.s_min(), g.s_max())
    }

    /// Same scenario at half the grid spacing.
    pub fn refined(&self) -> Self {
        Self {
            dx: self.dx / 2.0,
            ..self.clone()
        }
    }
}

/// `ε · 35/(32R) · (1 − ((s − s₀)/R)²)³` on `|s − s₀| ≤ R`: a C² bump of unit
/// shape integral, used for both `v₀` and `v₁`.
pub fn bump(s: f64, eps: f64, s0: f64, half_width: f64) -> f64 {
    let x = (s - s0) / half_width;
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let q = 1.0 - x * x;
    eps * 35.0 / (32.0 * half_width) * q * q * q
}

/// `(v₀, v₁)` on the scenario grid.
pub fn make_initial_data(sc: &Scenario, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let v: Vec<f64> = (0..grid.len)
        .map(|i| bump(grid.s(i), sc.eps, sc.s0, sc.half_width))
        .collect();
    (v.clone(), v)
}

/// Coefficients seen by the stepper.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub grid: Grid,
    pub potential: Vec<f64>,
    pub weight: Vec<f64>,
}

impl From<CoefficientTable> for Medium {
    fn from(t: CoefficientTable) -> Self {
        Self {
            grid: t.grid,
            potential: t.potential,
            weight: t.weight,
        }
    }
}

impl Medium {
    /// Constant coefficients, for manufactured tests.
    pub fn uniform(grid: Grid, potential: f64, weight: f64) -> Self {
        Self {
            grid,
            potential: vec![potential; grid.len],
            weight: vec![weight; grid.len],
        }
    }
}

/// Field at two time levels.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    pub grid: Grid,
    pub v_curr: Vec<f64>,
    pub v_prev: Vec<f64>,
    /// Step that led from `v_prev` to `v_curr`.
    pub dt: f64,
    pub steps: u64,
    /// Index range `[lo, hi]` outside which both levels vanish identically.
    pub window: (usize, usize),
}

impl WaveState {
    pub fn sup_norm(&self) -> f64 {
        let (lo, hi) = self.window;
        self.v_curr[lo..=hi].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Time derivative at the half step, `(v_curr − v_prev)/dt`.
    pub fn velocity(&self) -> Vec<f64> {
        self.v_curr
            .iter()
            .zip(&self.v_prev)
            .map(|(a, b)| (a - b) / self.dt)
            .collect()
    }
}

/// Why a run stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    Threshold,
    Nan,
    AdaptiveDtFloor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepStatus {
    Advanced,
    Stopped(Trigger),
}

/// `|v|^p` as `exp(p log|v|)`, zero at zero.
#[inline]
pub fn abs_pow(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        (p * v.abs().ln()).exp()
    }
}

/// Leapfrog stepper over a fixed medium.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    pub medium: &'a Medium,
    pub p: f64,
    pub nonlinearity: bool,
    pub base_dt: f64,
    pub dt_min: f64,
    pub blowup_threshold: f64,
    pub exec: Exec,
    /// Disable to integrate at fixed `base_dt`.
    pub adaptive: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(sc: &Scenario, medium: &'a Medium, exec: Exec) -> Self {
        Self {
            medium,
            p: sc.p,
            nonlinearity: sc.nonlinearity,
            base_dt: sc.base_dt(),
            dt_min: sc.dt_min,
            blowup_threshold: sc.blowup_threshold,
            exec,
            adaptive: true,
        }
    }

    #[inline]
    fn accel(&self, v: &[f64], i: usize) -> f64 {
        let h = self.medium.grid.h;
        let lap = ((v[i - 1] + v[i + 1]) - 2.0 * v[i]) / (h * h);
        let mut a = lap - self.medium.potential[i] * v[i];
        if self.nonlinearity {
            a += self.medium.weight[i] * abs_pow(v[i], self.p);
        }
        a
    }

    /// State at `t = 0`. The lower level is the backward Taylor level
    /// `v⁰ − dt v₁ + dt²/2 a(v⁰)`, which makes the first leapfrog step equal
    /// to the forward Taylor start `v⁰ + dt v₁ + dt²/2 a(v⁰)`.
    pub fn initial_state(&self, v0: &[f64], v1: &[f64]) -> WaveState {
        let grid = self.medium.grid;
        let n = grid.len;
        let dt = self.base_dt;
        let mut prev = vec![0.0; n];
        let nz = |v: &[f64]| v.iter().position(|x| *x != 0.0);
        let lo = nz(v0).into_iter().chain(nz(v1)).min().unwrap_or(n / 2);
        let hi = v0
            .iter()
            .rposition(|x| *x != 0.0)
            .into_iter()
            .chain(v1.iter().rposition(|x| *x != 0.0))
            .max()
            .unwrap_or(n / 2);
        let (lo, hi) = (lo.saturating_sub(1).max(1), (hi + 1).min(n - 2));
        for i in lo..=hi {
            prev[i] = v0[i] - dt * v1[i] + 0.5 * dt * dt * self.accel(v0, i);
        }
        WaveState {
            t: 0.0,
            grid,
            v_curr: v0.to_vec(),
            v_prev: prev,
            dt,
            steps: 0,
            window: (lo, hi),
        }
    }

    /// Step size for the next update.
    pub fn next_dt(&self, sup: f64) -> f64 {
        if !self.adaptive || !self.nonlinearity || sup <= 0.0 {
            return self.base_dt;
        }
        let cap = ADAPTIVE_FACTOR * sup.powf(-(self.p - 1.0) / 2.0);
        self.base_dt.min(cap)
    }

    /// One leapfrog update, in place; `scratch` is reused between calls.
    pub fn step(&self, state: &mut WaveState, scratch: &mut Vec<f64>) -> StepStatus {
        let n = state.grid.len;
        let sup = state.sup_norm();
        let dt = self.next_dt(sup);
        if dt < self.dt_min {
            return StepStatus::Stopped(Trigger::AdaptiveDtFloor);
        }
        let ratio = dt / state.dt;
        let (lo, hi) = state.window;
        let (lo, hi) = (lo.saturating_sub(1).max(1), (hi + 1).min(n - 2));
        scratch.resize(n, 0.0);
        {
            let v = &state.v_curr;
            let vp = &state.v_prev;
            let out = &mut scratch[lo..=hi];
            if ratio == 1.0 {
                let dt2 = dt * dt;
                self.exec.fill(out, lo, |i| 2.0 * v[i] - vp[i] + dt2 * self.accel(v, i));
            } else {
                let c = 0.5 * dt * (dt + state.dt);
                self.exec
                    .fill(out, lo, |i| v[i] + ratio * (v[i] - vp[i]) + c * self.accel(v, i));
            }
        }
        // prev <- curr, curr <- next
        std::mem::swap(&mut state.v_prev, &mut state.v_curr);
        std::mem::swap(&mut state.v_curr, scratch);
        // scratch now holds the old lower level, which lives inside the old window
        let (olo, ohi) = state.window;
        for x in &mut scratch[olo..=ohi] {
            *x = 0.0;
        }
        state.window = (lo, hi);
        state.t += dt;
        state.dt = dt;
        state.steps += 1;

        let mut sup_new = 0.0f64;
        for x in &state.v_curr[lo..=hi] {
            if !x.is_finite() {
                return StepStatus::Stopped(Trigger::Nan);
            }
            sup_new = sup_new.max(x.abs());
        }
        if sup_new > self.blowup_threshold {
            return StepStatus::Stopped(Trigger::Threshold);
        }
        StepStatus::Advanced
    }
}

/// One step of the scenario's scheme on a fresh scratch buffer.
pub fn step(state: &mut WaveState, medium: &Medium, sc: &Scenario) -> StepStatus {
    let stepper = Stepper::new(sc, medium, Exec::Sequential);
    let mut scratch = Vec::new();
    stepper.step(state, &mut scratch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub detected: bool,
    /// Extrapolated blow-up time.
    pub t_est: Option<f64>,
    /// Time at which the trigger fired.
    pub t_trigger: Option<f64>,
    pub trigger: Option<Trigger>,
    /// `(dx, T_est)` for this run and any refinements.
    pub refinement_history: Vec<(f64, Option<f64>)>,
}

/// Fraction of the estimated lifespan treated as the pre-blow-up window.
pub const PRE_BLOWUP_FRACTION: f64 = 0.9;

impl BlowupReport {
    /// End of the pre-blow-up window, `0.9 · T_est`; `None` without blow-up.
    pub fn pre_blowup_end(&self) -> Option<f64> {
        self.t_est.map(|t| PRE_BLOWUP_FRACTION * t)
    }
}

/// Extrapolates `T` from the final decade of growth assuming
/// `sup|v| ~ C (T − t)^{−α}`, `α = 2/(p − 1)`.
pub fn extrapolate_blowup(history: &[(f64, f64)], p: f64) -> Option<f64> {
    let &(t2, m2) = history.last()?;
    let &(t1, m1) = history.iter().find(|(_, m)| *m >= m2 / 10.0)?;
    if !(m2 > m1) || t2 <= t1 {
        return Some(t2);
    }
    let alpha = 2.0 / (p - 1.0);
    let rho = (m2 / m1).powf(1.0 / alpha);
    Some((rho * t2 - t1) / (rho - 1.0))
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: DiagnosticsSeries,
    pub report: BlowupReport,
    pub state: WaveState,
    /// Largest `|v|` seen outside `[s₀ − R − t − dx, s₀ + R + t + dx]` at any
    /// recorded sample.
    pub support_leak: f64,
}

/// Simulation context: grid, background, medium and auxiliary weights.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub grid: Grid,
    pub background: Background,
    pub medium: Medium,
    pub aux: AuxFunctions,
}

impl Setup {
    pub fn new(sc: &Scenario, exec: Exec) -> Result<Self> {
        sc.validate()?;
        let grid = sc.grid()?;
        let background = Background::new(sc.mass, grid.s_min(), grid.s_max())?;
        let medium = Medium::from(background.tabulate(&grid, sc.p, exec)?);
        let aux = AuxFunctions::build(&background, &grid, exec)?;
        Ok(Self {
            scenario: sc.clone(),
            grid,
            background,
            medium,
            aux,
        })
    }

    pub fn run(&self, exec: Exec) -> Result<RunOutput> {
        let (v0, v1) = make_initial_data(&self.scenario, &self.grid);
        run_with(&self.scenario, &self.medium, &self.aux, &v0, &v1, exec)
    }
}

/// Builds everything and integrates to `t_max` or blow-up.
pub fn run(sc: &Scenario, exec: Exec) -> Result<RunOutput> {
    Setup::new(sc, exec)?.run(exec)
}

/// Independent runs, one job each; results keep the input order.
pub fn run_batch(scenarios: &[Scenario], exec: Exec) -> Vec<Result<RunOutput>> {
    exec.map_jobs(scenarios, |sc| run(sc, Exec::Sequential))
}

/// Appends the outcome of a run at `dx/2` to the coarse report.
pub fn merge_refinement(coarse: &mut BlowupReport, fine: &BlowupReport) {
    coarse.refinement_history.extend(fine.refinement_history.iter().copied());
}

fn support_leak(state: &WaveState, sc: &Scenario) -> f64 {
    let g = &state.grid;
    let reach = sc.half_width + state.t + g.h;
    let (lo, hi) = state.window;
    (lo..=hi)
        .filter(|&i| (g.s(i) - sc.s0).abs() > reach)
        .fold(0.0f64, |m, i| m.max(state.v_curr[i].abs()))
}

/// Integrates from explicit data on a given medium.
pub fn run_with(
    sc: &Scenario,
    medium: &Medium,
    aux: &AuxFunctions,
    v0: &[f64],
    v1: &[f64],
    exec: Exec,
) -> Result<RunOutput> {
    sc.validate()?;
    if aux.grid != medium.grid {
        return Err(Error::Domain("auxiliary weights live on a different grid".into()));
    }
    let stepper = Stepper::new(sc, medium, exec);
    let mut state = stepper.initial_state(v0, v1);
    let mut scratch = Vec::new();
    let mut series = DiagnosticsSeries::new(sc, medium, aux);
    let record = |series: &mut DiagnosticsSeries, state: &WaveState| {
        series.push(Sample::measure(state, medium, aux, sc.p));
    };
    record(&mut series, &state);
    let mut leak = support_leak(&state, sc);
    let growth_floor = sc.blowup_threshold * 10f64.powf(-GROWTH_DECADES);
    let mut trigger = None;

    while state.t < sc.t_max {
        match stepper.step(&mut state, &mut scratch) {
            StepStatus::Advanced => {}
            StepStatus::Stopped(t) => {
                trigger = Some(t);
                break;
            }
        }
        let sup = state.sup_norm();
        if sup >= growth_floor && sup.is_finite() {
            series.growth.push((state.t, sup));
        }
        if state.steps.is_multiple_of(sc.sample_every as u64) {
            record(&mut series, &state);
            leak = leak.max(support_leak(&state, sc));
        }
    }

    let report = match trigger {
        None => BlowupReport {
            detected: false,
            t_est: None,
            t_trigger: None,
            trigger: None,
            refinement_history: vec![(sc.dx, None)],
        },
        Some(tr) => {
            let t_trigger = state.t;
            if tr == Trigger::Threshold {
                series.growth.push((state.t, state.sup_norm()));
            }
            let t_est = match tr {
                Trigger::Threshold => extrapolate_blowup(&series.growth, sc.p).unwrap_or(t_trigger),
                _ => t_trigger,
            }
            .min(sc.t_max);
            BlowupReport {
                detected: true,
                t_est: Some(t_est),
                t_trigger: Some(t_trigger),
                trigger: Some(tr),
                refinement_history: vec![(sc.dx, Some(t_est))],
            }
        }
    };
    series.meta.trigger_time = report.t_trigger;
    Ok(RunOutput {
        series,
        report,
        state,
        support_leak: leak,
    })
}

/// `u = v / r`.
pub fn v_to_u(state: &WaveState, bg: &Background) -> Result<Vec<f64>> {
    (0..state.grid.len)
        .map(|i| {
            let r = bg.radius(state.grid.s(i))?.r();
            Ok(state.v_curr[i] / r)
        })
        .collect()
}

/// Discrete quadratic form `Σ ((D⁺h)² + W h²) dx` of `G = −∂² + W`.
pub fn quadratic_form(medium: &Medium, h: &[f64]) -> f64 {
    let dx = medium.grid.h;
    let mut acc = 0.0;
    for i in 0..h.len() {
        let next = h.get(i + 1).copied().unwrap_or(0.0);
        let d = (next - h[i]) / dx;
        acc += d * d + medium.potential[i] * h[i] * h[i];
    }
    // the forward difference out of node 0 is the only one missing
    acc * dx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// Smallest `⟨h, Gh⟩` over the trials.
    pub min_value: f64,
    /// Smallest `⟨h, Gh⟩ / ‖h‖²` over the nonzero trials.
    pub min_ratio: f64,
    /// Every trial satisfies `⟨h, Gh⟩ ≥ −1e−10 ‖h‖²`.
    pub passed: bool,
}

/// Evaluates the quadratic form on compactly supported trial functions.
pub fn discrete_g_positivity(medium: &Medium, trials: &[Vec<f64>], exec: Exec) -> PositivityReport {
    let vals = exec.map_jobs(trials, |h| {
        let q = quadratic_form(medium, h);
        let norm: f64 = h.iter().map(|x| x * x).sum::<f64>() * medium.grid.h;
        (q, norm)
    });
    let min_value = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let min_ratio = vals
        .iter()
        .filter(|v| v.1 > 0.0)
        .map(|v| v.0 / v.1)
        .fold(f64::INFINITY, f64::min);
    let passed = vals.iter().all(|(q, n)| *q >= -1e-10 * n);
    PositivityReport {
        min_value: if trials.is_empty() { 0.0 } else { min_value },
        min_ratio,
        passed,
    }
}
