//! Exponent bookkeeping and comparison ODEs behind the blow-up argument.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSeries;
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::quad;

/// Positive root of `(n−1)p² − (n+1)p − 2 = 0`.
pub fn critical_exponent(n: u32) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension must be at least 2, got {n}")));
    }
    let n = n as f64;
    Ok(((n + 1.0) + ((n + 1.0) * (n + 1.0) + 8.0 * (n - 1.0)).sqrt()) / (2.0 * (n - 1.0)))
}

/// `a_{k+1} = p a_k − q + 2`, `p_{k+1} = p_k²` with `p₀ = p`, iterated `k` times.
pub fn exponent_recurrence(a0: f64, p: f64, q: f64, k: usize) -> (f64, f64) {
    let mut a = a0;
    let mut pk = p;
    for _ in 0..k {
        a = p * a - q + 2.0;
        pk *= pk;
    }
    (a, pk)
}

/// `[(a_0, p_0), …, (a_k, p_k)]`.
pub fn recurrence_table(a0: f64, p: f64, q: f64, k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k + 1);
    let (mut a, mut pk) = (a0, p);
    out.push((a, pk));
    for _ in 0..k {
        a = p * a - q + 2.0;
        pk *= pk;
        out.push((a, pk));
    }
    out
}

/// The growth condition `(p−1)a > q−2`.
pub fn growth_condition(p: f64, q: f64, a: f64) -> bool {
    (p - 1.0) * a > q - 2.0
}

/// Exponents used for `p ∈ (1, 1+√2)`: `q = 3(p−1)`, `a = 4 − p − ε₀`.
pub fn exponent_choices(p: f64, eps0: f64) -> (f64, f64) {
    (3.0 * (p - 1.0), 4.0 - p - eps0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoParams {
    pub p: f64,
    pub q: f64,
    pub a: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    pub delta1: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    pub eps: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub eps0: f64,
}

impl KatoParams {
    /// Parameters with the standard exponent choices, `C = 1`, `C₀ = 1` and
    /// `δ₁ = min(0.5, M/2)`; `δ` and `T₁` follow the schedule when `p > 2`.
    pub fn standard(p: f64, mass: f64, eps: f64, r: f64, eps0: f64) -> Result<Self> {
        let (q, a) = exponent_choices(p, eps0);
        let delta1 = default_delta1(mass);
        let sched = schedule(eps, p, mass, r, 1.0, delta1)?;
        Ok(Self {
            p,
            q,
            a,
            r,
            c: 1.0,
            delta: sched.delta.unwrap_or(0.0),
            delta1,
            t1: sched.t1.unwrap_or(0.0),
            eps,
            c0: 1.0,
            eps0,
        })
    }

    pub fn condition(&self) -> bool {
        growth_condition(self.p, self.q, self.a)
    }
}

pub fn default_delta1(mass: f64) -> f64 {
    0.5f64.min(mass / 2.0)
}

/// `(x₀, x₀(T₁)) = (2 C^{1/(p−1)}, 2 e^{−δ T₁/(p−1)})`.
pub fn thresholds(params: &KatoParams) -> (f64, f64) {
    let e = 1.0 / (params.p - 1.0);
    (
        2.0 * params.c.powf(e),
        2.0 * (-params.delta * params.t1 * e).exp(),
    )
}

/// `K(x) = x^p − C x`.
pub fn kato_k(x: f64, c: f64, p: f64) -> f64 {
    x.powf(p) - c * x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// `T₁ = e^{C₀/ε}`, only for `p > 2`.
    #[serde(rename = "T1")]
    pub t1: Option<f64>,
    pub s0: f64,
    /// `δ = δ₁(p−2)/(2Mp)`, only for `p > 2`.
    pub delta: Option<f64>,
}

/// Data placement prescribed for a given `ε`.
pub fn schedule(eps: f64, p: f64, mass: f64, r: f64, c0: f64, delta1: f64) -> Result<Schedule> {
    let pc = 1.0 + 2f64.sqrt();
    if !(p > 1.0 && p < pc) {
        return Err(Error::Domain(format!("p must lie in (1, 1+√2), got {p}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let big = (c0 / eps).exp();
    if !big.is_finite() {
        return Err(Error::NonFinite("e^{C0/eps}"));
    }
    if p == 2.0 {
        return Ok(Schedule {
            t1: None,
            s0: 0.0,
            delta: None,
        });
    }
    if p < 2.0 {
        return Ok(Schedule {
            t1: None,
            s0: big,
            delta: None,
        });
    }
    if !(delta1 > 0.0 && delta1 < 1.0 && delta1 < mass) {
        return Err(Error::Domain(format!(
            "delta1 must lie in (0, min(1, M)), got {delta1} with M = {mass}"
        )));
    }
    Ok(Schedule {
        t1: Some(big),
        s0: -(1.0 + delta1) * big - r,
        delta: Some(delta1 * (p - 2.0) / (2.0 * mass * p)),
    })
}

/// Outcome of integrating the comparison ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lifespan {
    pub blown_up: bool,
    /// Blow-up time estimate.
    #[serde(rename = "T")]
    pub t_blowup: Option<f64>,
    /// Interval known to contain the blow-up time.
    pub bracket: Option<(f64, f64)>,
    pub t_end: f64,
    pub v_end: f64,
    pub steps: usize,
    /// `(t, V)` at accepted steps, thinned to at most ~4000 entries.
    pub record: Vec<(f64, f64)>,
}

/// Magnitude at which `V` counts as blown up.
pub const LIFESPAN_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonOde {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub c: f64,
}

impl ComparisonOde {
    fn rhs(&self, t: f64, y: [f64; 2]) -> [f64; 2] {
        let v = y[0].max(0.0);
        [y[1], self.c * (t + self.r).powf(-self.q) * v.powf(self.p)]
    }
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn dp_step(ode: &ComparisonOde, t: f64, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
    let mut k = [[0.0; 2]; 7];
    for s in 0..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = ode.rhs(t + C[s] * h, ys);
    }
    let mut y5 = y;
    let mut y4 = y;
    for s in 0..7 {
        for c in 0..2 {
            y5[c] += h * B5[s] * k[s][c];
            y4[c] += h * B4[s] * k[s][c];
        }
    }
    let err = (0..2)
        .map(|c| (y5[c] - y4[c]).abs() / (1e-14 + y5[c].abs().max(y[c].abs())))
        .fold(0.0f64, f64::max);
    (y5, err)
}

/// Integrates `V″ = c (t+R)^{−q} V^p` from `t = 0` with relative tolerance
/// `rtol` until `V > 1e12` or `t = t_cap`.
pub fn lifespan_ode(ode: &ComparisonOde, v0: f64, v0p: f64, t_cap: f64, rtol: f64) -> Result<Lifespan> {
    if !(ode.p > 1.0) || !(ode.c > 0.0) || !(ode.r > 0.0) {
        return Err(Error::Domain("comparison ODE needs p > 1, c > 0, R > 0".into()));
    }
    if !(v0 > 0.0) || !(rtol > 0.0) || !(t_cap > 0.0) {
        return Err(Error::Domain("comparison ODE needs V0 > 0, rtol > 0, t_cap > 0".into()));
    }
    let alpha = 2.0 / (ode.p - 1.0);
    let mut t = 0.0;
    let mut y = [v0, v0p];
    let mut h = (1e-3 * t_cap).min(1e-2);
    let mut steps = 0usize;
    let mut record = vec![(t, y[0])];
    let mut stride = 1usize;
    let finish = |t: f64, y: [f64; 2], steps, mut record: Vec<(f64, f64)>, blown: bool| {
        record.push((t, y[0]));
        let (t_blowup, bracket) = if blown {
            let rest = if y[1] > 0.0 { alpha * y[0] / y[1] } else { 0.0 };
            (Some(t + rest), Some((t, t + 2.0 * rest)))
        } else {
            (None, None)
        };
        Lifespan {
            blown_up: blown,
            t_blowup,
            bracket,
            t_end: t,
            v_end: y[0],
            steps,
            record,
        }
    };
    while t < t_cap {
        if y[0] > LIFESPAN_CAP {
            return Ok(finish(t, y, steps, record, true));
        }
        h = h.min(t_cap - t);
        let (yn, err) = dp_step(ode, t, y, h);
        let err = err / rtol;
        if err <= 1.0 && yn.iter().all(|x| x.is_finite()) {
            t += h;
            y = yn;
            steps += 1;
            if steps.is_multiple_of(stride) {
                record.push((t, y[0]));
                if record.len() > 4000 {
                    record = record.into_iter().step_by(2).collect();
                    stride *= 2;
                }
            }
        }
        let factor = if err.is_finite() && err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else if err == 0.0 {
            5.0
        } else {
            0.2
        };
        h *= factor;
        if h < 1e-15 * (1.0 + t) {
            // the step collapsed against the singularity
            return Ok(finish(t, y, steps, record, true));
        }
    }
    Ok(finish(t, y, steps, record, false))
}

/// Runs the comparison ODE over a set of `(c, V0)` points; output order
/// follows the input order.
pub fn lifespan_lattice(
    base: &ComparisonOde,
    points: &[(f64, f64)],
    v0p: f64,
    t_cap: f64,
    rtol: f64,
    exec: Exec,
) -> Vec<Result<Lifespan>> {
    exec.map_jobs(points, |&(c, v0)| {
        lifespan_ode(&ComparisonOde { c, ..*base }, v0, v0p, t_cap, rtol)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub k: usize,
    pub a_k: f64,
    pub p_k: f64,
    /// Best constant in `U^p ≥ c_k ε^{p_k} (t+R)^{a_k−2}` on the window.
    pub c_k: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub stages: Vec<Stage>,
    pub window: (f64, f64),
    pub samples: usize,
    /// Fitted slope of `log U^p` against `log(t+R)`.
    pub measured_slope: f64,
    /// `2 − p − ε₀`.
    pub lower_exponent: f64,
}

/// Stage constants of the bootstrap along a simulated series, on the
/// uniformly spaced samples with `t ∈ (0, t_end]`.
pub fn bootstrap_trace(
    series: &DiagnosticsSeries,
    params: &KatoParams,
    stages: usize,
    t_end: Option<f64>,
) -> Result<BootstrapReport> {
    let s = &series.samples;
    let spacing = if s.len() >= 2 { s[1].t - s[0].t } else { 0.0 };
    let mut window = Vec::new();
    for (k, x) in s.iter().enumerate() {
        if k >= 2 && ((x.t - s[k - 1].t) - spacing).abs() > 1e-9 * spacing {
            break;
        }
        if t_end.is_some_and(|te| x.t > te) {
            break;
        }
        if x.t > 0.0 && x.u > 0.0 {
            window.push((x.t, x.u.powf(params.p)));
        }
    }
    bootstrap_from_pairs(&window, params, stages)
}

/// As [`bootstrap_trace`] on explicit `(t, U^p)` pairs.
pub fn bootstrap_from_pairs(window: &[(f64, f64)], params: &KatoParams, stages: usize) -> Result<BootstrapReport> {
    if window.len() < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            got: window.len(),
        });
    }
    let r = params.r;
    let table = recurrence_table(params.a, params.p, params.q, stages);
    let stages = table
        .iter()
        .enumerate()
        .map(|(k, &(a_k, p_k))| {
            let c_k = window
                .iter()
                .map(|(t, up)| up / (params.eps.powf(p_k) * (t + r).powf(a_k - 2.0)))
                .fold(f64::INFINITY, f64::min);
            Stage {
                k,
                a_k,
                p_k,
                c_k,
                positive: c_k > 0.0 && c_k.is_finite(),
            }
        })
        .collect();
    let x: Vec<f64> = window.iter().map(|(t, _)| (t + r).ln()).collect();
    let y: Vec<f64> = window.iter().map(|(_, up)| up.ln()).collect();
    let (measured_slope, _) =
        quad::linear_fit(&x, &y).ok_or_else(|| Error::FitFailure("degenerate bootstrap window".into()))?;
    Ok(BootstrapReport {
        stages,
        window: (window[0].0, window[window.len() - 1].0),
        samples: window.len(),
        measured_slope,
        lower_exponent: 2.0 - params.p - params.eps0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_exponents() {
        assert!((critical_exponent(3).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-12);
        assert!((critical_exponent(2).unwrap() - 3.5615528128088303).abs() < 1e-12);
        assert!(critical_exponent(1).is_err());
    }

    #[test]
    fn recurrence_examples() {
        let t = recurrence_table(1.9, 2.0, 3.0, 2);
        assert!((t[1].0 - 2.8).abs() < 1e-12 && (t[2].0 - 4.6).abs() < 1e-12);
        assert_eq!((t[1].1, t[2].1), (4.0, 16.0));
        // fixed point (p−1)a₀ = q−2
        let (a, _) = exponent_recurrence(2.0, 2.5, 5.0, 30);
        assert!((a - 2.0).abs() < 1e-9);
    }

    #[test]
    fn threshold_formulas() {
        let mut k = KatoParams::standard(2.2, 1.0, 0.5, 2.0, 0.1).unwrap();
        k.c = 1.0;
        k.p = 2.0;
        k.delta = 0.5;
        k.t1 = 10.0;
        let (x0, x1) = thresholds(&k);
        assert_eq!(x0, 2.0);
        assert!((x1 - 2.0 * (-5f64).exp()).abs() < 1e-15);
        assert!((kato_k(x0, 1.0, 2.0) / x0.powi(2) - 0.5).abs() < 1e-15);
        // only p = 2 gives one half: K(x₀)/x₀^p = 1 − 2^{1−p}
        for (p, c) in [(1.5, 0.7), (2.2, 3.0), (2.4, 1.0)] {
            k.p = p;
            k.c = c;
            let x0 = thresholds(&k).0;
            let ratio = kato_k(x0, c, p) / x0.powf(p);
            assert!((ratio - (1.0 - 2f64.powf(1.0 - p))).abs() < 1e-14, "p = {p}: {ratio}");
        }
    }

    #[test]
    fn schedule_branches() {
        let s = schedule(0.5, 2.2, 1.0, 2.0, 1.0, 0.5).unwrap();
        let e2 = 2f64.exp();
        assert!((s.t1.unwrap() - e2).abs() < 1e-12);
        assert!((s.s0 - (-1.5 * e2 - 2.0)).abs() < 1e-12);
        assert!((s.delta.unwrap() - 0.5 * 0.2 / 4.4).abs() < 1e-15);
        assert!((schedule(0.5, 1.5, 1.0, 2.0, 1.0, 0.5).unwrap().s0 - e2).abs() < 1e-12);
        assert_eq!(schedule(0.5, 2.0, 1.0, 2.0, 1.0, 0.5).unwrap().s0, 0.0);
        assert!(schedule(0.5, 2.5, 1.0, 2.0, 1.0, 0.5).is_err());
        assert!(schedule(0.5, 2.2, 0.4, 2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn free_growth_without_nonlinear_push() {
        let ode = ComparisonOde {
            p: 1.5,
            q: 10.0,
            r: 1.0,
            c: 1.0,
        };
        let out = lifespan_ode(&ode, 0.1, 0.0, 1e4, 1e-10).unwrap();
        assert!(!out.blown_up);
        assert_eq!(out.t_end, 1e4);
        // V′ freezes once the weight has decayed, so growth is at most linear
        let (t1, v1) = out.record[out.record.len() / 2];
        let slope = (out.v_end - v1) / (out.t_end - t1);
        assert!(slope > 0.0 && out.v_end <= 0.1 + 1.01 * slope * out.t_end, "{slope} {}", out.v_end);
    }

    #[test]
    fn synthetic_bootstrap_recovers_exponent() {
        let params = KatoParams::standard(2.0, 1.0, 0.3, 2.0, 0.1).unwrap();
        let w: Vec<(f64, f64)> = (1..50)
            .map(|k| {
                let t = k as f64 * 0.5;
                (t, 0.3f64.powf(2.0) * (t + 2.0).powf(params.a - 2.0))
            })
            .collect();
        let rep = bootstrap_from_pairs(&w, &params, 3).unwrap();
        assert!((rep.measured_slope - (params.a - 2.0)).abs() < 1e-12);
        assert!((rep.stages[0].c_k - 1.0).abs() < 1e-12);
        assert!(rep.stages.iter().all(|s| s.positive));
    }
}
