//! Functionals `F₀`, `F₁`, `U` along a trajectory and the identities and
//! inequalities they satisfy.

use serde::{Deserialize, Serialize};

use crate::auxode::AuxFunctions;
use crate::background::Background;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quad;
use crate::wavesolver::{abs_pow, Medium, Scenario, WaveState};

/// One row of the time series. The first seven fields are the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    #[serde(rename = "F0")]
    pub f0: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub linear_energy: f64,
    /// `∫ v W ds`.
    pub int_vw: f64,
    /// `∫_{v≠0} f^{−1/(p−1)} ψ₀ ds`.
    pub holder_weight: f64,
    pub dt: f64,
}

pub const CSV_HEADER: &str = "t,F0,F1,U,l2_norm,sup_norm,linear_energy";

impl Sample {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t, self.f0, self.f1, self.u, self.l2_norm, self.sup_norm, self.linear_energy
        )
    }

    /// Evaluates every functional on the current level of `state`.
    ///
    /// Sums run over the active window only; both levels vanish outside it
    /// and at the Dirichlet ends, so this equals the trapezoid rule on the
    /// full grid.
    pub fn measure(state: &WaveState, medium: &Medium, aux: &AuxFunctions, p: f64) -> Self {
        let h = state.grid.h;
        let (lo, hi) = state.window;
        let v = &state.v_curr;
        let vp = &state.v_prev;
        let decay = (-aux.constants.a * state.t).exp();
        let (mut f0, mut f1, mut up, mut l2, mut sup, mut vw, mut hw) = (0.0, 0.0, 0.0, 0.0, 0.0f64, 0.0, 0.0);
        let mut kinetic = 0.0;
        let mut strain = 0.0;
        for i in lo..=hi {
            let x = v[i];
            f0 += x * aux.psi0[i];
            f1 += x * aux.phi1[i];
            l2 += x * x;
            sup = sup.max(x.abs());
            vw += x * medium.potential[i];
            if x != 0.0 {
                up += medium.weight[i] * abs_pow(x, p) * aux.psi0[i];
                hw += medium.weight[i].powf(-1.0 / (p - 1.0)) * aux.psi0[i];
            }
            let vt = (x - vp[i]) / state.dt;
            kinetic += vt * vt;
            strain += medium.potential[i] * x * vp[i];
        }
        for i in lo.saturating_sub(1)..=hi.min(state.grid.len - 2) {
            strain += (v[i + 1] - v[i]) * (vp[i + 1] - vp[i]) / (h * h);
        }
        Self {
            t: state.t,
            f0: f0 * h,
            f1: decay * f1 * h,
            u: (up * h).powf(1.0 / p),
            l2_norm: (l2 * h).sqrt(),
            sup_norm: sup,
            linear_energy: 0.5 * (kinetic + strain) * h,
            int_vw: vw * h,
            holder_weight: hw * h,
            dt: state.dt,
        }
    }

    /// Right-hand side of the Hölder chain, `U · (∫ f^{−1/(p−1)} ψ₀)^{(p−1)/p}`.
    pub fn holder_bound(&self, p: f64) -> f64 {
        self.u * self.holder_weight.powf((p - 1.0) / p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub scenario_hash: String,
    pub grid: Grid,
    pub p: f64,
    pub mass: f64,
    pub eps: f64,
    pub s0: f64,
    pub half_width: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "A")]
    pub a: f64,
    /// `∫ (v₁ + A v₀) φ₁ ds`, the forcing of the `F₁` inequality.
    pub f1_source: f64,
    pub nonlinearity: bool,
    pub trigger_time: Option<f64>,
}

/// Recorded samples plus the per-step sup-norm record near blow-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub samples: Vec<Sample>,
    /// `(t, sup|v|)` after every step once `sup|v|` is within
    /// [`GROWTH_DECADES`] decades of the blow-up threshold.
    pub growth: Vec<(f64, f64)>,
    pub meta: SeriesMeta,
}

pub const GROWTH_DECADES: f64 = 3.0;

/// FNV-1a over the bit patterns of the scenario fields.
pub fn scenario_hash(sc: &Scenario) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for x in [
        sc.p,
        sc.mass,
        sc.eps,
        sc.s0,
        sc.half_width,
        sc.dx,
        sc.cfl,
        sc.t_max,
        sc.blowup_threshold,
        sc.dt_min,
    ] {
        eat(x.to_bits());
    }
    eat(sc.nonlinearity as u64);
    eat(sc.sample_every as u64);
    format!("{h:016x}")
}

impl DiagnosticsSeries {
    pub fn new(sc: &Scenario, medium: &Medium, aux: &AuxFunctions) -> Self {
        let g = medium.grid;
        let a = aux.constants.a;
        let source: Vec<f64> = (0..g.len)
            .map(|i| {
                let v = crate::wavesolver::bump(g.s(i), sc.eps, sc.s0, sc.half_width);
                (v + a * v) * aux.phi1[i]
            })
            .collect();
        Self {
            samples: Vec::new(),
            growth: Vec::new(),
            meta: SeriesMeta {
                scenario_hash: scenario_hash(sc),
                grid: g,
                p: sc.p,
                mass: sc.mass,
                eps: sc.eps,
                s0: sc.s0,
                half_width: sc.half_width,
                d: aux.constants.d,
                a,
                f1_source: quad::trapezoid(&source, g.h),
                nonlinearity: sc.nonlinearity,
                trigger_time: None,
            },
        }
    }

    pub fn push(&mut self, s: Sample) {
        self.samples.push(s);
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Writes the CSV time series.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(128 * (self.samples.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.csv_row());
            out.push('\n');
        }
        out
    }
}

/// `∫ v ψ₀ ds`.
pub fn functional_f0(v: &[f64], aux: &AuxFunctions) -> f64 {
    let w: Vec<f64> = v.iter().zip(&aux.psi0).map(|(a, b)| a * b).collect();
    quad::trapezoid(&w, aux.grid.h)
}

/// `e^{−At} ∫ v φ₁ ds`.
pub fn functional_f1(v: &[f64], t: f64, aux: &AuxFunctions) -> f64 {
    let w: Vec<f64> = v.iter().zip(&aux.phi1).map(|(a, b)| a * b).collect();
    (-aux.constants.a * t).exp() * quad::trapezoid(&w, aux.grid.h)
}

/// `(∫ f |v|^p ψ₀ ds)^{1/p}` with explicit weight samples `f`.
pub fn functional_u(v: &[f64], weight: &[f64], psi0: &[f64], h: f64, p: f64) -> f64 {
    let w: Vec<f64> = (0..v.len())
        .map(|i| weight[i] * abs_pow(v[i], p) * psi0[i])
        .collect();
    quad::trapezoid(&w, h).powf(1.0 / p)
}

/// Samples whose time spacing matches the first interval, from the start
/// up to `t_end`.
fn uniform_prefix(samples: &[Sample], t_end: Option<f64>) -> (&[Sample], f64) {
    if samples.len() < 2 {
        return (samples, 0.0);
    }
    let dt = samples[1].t - samples[0].t;
    let mut n = 2;
    while n < samples.len()
        && ((samples[n].t - samples[n - 1].t) - dt).abs() <= 1e-9 * dt
        && t_end.is_none_or(|te| samples[n].t <= te)
    {
        n += 1;
    }
    (&samples[..n], dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub samples_used: usize,
    pub spacing: f64,
    /// `‖F₀″ − U^p − D∫vW‖ / ‖U^p + D∫vW‖` over interior samples.
    pub relative_residual: f64,
    pub max_abs_residual: f64,
    pub t_last: f64,
}

/// Compares centered second differences of `F₀` with `U^p + D ∫ v W` on
/// the uniformly spaced prefix of the series ending at or before `t_end`.
/// The `U^p` term is dropped for linear runs.
pub fn check_f0_identity(series: &DiagnosticsSeries, t_end: Option<f64>) -> Result<IdentityReport> {
    let (w, dt) = uniform_prefix(&series.samples, t_end);
    if w.len() < 5 {
        return Err(Error::InsufficientSamples {
            needed: 5,
            got: w.len(),
        });
    }
    let p = series.meta.p;
    let d = series.meta.d;
    let source = if series.meta.nonlinearity { 1.0 } else { 0.0 };
    let mut num = 0.0;
    let mut den = 0.0;
    let mut worst = 0.0f64;
    for k in 1..w.len() - 1 {
        let lhs = (w[k + 1].f0 - 2.0 * w[k].f0 + w[k - 1].f0) / (dt * dt);
        let rhs = source * w[k].u.powf(p) + d * w[k].int_vw;
        num += (lhs - rhs) * (lhs - rhs);
        den += rhs * rhs;
        worst = worst.max((lhs - rhs).abs());
    }
    let relative_residual = if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    };
    Ok(IdentityReport {
        samples_used: w.len(),
        spacing: dt,
        relative_residual,
        max_abs_residual: worst,
        t_last: w[w.len() - 1].t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    /// Largest `(F₀ − bound)/max(|F₀|, bound)` over the samples; `≤ 0` when
    /// the inequality holds everywhere.
    pub worst_relative_excess: f64,
    pub holds: bool,
    /// `(t, U^p (t+R)^{3(p−1)} / F₀^p)` where `F₀ > 0`.
    pub monitor: Vec<(f64, f64)>,
}

pub const HOLDER_TOLERANCE: f64 = 1e-10;

/// `F₀ ≤ U · (∫_{supp v} f^{−1/(p−1)} ψ₀)^{(p−1)/p}` at every sample.
pub fn check_holder_chain(series: &DiagnosticsSeries) -> HolderReport {
    let p = series.meta.p;
    let r = series.meta.half_width;
    let mut worst = f64::NEG_INFINITY;
    let mut monitor = Vec::new();
    for s in &series.samples {
        let bound = s.holder_bound(p);
        let scale = s.f0.abs().max(bound);
        let excess = if scale == 0.0 { 0.0 } else { (s.f0 - bound) / scale };
        worst = worst.max(excess);
        if s.f0 > 0.0 {
            monitor.push((s.t, s.u.powf(p) * (s.t + r).powf(3.0 * (p - 1.0)) / s.f0.powf(p)));
        }
    }
    if series.samples.is_empty() {
        worst = 0.0;
    }
    HolderReport {
        worst_relative_excess: worst,
        holds: worst <= HOLDER_TOLERANCE,
        monitor,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1BoundReport {
    pub f1_initial: f64,
    /// `κ ε = ∫ (v₁ + A v₀) φ₁ ds`.
    pub kappa_eps: f64,
    /// `0.5 · min(F₁(0), κ ε / (2A))`.
    pub floor: f64,
    pub min_f1: f64,
    pub first_violation: Option<(f64, f64)>,
    /// First sample where `e^{2At}F₁(t) − F₁(0) < κε/(2A) (e^{2At} − 1)(1 − tol)`.
    pub first_integral_violation: Option<(f64, f64)>,
    pub holds: bool,
}

/// Lower bound on `F₁` from `F₁′ + 2A F₁ ≥ κ ε`. With `A = 1/(2M)` this
/// reads `F₁′ + F₁/M ≥ κ ε` and gives `F₁ ≥ min(F₁(0), κ ε M)`.
pub fn check_f1_lower_bound(series: &DiagnosticsSeries, tolerance: f64) -> F1BoundReport {
    let a2 = 2.0 * series.meta.a;
    let kappa_eps = series.meta.f1_source;
    let f1_initial = series.samples.first().map_or(0.0, |s| s.f1);
    let floor = 0.5 * f1_initial.min(kappa_eps / a2);
    let mut min_f1 = f64::INFINITY;
    let mut first_violation = None;
    let mut first_integral_violation = None;
    for s in &series.samples {
        min_f1 = min_f1.min(s.f1);
        if first_violation.is_none() && s.f1 < floor {
            first_violation = Some((s.t, s.f1));
        }
        let g = (a2 * s.t).exp();
        let lhs = g * s.f1 - f1_initial;
        let rhs = kappa_eps / a2 * (g - 1.0) * (1.0 - tolerance);
        if first_integral_violation.is_none() && lhs < rhs - tolerance * f1_initial.abs() {
            first_integral_violation = Some((s.t, lhs - rhs));
        }
    }
    F1BoundReport {
        f1_initial,
        kappa_eps,
        floor,
        min_f1,
        holds: first_violation.is_none() && first_integral_violation.is_none(),
        first_violation,
        first_integral_violation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupFit {
    pub t_fit: f64,
    pub alpha_fit: f64,
    pub alpha_expected: f64,
    pub points: usize,
}

impl BlowupFit {
    pub fn alpha_relative_error(&self) -> f64 {
        (self.alpha_fit - self.alpha_expected).abs() / self.alpha_expected
    }
}

fn power_law_residual(pts: &[(f64, f64)], t: f64) -> Option<(f64, f64)> {
    let x: Vec<f64> = pts.iter().map(|(s, _)| (t - s).ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, m)| m.ln()).collect();
    let (slope, icept) = quad::linear_fit(&x, &y)?;
    let res = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - slope * a - icept).powi(2))
        .sum();
    Some((res, -slope))
}

/// Least-squares fit of `sup|v| ≈ C (T − t)^{−α}` on the final decade of
/// growth in `growth = [(t, sup)]`.
pub fn fit_blowup_exponent(growth: &[(f64, f64)], p: f64) -> Result<BlowupFit> {
    let last = growth.last().ok_or(Error::InsufficientSamples { needed: 10, got: 0 })?;
    let start = growth
        .iter()
        .position(|(_, m)| *m >= last.1 / 10.0)
        .unwrap_or(growth.len());
    let pts = &growth[start..];
    if pts.len() < 10 {
        return Err(Error::InsufficientSamples {
            needed: 10,
            got: pts.len(),
        });
    }
    let t_last = last.0;
    let span = t_last - pts[0].0;
    if !(span > 0.0) {
        return Err(Error::FitFailure("growth window has zero length".into()));
    }
    // golden-section search over log(T − t_last)
    let f = |u: f64| power_law_residual(pts, t_last + u.exp()).map_or(f64::INFINITY, |r| r.0);
    let (mut a, mut b) = ((span * 1e-8).ln(), (span * 1e3).ln());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    let u = 0.5 * (a + b);
    let t_fit = t_last + u.exp();
    let (_, alpha_fit) =
        power_law_residual(pts, t_fit).ok_or_else(|| Error::FitFailure("degenerate growth window".into()))?;
    if !alpha_fit.is_finite() || !(alpha_fit > 0.0) {
        return Err(Error::FitFailure(format!("non-positive exponent {alpha_fit}")));
    }
    Ok(BlowupFit {
        t_fit,
        alpha_fit,
        alpha_expected: 2.0 / (p - 1.0),
        points: pts.len(),
    })
}

/// Maxima of the two weight envelopes on one grid:
/// `(fψ₀)^{−1/(p−1)} W^{p/(p−1)} (1+|s|)²` and `f^{−1/(p−1)} ψ₀ (1+|s|)^{−2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeMaxima {
    pub source_weight: f64,
    pub holder_weight: f64,
}

pub fn envelope_maxima(bg: &Background, aux: &AuxFunctions, p: f64) -> Result<EnvelopeMaxima> {
    let g = aux.grid;
    let mut m = EnvelopeMaxima {
        source_weight: 0.0,
        holder_weight: 0.0,
    };
    let e = -1.0 / (p - 1.0);
    for i in 0..g.len {
        let s = g.s(i);
        let c = bg.coefficients(s, p)?;
        let psi = aux.psi0[i];
        let w = 1.0 + s.abs();
        let a = (c.weight * psi).powf(e) * c.potential.powf(p / (p - 1.0)) * w * w;
        let b = c.weight.powf(e) * psi / (w * w);
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("weight envelope"));
        }
        m.source_weight = m.source_weight.max(a);
        m.holder_weight = m.holder_weight.max(b);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub fitted: EnvelopeMaxima,
    pub constant: EnvelopeMaxima,
    pub verified: EnvelopeMaxima,
    pub holds: bool,
}

/// Headroom applied to the fitted envelope constants.
pub const ENVELOPE_HEADROOM: f64 = 1.1;

/// Fits the envelope constants on `fit` and checks them on `verify`.
pub fn check_envelopes(
    fit: (&Background, &AuxFunctions),
    verify: (&Background, &AuxFunctions),
    p: f64,
) -> Result<EnvelopeReport> {
    let fitted = envelope_maxima(fit.0, fit.1, p)?;
    let constant = EnvelopeMaxima {
        source_weight: ENVELOPE_HEADROOM * fitted.source_weight,
        holder_weight: ENVELOPE_HEADROOM * fitted.holder_weight,
    };
    let verified = envelope_maxima(verify.0, verify.1, p)?;
    Ok(EnvelopeReport {
        fitted,
        constant,
        verified,
        holds: verified.source_weight <= constant.source_weight
            && verified.holder_weight <= constant.holder_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::Exec;

    fn sample(t: f64, f0: f64, u: f64, int_vw: f64) -> Sample {
        Sample {
            t,
            f0,
            f1: 1.0,
            u,
            l2_norm: 0.0,
            sup_norm: 0.0,
            linear_energy: 0.0,
            int_vw,
            holder_weight: 1.0,
            dt: 0.1,
        }
    }

    fn series(samples: Vec<Sample>, p: f64, d: f64) -> DiagnosticsSeries {
        DiagnosticsSeries {
            samples,
            growth: Vec::new(),
            meta: SeriesMeta {
                scenario_hash: String::new(),
                grid: Grid::covering(-1.0, 1.0, 0.1).unwrap(),
                p,
                mass: 1.0,
                eps: 1.0,
                s0: 0.0,
                half_width: 1.0,
                d,
                a: 0.5,
                f1_source: 1.0,
                nonlinearity: true,
                trigger_time: None,
            },
        }
    }

    #[test]
    fn csv_row_uses_seventeen_digits() {
        let row = sample(0.1, 1.0 / 3.0, 0.0, 0.0).csv_row();
        let first = row.split(',').next().unwrap();
        assert_eq!(first, "1.0000000000000001e-1");
        assert_eq!(row.split(',').count(), 7);
    }

    #[test]
    fn f0_identity_on_synthetic_quadratic() {
        // F₀ = t², U^p = 1 (p = 2, U = 1), D∫vW = 1: F₀″ = 2 = 1 + 1.
        let s: Vec<Sample> = (0..20)
            .map(|k| {
                let t = 0.1 * k as f64;
                sample(t, t * t, 1.0, 0.5)
            })
            .collect();
        let r = check_f0_identity(&series(s, 2.0, 2.0), None).unwrap();
        assert!(r.relative_residual < 1e-10, "{r:?}");
        assert_eq!(r.samples_used, 20);
    }

    #[test]
    fn f0_identity_needs_five_samples() {
        let s: Vec<Sample> = (0..4).map(|k| sample(k as f64, 0.0, 0.0, 0.0)).collect();
        assert!(matches!(
            check_f0_identity(&series(s, 2.0, 1.0), None),
            Err(Error::InsufficientSamples { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn zero_series_passes_identity_and_holder() {
        let s: Vec<Sample> = (0..8).map(|k| sample(k as f64, 0.0, 0.0, 0.0)).collect();
        let ser = series(s, 2.0, 1.0);
        assert_eq!(check_f0_identity(&ser, None).unwrap().relative_residual, 0.0);
        assert!(check_holder_chain(&ser).holds);
    }

    #[test]
    fn uniform_prefix_stops_at_adaptive_steps() {
        let mut ts: Vec<f64> = (0..10).map(|k| k as f64 * 0.5).collect();
        ts.extend([4.7, 4.8]);
        let s: Vec<Sample> = ts.iter().map(|t| sample(*t, 0.0, 0.0, 0.0)).collect();
        let (w, dt) = uniform_prefix(&s, None);
        assert_eq!(w.len(), 10);
        assert_eq!(dt, 0.5);
    }

    #[test]
    fn exact_power_law_fit() {
        let growth: Vec<(f64, f64)> = (0..40)
            .map(|k| {
                let t = 1.0 - 0.1 * 0.93f64.powi(k);
                (t, (1.0 - t).powi(-2))
            })
            .collect();
        let fit = fit_blowup_exponent(&growth, 2.0).unwrap();
        assert!((fit.t_fit - 1.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.alpha_fit - 2.0).abs() < 1e-5);
    }

    #[test]
    fn short_growth_window_is_rejected() {
        let growth = vec![(0.0, 1.0), (0.5, 4.0), (0.9, 100.0)];
        assert!(fit_blowup_exponent(&growth, 2.0).is_err());
    }

    #[test]
    fn u_closed_form_on_constant_window() {
        let g = Grid::covering(0.0, 2.0, 0.01).unwrap();
        let c = 0.7;
        let v: Vec<f64> = g.nodes().iter().map(|s| if *s >= 0.5 && *s <= 1.5 { c } else { 0.0 }).collect();
        let ones = vec![1.0; g.len];
        let u = functional_u(&v, &ones, &ones, g.h, 3.0);
        // the trapezoid rule sees a window of width 1 + h between half-weighted jumps
        let expect = ((1.0 + g.h) * c * c * c).powf(1.0 / 3.0);
        assert!((u - expect).abs() < 1e-3 * expect, "{u} {expect}");
    }

    #[test]
    fn functionals_vanish_on_zero_and_are_linear() {
        let grid = Grid::covering(-20.0, 30.0, 0.05).unwrap();
        let bg = Background::new(1.0, -20.0, 30.0).unwrap();
        let aux = AuxFunctions::build(&bg, &grid, Exec::Sequential).unwrap();
        let z = vec![0.0; grid.len];
        assert_eq!(functional_f0(&z, &aux), 0.0);
        assert_eq!(functional_f1(&z, 3.0, &aux), 0.0);
        let a: Vec<f64> = grid.nodes().iter().map(|s| (0.3 * s).sin()).collect();
        let b: Vec<f64> = grid.nodes().iter().map(|s| (-0.01 * s * s).exp()).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        let lhs = functional_f0(&ab, &aux);
        let rhs = 2.0 * functional_f0(&a, &aux) - 0.5 * functional_f0(&b, &aux);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }
}
