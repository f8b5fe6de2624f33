//! Regge–Wheeler (tortoise) coordinate and the metric-derived coefficients.
//!
//! `s(r) = r + 2M log(r − 2M)` maps the exterior `r > 2M` onto the whole real
//! line. Near the horizon `r − 2M ≈ e^{(s−2M)/2M}` is far below the spacing of
//! doubles around `2M`, so every point is carried as a [`Radius`] holding the
//! horizon gap `r − 2M` explicitly; `F = gap / r` then keeps full relative
//! precision all the way down the exponential tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par::Exec;
use crate::quad;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Spacing of the Newton seed table.
pub const TABLE_SPACING: f64 = 0.1;
const MAX_ITERATIONS: usize = 200;

/// A point of the exterior region, stored through its distance to the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radius {
    mass: f64,
    gap: f64,
}

impl Radius {
    pub fn from_r(r: f64, mass: f64) -> Result<Self> {
        let gap = r - 2.0 * mass;
        Self::from_gap(gap, mass)
    }

    pub fn from_gap(gap: f64, mass: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        if !(gap > 0.0) || !gap.is_finite() {
            return Err(Error::Domain(format!(
                "r must exceed 2M = {}: r − 2M = {gap}",
                2.0 * mass
            )));
        }
        Ok(Self { mass, gap })
    }

    pub fn r(&self) -> f64 {
        2.0 * self.mass + self.gap
    }

    /// `r − 2M`, exact.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `F = 1 − 2M/r`, evaluated as `(r − 2M)/r`.
    pub fn lapse(&self) -> f64 {
        self.gap / self.r()
    }

    /// Tortoise coordinate of this point.
    pub fn tortoise(&self) -> f64 {
        self.r() + 2.0 * self.mass * self.gap.ln()
    }
}

/// `s = r + 2M log(r − 2M)`.
pub fn tortoise(r: f64, mass: f64) -> Result<f64> {
    Ok(Radius::from_r(r, mass)?.tortoise())
}

/// The unique `r > 2M` with `tortoise(r) = s`, using asymptotic seeds only.
pub fn inverse_tortoise(s: f64, mass: f64) -> Result<Radius> {
    invert(s, mass, None, DEFAULT_TOLERANCE)
}

/// Bracket `[lo, hi]` for `u = log(r − 2M)` solving
/// `h(u) = e^u + 2M u + 2M − s = 0`.
///
/// `h` is increasing and convex. `hi = (s − 2M)/2M` always has `h(hi) > 0`,
/// and so does `log s` once `s > 1`; the smaller one is kept. With `hi` fixed,
/// `lo = (s − 2M − e^hi)/2M` gives `h(lo) = e^lo − e^hi < 0`.
fn bracket(s: f64, mass: f64) -> (f64, f64) {
    let two_m = 2.0 * mass;
    let mut hi = (s - two_m) / two_m;
    if s > 1.0 {
        hi = hi.min(s.ln());
    }
    let lo = (s - two_m - hi.exp()) / two_m;
    (lo, hi)
}

fn invert(s: f64, mass: f64, seed: Option<f64>, tolerance: f64) -> Result<Radius> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("tortoise coordinate must be finite, got {s}")));
    }
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    let two_m = 2.0 * mass;
    let h = |u: f64| u.exp() + two_m * u + two_m - s;
    let (mut lo, mut hi) = bracket(s, mass);
    let mut u = seed.filter(|u| *u > lo && *u < hi).unwrap_or(hi);

    let mut residual = h(u);
    for _ in 0..MAX_ITERATIONS {
        if residual == 0.0 {
            break;
        }
        if residual > 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        let mut next = u - residual / (u.exp() + two_m);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - u).abs();
        u = next;
        residual = h(u);
        if step <= 4.0 * f64::EPSILON * u.abs().max(1.0) {
            break;
        }
    }
    if residual.abs() > tolerance * (1.0 + s.abs()) || !u.is_finite() {
        return Err(Error::Convergence {
            iterations: MAX_ITERATIONS,
            residual,
        });
    }
    Radius::from_gap(u.exp(), mass)
}

/// One evaluation of every coefficient at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSample {
    pub s: f64,
    pub r: f64,
    /// `F = 1 − 2M/r`.
    pub lapse: f64,
    /// `Λ = r / √F`.
    pub lambda: f64,
    /// Regge–Wheeler potential `W = 2MF/r³`.
    pub potential: f64,
    /// Nonlinearity weight `f = F r^{1−p}`.
    pub weight: f64,
}

impl CoefficientSample {
    fn at(s: f64, radius: Radius, p: f64) -> Self {
        let r = radius.r();
        let lapse = radius.lapse();
        let m = radius.mass();
        Self {
            s,
            r,
            lapse,
            lambda: r / lapse.sqrt(),
            potential: 2.0 * m * lapse / (r * r * r),
            weight: lapse * r.powf(1.0 - p),
        }
    }
}

/// `W` and `f` tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub grid: Grid,
    pub potential: Vec<f64>,
    pub weight: Vec<f64>,
}

/// Schwarzschild background of mass `M` over a window of the tortoise line.
///
/// Immutable after construction; share it freely across threads.
#[derive(Debug, Clone)]
pub struct Background {
    mass: f64,
    s_min: f64,
    s_max: f64,
    tolerance: f64,
    /// `log(r − 2M)` at `s_min + k · TABLE_SPACING`.
    table: Vec<f64>,
}

impl Background {
    pub fn new(mass: f64, s_min: f64, s_max: f64) -> Result<Self> {
        Self::with_tolerance(mass, s_min, s_max, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(mass: f64, s_min: f64, s_max: f64, tolerance: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Domain(format!("mass must be positive, got {mass}")));
        }
        if !(s_min < s_max) || !s_min.is_finite() || !s_max.is_finite() {
            return Err(Error::Domain(format!("empty s-domain [{s_min}, {s_max}]")));
        }
        if !(tolerance > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")));
        }
        let n = ((s_max - s_min) / TABLE_SPACING).ceil() as usize + 1;
        let mut table = Vec::with_capacity(n);
        let mut prev: Option<f64> = None;
        for k in 0..n {
            let s = s_min + k as f64 * TABLE_SPACING;
            // Consecutive nodes differ by less than Δs / 2M in u.
            let radius = invert(s, mass, prev, tolerance)?;
            let u = radius.gap().ln();
            table.push(u);
            prev = Some(u);
        }
        Ok(Self {
            mass,
            s_min,
            s_max,
            tolerance,
            table,
        })
    }

    /// Domain `[s₀ − R − t_max − 5, s₀ + R + t_max + 5]` for a compactly
    /// supported pulse of half-width `R` centred at `s₀`.
    pub fn for_pulse(mass: f64, s0: f64, half_width: f64, t_max: f64) -> Result<Self> {
        let reach = half_width + t_max + 5.0;
        Self::new(mass, s0 - reach, s0 + reach)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.s_min, self.s_max)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn seed(&self, s: f64) -> Option<f64> {
        let x = (s - self.s_min) / TABLE_SPACING;
        if !(x >= 0.0) || x > (self.table.len() - 1) as f64 {
            return None;
        }
        let k = (x.floor() as usize).min(self.table.len() - 2);
        let t = x - k as f64;
        Some(self.table[k] * (1.0 - t) + self.table[k + 1] * t)
    }

    /// `r(s)`, seeded from the cached table inside the domain.
    pub fn radius(&self, s: f64) -> Result<Radius> {
        invert(s, self.mass, self.seed(s), self.tolerance)
    }

    pub fn coefficients(&self, s: f64, p: f64) -> Result<CoefficientSample> {
        Ok(CoefficientSample::at(s, self.radius(s)?, p))
    }

    /// Regge–Wheeler potential `W(s) = 2MF/r³`.
    pub fn potential(&self, s: f64) -> Result<f64> {
        let radius = self.radius(s)?;
        let r = radius.r();
        Ok(2.0 * self.mass * radius.lapse() / (r * r * r))
    }

    /// `W` and `f` at every node of `grid`.
    pub fn tabulate(&self, grid: &Grid, p: f64, exec: Exec) -> Result<CoefficientTable> {
        let samples: Vec<Result<CoefficientSample>> =
            exec.map_range(grid.len, |i| self.coefficients(grid.s(i), p));
        let mut potential = Vec::with_capacity(grid.len);
        let mut weight = Vec::with_capacity(grid.len);
        for c in samples {
            let c = c?;
            potential.push(c.potential);
            weight.push(c.weight);
        }
        Ok(CoefficientTable {
            grid: *grid,
            potential,
            weight,
        })
    }
}

/// Min / max of one normalised quantity over one range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub quantity: String,
    pub range: (f64, f64),
    pub min: f64,
    pub max: f64,
}

impl Band {
    /// Finite, positive band.
    pub fn is_bounded(&self) -> bool {
        self.min > 0.0 && self.max.is_finite() && self.min.is_finite()
    }

    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// Least-squares log-slope of a quantity on a negative-end range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub quantity: String,
    pub range: (f64, f64),
    pub slope: f64,
    pub expected: f64,
}

impl SlopeFit {
    pub fn relative_error(&self) -> f64 {
        ((self.slope - self.expected) / self.expected).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub mass: f64,
    pub p: f64,
    pub bands: Vec<Band>,
    pub slopes: Vec<SlopeFit>,
}

impl BandReport {
    pub fn band(&self, quantity: &str, range: (f64, f64)) -> Option<&Band> {
        self.bands
            .iter()
            .find(|b| b.quantity == quantity && b.range == range)
    }

    pub fn slope(&self, quantity: &str, range: (f64, f64)) -> Option<&SlopeFit> {
        self.slopes
            .iter()
            .find(|b| b.quantity == quantity && b.range == range)
    }
}

const BAND_SAMPLES: usize = 2001;

/// Empirical asymptotic bands of `r, F, Λ, W, f` on each range.
///
/// Ranges with `s_max ≤ −2` use the horizon normalisations (`e^{±s/2M}`,
/// `e^{s/4M}`) and also get log-slope fits; ranges with `s_min ≥ 2` use the
/// far-field ones (`s`, `s³`, `s^{p−1}`); anything else reports raw values.
pub fn asymptotic_band_report(
    bg: &Background,
    p: f64,
    ranges: &[(f64, f64)],
) -> Result<BandReport> {
    let m = bg.mass();
    let mut bands = Vec::new();
    let mut slopes = Vec::new();
    for &(a, b) in ranges {
        if !(a < b) {
            return Err(Error::Domain(format!("empty band range [{a}, {b}]")));
        }
        let h = (b - a) / (BAND_SAMPLES - 1) as f64;
        let s: Vec<f64> = (0..BAND_SAMPLES).map(|i| a + i as f64 * h).collect();
        let c: Vec<CoefficientSample> = s
            .iter()
            .map(|&x| bg.coefficients(x, p))
            .collect::<Result<_>>()?;

        let mut push = |name: &str, vals: Vec<f64>| {
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            bands.push(Band {
                quantity: name.to_string(),
                range: (a, b),
                min,
                max,
            });
        };

        if b <= -2.0 {
            let e = |k: f64| c.iter().map(move |x| (k * x.s).exp());
            push(
                "(r-2M)*exp(-s/2M)",
                c.iter().zip(e(-0.5 / m)).map(|(x, w)| (x.r - 2.0 * m) * w).collect(),
            );
            push("F*exp(-s/2M)", c.iter().zip(e(-0.5 / m)).map(|(x, w)| x.lapse * w).collect());
            push("Lambda*exp(s/4M)", c.iter().zip(e(0.25 / m)).map(|(x, w)| x.lambda * w).collect());
            push("W*exp(-s/2M)", c.iter().zip(e(-0.5 / m)).map(|(x, w)| x.potential * w).collect());
            push("f*exp(-s/2M)", c.iter().zip(e(-0.5 / m)).map(|(x, w)| x.weight * w).collect());

            // r − 2M itself underflows relative precision here; refit from the gap.
            let gaps: Vec<f64> = s
                .iter()
                .map(|&x| bg.radius(x).map(|r| r.gap()))
                .collect::<Result<_>>()?;
            let mut fit = |name: &str, vals: Vec<f64>, expected: f64| -> Result<()> {
                let slope = quad::log_slope(&s, &vals)
                    .ok_or_else(|| Error::FitFailure(format!("log-slope of {name}")))?;
                slopes.push(SlopeFit {
                    quantity: name.to_string(),
                    range: (a, b),
                    slope,
                    expected,
                });
                Ok(())
            };
            fit("r-2M", gaps, 0.5 / m)?;
            fit("F", c.iter().map(|x| x.lapse).collect(), 0.5 / m)?;
            fit("Lambda", c.iter().map(|x| x.lambda).collect(), -0.25 / m)?;
            fit("W", c.iter().map(|x| x.potential).collect(), 0.5 / m)?;
            fit("f", c.iter().map(|x| x.weight).collect(), 0.5 / m)?;
        } else if a >= 2.0 {
            push("r/s", c.iter().map(|x| x.r / x.s).collect());
            push("|F-1|*s", c.iter().map(|x| (1.0 - x.lapse) * x.s).collect());
            push("Lambda/s", c.iter().map(|x| x.lambda / x.s).collect());
            push("W*s^3", c.iter().map(|x| x.potential * x.s.powi(3)).collect());
            push("f*s^(p-1)", c.iter().map(|x| x.weight * x.s.powf(p - 1.0)).collect());
        } else {
            push("r", c.iter().map(|x| x.r).collect());
            push("F", c.iter().map(|x| x.lapse).collect());
            push("Lambda", c.iter().map(|x| x.lambda).collect());
            push("W", c.iter().map(|x| x.potential).collect());
            push("f", c.iter().map(|x| x.weight).collect());
        }
    }
    Ok(BandReport {
        mass: m,
        p,
        bands,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on `r ↦ r + 2M log(r − 2M) − s` in the gap variable: the
    /// independent route used to freeze the near-horizon values below.
    fn bisect_gap(s: f64, m: f64) -> f64 {
        let g = |x: f64| 2.0 * m + x + 2.0 * m * x.ln() - s;
        let (mut lo, mut hi) = (1e-300_f64, 1e300_f64);
        for _ in 0..4000 {
            let mid = (lo * hi).sqrt();
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi / lo - 1.0 < 1e-15 {
                break;
            }
        }
        (lo * hi).sqrt()
    }

    #[test]
    fn tortoise_closed_forms() {
        assert_eq!(tortoise(3.0, 1.0).unwrap(), 3.0);
        let s = tortoise(4.0, 1.0).unwrap();
        assert!((s - (4.0 + 2.0 * 2f64.ln())).abs() < 1e-15);
        assert!((s - 5.3862944).abs() < 1e-7);
    }

    #[test]
    fn tortoise_near_horizon() {
        // s = 2 + e^{−11} + 2·(−11) = −20 + e^{−11}
        let r = Radius::from_gap((-11f64).exp(), 1.0).unwrap();
        let s = r.tortoise();
        assert!((s - (-19.999_983_298_299)).abs() < 1e-11, "{s}");
    }

    #[test]
    fn tortoise_rejects_interior() {
        assert!(matches!(tortoise(2.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(tortoise(1.0, 1.0), Err(Error::Domain(_))));
        assert!(tortoise(3.0, -1.0).is_err());
    }

    #[test]
    fn inverse_closed_forms() {
        assert!((inverse_tortoise(3.0, 1.0).unwrap().r() - 3.0).abs() < 1e-14);
        let s = 4.0 + 2.0 * 2f64.ln();
        assert!((inverse_tortoise(s, 1.0).unwrap().r() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_near_horizon_matches_bisection() {
        let oracle = bisect_gap(-20.0, 1.0);
        // frozen from the bisection oracle
        assert!((oracle - 1.670_156_1e-5).abs() < 1e-12, "{oracle:e}");
        let gap = inverse_tortoise(-20.0, 1.0).unwrap().gap();
        assert!(((gap - oracle) / oracle).abs() < 1e-12);
        for s in [-300.0, -80.0, -5.0, 0.0, 1.0, 7.5, 1e3, 1e8] {
            for m in [0.5, 1.0, 2.0] {
                let g = inverse_tortoise(s, m).unwrap().gap();
                let o = bisect_gap(s, m);
                assert!(((g - o) / o).abs() < 1e-12, "s = {s}, M = {m}");
            }
        }
    }

    #[test]
    fn coefficients_closed_forms() {
        let bg = Background::new(1.0, -50.0, 50.0).unwrap();
        let c = bg.coefficients(3.0, 2.0).unwrap();
        assert!((c.r - 3.0).abs() < 1e-14);
        assert!((c.lapse - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.potential - 2.0 / 81.0).abs() < 1e-15);
        assert!((c.weight - 1.0 / 9.0).abs() < 1e-15);
        assert!((c.lambda - 3.0 * 3f64.sqrt()).abs() < 1e-13);
        let c3 = bg.coefficients(3.0, 3.0).unwrap();
        assert!((c3.weight - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn coefficients_near_horizon() {
        let bg = Background::new(1.0, -50.0, 50.0).unwrap();
        let gap = bisect_gap(-20.0, 1.0);
        let r = 2.0 + gap;
        let (f_ref, w_ref) = (gap / r, 2.0 * (gap / r) / (r * r * r));
        let c = bg.coefficients(-20.0, 2.0).unwrap();
        assert!(((c.lapse - f_ref) / f_ref).abs() < 1e-12);
        assert!(((c.potential - w_ref) / w_ref).abs() < 1e-12);
        assert!((c.lapse - 8.3508e-6).abs() < 1e-9);
        assert!((c.potential - 2.0877e-6).abs() < 1e-9);
    }

    #[test]
    fn exact_relations_hold() {
        let bg = Background::new(1.5, -60.0, 120.0).unwrap();
        for k in 0..200 {
            let s = -60.0 + 0.9 * k as f64;
            let c = bg.coefficients(s, 2.3).unwrap();
            assert!(c.r > 3.0 && c.lapse > 0.0 && c.lapse < 1.0);
            let rel = |a: f64, b: f64| ((a - b) / b).abs();
            assert!(rel(c.potential, 3.0 * c.lapse / c.r.powi(3)) < 1e-14);
            assert!(rel(c.lambda, c.r / c.lapse.sqrt()) < 1e-14);
            assert!(rel(c.weight, c.lapse * c.r.powf(-1.3)) < 1e-14);
            if s > -30.0 {
                assert!((c.lapse - (1.0 - 3.0 / c.r)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_seeded_and_unseeded_inversions_agree() {
        let bg = Background::new(1.0, -40.0, 200.0).unwrap();
        for k in 0..500 {
            let s = -40.0 + 0.479 * k as f64;
            let a = bg.radius(s).unwrap().gap();
            let b = inverse_tortoise(s, 1.0).unwrap().gap();
            assert!(((a - b) / b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_of_r_is_lapse_to_second_order() {
        let bg = Background::new(1.0, -30.0, 60.0).unwrap();
        let err = |h: f64| {
            let mut worst: f64 = 0.0;
            for k in 0..40 {
                let s = -20.0 + 2.0 * k as f64;
                let rp = bg.radius(s + h).unwrap();
                let rm = bg.radius(s - h).unwrap();
                let d = (rp.gap() - rm.gap()) / (2.0 * h);
                let f = bg.coefficients(s, 2.0).unwrap().lapse;
                worst = worst.max((d - f).abs() / f);
            }
            worst
        };
        let order = (err(0.1) / err(0.05)).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn band_report_examples() {
        let bg = Background::new(1.0, -50.0, 210.0).unwrap();
        let rep = asymptotic_band_report(&bg, 2.0, &[(10.0, 200.0), (-40.0, -15.0)]).unwrap();
        let b = rep.band("r/s", (10.0, 200.0)).unwrap();
        assert!(b.is_bounded() && b.spread() < 2.0);
        for q in ["r-2M", "F", "W", "f"] {
            let f = rep.slope(q, (-40.0, -15.0)).unwrap();
            assert!(f.relative_error() < 0.01, "{q}: {}", f.slope);
        }
        for band in &rep.bands {
            assert!(band.is_bounded(), "{band:?}");
        }
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"slopes\""));
    }
}
