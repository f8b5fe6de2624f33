//! Auxiliary weights for the blow-up functionals.
//!
//! * `φ₀`: positive solution of `φ″ = H φ` growing like `b s` on the right and
//!   tending to a constant `D > 0` on the left. Built from the two Cauchy
//!   solutions `y` (`y(0)=1, y′(0)=0`) and `z` (`z(0)=0, z′(0)=1`) as
//!   `φ = e₋ y − d₋ z` with `d± = ∫₀^{±∞} H y`, `e± = 1 + ∫₀^{±∞} H z`,
//!   `b = e₋ d₊ − d₋ e₊`, `D = φ(0) + ∫_{−∞}^0 θ H φ`.
//! * `ψ₀ = φ₀ − D`, solving `ψ″ − Hψ = D H` and vanishing at `−∞`.
//! * `φ₁`: positive solution of `φ″ = (H + A²) φ` behaving like `e^{As}` at
//!   both ends.
//!
//! All ODEs are integrated with classical fixed-step RK4 on the tabulation
//! grid. Improper integrals are split into a Simpson head on the grid, an
//! RK4 continuation on a logarithmically stretched variable out to a far
//! cut-off, and an analytic envelope bound for what remains.

use serde::{Deserialize, Serialize};

use crate::background::Background;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par::Exec;
use crate::quad;

/// Decay envelope of a potential towards one end of the line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decay {
    /// `H ≲ (1+|s|)^{−a}`.
    Algebraic(f64),
    /// `H ≲ e^{−rate·|s|}`.
    Exponential(f64),
    /// `H ≡ 0` beyond the grid.
    Vanishing,
}

/// A non-negative potential `H(s)` on the real line.
pub trait Potential: Sync {
    fn value(&self, s: f64) -> f64;
    /// Envelopes towards `−∞` and `+∞`.
    fn decay(&self) -> (Decay, Decay);
}

/// The Regge–Wheeler potential `W = 2MF/r³` of a background.
#[derive(Debug, Clone, Copy)]
pub struct ReggeWheeler<'a>(pub &'a Background);

impl Potential for ReggeWheeler<'_> {
    fn value(&self, s: f64) -> f64 {
        self.0.potential(s).unwrap_or(f64::NAN)
    }

    fn decay(&self) -> (Decay, Decay) {
        (
            Decay::Exponential(0.5 / self.0.mass()),
            Decay::Algebraic(3.0),
        )
    }
}

/// `H ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl Potential for ZeroPotential {
    fn value(&self, _: f64) -> f64 {
        0.0
    }

    fn decay(&self) -> (Decay, Decay) {
        (Decay::Vanishing, Decay::Vanishing)
    }
}

/// `H(s) = (1 + s²)^{−2}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RationalPotential;

impl Potential for RationalPotential {
    fn value(&self, s: f64) -> f64 {
        let q = 1.0 + s * s;
        1.0 / (q * q)
    }

    fn decay(&self) -> (Decay, Decay) {
        (Decay::Algebraic(4.0), Decay::Algebraic(4.0))
    }
}

/// Potential values at the grid nodes and at the midpoints `s_i + h/2`.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    pub grid: Grid,
    pub nodes: Vec<f64>,
    pub mids: Vec<f64>,
}

impl PotentialTable {
    pub fn new<P: Potential + ?Sized>(pot: &P, grid: &Grid, exec: Exec) -> Result<Self> {
        let nodes = exec.map_range(grid.len, |i| pot.value(grid.s(i)));
        let mids = exec.map_range(grid.len - 1, |i| pot.value(grid.s(i) + 0.5 * grid.h));
        if let Some(i) = nodes.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("potential not finite at s = {}", grid.s(i))));
        }
        if let Some(i) = nodes.iter().position(|v| *v < 0.0) {
            return Err(Error::Positivity {
                what: "potential",
                at: grid.s(i),
                value: nodes[i],
            });
        }
        if mids.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential midpoints"));
        }
        Ok(Self {
            grid: *grid,
            nodes,
            mids,
        })
    }
}

/// Samples of a solution and its derivative on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySolution {
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

/// One RK4 step for `v″ = q(s) v + g(s)` with `q, g` given at the start,
/// midpoint and end of the step.
#[inline]
fn rk4_linear(v: f64, vp: f64, h: f64, q: [f64; 3], g: [f64; 3]) -> (f64, f64) {
    let k1v = vp;
    let k1p = q[0] * v + g[0];
    let k2v = vp + 0.5 * h * k1p;
    let k2p = q[1] * (v + 0.5 * h * k1v) + g[1];
    let k3v = vp + 0.5 * h * k2p;
    let k3p = q[1] * (v + 0.5 * h * k2v) + g[1];
    let k4v = vp + h * k3p;
    let k4p = q[2] * (v + h * k3v) + g[2];
    (
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        vp + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p),
    )
}

/// Local error budget per checked step, relative to `1 + |v|`.
const STEP_BUDGET: f64 = 1e-10;
/// Check the local error by step doubling every this many steps.
const CHECK_EVERY: usize = 128;

/// Integrates `v″ = (H + shift) v + H·source` across the whole grid from the
/// node `start` in both directions.
fn integrate_from<P: Potential + ?Sized>(
    pot: &P,
    table: &PotentialTable,
    start: usize,
    v0: f64,
    vp0: f64,
    shift: f64,
    source: f64,
) -> Result<CauchySolution> {
    let grid = &table.grid;
    let n = grid.len;
    let h = grid.h;
    let mut values = vec![0.0; n];
    let mut derivs = vec![0.0; n];
    values[start] = v0;
    derivs[start] = vp0;
    let q = |hv: f64| hv + shift;
    let g = |hv: f64| hv * source;

    let check = |s: f64, step: f64, v: f64, vp: f64, full: (f64, f64)| -> Result<()> {
        let hq = [s, s + 0.25 * step, s + 0.5 * step, s + 0.75 * step, s + step].map(|x| pot.value(x));
        let half = 0.5 * step;
        let (v1, vp1) = rk4_linear(v, vp, half, [q(hq[0]), q(hq[1]), q(hq[2])], [g(hq[0]), g(hq[1]), g(hq[2])]);
        let (v2, _) = rk4_linear(v1, vp1, half, [q(hq[2]), q(hq[3]), q(hq[4])], [g(hq[2]), g(hq[3]), g(hq[4])]);
        let estimate = (full.0 - v2).abs() / 15.0 / (1.0 + v2.abs());
        if estimate > STEP_BUDGET || !estimate.is_finite() {
            return Err(Error::StepSize {
                at: s,
                estimate,
                budget: STEP_BUDGET,
            });
        }
        let _ = vp;
        Ok(())
    };

    for i in start..n - 1 {
        let (a, m, b) = (table.nodes[i], table.mids[i], table.nodes[i + 1]);
        let next = rk4_linear(values[i], derivs[i], h, [q(a), q(m), q(b)], [g(a), g(m), g(b)]);
        if (i - start).is_multiple_of(CHECK_EVERY) {
            check(grid.s(i), h, values[i], derivs[i], next)?;
        }
        values[i + 1] = next.0;
        derivs[i + 1] = next.1;
    }
    for i in (1..=start).rev() {
        let (a, m, b) = (table.nodes[i], table.mids[i - 1], table.nodes[i - 1]);
        let next = rk4_linear(values[i], derivs[i], -h, [q(a), q(m), q(b)], [g(a), g(m), g(b)]);
        if (start - i).is_multiple_of(CHECK_EVERY) {
            check(grid.s(i), -h, values[i], derivs[i], next)?;
        }
        values[i - 1] = next.0;
        derivs[i - 1] = next.1;
    }
    if values.iter().chain(&derivs).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Cauchy solution"));
    }
    Ok(CauchySolution { values, derivs })
}

fn check_hypotheses(table: &PotentialTable) -> Result<usize> {
    table
        .grid
        .zero_index()
        .ok_or_else(|| Error::Domain("grid must contain s = 0".into()))
}

/// `−y″ + H y = 0`, `y(0) = 1`, `y′(0) = 0`.
pub fn solve_cauchy_y<P: Potential + ?Sized>(pot: &P, table: &PotentialTable) -> Result<CauchySolution> {
    let z = check_hypotheses(table)?;
    integrate_from(pot, table, z, 1.0, 0.0, 0.0, 0.0)
}

/// `−z″ + H z = 0`, `z(0) = 0`, `z′(0) = 1`.
pub fn solve_cauchy_z<P: Potential + ?Sized>(pot: &P, table: &PotentialTable) -> Result<CauchySolution> {
    let z = check_hypotheses(table)?;
    integrate_from(pot, table, z, 0.0, 1.0, 0.0, 0.0)
}

/// Stretched-variable step count per unit of `log(1 + |s|)`.
const EXT_STEP: f64 = 0.002;
/// Far cut-off of the continuation for algebraically decaying potentials.
const ALGEBRAIC_REACH: f64 = 1e9;
/// Continuation length for exponential decay, in units of `1/rate`.
const EXPONENTIAL_REACH: f64 = 80.0;
/// Analytic remainders must stay below this fraction of the computed integral.
pub const TAIL_RATIO: f64 = 1e-8;

/// Continuation of a solution of `v″ = H v` beyond the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Extension {
    /// `∫ H v ds` from the grid end outwards (oriented: negative `ds` on the left).
    int_hv: f64,
    /// `∫ s H v ds`, same orientation.
    int_shv: f64,
    /// Bound on `|∫ H v|` beyond the cut-off.
    rem_hv: f64,
    /// Bound on `|∫ s H v|` beyond the cut-off.
    rem_shv: f64,
}

/// Continue `v″ = H v` from `(s_start, v, v′)` away from the origin
/// (`dir = ±1`) on `s = s_start + dir·ρ(e^τ − 1)`, `ρ = 1 + |s_start|`.
fn extend<P: Potential + ?Sized>(pot: &P, decay: Decay, s_start: f64, v: f64, vp: f64, dir: f64) -> Extension {
    let reach = match decay {
        Decay::Vanishing => {
            return Extension {
                int_hv: 0.0,
                int_shv: 0.0,
                rem_hv: 0.0,
                rem_shv: 0.0,
            }
        }
        Decay::Algebraic(_) => ALGEBRAIC_REACH,
        Decay::Exponential(rate) => EXPONENTIAL_REACH / rate,
    };
    let rho = 1.0 + s_start.abs();
    let tau_end = (1.0 + reach / rho).ln();
    let steps = (tau_end / EXT_STEP).ceil() as usize;
    let dt = tau_end / steps as f64;
    let s_of = |tau: f64| s_start + dir * rho * tau.exp_m1();
    // y = [v, v′, ∫Hv, ∫sHv], d/dτ with ds/dτ = dir·ρ·e^τ
    let rhs = |tau: f64, y: [f64; 4]| -> [f64; 4] {
        let s = s_of(tau);
        let j = dir * rho * tau.exp();
        let hv = pot.value(s) * y[0];
        [j * y[1], j * hv, j * hv, j * s * hv]
    };
    let mut y = [v, vp, 0.0, 0.0];
    let mut envelope: f64 = 0.0;
    let outer_from = steps - steps / 5;
    for k in 0..steps {
        let tau = k as f64 * dt;
        let k1 = rhs(tau, y);
        let k2 = rhs(tau + 0.5 * dt, add(y, k1, 0.5 * dt));
        let k3 = rhs(tau + 0.5 * dt, add(y, k2, 0.5 * dt));
        let k4 = rhs(tau + dt, add(y, k3, dt));
        for c in 0..4 {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if k >= outer_from {
            let s = s_of(tau + dt);
            let hs = pot.value(s);
            let c = match decay {
                Decay::Algebraic(a) => hs * (1.0 + s.abs()).powf(a),
                Decay::Exponential(rate) => hs * (rate * s.abs()).exp(),
                Decay::Vanishing => 0.0,
            };
            if c.is_finite() {
                envelope = envelope.max(c);
            }
        }
    }
    let s_end = s_of(tau_end).abs();
    let (v_abs, vp_abs) = (y[0].abs(), y[1].abs());
    let (rem_hv, rem_shv) = match decay {
        Decay::Algebraic(a) => {
            let x = 1.0 + s_end;
            let hv = envelope
                * (v_abs * x.powf(1.0 - a) / (a - 1.0)
                    + vp_abs * x.powf(2.0 - a) / ((a - 1.0) * (a - 2.0)));
            let shv = if a > 3.0 {
                envelope
                    * (v_abs * x.powf(2.0 - a) / (a - 2.0)
                        + vp_abs * x.powf(3.0 - a) / ((a - 2.0) * (a - 3.0)))
            } else {
                f64::INFINITY
            };
            (hv, shv)
        }
        Decay::Exponential(rate) => {
            let e = (-rate * s_end).exp() * envelope;
            let hv = e * (v_abs / rate + vp_abs / (rate * rate));
            let shv = e
                * (v_abs * (s_end / rate + 1.0 / (rate * rate))
                    + vp_abs * (s_end / (rate * rate) + 2.0 / rate.powi(3)));
            (hv, shv)
        }
        Decay::Vanishing => (0.0, 0.0),
    };
    Extension {
        int_hv: y[2],
        int_shv: y[3],
        rem_hv,
        rem_shv,
    }
}

#[inline]
fn add(y: [f64; 4], k: [f64; 4], h: f64) -> [f64; 4] {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

fn tail_guard(head: f64, remainder: f64) -> Result<()> {
    if remainder > TAIL_RATIO * head.abs() && remainder > 0.0 {
        return Err(Error::TailDominance {
            head,
            tail: remainder,
            ratio: TAIL_RATIO,
        });
    }
    Ok(())
}

/// The four constants of the `φ₀` construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralConstants {
    pub d_plus: f64,
    pub d_minus: f64,
    pub e_plus: f64,
    pub e_minus: f64,
}

/// `d± = ∫₀^{±∞} H y`, `e± = 1 + ∫₀^{±∞} H z` (oriented integrals).
pub fn integral_constants<P: Potential + ?Sized>(
    pot: &P,
    table: &PotentialTable,
    y: &CauchySolution,
    z: &CauchySolution,
) -> Result<IntegralConstants> {
    let zero = check_hypotheses(table)?;
    let grid = &table.grid;
    let n = grid.len;
    let h = grid.h;
    let (left, right) = pot.decay();

    let oriented = |sol: &CauchySolution| -> Result<(f64, f64)> {
        let hv: Vec<f64> = table.nodes.iter().zip(&sol.values).map(|(a, b)| a * b).collect();
        let head_r = quad::simpson(&hv[zero..], h);
        let head_l = -quad::simpson(&hv[..=zero], h);
        let ext_r = extend(pot, right, grid.s(n - 1), sol.values[n - 1], sol.derivs[n - 1], 1.0);
        let ext_l = extend(pot, left, grid.s(0), sol.values[0], sol.derivs[0], -1.0);
        let plus = head_r + ext_r.int_hv;
        let minus = head_l + ext_l.int_hv;
        tail_guard(plus, ext_r.rem_hv)?;
        tail_guard(minus, ext_l.rem_hv)?;
        Ok((plus, minus))
    };
    let (d_plus, d_minus) = oriented(y)?;
    let (iz_plus, iz_minus) = oriented(z)?;
    Ok(IntegralConstants {
        d_plus,
        d_minus,
        e_plus: 1.0 + iz_plus,
        e_minus: 1.0 + iz_minus,
    })
}

/// Output of the `φ₀` construction.
#[derive(Debug, Clone)]
pub struct PhiZero {
    pub grid: Grid,
    pub phi0: Vec<f64>,
    pub psi0: Vec<f64>,
    /// `e₋ y − d₋ z` on the grid, the direct combination.
    pub combination: Vec<f64>,
    pub y: CauchySolution,
    pub z: CauchySolution,
    pub constants: IntegralConstants,
    pub b: f64,
    pub d: f64,
}

/// Constructs `φ₀`, `b` and `D` for a potential, then tabulates
/// `ψ₀ = φ₀ − D` by integrating `ψ″ = H (ψ + D)` from the left end with data
/// taken from the improper integrals `ψ(s) = ∫_{−∞}^s (s−θ) H φ`,
/// `ψ′(s) = ∫_{−∞}^s H φ`. The left-anchored route keeps `ψ₀` at full
/// relative precision where it is exponentially small; `φ₀` is then
/// `ψ₀ + D` exactly.
pub fn build_phi0_for<P: Potential + ?Sized>(pot: &P, table: &PotentialTable) -> Result<PhiZero> {
    let zero = check_hypotheses(table)?;
    let grid = table.grid;
    let h = grid.h;
    let y = solve_cauchy_y(pot, table)?;
    let z = solve_cauchy_z(pot, table)?;
    let k = integral_constants(pot, table, &y, &z)?;
    if !(k.d_plus >= 0.0 && k.d_minus <= 0.0 && k.e_plus > 0.0 && k.e_minus > 0.0) {
        return Err(Error::Domain(format!("integral constants out of range: {k:?}")));
    }
    let b = k.e_minus * k.d_plus - k.d_minus * k.e_plus;
    if !(b > 0.0) {
        return Err(Error::Positivity {
            what: "b",
            at: f64::NAN,
            value: b,
        });
    }
    let combination: Vec<f64> = y
        .values
        .iter()
        .zip(&z.values)
        .map(|(yv, zv)| k.e_minus * yv - k.d_minus * zv)
        .collect();
    let comb_d: Vec<f64> = y
        .derivs
        .iter()
        .zip(&z.derivs)
        .map(|(yv, zv)| k.e_minus * yv - k.d_minus * zv)
        .collect();

    let (left, _) = pot.decay();
    let ext = extend(pot, left, grid.s(0), combination[0], comb_d[0], -1.0);
    // D = φ(0) + ∫_{−∞}^0 θ H φ
    let shphi: Vec<f64> = (0..=zero)
        .map(|i| grid.s(i) * table.nodes[i] * combination[i])
        .collect();
    let head = quad::simpson(&shphi, h);
    let d = combination[zero] + head - ext.int_shv;
    tail_guard(d, ext.rem_shv)?;
    if !(d > 0.0) {
        return Err(Error::Positivity {
            what: "D",
            at: f64::NAN,
            value: d,
        });
    }

    // Data for ψ at the left end: the extension integrals run outwards, so
    // ∫_{−∞}^{s_L} = −(oriented integral).
    let s_left = grid.s(0);
    let psi_p = -ext.int_hv;
    let psi = s_left * psi_p + ext.int_shv;
    let psi_sol = integrate_from(pot, table, 0, psi, psi_p, 0.0, d)?;
    let psi0 = psi_sol.values;
    if let Some(i) = psi0.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Positivity {
            what: "psi0",
            at: grid.s(i),
            value: psi0[i],
        });
    }
    let phi0: Vec<f64> = psi0.iter().map(|v| v + d).collect();

    Ok(PhiZero {
        grid,
        phi0,
        psi0,
        combination,
        y,
        z,
        constants: k,
        b,
        d,
    })
}

/// `φ₀` for the Regge–Wheeler potential of `bg` on `grid`.
pub fn build_phi0(bg: &Background, grid: &Grid, exec: Exec) -> Result<PhiZero> {
    let pot = ReggeWheeler(bg);
    let table = PotentialTable::new(&pot, grid, exec)?;
    build_phi0_for(&pot, &table)
}

/// `ψ₀ = φ₀ − D` pointwise.
pub fn build_psi0(phi0: &[f64], d: f64) -> Result<Vec<f64>> {
    let psi: Vec<f64> = phi0.iter().map(|v| v - d).collect();
    if let Some(i) = psi.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Positivity {
            what: "psi0",
            at: i as f64,
            value: psi[i],
        });
    }
    Ok(psi)
}

/// Values beyond this magnitude are rescaled during the `φ₁` sweep.
const PHI1_CAP: f64 = 1e150;

/// How far left of the grid the `φ₁` sweep is seeded, in units of `1/A`.
const PHI1_LEAD: f64 = 40.0;

/// `φ₁` sweep from the left with seed `scale·(e^{A s_L}, A e^{A s_L})`,
/// unnormalised. Returns `(values, derivatives)` on the grid; both are
/// multiplied by a common power of two when the magnitude cap is reached, so
/// only ratios within one call are meaningful once that happens.
pub fn integrate_phi1_raw<P: Potential + ?Sized>(
    pot: &P,
    table: &PotentialTable,
    a: f64,
    scale: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<i32>)> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("A must be positive, got {a}")));
    }
    let grid = &table.grid;
    let h = grid.h;
    let shift = a * a;
    let lead_steps = (PHI1_LEAD / a / h).ceil() as usize;
    let s_seed = grid.s(0) - lead_steps as f64 * h;
    let mut v = scale * (a * s_seed).exp();
    let mut vp = a * v;
    let mut exponent = 0i32;
    let renorm = |v: &mut f64, vp: &mut f64, e: &mut i32| {
        if v.abs() > PHI1_CAP {
            let k = v.abs().log2().floor() as i32;
            let f = 2f64.powi(-k);
            *v *= f;
            *vp *= f;
            *e += k;
        }
    };
    // lead-in, off grid
    for k in 0..lead_steps {
        let s = s_seed + k as f64 * h;
        let hq = [s, s + 0.5 * h, s + h].map(|x| pot.value(x) + shift);
        (v, vp) = rk4_linear(v, vp, h, hq, [0.0; 3]);
        renorm(&mut v, &mut vp, &mut exponent);
    }
    let n = grid.len;
    let mut values = vec![0.0; n];
    let mut derivs = vec![0.0; n];
    let mut exps = vec![0i32; n];
    values[0] = v;
    derivs[0] = vp;
    exps[0] = exponent;
    for i in 0..n - 1 {
        let q = [table.nodes[i] + shift, table.mids[i] + shift, table.nodes[i + 1] + shift];
        (v, vp) = rk4_linear(v, vp, h, q, [0.0; 3]);
        renorm(&mut v, &mut vp, &mut exponent);
        values[i + 1] = v;
        derivs[i + 1] = vp;
        exps[i + 1] = exponent;
    }
    if values.iter().chain(&derivs).any(|x| x.is_nan()) {
        return Err(Error::NonFinite("phi1"));
    }
    Ok((values, derivs, exps))
}

/// `φ₁` normalised to `φ₁(0) = 1` (or to 1 at the left end when the grid
/// does not contain the origin), with its derivative.
pub fn build_phi1_for<P: Potential + ?Sized>(
    pot: &P,
    table: &PotentialTable,
    a: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (v, vp, e) = integrate_phi1_raw(pot, table, a, 1.0)?;
    let anchor = table.grid.zero_index().unwrap_or(0);
    let (v0, e0) = (v[anchor], e[anchor]);
    let mut values = Vec::with_capacity(v.len());
    let mut derivs = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let f = 2f64.powi(e[i] - e0) / v0;
        values.push(v[i] * f);
        derivs.push(vp[i] * f);
    }
    if values.iter().chain(&derivs).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("phi1 after normalisation"));
    }
    if let Some(i) = values.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::Positivity {
            what: "phi1",
            at: table.grid.s(i),
            value: values[i],
        });
    }
    Ok((values, derivs))
}

/// `φ₁` for the Regge–Wheeler potential.
pub fn build_phi1(bg: &Background, a: f64, grid: &Grid, exec: Exec) -> Result<(Vec<f64>, Vec<f64>)> {
    let pot = ReggeWheeler(bg);
    let table = PotentialTable::new(&pot, grid, exec)?;
    build_phi1_for(&pot, &table, a)
}

/// Scaled residual `max |v″ − q v − g| / (1 + max |v|)` with the 5-point
/// stencil, over interior nodes.
pub fn scaled_residual(values: &[f64], q: &[f64], g: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 5 {
        return 0.0;
    }
    let vmax = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let r = quad::second_diff5(values, i, h) - q[i] * values[i] - g[i];
        worst = worst.max(r.abs());
    }
    worst / (1.0 + vmax)
}

/// Tabulated auxiliary weights and their constants.
#[derive(Debug, Clone)]
pub struct AuxFunctions {
    pub grid: Grid,
    pub mass: f64,
    pub potential: Vec<f64>,
    pub phi0: Vec<f64>,
    pub psi0: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi1_prime: Vec<f64>,
    pub constants: AuxConstants,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxConstants {
    pub b: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

impl AuxFunctions {
    /// All weights for `bg` on `grid` with `A = 1/(2M)`.
    pub fn build(bg: &Background, grid: &Grid, exec: Exec) -> Result<Self> {
        Self::build_with_rate(bg, grid, 0.5 / bg.mass(), exec)
    }

    /// Builds on the smallest aligned grid with spacing `grid.h` that covers
    /// both `grid` and the origin, then restricts to `grid`.
    pub fn build_with_rate(bg: &Background, grid: &Grid, a: f64, exec: Exec) -> Result<Self> {
        let lo = grid.s_min().min(-grid.h);
        let hi = grid.s_max().max(grid.h);
        let work = Grid::covering(lo, hi, grid.h)?;
        let pot = ReggeWheeler(bg);
        let table = PotentialTable::new(&pot, &work, exec)?;
        let phi = build_phi0_for(&pot, &table)?;
        let (phi1, phi1_prime) = build_phi1_for(&pot, &table, a)?;
        if let Some(i) = phi1_prime.iter().position(|x| !(*x > 0.0)) {
            return Err(Error::Positivity {
                what: "phi1'",
                at: work.s(i),
                value: phi1_prime[i],
            });
        }
        let off = work
            .offset_of(grid)
            .ok_or_else(|| Error::Domain("simulation grid is not aligned".into()))?;
        let cut = |v: &[f64]| v[off..off + grid.len].to_vec();
        Ok(Self {
            grid: *grid,
            mass: bg.mass(),
            potential: cut(&table.nodes),
            phi0: cut(&phi.phi0),
            psi0: cut(&phi.psi0),
            phi1: cut(&phi1),
            phi1_prime: cut(&phi1_prime),
            constants: AuxConstants {
                b: phi.b,
                d: phi.d,
                d_plus: phi.constants.d_plus,
                d_minus: phi.constants.d_minus,
                e_plus: phi.constants.e_plus,
                e_minus: phi.constants.e_minus,
                a,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table<P: Potential>(pot: &P, lo: f64, hi: f64, h: f64) -> PotentialTable {
        PotentialTable::new(pot, &Grid::covering(lo, hi, h).unwrap(), Exec::Sequential).unwrap()
    }

    #[test]
    fn zero_potential_cases() {
        let t = table(&ZeroPotential, -20.0, 20.0, 0.05);
        let y = solve_cauchy_y(&ZeroPotential, &t).unwrap();
        assert!(y.values.iter().all(|v| *v == 1.0));
        let z = solve_cauchy_z(&ZeroPotential, &t).unwrap();
        for (i, v) in z.values.iter().enumerate() {
            assert!((v - t.grid.s(i)).abs() < 1e-12);
        }
        let k = integral_constants(&ZeroPotential, &t, &y, &z).unwrap();
        assert_eq!(
            k,
            IntegralConstants {
                d_plus: 0.0,
                d_minus: 0.0,
                e_plus: 1.0,
                e_minus: 1.0
            }
        );
    }

    #[test]
    fn rational_potential_matches_fine_reference() {
        let coarse = table(&RationalPotential, -20.0, 20.0, 0.01);
        let fine = table(&RationalPotential, -20.0, 20.0, 0.001);
        let yc = solve_cauchy_y(&RationalPotential, &coarse).unwrap();
        let yf = solve_cauchy_y(&RationalPotential, &fine).unwrap();
        let a = yc.values[coarse.grid.nearest(10.0)];
        let b = yf.values[fine.grid.nearest(10.0)];
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn wronskian_is_one() {
        let t = table(&RationalPotential, -30.0, 30.0, 0.01);
        let y = solve_cauchy_y(&RationalPotential, &t).unwrap();
        let z = solve_cauchy_z(&RationalPotential, &t).unwrap();
        for i in 0..t.grid.len {
            let w = y.values[i] * z.derivs[i] - y.derivs[i] * z.values[i];
            assert!((w - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn grid_without_origin_is_rejected() {
        let t = table(&RationalPotential, 1.0, 3.0, 0.1);
        assert!(matches!(solve_cauchy_y(&RationalPotential, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn psi0_definition_is_exact() {
        let t = table(&RationalPotential, -30.0, 30.0, 0.02);
        let phi = build_phi0_for(&RationalPotential, &t).unwrap();
        let psi = build_psi0(&phi.phi0, phi.d).unwrap();
        for i in 0..t.grid.len {
            assert_eq!(phi.psi0[i] + phi.d, phi.phi0[i]);
            assert!((psi[i] - phi.psi0[i]).abs() <= 1e-15 * phi.phi0[i]);
        }
    }

    #[test]
    fn phi1_free_equation_is_pure_exponential() {
        let t = table(&ZeroPotential, -10.0, 10.0, 0.01);
        let (v, vp) = build_phi1_for(&ZeroPotential, &t, 1.0).unwrap();
        let x = t.grid.nodes();
        assert!((quad::log_slope(&x, &v).unwrap() - 1.0).abs() < 1e-9);
        for i in 0..v.len() {
            assert!((v[i] - x[i].exp()).abs() < 1e-9 * x[i].exp());
            assert!(vp[i] > 0.0);
        }
    }

    #[test]
    fn phi1_seed_scaling_covariance() {
        let t = table(&RationalPotential, -15.0, 15.0, 0.02);
        let (a, _, ea) = integrate_phi1_raw(&RationalPotential, &t, 0.7, 1.0).unwrap();
        let (b, _, eb) = integrate_phi1_raw(&RationalPotential, &t, 0.7, 3.0).unwrap();
        assert_eq!(ea, eb);
        for (x, y) in a.iter().zip(&b) {
            assert!((y - 3.0 * x).abs() <= 1e-14 * y.abs());
        }
        let (na, _) = build_phi1_for(&RationalPotential, &t, 0.7).unwrap();
        let norm: Vec<f64> = b.iter().map(|v| v / b[t.grid.zero_index().unwrap()]).collect();
        for (x, y) in na.iter().zip(&norm) {
            assert!((x - y).abs() <= 1e-13 * x.abs());
        }
    }

    #[test]
    fn negative_potential_is_rejected() {
        struct Neg;
        impl Potential for Neg {
            fn value(&self, _: f64) -> f64 {
                -1.0
            }
            fn decay(&self) -> (Decay, Decay) {
                (Decay::Vanishing, Decay::Vanishing)
            }
        }
        let g = Grid::covering(-1.0, 1.0, 0.1).unwrap();
        assert!(matches!(
            PotentialTable::new(&Neg, &g, Exec::Sequential),
            Err(Error::Positivity { .. })
        ));
    }

    #[test]
    fn regge_wheeler_phi0_is_scaled_radius() {
        // r(s) solves φ″ = Wφ exactly: d²r/ds² = F dF/dr = 2MF/r² = W r.
        for m in [0.5, 1.0, 2.0] {
            let bg = Background::new(m, -60.0, 80.0).unwrap();
            let grid = Grid::covering(-40.0, 60.0, 0.02).unwrap();
            let phi = build_phi0(&bg, &grid, Exec::Sequential).unwrap();
            let c = 0.5 / m;
            assert!((phi.b - c).abs() < 1e-8 * c, "M = {m}: b = {}", phi.b);
            assert!((phi.d - 1.0).abs() < 1e-8, "M = {m}: D = {}", phi.d);
            for (i, v) in phi.phi0.iter().enumerate() {
                let r = bg.radius(grid.s(i)).unwrap();
                assert!((v - c * r.r()).abs() < 1e-8 * v, "M = {m}, s = {}", grid.s(i));
                assert!((phi.psi0[i] - c * r.gap()).abs() < 1e-8 * phi.psi0[i] + 1e-14);
            }
        }
    }
}
