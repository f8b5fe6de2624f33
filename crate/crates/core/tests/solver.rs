use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use swave_core::background::Background;
use swave_core::diagnostics::fit_blowup_exponent;
use swave_core::par::Exec;
use swave_core::wavesolver::{self, v_to_u, Scenario, WaveState};

fn linear(t_max: f64) -> Scenario {
    Scenario {
        nonlinearity: false,
        t_max,
        ..Scenario::default()
    }
}

fn outside(state: &WaveState, sc: &Scenario, reach: f64) -> f64 {
    let g = &state.grid;
    (0..g.len)
        .filter(|&i| (g.s(i) - sc.s0).abs() > reach)
        .fold(0.0f64, |m, i| m.max(state.v_curr[i].abs()))
}

#[test]
fn field_vanishes_exactly_beyond_the_numerical_cone() {
    let sc = linear(10.0);
    let out = wavesolver::run(&sc, Exec::Sequential).unwrap();
    let st = &out.state;
    // each leapfrog step widens the stencil footprint by one node
    let reach = sc.half_width + (st.steps as f64 + 1.0) * sc.dx + sc.dx;
    assert_eq!(outside(st, &sc, reach), 0.0);
    let (lo, hi) = st.window;
    assert!(st.v_curr[..lo].iter().chain(&st.v_curr[hi + 1..]).all(|v| *v == 0.0));
    assert!(st.v_prev[..lo].iter().chain(&st.v_prev[hi + 1..]).all(|v| *v == 0.0));
}

#[test]
fn precursor_ahead_of_the_light_cone_decays_with_distance() {
    let sc = linear(10.0);
    let out = wavesolver::run(&sc, Exec::Sequential).unwrap();
    let st = &out.state;
    let cone = sc.half_width + st.t;
    let leak: Vec<f64> = [1.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|m| outside(st, &sc, cone + m * sc.dx))
        .collect();
    let peak = st.sup_norm();
    assert!(leak.windows(2).all(|w| w[1] <= w[0]), "{leak:?}");
    assert!(leak[0] < 1e-3 * peak, "{leak:?}");
    assert!(leak[2] < 1e-7 * peak, "{leak:?}");
    assert!(leak[3] < 1e-12 * peak, "{leak:?}");
    assert!(out.support_leak < 1e-3 * peak, "{}", out.support_leak);
}

#[test]
fn v_to_u_divides_by_the_areal_radius() {
    let sc = Scenario {
        t_max: 1.0,
        ..Scenario::default()
    };
    let setup = wavesolver::Setup::new(&sc, Exec::Sequential).unwrap();
    let bg: &Background = &setup.background;
    let (v0, v1) = wavesolver::make_initial_data(&sc, &setup.grid);
    let stepper = wavesolver::Stepper::new(&sc, &setup.medium, Exec::Sequential);
    let mut state = stepper.initial_state(&v0, &v1);

    let u = v_to_u(&state, bg).unwrap();
    let i0 = setup.grid.nearest(sc.s0);
    assert!((setup.grid.s(i0) - sc.s0).abs() < 1e-12);
    // r(10) for M = 1, to 20 digits: 6.84436687733670735975
    let expected = v0[i0] / 6.844_366_877_336_707;
    assert!((u[i0] - expected).abs() <= 1e-14 * expected, "{} vs {expected}", u[i0]);

    state.v_curr = (0..setup.grid.len).map(|i| bg.radius(setup.grid.s(i)).unwrap().r()).collect();
    let ones = v_to_u(&state, bg).unwrap();
    assert!(ones.iter().all(|x| (x - 1.0).abs() < 1e-15));
}

#[test]
fn linear_runs_stay_bounded_and_never_trigger() {
    for (eps, s0) in [(0.5, 10.0), (2.0, -5.0), (1.0, 40.0)] {
        let sc = Scenario { eps, s0, ..linear(40.0) };
        let out = wavesolver::run(&sc, Exec::Sequential).unwrap();
        assert!(!out.report.detected);
        let first = &out.series.samples[0];
        for s in &out.series.samples {
            assert!(s.sup_norm.is_finite());
            // v₁ = v₀ for the bump data, so ‖v₀‖ + t‖v₁‖ = (1 + t)‖v₀‖
            assert!(s.l2_norm <= 1.01 * (1.0 + s.t) * first.l2_norm, "t = {}", s.t);
        }
    }
}

#[test]
fn noisy_power_law_fit_recovers_the_blowup_time() {
    let truth = 1.0;
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let growth: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let gap = 0.1 * 10f64.powf(-2.0 * k as f64 / 199.0);
                let t = truth - gap;
                (t, gap.powi(-2) * (1.0 + noise.sample(&mut rng)))
            })
            .collect();
        let fit = fit_blowup_exponent(&growth, 2.0).unwrap();
        worst = worst.max((fit.t_fit - truth).abs() / truth);
    }
    assert!(worst < 0.02, "worst relative error in T over 100 draws: {worst}");
}
