use std::f64::consts::PI;

use ergohorizon::fields::rhs_polar;
use ergohorizon::ode::{Crossing, Direction, EventSpec, Stop};
use ergohorizon::{integrate, Error, Family, IntegratorConfig, ModelParams, PolarPoint};

fn cfg(rel: f64, x0_max: f64) -> IntegratorConfig {
    IntegratorConfig { rel_tol: rel, abs_tol: rel * 1e-3, x0_max, ..IntegratorConfig::default() }
}

fn oscillator(y: &[f64; 2]) -> ergohorizon::Result<[f64; 2]> {
    Ok([y[1], -y[0]])
}

#[test]
fn harmonic_oscillator_closed_form() {
    let sol = integrate(oscillator, [1.0, 0.0], Direction::Forward, &cfg(1e-10, 20.0), &[]).unwrap();
    assert_eq!(sol.stop, Stop::Budget);
    for s in &sol.samples {
        assert!((s.y[0] - s.x0.cos()).abs() < 1e-8, "x0 {}", s.x0);
        assert!((s.y[1] + s.x0.sin()).abs() < 1e-8, "x0 {}", s.x0);
    }
    let end = sol.last();
    assert!((end.x0 - 20.0).abs() < 1e-12);
    let mid = sol.dense(7.3).unwrap();
    assert!((mid[0] - 7.3f64.cos()).abs() < 1e-7);
}

#[test]
fn exponential_decay_backward() {
    let sol = integrate(|y: &[f64; 1]| Ok([-y[0]]), [1.0], Direction::Backward, &cfg(1e-10, 3.0), &[]).unwrap();
    let end = sol.last();
    assert!((end.x0 + 3.0).abs() < 1e-12);
    assert!((end.y[0] - 3.0f64.exp()).abs() < 1e-8 * 3.0f64.exp());
}

#[test]
fn events_fire_in_order_and_terminal_stops() {
    let events = [
        EventSpec::new(|y: &[f64; 2]| y[0] - 0.5, Crossing::Falling, false),
        EventSpec::new(|y: &[f64; 2]| y[0] + 0.5, Crossing::Falling, true),
        EventSpec::new(|y: &[f64; 2]| y[0] - 0.9, Crossing::Rising, false),
    ];
    let sol = integrate(oscillator, [1.0, 0.0], Direction::Forward, &cfg(1e-10, 20.0), &events).unwrap();
    assert_eq!(sol.stop, Stop::Event(1));
    let idx: Vec<usize> = sol.events.iter().map(|e| e.index).collect();
    assert_eq!(idx, vec![0, 1]);
    assert!((sol.events[0].x0 - PI / 3.0).abs() < 1e-8);
    assert!((sol.events[1].x0 - 2.0 * PI / 3.0).abs() < 1e-8);
    assert!(sol.events.windows(2).all(|w| w[0].x0 < w[1].x0));
    assert!((sol.last().x0 - 2.0 * PI / 3.0).abs() < 1e-8);
}

#[test]
fn collapsing_step_is_an_error() {
    // y' = y² blows up at x0 = 1
    let res = integrate(|y: &[f64; 1]| Ok([y[0] * y[0]]), [1.0], Direction::Forward, &cfg(1e-9, 2.0), &[]);
    match res {
        Err(Error::StepFailure { x0, .. }) => assert!((x0 - 1.0).abs() < 1e-3, "x0 {x0}"),
        other => panic!("expected step failure, got {other:?}"),
    }
}

#[test]
fn invalid_config_rejected() {
    let bad = IntegratorConfig { abs_tol: 1e-3, rel_tol: 1e-6, ..IntegratorConfig::default() };
    assert!(integrate(oscillator, [1.0, 0.0], Direction::Forward, &bad, &[]).is_err());
}

fn canonical_seeds(m: &ModelParams) -> Vec<PolarPoint> {
    (0..10)
        .map(|k| {
            let theta = 0.3 + 0.6 * k as f64;
            PolarPoint { r: 0.6 * m.ergosphere_radius(theta).unwrap(), theta }
        })
        .collect()
}

fn polar_end(m: &ModelParams, p: PolarPoint, c: &IntegratorConfig, dir: Direction) -> [f64; 2] {
    let sol = integrate(|y: &[f64; 2]| rhs_polar(m, PolarPoint { r: y[0], theta: y[1] }, Family::Plus), [p.r, p.theta], dir, c, &[]).unwrap();
    sol.last().y
}

#[test]
fn global_error_tracks_tolerance() {
    let m = ModelParams::new(-2.0, 0.3).unwrap();
    let x = 0.2;
    for p in canonical_seeds(&m) {
        let reference = polar_end(&m, p, &cfg(1e-13, x), Direction::Forward);
        let err = |rel: f64| {
            let e = polar_end(&m, p, &cfg(rel, x), Direction::Forward);
            (e[0] - reference[0]).hypot(e[1] - reference[1])
        };
        let (coarse, fine) = (err(1e-5), err(1e-9));
        assert!(coarse < 1e-3, "seed {p:?}: {coarse}");
        assert!(fine < 1e-7, "seed {p:?}: {fine}");
        assert!(fine <= coarse.max(1e-12), "seed {p:?}: {fine} > {coarse}");
    }
}

#[test]
fn forward_then_backward_returns_to_seed() {
    let m = ModelParams::new(-2.0, 0.3).unwrap();
    let x = 0.2;
    for p in canonical_seeds(&m) {
        let c = cfg(1e-11, x);
        let end = polar_end(&m, p, &c, Direction::Forward);
        let back = polar_end(&m, PolarPoint { r: end[0], theta: end[1] }, &c, Direction::Backward);
        assert!((back[0] - p.r).abs() < 1e-7 && (back[1] - p.theta).abs() < 1e-7, "seed {p:?} back {back:?}");
    }
}
