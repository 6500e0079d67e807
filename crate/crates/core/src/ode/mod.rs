//! Adaptive Dormand–Prince 5(4) integrator for autonomous systems.
//!
//! Accepted steps are stored with their derivatives so that any step can be
//! re-evaluated by cubic Hermite interpolation. Event guards are checked on
//! every accepted step and localized by bisection on that interpolant.

mod trajectory;

pub use trajectory::{resample_arclength, Chart, Trajectory, TrajectorySample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Integration budget in `x0` units, measured from the initial point.
    pub x0_max: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 0.05,
            min_step: 1e-12,
            x0_max: 1e4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.abs_tol > 0.0 && self.abs_tol <= self.rel_tol && self.rel_tol < 1.0) {
            return bad("tolerances must satisfy 0 < abs_tol <= rel_tol < 1");
        }
        if !(self.min_step > 0.0 && self.min_step < self.max_step) {
            return bad("step bounds must satisfy 0 < min_step < max_step");
        }
        if !(self.x0_max > 0.0 && self.x0_max.is_finite()) {
            return bad("x0_max must be positive and finite");
        }
        Ok(())
    }

    /// Same configuration with both tolerances scaled by `factor`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol * factor,
            abs_tol: self.abs_tol * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Which sign changes of a guard count, judged along the direction of integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Rising,
    Falling,
    Any,
}

pub type Guard<'a, const N: usize> = Box<dyn Fn(&[f64; N]) -> f64 + 'a>;

pub struct EventSpec<'a, const N: usize> {
    pub guard: Guard<'a, N>,
    pub direction: Crossing,
    pub terminal: bool,
}

impl<'a, const N: usize> EventSpec<'a, N> {
    pub fn new(guard: impl Fn(&[f64; N]) -> f64 + 'a, direction: Crossing, terminal: bool) -> Self {
        Self {
            guard: Box::new(guard),
            direction,
            terminal,
        }
    }

    fn triggers(&self, before: f64, after: f64) -> bool {
        let rising = before < 0.0 && after >= 0.0;
        let falling = before > 0.0 && after <= 0.0;
        match self.direction {
            Crossing::Rising => rising,
            Crossing::Falling => falling,
            Crossing::Any => rising || falling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<const N: usize> {
    pub x0: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord<const N: usize> {
    /// Index into the event list passed to [`integrate`].
    pub index: usize,
    pub x0: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Event(usize),
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub samples: Vec<Sample<N>>,
    pub events: Vec<EventRecord<N>>,
    pub stop: Stop,
    pub rejected_steps: usize,
}

impl<const N: usize> Solution<N> {
    pub fn last(&self) -> &Sample<N> {
        self.samples.last().expect("a solution always holds its initial sample")
    }

    /// State at `x0` by Hermite interpolation on the accepted step containing it.
    pub fn dense(&self, x0: f64) -> Option<[f64; N]> {
        let s = &self.samples;
        let (first, last) = (s.first()?.x0, s.last()?.x0);
        let (lo, hi) = (first.min(last), first.max(last));
        if x0 < lo || x0 > hi {
            return None;
        }
        let forward = last >= first;
        let idx = s.partition_point(|p| if forward { p.x0 <= x0 } else { p.x0 >= x0 });
        let i = idx.clamp(1, s.len().max(2) - 1);
        if s.len() == 1 {
            return Some(s[0].y);
        }
        Some(hermite(&s[i - 1], &s[i], x0))
    }
}

pub(crate) fn hermite<const N: usize>(a: &Sample<N>, b: &Sample<N>, x0: f64) -> [f64; N] {
    let h = b.x0 - a.x0;
    if h == 0.0 {
        return a.y;
    }
    let s = (x0 - a.x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    std::array::from_fn(|k| h00 * a.y[k] + h10 * h * a.dy[k] + h01 * b.y[k] + h11 * h * b.dy[k])
}

// Dormand–Prince 5(4) tableau.
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
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const EVENT_GUARD_TOL: f64 = 1e-12;
const EVENT_BRACKET_TOL: f64 = 1e-13;

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = (0..N)
        .map(|k| {
            let sc = cfg.abs_tol + cfg.rel_tol * y0[k].abs().max(y1[k].abs());
            (err[k] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// Integrates the autonomous system `y' = rhs(y)` from `y0` at `x0 = 0`.
///
/// Stops at the first terminal event, when the budget `x0_max` is spent, or
/// fails with [`Error::StepFailure`] when the step size collapses below
/// `min_step`. A right-hand side error inside a trial step only rejects that
/// step; an error at an accepted point is returned.
pub fn integrate<F, const N: usize>(
    mut rhs: F,
    y0: [f64; N],
    direction: Direction,
    cfg: &IntegratorConfig,
    events: &[EventSpec<'_, N>],
) -> Result<Solution<N>>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    cfg.validate()?;
    let dir = direction.sign();
    let f0 = rhs(&y0)?;
    if !finite(&f0) {
        return Err(Error::NonFiniteRhs(0.0));
    }
    let mut samples = vec![Sample { x0: 0.0, y: y0, dy: f0 }];
    let mut records = Vec::new();
    let mut guards: Vec<f64> = events.iter().map(|e| (e.guard)(&y0)).collect();
    let mut h = initial_step(&mut rhs, &y0, &f0, cfg);
    let mut rejected = 0usize;
    let mut last_rejected = false;

    loop {
        let cur = *samples.last().unwrap();
        let remaining = cfg.x0_max - cur.x0.abs();
        if remaining <= 0.0 {
            return Ok(Solution { samples, events: records, stop: Stop::Budget, rejected_steps: rejected });
        }
        let h_try = h.min(remaining);
        let step = dp_step(&mut rhs, &cur, dir * h_try).map(|(y1, f1, err)| (y1, f1, error_norm(&err, &cur.y, &y1, cfg)));
        let (y1, f1, norm) = match step {
            Some((y1, f1, norm)) if norm.is_finite() && norm <= 1.0 => (y1, f1, norm),
            Some((_, _, norm)) if norm.is_finite() => {
                rejected += 1;
                let fac = (SAFETY * norm.powf(-0.2)).clamp(FAC_MIN, 1.0);
                h = h_try * fac;
                last_rejected = true;
                if h < cfg.min_step {
                    return Err(Error::StepFailure { x0: cur.x0, min_step: cfg.min_step });
                }
                continue;
            }
            _ => {
                rejected += 1;
                h = h_try * 0.25;
                last_rejected = true;
                if h < cfg.min_step {
                    return Err(match rhs(&cur.y) {
                        Err(e) => e,
                        Ok(_) => Error::StepFailure { x0: cur.x0, min_step: cfg.min_step },
                    });
                }
                continue;
            }
        };
        let next = Sample { x0: cur.x0 + dir * h_try, y: y1, dy: f1 };

        // earliest event inside this step
        let mut hit: Option<(usize, f64, [f64; N])> = None;
        let mut new_guards = Vec::with_capacity(events.len());
        for (i, ev) in events.iter().enumerate() {
            let g1 = (ev.guard)(&y1);
            new_guards.push(g1);
            if ev.triggers(guards[i], g1) {
                let (x, y) = localize(ev, &cur, &next, guards[i]);
                if hit.is_none_or(|(_, xh, _)| (x - cur.x0).abs() < (xh - cur.x0).abs()) {
                    hit = Some((i, x, y));
                }
            }
        }
        if let Some((i, x, y)) = hit {
            records.push(EventRecord { index: i, x0: x, y });
            if events[i].terminal {
                let dy = rhs(&y).unwrap_or(f1);
                if x != cur.x0 {
                    samples.push(Sample { x0: x, y, dy });
                }
                return Ok(Solution { samples, events: records, stop: Stop::Event(i), rejected_steps: rejected });
            }
        }
        guards = new_guards;
        samples.push(next);

        let mut fac = if norm == 0.0 { FAC_MAX } else { SAFETY * norm.powf(-0.2) };
        fac = fac.clamp(FAC_MIN, if last_rejected { 1.0 } else { FAC_MAX });
        last_rejected = false;
        h = (h_try * fac).min(cfg.max_step);
    }
}

/// One Dormand–Prince step. Returns `None` if any stage evaluation fails.
fn dp_step<F, const N: usize>(rhs: &mut F, cur: &Sample<N>, h: f64) -> Option<([f64; N], [f64; N], [f64; N])>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = cur.dy;
    for s in 1..7 {
        let ys: [f64; N] = std::array::from_fn(|j| {
            cur.y[j] + h * (0..s).map(|m| A[s][m] * k[m][j]).sum::<f64>()
        });
        debug_assert!(C[s] > 0.0);
        match rhs(&ys) {
            Ok(f) if finite(&f) => k[s] = f,
            _ => return None,
        }
    }
    let y1: [f64; N] = std::array::from_fn(|j| cur.y[j] + h * (0..6).map(|m| A[6][m] * k[m][j]).sum::<f64>());
    let err: [f64; N] = std::array::from_fn(|j| h * (0..7).map(|m| E[m] * k[m][j]).sum::<f64>());
    Some((y1, k[6], err))
}

fn initial_step<F, const N: usize>(rhs: &mut F, y0: &[f64; N], f0: &[f64; N], cfg: &IntegratorConfig) -> f64
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let scale = |k: usize| cfg.abs_tol + cfg.rel_tol * y0[k].abs();
    let rms = |v: &dyn Fn(usize) -> f64| ((0..N).map(|k| v(k).powi(2)).sum::<f64>() / N as f64).sqrt();
    let d0 = rms(&|k| y0[k] / scale(k));
    let d1 = rms(&|k| f0[k] / scale(k));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(cfg.max_step);
    let y1: [f64; N] = std::array::from_fn(|k| y0[k] + h0 * f0[k]);
    let h1 = match rhs(&y1) {
        Ok(f1) if finite(&f1) => {
            let d2 = rms(&|k| (f1[k] - f0[k]) / scale(k)) / h0;
            if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            }
        }
        _ => h0 * 1e-2,
    };
    (100.0 * h0).min(h1).min(cfg.max_step).max(cfg.min_step * 10.0)
}

fn localize<const N: usize>(ev: &EventSpec<'_, N>, a: &Sample<N>, b: &Sample<N>, g_a: f64) -> (f64, [f64; N]) {
    let (mut lo, mut hi) = (a.x0, b.x0);
    let mut g_lo = g_a;
    let mut best = (b.x0, b.y);
    for _ in 0..200 {
        if (hi - lo).abs() <= EVENT_BRACKET_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let y = hermite(a, b, mid);
        let g = (ev.guard)(&y);
        if g.abs() <= EVENT_GUARD_TOL {
            return (mid, y);
        }
        if g.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
            best = (mid, y);
        }
    }
    // report the far side of the bracket so the guard has certainly crossed
    if best.0 == hi {
        best
    } else {
        (hi, hermite(a, b, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg(x0_max: f64) -> IntegratorConfig {
        IntegratorConfig { x0_max, max_step: 0.1, ..Default::default() }
    }

    #[test]
    fn constant_field() {
        let sol = integrate(|_| Ok([1.0, 0.0]), [0.0, 0.0], Direction::Forward, &cfg(1.0), &[]).unwrap();
        let y = sol.last().y;
        assert!((y[0] - 1.0).abs() < 1e-12 && y[1].abs() < 1e-12);
        assert_eq!(sol.stop, Stop::Budget);
    }

    #[test]
    fn rotation_returns_home() {
        let sol = integrate(|y| Ok([-y[1], y[0]]), [1.0, 0.0], Direction::Forward, &cfg(2.0 * PI), &[]).unwrap();
        let y = sol.last().y;
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
        for s in &sol.samples {
            assert!((s.y[0].hypot(s.y[1]) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn backward_integration() {
        let sol = integrate(|y| Ok([-y[1], y[0]]), [1.0, 0.0], Direction::Backward, &cfg(PI / 2.0), &[]).unwrap();
        let last = sol.last();
        assert!((last.x0 + PI / 2.0).abs() < 1e-12);
        assert!(last.y[0].abs() < 1e-8 && (last.y[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn event_on_constant_field() {
        let ev = [EventSpec::new(|y: &[f64; 2]| y[0] - 0.5, Crossing::Rising, true)];
        let sol = integrate(|_| Ok([1.0, 0.0]), [0.0, 0.0], Direction::Forward, &cfg(1.0), &ev).unwrap();
        assert_eq!(sol.stop, Stop::Event(0));
        assert!((sol.events[0].x0 - 0.5).abs() < 1e-12);
        assert!((sol.last().x0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn direction_filter() {
        let ev = [EventSpec::new(|y: &[f64; 2]| y[1], Crossing::Falling, true)];
        let sol = integrate(|y| Ok([-y[1], y[0]]), [1.0, 0.0], Direction::Forward, &cfg(10.0), &ev).unwrap();
        // first falling crossing of y = sin(x0) is at x0 = π
        assert!((sol.events[0].x0 - PI).abs() < 1e-9);
    }

    #[test]
    fn non_terminal_events_are_recorded() {
        let ev = [EventSpec::new(|y: &[f64; 2]| y[1], Crossing::Any, false)];
        let sol = integrate(|y| Ok([-y[1], y[0]]), [1.0, 0.0], Direction::Forward, &cfg(7.0), &ev).unwrap();
        let xs: Vec<f64> = sol.events.iter().map(|e| e.x0).collect();
        assert_eq!(xs.len(), 2);
        assert!((xs[0] - PI).abs() < 1e-9 && (xs[1] - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn step_failure_on_blowup() {
        // y' = y², y(0) = 1 blows up at x0 = 1
        let err = integrate(|y| Ok([y[0] * y[0]]), [1.0], Direction::Forward, &cfg(2.0), &[]).unwrap_err();
        assert!(matches!(err, Error::StepFailure { .. } | Error::NonFiniteRhs(_)));
    }

    #[test]
    fn non_finite_initial_rhs() {
        let err = integrate(|_| Ok([f64::NAN]), [1.0], Direction::Forward, &cfg(1.0), &[]).unwrap_err();
        assert_eq!(err, Error::NonFiniteRhs(0.0));
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = IntegratorConfig { abs_tol: 1e-3, rel_tol: 1e-6, ..Default::default() };
        assert!(integrate(|_| Ok([1.0]), [0.0], Direction::Forward, &bad, &[]).is_err());
    }

    #[test]
    fn dense_output_matches_exact() {
        let sol = integrate(|y| Ok([-y[1], y[0]]), [1.0, 0.0], Direction::Forward, &cfg(3.0), &[]).unwrap();
        for k in 0..30 {
            let x = k as f64 * 0.1;
            let y = sol.dense(x).unwrap();
            assert!((y[0] - x.cos()).abs() < 1e-6 && (y[1] - x.sin()).abs() < 1e-6);
        }
    }
}
