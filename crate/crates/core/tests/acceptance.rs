//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::{Duration, Instant};

use ergohorizon::fields::{f_field, rhs_ergochart, rhs_polar, rhs_sqrtchart};
use ergohorizon::geometry::hausdorff;
use ergohorizon::horizon::{
    ergosphere_escape_margin, fate_scan, fate_transitions, mirrored, no_escape_check, ray_crossing, shoot,
    starting_arcs, Tracer,
};
use ergohorizon::tangency::{closed_form_jacobian, lemma21_profile};
use ergohorizon::verify::chart_samples;
use ergohorizon::{
    build_horizon, find_tangential_points, jacobian_at, CriticalKind, Family, HoleKind, HorizonConfig, HorizonCurve,
    ModelParams, Result,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn canonical() -> ModelParams {
    ModelParams::new(-2.0, 0.3).unwrap()
}

fn radial_oracle() -> Result<Outcome> {
    let m = ModelParams::radial_allowed(-2.0, 0.0)?;
    let (h, dt) = timed(|| build_horizon(&m, &HorizonConfig::default()));
    let h = h?;
    let mut err = 0.0f64;
    for k in 0..360 {
        let theta = TAU * k as f64 / 360.0;
        for r in ray_crossing(&h, theta) {
            err = err.max((r - 2.0).abs());
        }
    }
    let pass = h.corners.is_empty() && err <= 1e-6 && dt <= Duration::from_secs(1);
    Ok(outcome(pass, format!("corners={} max|r-2|={err:.3e} time={:.3}s", h.corners.len(), dt.as_secs_f64())))
}

fn corner_position(h: &HorizonCurve, dt: Duration) -> Outcome {
    let Some(c) = h.corners.first() else {
        return outcome(false, "no corner".into());
    };
    let dth = angle_gap(c.theta, -FRAC_PI_2);
    let dr = (c.r - 2.4350096).abs();
    let pass = h.corners.len() == 1 && dth <= 1e-3 && dr <= 1e-2 && dt <= Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "corners={} |dtheta|={dth:.3e} r={:.10} |r-2.4350096|={dr:.3e} time={:.3}s",
            h.corners.len(),
            c.r,
            dt.as_secs_f64()
        ),
    )
}

fn classification_table() -> Result<Outcome> {
    let mut pass = true;
    let mut worst_fd = 0.0f64;
    for eps in [0.05, 0.10, 0.2, 0.3, 0.9] {
        let m = ModelParams::new(-2.0, eps)?;
        let lower = if eps <= 0.10 { CriticalKind::UnstableNode } else { CriticalKind::UnstableSpiral };
        for fam in Family::BOTH {
            for (theta, want) in [(FRAC_PI_2, CriticalKind::Saddle), (1.5 * PI, lower)] {
                let info = jacobian_at(&m, theta, fam)?;
                pass &= info.kind == want;
                let exact = closed_form_jacobian(&m, theta, fam).expect("closed form at ±π/2");
                let scale = exact.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
                for i in 0..2 {
                    for j in 0..2 {
                        worst_fd = worst_fd.max((info.jacobian[i][j] - exact[i][j]).abs() / scale);
                    }
                }
            }
        }
    }
    let disc = |eps: f64| -> Result<f64> { Ok(jacobian_at(&ModelParams::new(-2.0, eps)?, 1.5 * PI, Family::Plus)?.discriminant) };
    let ninth = 1.0 / 9.0;
    let (below, above) = (disc(ninth - 1e-3)?, disc(ninth + 1e-3)?);
    let bracket = below > 0.0 && above < 0.0;
    pass &= bracket && worst_fd <= 1e-5;
    Ok(outcome(pass, format!("kinds ok={pass} disc(1/9-1e-3)={below:.3e} disc(1/9+1e-3)={above:.3e} fd_rel={worst_fd:.3e}")))
}

fn tangential_points() -> Result<Outcome> {
    let rep = find_tangential_points(&canonical())?;
    let err = match rep.points.as_slice() {
        [a, b] => angle_gap(*a, FRAC_PI_2).max(angle_gap(*b, 1.5 * PI)),
        _ => f64::INFINITY,
    };
    Ok(outcome(err <= 1e-10, format!("points={:?} err={err:.3e}", rep.points)))
}

fn lemma_asymptotics() -> Result<Outcome> {
    let rep = lemma21_profile(&canonical(), FRAC_PI_2, Family::Plus, (1e-4, 1e-2))?;
    Ok(outcome(rep.fitted_slope >= 1.9, format!("fitted slope={:.4}", rep.fitted_slope)))
}

fn no_escape(h: &HorizonCurve) -> Result<Outcome> {
    let m = canonical();
    let rep = no_escape_check(&m, h, 256)?;
    let control = ergosphere_escape_margin(&m, 0.0)?;
    let pass = rep.max_violation <= 1e-3 && control > 0.1;
    Ok(outcome(pass, format!("max(v.nu+1)={:.3e} control(theta=0)={control:.4}", rep.max_violation)))
}

fn mirror(h: &HorizonCurve) -> Outcome {
    let poly = h.polygon();
    let d = hausdorff(&poly, &mirrored(&poly));
    outcome(d <= 1e-6, format!("hausdorff={d:.3e}"))
}

fn chart_consistency() -> Result<Outcome> {
    let m = canonical();
    let (mut chart, mut charac) = (0.0f64, 0.0f64);
    for p in chart_samples(&m, 1000)? {
        let g = m.inverse_metric_at(p)?;
        let gnorm = g.grr.abs().max(g.grtheta.abs()).max(g.gthetatheta.abs());
        let rho = m.ergo_fn(p)?;
        let (gr, gt) = m.rho_grad(p.r, p.theta);
        for fam in Family::BOTH {
            let xi = f_field(&m, p, fam)?.covector();
            let q = g.grr * xi[0] * xi[0] + 2.0 * g.grtheta * xi[0] * xi[1] + g.gthetatheta * xi[1] * xi[1];
            charac = charac.max(q.abs() / (gnorm * (xi[0] * xi[0] + xi[1] * xi[1])));

            let polar = rhs_polar(&m, p, fam)?;
            let ergo = rhs_ergochart(&m, [rho, p.theta], fam)?;
            let t = rho.sqrt();
            let sq = rhs_sqrtchart(&m, [t, p.theta], fam)?;
            let drho = gr * polar[0] + gt * polar[1];
            let scale = (gr * polar[0]).abs().max((gt * polar[1]).abs()).max(drho.abs());
            chart = chart
                .max((ergo[0] - drho).abs() / scale)
                .max((2.0 * t * sq[0] - drho).abs() / scale)
                .max((ergo[1] - polar[1]).abs() / polar[1].abs())
                .max((sq[1] - polar[1]).abs() / polar[1].abs());
        }
    }
    Ok(outcome(chart <= 1e-10 && charac <= 1e-10, format!("chart={chart:.3e} characteristic={charac:.3e}")))
}

fn white_hole(black: &HorizonCurve) -> Result<Outcome> {
    let m = ModelParams::new(2.0, -0.3)?;
    let h = build_horizon(&m, &HorizonConfig::default())?;
    let d = hausdorff(&h.polygon(), &black.polygon());
    let pass = h.kind == HoleKind::WhiteHole && d <= 1e-6;
    Ok(outcome(pass, format!("kind={:?} hausdorff={d:.3e}", h.kind)))
}

fn fate_partition() -> Result<Outcome> {
    let m = canonical();
    let cfg = HorizonConfig::default();
    let tracer = Tracer::new(&m, &cfg)?;
    let arc = starting_arcs(&m, Family::Plus)?[0];
    let transitions = fate_transitions(&fate_scan(&tracer, arc, Family::Plus, 512)).len();
    let root = shoot(&tracer, Family::Plus)?.theta;
    let halved = HorizonConfig { integrator: cfg.integrator.scaled_tolerances(0.5), ..cfg };
    let root_half = shoot(&Tracer::new(&m, &halved)?, Family::Plus)?.theta;
    let shift = (root - root_half).abs();
    Ok(outcome(transitions == 1 && shift <= 1e-8, format!("transitions={transitions} root={root:.12} shift={shift:.3e}")))
}

fn main() {
    let (black, dt) = timed(|| build_horizon(&canonical(), &HorizonConfig::default()));
    let black = black.expect("canonical horizon");
    let results: Vec<(&str, Result<Outcome>)> = vec![
        ("1 radial oracle", radial_oracle()),
        ("2 corner position", Ok(corner_position(&black, dt))),
        ("3 classification table", classification_table()),
        ("4 tangential points", tangential_points()),
        ("5 boundary asymptotics", lemma_asymptotics()),
        ("6 no-escape", no_escape(&black)),
        ("7 mirror symmetry", Ok(mirror(&black))),
        ("8 chart consistency", chart_consistency()),
        ("9 white hole", white_hole(&black)),
        ("10 fate partition", fate_partition()),
    ];
    let mut failed = 0;
    for (name, res) in results {
        let o = res.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        failed += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
