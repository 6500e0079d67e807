use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ergohorizon::fields::{rhs_polar, rhs_sqrtchart};
use ergohorizon::horizon::{no_escape_check, ray_crossing};
use ergohorizon::tangency::q_on_ergosphere;
use ergohorizon::{
    build_horizon, classify_fate, find_tangential_points, jacobian_at, CriticalKind, Family, Fate, HoleKind,
    HorizonConfig, ModelParams, PolarPoint,
};

// Independent high-precision values for A0 = -2, eps = 0.3.
const R0: [(f64, f64); 5] = [
    (0.0, 2.0965696734438366),
    (FRAC_PI_2, 1.5384615384615385),
    (PI, 2.0965696734438366),
    (1.5 * PI, 2.8571428571428571),
    (0.7, 1.7144055323098784),
];
const CORNER_R: f64 = 2.779405727126917;

fn canonical() -> ModelParams {
    ModelParams::new(-2.0, 0.3).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn ergosphere_radius_matches_oracle() {
    let m = canonical();
    for (theta, r) in R0 {
        assert!(close(m.ergosphere_radius(theta).unwrap(), r, 1e-14), "theta {theta}");
    }
}

#[test]
fn tangency_function_matches_oracle() {
    let m = canonical();
    assert!(close(q_on_ergosphere(&m, 0.0).unwrap(), 2.2894540834006696, 1e-12));
    assert!(close(q_on_ergosphere(&m, 0.7).unwrap(), 1.4906571845908918, 1e-12));
}

#[test]
fn fields_match_oracle() {
    let m = canonical();
    let p = PolarPoint { r: 1.0, theta: 0.7 };
    let cases = [
        (Family::Plus, [-1.3673315057784341, -0.66883729607465126], [0.80646111726747823, -0.15992025045226917]),
        (Family::Minus, [-1.1567390016374929, 0.98939054847186957], [-0.19407351134997686, 0.18334391467570944]),
    ];
    for (fam, polar, sqrt) in cases {
        let a = rhs_polar(&m, p, fam).unwrap();
        let b = rhs_sqrtchart(&m, [0.5, 0.7], fam).unwrap();
        for i in 0..2 {
            assert!(close(a[i], polar[i], 1e-12), "{fam:?} polar {a:?}");
            assert!(close(b[i], sqrt[i], 1e-10), "{fam:?} sqrt {b:?}");
        }
    }
}

#[test]
fn canonical_tangential_points_and_jacobians() {
    let m = canonical();
    let rep = find_tangential_points(&m).unwrap();
    assert!(!rep.characteristic);
    assert_eq!(rep.points.len(), 2);
    assert!((rep.points[0] - FRAC_PI_2).abs() < 1e-10);
    assert!((rep.points[1] - 1.5 * PI).abs() < 1e-10);

    let top = jacobian_at(&m, FRAC_PI_2, Family::Plus).unwrap();
    let expect = [[0.845, -0.78], [-0.4225, 0.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((top.jacobian[i][j] - expect[i][j]).abs() < 1e-5, "{:?}", top.jacobian);
        }
    }
    assert!((top.det + 0.32955).abs() < 1e-5);
    assert!((top.trace - 0.845).abs() < 1e-5);
    assert!((top.discriminant - 2.032225).abs() < 1e-5);
    assert_eq!(top.kind, CriticalKind::Saddle);

    let minus = jacobian_at(&m, FRAC_PI_2, Family::Minus).unwrap();
    assert!((minus.jacobian[0][1] - 0.78).abs() < 1e-5 && (minus.jacobian[1][0] - 0.4225).abs() < 1e-5);

    let bottom = jacobian_at(&m, 1.5 * PI, Family::Plus).unwrap();
    assert!((bottom.det - 0.05145).abs() < 1e-5);
    assert!((bottom.trace - 0.245).abs() < 1e-5);
    assert!((bottom.discriminant + 0.145775).abs() < 1e-5);
    assert_eq!(bottom.kind, CriticalKind::UnstableSpiral);
}

#[test]
fn classification_by_eps() {
    let table = [
        (0.05, CriticalKind::UnstableNode),
        (0.1, CriticalKind::UnstableNode),
        (0.2, CriticalKind::UnstableSpiral),
        (0.3, CriticalKind::UnstableSpiral),
        (0.9, CriticalKind::UnstableSpiral),
    ];
    for (eps, lower) in table {
        let m = ModelParams::new(-2.0, eps).unwrap();
        for fam in Family::BOTH {
            assert_eq!(jacobian_at(&m, FRAC_PI_2, fam).unwrap().kind, CriticalKind::Saddle, "eps {eps}");
            assert_eq!(jacobian_at(&m, 1.5 * PI, fam).unwrap().kind, lower, "eps {eps}");
        }
    }
}

#[test]
fn node_spiral_threshold_is_one_ninth() {
    let disc = |eps: f64| jacobian_at(&ModelParams::new(-2.0, eps).unwrap(), 1.5 * PI, Family::Plus).unwrap().discriminant;
    let ninth = 1.0 / 9.0;
    assert!(disc(ninth - 1e-4) > 0.0);
    assert!(disc(ninth + 1e-4) < 0.0);
    assert!(disc(ninth).abs() < 1e-8);
}

#[test]
fn interior_seeds_fall_in() {
    let m = canonical();
    let cfg = HorizonConfig::default();
    for k in 0..12 {
        let theta = TAU * k as f64 / 12.0;
        let start = PolarPoint { r: 0.3 * m.ergosphere_radius(theta).unwrap(), theta };
        for fam in Family::BOTH {
            assert_eq!(classify_fate(&m, start, fam, &cfg).unwrap(), Fate::FellIn, "theta {theta} {fam:?}");
        }
    }
}

#[test]
fn canonical_horizon() {
    let m = canonical();
    let h = build_horizon(&m, &HorizonConfig::default()).unwrap();
    assert_eq!(h.kind, HoleKind::BlackHole);
    assert!(h.closed && h.closed_gap < 1e-6);
    assert_eq!(h.corners.len(), 1);
    let c = h.corners[0];
    assert!((c.theta - 1.5 * PI).abs() < 1e-8);
    assert!((c.r - CORNER_R).abs() < 1e-8, "corner r {}", c.r);
    assert!(c.angle_deg > 150.0 && c.angle_deg < 165.0);
    // inside the ergoregion and star-shaped about the origin
    for k in 0..360 {
        let theta = TAU * (k as f64 + 0.5) / 360.0;
        let hits = ray_crossing(&h, theta);
        assert_eq!(hits.len(), 1, "theta {theta}");
        assert!(hits[0] <= m.ergosphere_radius(theta).unwrap() + 1e-9);
    }
    assert!(no_escape_check(&m, &h, 256).unwrap().max_violation <= 1e-3);
}

#[test]
fn node_regime_horizon() {
    let m = ModelParams::new(-2.0, 0.05).unwrap();
    let h = build_horizon(&m, &HorizonConfig::default()).unwrap();
    assert!(h.closed && h.closed_gap < 1e-6);
    assert!(h.separatrices.iter().all(|s| s.shooting_theta.is_none() && s.manifold_theta.is_some()));
    assert!(no_escape_check(&m, &h, 256).unwrap().max_violation <= 1e-3);
}

#[test]
fn white_hole_mirrors_black_hole() {
    let black = build_horizon(&canonical(), &HorizonConfig::default()).unwrap();
    let white = build_horizon(&canonical().reversed(), &HorizonConfig::default()).unwrap();
    assert_eq!(white.kind, HoleKind::WhiteHole);
    assert_eq!(white.corners.len(), black.corners.len());
    for (a, b) in white.polygon().iter().zip(black.polygon()) {
        assert!((a[0] - b[0]).abs() < 1e-6 && (a[1] - b[1]).abs() < 1e-6);
    }
}

#[test]
fn radial_flow_horizon_is_ergosphere() {
    let m = ModelParams::radial_allowed(-2.0, 0.0).unwrap();
    let h = build_horizon(&m, &HorizonConfig::default()).unwrap();
    assert!(h.corners.is_empty());
    for p in h.polygon() {
        assert!((p[0].hypot(p[1]) - 2.0).abs() < 1e-12);
    }
}
