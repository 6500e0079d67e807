//! Minimal deterministic SVG rendering of ergospheres, trajectories and horizons.

use std::fmt::Write;

use crate::geometry::Point;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub point: Point,
    pub label: String,
}

/// Everything drawable in one figure. Empty vectors are simply not drawn.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub title: String,
    /// Closed curve; the closing edge is implied.
    pub ergosphere: Vec<Point>,
    /// Thin polylines.
    pub trajectories: Vec<Vec<Point>>,
    /// Bold polylines.
    pub separatrices: Vec<Vec<Point>>,
    /// Closed outline of the trapped region.
    pub horizon: Option<Vec<Point>>,
    pub critical_points: Vec<Marker>,
    pub corners: Vec<Point>,
}

struct View {
    cx: f64,
    cy: f64,
    scale: f64,
}

impl View {
    fn fit(scene: &Scene) -> View {
        let all = scene
            .ergosphere
            .iter()
            .chain(scene.trajectories.iter().flatten())
            .chain(scene.separatrices.iter().flatten())
            .chain(scene.horizon.iter().flatten())
            .chain(scene.critical_points.iter().map(|m| &m.point))
            .filter(|p| p[0].is_finite() && p[1].is_finite());
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for p in all {
            b = [b[0].min(p[0]), b[1].max(p[0]), b[2].min(p[1]), b[3].max(p[1])];
        }
        if !b[0].is_finite() {
            b = [-1.0, 1.0, -1.0, 1.0];
        }
        let span = (b[1] - b[0]).max(b[3] - b[2]).max(1e-12);
        View { cx: 0.5 * (b[0] + b[1]), cy: 0.5 * (b[2] + b[3]), scale: (SIZE - 2.0 * MARGIN) / span }
    }

    fn px(&self, p: Point) -> (f64, f64) {
        (0.5 * SIZE + (p[0] - self.cx) * self.scale, 0.5 * SIZE - (p[1] - self.cy) * self.scale)
    }
}

fn path_data(view: &View, pts: &[Point], close: bool) -> String {
    let mut d = String::new();
    for (k, &p) in pts.iter().enumerate() {
        let (x, y) = view.px(p);
        let _ = write!(d, "{}{:.3},{:.3}", if k == 0 { "M" } else { " L" }, x, y);
    }
    if close {
        d.push_str(" Z");
    }
    d
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(scene: &Scene) -> String {
    let view = View::fit(scene);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !scene.title.is_empty() {
        let _ = writeln!(out, r#"<title>{}</title>"#, escape(&scene.title));
    }

    // axes through the origin, clamped to the canvas
    let (ox, oy) = view.px([0.0, 0.0]);
    let (ox, oy) = (ox.clamp(0.0, SIZE), oy.clamp(0.0, SIZE));
    let _ = writeln!(
        out,
        r##"<g class="axes" stroke="#999" stroke-width="0.75"><line x1="0" y1="{oy:.3}" x2="{SIZE}" y2="{oy:.3}"/><line x1="{ox:.3}" y1="0" x2="{ox:.3}" y2="{SIZE}"/></g>"##
    );

    if let Some(h) = &scene.horizon {
        if h.len() >= 3 {
            let _ = writeln!(
                out,
                r##"<path class="horizon" d="{}" fill="#1f3a93" fill-opacity="0.15" stroke="#1f3a93" stroke-width="1" stroke-dasharray="4 3"/>"##,
                path_data(&view, h, true)
            );
        }
    }
    if scene.ergosphere.len() >= 3 {
        let _ = writeln!(
            out,
            r##"<path class="ergosphere" d="{}" fill="none" stroke="#c0392b" stroke-width="1.25"/>"##,
            path_data(&view, &scene.ergosphere, true)
        );
    }
    for t in scene.trajectories.iter().filter(|t| t.len() >= 2) {
        let _ = writeln!(
            out,
            r##"<path class="trajectory" d="{}" fill="none" stroke="#555" stroke-width="0.6"/>"##,
            path_data(&view, t, false)
        );
    }
    for t in scene.separatrices.iter().filter(|t| t.len() >= 2) {
        let _ = writeln!(
            out,
            r##"<path class="separatrix" d="{}" fill="none" stroke="black" stroke-width="2.5"/>"##,
            path_data(&view, t, false)
        );
    }
    for m in &scene.critical_points {
        let (x, y) = view.px(m.point);
        let _ = writeln!(
            out,
            r##"<circle class="critical" cx="{x:.3}" cy="{y:.3}" r="5" fill="#e67e22" stroke="black"><title>{}</title></circle>"##,
            escape(&m.label)
        );
    }
    for &c in &scene.corners {
        let (x, y) = view.px(c);
        let _ = writeln!(
            out,
            r##"<rect class="corner" x="{:.3}" y="{:.3}" width="8" height="8" fill="none" stroke="#8e44ad" stroke-width="1.5"/>"##,
            x - 4.0,
            y - 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_has_axes() {
        let s = render_svg(&Scene::default());
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains(r#"class="axes""#));
        assert!(!s.contains("<path"));
    }

    #[test]
    fn counts_and_determinism() {
        let sq = vec![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        let scene = Scene {
            title: "a<b".into(),
            ergosphere: sq.clone(),
            trajectories: vec![vec![[0.1, 0.1], [0.2, 0.3]]],
            separatrices: vec![sq.clone(), sq.clone()],
            horizon: Some(sq),
            critical_points: vec![Marker { point: [0.0, 1.0], label: "saddle".into() }],
            corners: vec![[0.0, -1.0]],
        };
        let a = render_svg(&scene);
        assert_eq!(a, render_svg(&scene));
        assert_eq!(a.matches(r#"class="separatrix""#).count(), 2);
        assert_eq!(a.matches(r#"class="critical""#).count(), 1);
        assert!(a.contains("a&lt;b"));
    }
}
