use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Family;
use crate::horizon::Fate;
use crate::ode::{hermite, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    Polar,
    Ergo,
    Sqrt,
    /// Integrated partly in the square-root chart near the ergosphere and in
    /// polar coordinates elsewhere.
    Mixed,
}

/// One stored point of a trajectory, in polar coordinates with its polar velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub x0: f64,
    pub r: f64,
    pub theta: f64,
    pub dr: f64,
    pub dtheta: f64,
}

impl TrajectorySample {
    pub fn cartesian(&self) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [self.r * c, self.r * s]
    }

    fn as_sample(&self) -> Sample<2> {
        Sample {
            x0: self.x0,
            y: [self.r, self.theta],
            dy: [self.dr, self.dtheta],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub family: Family,
    pub chart: Chart,
    /// Ordered by strictly increasing `x0`.
    pub samples: Vec<TrajectorySample>,
    pub termination: Fate,
}

impl Trajectory {
    pub fn cartesian(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(TrajectorySample::cartesian).collect()
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has samples")
    }

    /// Polar state at parameter `s ∈ [0, 1]` of the step `i → i+1`.
    fn eval(&self, i: usize, s: f64) -> [f64; 2] {
        let (a, b) = (self.samples[i].as_sample(), self.samples[i + 1].as_sample());
        let p = hermite(&a, &b, a.x0 + s * (b.x0 - a.x0));
        let (sn, cs) = p[1].sin_cos();
        [p[0] * cs, p[0] * sn]
    }
}

const SUBDIV: usize = 16;

/// `n` points equally spaced in Euclidean arclength along the Cartesian image.
///
/// The curve between stored samples is the cubic Hermite interpolant in the
/// polar chart, so resampled points lie on that interpolant rather than on
/// chords. Both endpoints are kept exactly.
pub fn resample_arclength(traj: &Trajectory, n: usize) -> Result<Vec<[f64; 2]>> {
    if traj.samples.len() < 2 {
        return Err(Error::DegenerateTrajectory("fewer than two samples".into()));
    }
    if n < 2 {
        return Err(Error::DegenerateTrajectory("need at least two output points".into()));
    }
    // fine parameterization: (step index, sub-parameter, cumulative length)
    let mut nodes: Vec<(usize, f64, f64)> = vec![(0, 0.0, 0.0)];
    let mut prev = traj.eval(0, 0.0);
    let mut total = 0.0;
    for i in 0..traj.samples.len() - 1 {
        for k in 1..=SUBDIV {
            let s = k as f64 / SUBDIV as f64;
            let p = traj.eval(i, s);
            total += (p[0] - prev[0]).hypot(p[1] - prev[1]);
            nodes.push((i, s, total));
            prev = p;
        }
    }
    if total <= 0.0 {
        return Err(Error::DegenerateTrajectory("zero arclength".into()));
    }
    let mut out = Vec::with_capacity(n);
    out.push(traj.first().cartesian());
    let mut j = 1;
    for k in 1..n - 1 {
        let target = total * k as f64 / (n - 1) as f64;
        while nodes[j].2 < target {
            j += 1;
        }
        let (i1, s1, l1) = nodes[j];
        let (i0, s0, l0) = nodes[j - 1];
        let w = if l1 > l0 { (target - l0) / (l1 - l0) } else { 0.0 };
        let s_start = if i0 == i1 { s0 } else { 0.0 };
        out.push(traj.eval(i1, s_start + w * (s1 - s_start)));
    }
    out.push(traj.last().cartesian());
    Ok(out)
}
