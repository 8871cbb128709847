//! Quadrature rules over the supported domains.
//!
//! Composite Simpson is the default; a composite Gauss–Legendre tensor rule
//! is available as an alternative. Rectangle unions are integrated exactly
//! per rectangle (no boundary masking error), the circle uses the periodic
//! trapezoid rule, which is spectrally accurate for smooth integrands.

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    CompositeSimpson,
    GaussLegendreTensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: QuadratureRule,
    pub nodes_per_axis: usize,
    /// Density cutoff relative to the maximum; nodes below it are excluded
    /// from singular integrands.
    pub truncation_threshold: f64,
}

impl QuadratureSpec {
    pub fn new(
        rule: QuadratureRule,
        nodes_per_axis: usize,
        truncation_threshold: f64,
    ) -> Result<Self> {
        if nodes_per_axis < 16 {
            return Err(Error::InvalidQuadrature(format!(
                "nodes-per-axis must be at least 16, got {nodes_per_axis}"
            )));
        }
        if !(truncation_threshold > 0.0 && truncation_threshold <= 1e-6) {
            return Err(Error::InvalidQuadrature(format!(
                "truncation-threshold must lie in (0, 1e-6], got {truncation_threshold}"
            )));
        }
        Ok(QuadratureSpec {
            rule,
            nodes_per_axis,
            truncation_threshold,
        })
    }

    pub fn simpson(nodes_per_axis: usize) -> Result<Self> {
        Self::new(QuadratureRule::CompositeSimpson, nodes_per_axis, 1e-12)
    }

    /// Same rule with roughly doubled resolution, for convergence checks.
    pub fn refined(&self) -> Self {
        QuadratureSpec {
            rule: self.rule,
            nodes_per_axis: 2 * self.nodes_per_axis - 1,
            truncation_threshold: self.truncation_threshold,
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rule: QuadratureRule::CompositeSimpson,
            nodes_per_axis: 4097,
            truncation_threshold: 1e-12,
        }
    }
}

/// Nodes and weights for a 1-D rule on `[a, b]`.
fn line_rule(rule: QuadratureRule, a: f64, b: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    match rule {
        QuadratureRule::CompositeSimpson => simpson_line(a, b, nodes),
        QuadratureRule::GaussLegendreTensor => gauss_legendre_line(a, b, nodes),
    }
}

fn simpson_line(a: f64, b: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    // Simpson needs an odd node count; round up.
    let n = if nodes.is_multiple_of(2) {
        nodes + 1
    } else {
        nodes
    };
    let h = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
    let mut ws = vec![0.0; n];
    for i in 0..n {
        ws[i] = if i == 0 || i == n - 1 {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    (xs, ws)
}

/// Composite panels of an 8-point Gauss–Legendre rule.
fn gauss_legendre_line(a: f64, b: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    const ORDER: usize = 8;
    let (gx, gw) = legendre_points(ORDER);
    let panels = nodes.div_ceil(ORDER).max(2);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * ORDER);
    let mut ws = Vec::with_capacity(panels * ORDER);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for k in 0..ORDER {
            xs.push(c + 0.5 * h * gx[k]);
            ws.push(0.5 * h * gw[k]);
        }
    }
    (xs, ws)
}

/// Gauss–Legendre abscissas and weights on [-1, 1] by Newton iteration on
/// the Legendre recurrence.
fn legendre_points(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_eval(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Quadrature nodes (domain coordinates) with positive weights summing to the
/// domain volume restricted to `box_lo..box_hi` on flat domains.
pub fn nodes(
    domain: &Domain,
    spec: &QuadratureSpec,
    box_lo: Point,
    box_hi: Point,
) -> Vec<(Point, f64)> {
    match domain {
        Domain::Interval { .. } => {
            let (xs, ws) = line_rule(spec.rule, box_lo[0], box_hi[0], spec.nodes_per_axis);
            xs.into_iter().zip(ws).map(|(x, w)| ([x, 0.0], w)).collect()
        }
        Domain::Rectangles { rects } => {
            // Allocate nodes per rectangle, proportional to edge lengths but at
            // least 16 per axis, so thin necks stay resolved.
            let (lo, hi) = domain.bounding_box();
            let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
            let mut out = Vec::new();
            for r in rects {
                let clip_x0 = r.x0.max(box_lo[0]);
                let clip_x1 = r.x1.min(box_hi[0]);
                let clip_y0 = r.y0.max(box_lo[1]);
                let clip_y1 = r.y1.min(box_hi[1]);
                if clip_x0 >= clip_x1 || clip_y0 >= clip_y1 {
                    continue;
                }
                let nx = (((clip_x1 - clip_x0) / span * spec.nodes_per_axis as f64).ceil()
                    as usize)
                    .clamp(17, spec.nodes_per_axis);
                let ny = (((clip_y1 - clip_y0) / span * spec.nodes_per_axis as f64).ceil()
                    as usize)
                    .clamp(17, spec.nodes_per_axis);
                let (xs, wxs) = line_rule(spec.rule, clip_x0, clip_x1, nx);
                let (ys, wys) = line_rule(spec.rule, clip_y0, clip_y1, ny);
                for (x, wx) in xs.iter().zip(&wxs) {
                    for (y, wy) in ys.iter().zip(&wys) {
                        out.push(([*x, *y], wx * wy));
                    }
                }
            }
            out
        }
        Domain::Circle { radius } => {
            // Periodic trapezoid over the full circle; box arguments ignored.
            let n = spec.nodes_per_axis;
            let h = 2.0 * std::f64::consts::PI / n as f64;
            (0..n).map(|i| ([i as f64 * h, 0.0], h * radius)).collect()
        }
    }
}

/// Nodes over the whole domain.
pub fn domain_nodes(domain: &Domain, spec: &QuadratureSpec) -> Vec<(Point, f64)> {
    let (lo, hi) = domain.bounding_box();
    nodes(domain, spec, lo, hi)
}

/// Integrate a scalar function over the domain.
pub fn integrate<F: Fn(Point) -> f64 + Sync>(domain: &Domain, spec: &QuadratureSpec, f: F) -> f64 {
    let pts = domain_nodes(domain, spec);
    chunked_sum(&pts, |(p, w)| w * f(*p))
}

/// Deterministic parallel sum: fixed chunks evaluated in parallel, combined
/// in index order so results do not depend on thread scheduling.
pub fn chunked_sum<T: Sync, F: Fn(&T) -> f64 + Sync>(items: &[T], f: F) -> f64 {
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    if items.len() <= CHUNK {
        return items.iter().map(&f).sum();
    }
    let partials: Vec<f64> = items
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(&f).sum::<f64>())
        .collect();
    partials.iter().sum()
}
