//! Domains the library supports: 1-D intervals, unions of axis-aligned
//! rectangles in the plane, and the circle.
//!
//! Points are carried as `[f64; 2]` in domain coordinates: an interval uses
//! only the first entry, a circle uses the first entry as the angle in
//! `[0, 2π)`. [`Domain::to_ambient`] maps domain coordinates to the ambient
//! Euclidean coordinates used by graph constructions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    fn interior_overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Interval {
        a: f64,
        b: f64,
    },
    /// Union of axis-aligned rectangles with pairwise disjoint interiors.
    Rectangles {
        rects: Vec<Rect>,
    },
    /// Circle of the given radius, parametrised by arc angle in `[0, 2π)`.
    Circle {
        radius: f64,
    },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "interval endpoints must be finite with a < b, got [{a}, {b}]"
            )));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn rectangles(rects: Vec<Rect>) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::InvalidConfig("empty rectangle union".into()));
        }
        for r in &rects {
            if !(r.x0 < r.x1 && r.y0 < r.y1) {
                return Err(Error::InvalidConfig(format!("degenerate rectangle {r:?}")));
            }
        }
        for (i, r) in rects.iter().enumerate() {
            for o in rects.iter().skip(i + 1) {
                if r.interior_overlaps(o) {
                    return Err(Error::InvalidConfig(format!(
                        "rectangles {r:?} and {o:?} have overlapping interiors"
                    )));
                }
            }
        }
        Ok(Domain::Rectangles { rects })
    }

    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(Domain::Circle { radius })
    }

    /// Intrinsic dimension of the domain as a manifold.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            Domain::Interval { .. } | Domain::Circle { .. } => 1,
            Domain::Rectangles { .. } => 2,
        }
    }

    /// Number of meaningful domain coordinates per point.
    pub fn coord_dim(&self) -> usize {
        match self {
            Domain::Interval { .. } | Domain::Circle { .. } => 1,
            Domain::Rectangles { .. } => 2,
        }
    }

    /// Dimension of the ambient Euclidean space points are embedded in.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangles { .. } | Domain::Circle { .. } => 2,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match self {
            Domain::Interval { a, b } => p[0] >= *a && p[0] <= *b,
            Domain::Rectangles { rects } => rects.iter().any(|r| r.contains(p)),
            Domain::Circle { .. } => p[0].is_finite(),
        }
    }

    /// Axis-aligned bounding box in domain coordinates.
    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            Domain::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            Domain::Rectangles { rects } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for r in rects {
                    lo[0] = lo[0].min(r.x0);
                    lo[1] = lo[1].min(r.y0);
                    hi[0] = hi[0].max(r.x1);
                    hi[1] = hi[1].max(r.y1);
                }
                (lo, hi)
            }
            Domain::Circle { radius } => ([0.0, 0.0], [2.0 * std::f64::consts::PI * radius, 0.0]),
        }
    }

    /// Diameter of the bounding box; used as the length scale for finite
    /// difference steps and sweep grids.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        match self {
            Domain::Interval { .. } => hi[0] - lo[0],
            Domain::Rectangles { .. } => ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt(),
            Domain::Circle { radius } => 2.0 * radius,
        }
    }

    /// Map domain coordinates to ambient Euclidean coordinates.
    pub fn to_ambient(&self, p: Point) -> Point {
        match self {
            Domain::Interval { .. } => [p[0], 0.0],
            Domain::Rectangles { .. } => p,
            Domain::Circle { radius } => [radius * p[0].cos(), radius * p[0].sin()],
        }
    }

    /// Wrap an angle into `[0, 2π)`; identity on flat domains.
    pub fn normalize(&self, p: Point) -> Point {
        match self {
            Domain::Circle { .. } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut t = p[0] % two_pi;
                if t < 0.0 {
                    t += two_pi;
                }
                [t, 0.0]
            }
            _ => p,
        }
    }
}
