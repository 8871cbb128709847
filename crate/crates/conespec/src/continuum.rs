//! Grid discretizations of the weighted operators `Δ_ϱ u = -(1/ϱ) div(ϱ ∇u)`
//! with no-flux boundaries, their low spectra, and Cheeger cut sweeps.
//!
//! The discretization is a conservative finite difference scheme: stiffness
//! entries carry face-averaged densities `ϱ_{i+1/2} = (ϱ_i + ϱ_{i+1})/2`, the
//! mass matrix is the diagonal of `ϱ(x_i) · cell volume`, and the Rayleigh
//! quotient of the pair discretizes `∫|∇u|²ϱ / ∫u²ϱ`. Nodes where the density
//! falls below `1e-12` of its maximum are dropped from the active set.

use ndarray::Array2;
use serde::Serialize;

use crate::domain::{Domain, Point};
use crate::eigen::{self, EigenRequest};
use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::sparse::SparseSymmetricMatrix;

const DENSITY_DROP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone)]
enum StructuredGrid {
    Line {
        x0: f64,
        h: f64,
        n: usize,
    },
    Ring {
        n: usize,
        arc_h: f64,
    },
    Plane {
        x0: f64,
        y0: f64,
        h: f64,
        nx: usize,
        ny: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    RequireConnected,
    AllowDisconnected,
}

/// Discretized weighted Laplacian: a stiffness/mass pair over the active
/// nodes of a structured grid.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub stiffness: SparseSymmetricMatrix,
    /// Diagonal mass entries, strictly positive.
    pub mass: Vec<f64>,
    /// Domain coordinates of the active nodes.
    pub nodes: Vec<Point>,
    pub connected_components: usize,
    structured: StructuredGrid,
    active_of_structured: Vec<i64>,
}

fn structured_nodes(domain: &Domain, resolution: usize) -> (StructuredGrid, Vec<Point>) {
    match domain {
        Domain::Interval { a, b } => {
            let n = resolution.max(16);
            let h = (b - a) / (n - 1) as f64;
            let pts = (0..n).map(|i| [a + i as f64 * h, 0.0]).collect();
            (StructuredGrid::Line { x0: *a, h, n }, pts)
        }
        Domain::Circle { radius } => {
            let n = resolution.max(16);
            let h_theta = 2.0 * std::f64::consts::PI / n as f64;
            let pts = (0..n).map(|i| [i as f64 * h_theta, 0.0]).collect();
            (
                StructuredGrid::Ring {
                    n,
                    arc_h: h_theta * radius,
                },
                pts,
            )
        }
        Domain::Rectangles { .. } => {
            let (lo, hi) = domain.bounding_box();
            let w = hi[0] - lo[0];
            let hgt = hi[1] - lo[1];
            let span = w.max(hgt);
            let n = resolution.max(16);
            let h = span / (n - 1) as f64;
            let nx = (w / h).round() as usize + 1;
            let ny = (hgt / h).round() as usize + 1;
            let mut pts = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    pts.push([lo[0] + i as f64 * h, lo[1] + j as f64 * h]);
                }
            }
            (
                StructuredGrid::Plane {
                    x0: lo[0],
                    y0: lo[1],
                    h,
                    nx,
                    ny,
                },
                pts,
            )
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Discretizes `Δ_ϱ` for the density `f` on the domain.
///
/// The active set keeps nodes inside the domain whose density exceeds
/// `1e-12` of the grid maximum; isolated active nodes (no neighbor) are
/// dropped to avoid spurious zero modes. For `Connectivity::RequireConnected`
/// a disconnected active set is an error; otherwise the component count is
/// recorded on the result.
pub fn discretize<F: Fn(Point) -> f64 + Sync>(
    f: F,
    domain: &Domain,
    resolution: usize,
    connectivity: Connectivity,
) -> Result<GridOperator> {
    let (structured, all_nodes) = structured_nodes(domain, resolution);
    let values: Vec<f64> = all_nodes.iter().map(|p| f(*p)).collect();
    let vmax = values.iter().cloned().fold(0.0, f64::max);
    if !(vmax > 0.0) {
        return Err(Error::InvalidModel(
            "density is nowhere positive on the grid".into(),
        ));
    }
    let cutoff = DENSITY_DROP * vmax;
    let inside = |idx: usize| values[idx] > cutoff && domain.contains(all_nodes[idx]);

    // neighbor faces on the structured grid
    let neighbor_pairs: Vec<(usize, usize)> = match &structured {
        StructuredGrid::Line { n, .. } => (0..n - 1).map(|i| (i, i + 1)).collect(),
        StructuredGrid::Ring { n, .. } => (0..*n).map(|i| (i, (i + 1) % n)).collect(),
        StructuredGrid::Plane { nx, ny, .. } => {
            let mut pairs = Vec::new();
            for j in 0..*ny {
                for i in 0..*nx {
                    let idx = j * nx + i;
                    if i + 1 < *nx {
                        pairs.push((idx, idx + 1));
                    }
                    if j + 1 < *ny {
                        pairs.push((idx, idx + nx));
                    }
                }
            }
            pairs
        }
    };

    // a face is kept when both endpoints are active and its midpoint stays
    // inside the domain (guards rectangle unions touching at corners)
    let face_ok = |a: usize, b: usize| -> bool {
        if !inside(a) || !inside(b) {
            return false;
        }
        match &structured {
            StructuredGrid::Plane { .. } => {
                let pa = all_nodes[a];
                let pb = all_nodes[b];
                domain.contains([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0])
            }
            _ => true,
        }
    };

    let faces: Vec<(usize, usize)> = neighbor_pairs
        .into_iter()
        .filter(|&(a, b)| face_ok(a, b))
        .collect();

    // drop isolated nodes
    let mut has_face = vec![false; all_nodes.len()];
    for &(a, b) in &faces {
        has_face[a] = true;
        has_face[b] = true;
    }
    let mut active_of_structured = vec![-1i64; all_nodes.len()];
    let mut nodes = Vec::new();
    for idx in 0..all_nodes.len() {
        if inside(idx) && has_face[idx] {
            active_of_structured[idx] = nodes.len() as i64;
            nodes.push(all_nodes[idx]);
        }
    }
    if nodes.len() < 3 {
        return Err(Error::InvalidModel(format!(
            "active set has only {} nodes at resolution {resolution}",
            nodes.len()
        )));
    }

    // connectivity over active nodes
    let mut uf = UnionFind::new(nodes.len());
    for &(a, b) in &faces {
        let (ia, ib) = (active_of_structured[a], active_of_structured[b]);
        if ia >= 0 && ib >= 0 {
            uf.union(ia as usize, ib as usize);
        }
    }
    let mut roots = std::collections::BTreeSet::new();
    for i in 0..nodes.len() {
        roots.insert(uf.find(i));
    }
    let components = roots.len();
    if components > 1 && connectivity == Connectivity::RequireConnected {
        return Err(Error::DisconnectedActiveSet { components });
    }

    // stiffness: per-face flux weights with face-averaged density
    let (face_scale, cell_volume) = match &structured {
        StructuredGrid::Line { h, .. } => (1.0 / h, *h),
        StructuredGrid::Ring { arc_h, .. } => (1.0 / arc_h, *arc_h),
        StructuredGrid::Plane { h, .. } => (1.0, h * h),
    };
    let mut triplets = Vec::with_capacity(3 * faces.len());
    for &(a, b) in &faces {
        let (ia, ib) = (active_of_structured[a], active_of_structured[b]);
        if ia < 0 || ib < 0 {
            continue;
        }
        let w = 0.5 * (values[a] + values[b]) * face_scale;
        let (ia, ib) = (ia as usize, ib as usize);
        triplets.push((ia, ia, w));
        triplets.push((ib, ib, w));
        triplets.push((ia, ib, -w));
    }
    let stiffness = SparseSymmetricMatrix::from_triplets(nodes.len(), triplets);

    // mass: density times the trapezoid cell fraction relative to the active set
    let mut mass = vec![0.0; nodes.len()];
    match &structured {
        StructuredGrid::Line { n, .. } => {
            for idx in 0..*n {
                let ia = active_of_structured[idx];
                if ia < 0 {
                    continue;
                }
                let left = idx > 0 && active_of_structured[idx - 1] >= 0;
                let right = idx + 1 < *n && active_of_structured[idx + 1] >= 0;
                let frac = 0.5 * (left as u8 + right as u8) as f64;
                mass[ia as usize] = values[idx] * cell_volume * frac.max(0.5);
            }
        }
        StructuredGrid::Ring { n, .. } => {
            for idx in 0..*n {
                let ia = active_of_structured[idx];
                if ia < 0 {
                    continue;
                }
                let left = active_of_structured[(idx + n - 1) % n] >= 0;
                let right = active_of_structured[(idx + 1) % n] >= 0;
                let frac = 0.5 * (left as u8 + right as u8) as f64;
                mass[ia as usize] = values[idx] * cell_volume * frac.max(0.5);
            }
        }
        StructuredGrid::Plane { nx, ny, .. } => {
            for j in 0..*ny {
                for i in 0..*nx {
                    let idx = j * nx + i;
                    let ia = active_of_structured[idx];
                    if ia < 0 {
                        continue;
                    }
                    let nb = |di: i64, dj: i64| -> bool {
                        let (ii, jj) = (i as i64 + di, j as i64 + dj);
                        if ii < 0 || jj < 0 || ii >= *nx as i64 || jj >= *ny as i64 {
                            return false;
                        }
                        active_of_structured[(jj as usize) * nx + ii as usize] >= 0
                    };
                    let cx = (0.5 * (nb(-1, 0) as u8 + nb(1, 0) as u8) as f64).max(0.5);
                    let cy = (0.5 * (nb(0, -1) as u8 + nb(0, 1) as u8) as f64).max(0.5);
                    mass[ia as usize] = values[idx] * cell_volume * cx * cy;
                }
            }
        }
    }

    Ok(GridOperator {
        stiffness,
        mass,
        nodes,
        connected_components: components,
        structured,
        active_of_structured,
    })
}

impl GridOperator {
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    /// Solves for the `k` smallest eigenpairs of the stiffness/mass pair.
    /// The residual target keeps a margin under the 1e-7 spectrum contract;
    /// steeply decaying densities make the mass matrix severely graded and
    /// tighter targets can plateau.
    pub fn eigenpairs(&self, k: usize, seed: u64) -> Result<eigen::EigenResult> {
        let req = EigenRequest::new(k).with_seed(seed).with_tolerance(5e-8);
        let res = eigen::smallest_eigenpairs(&self.stiffness, Some(&self.mass), &req)?;
        res.ensure_converged()?;
        Ok(res)
    }

    /// Interpolates active-node values at an arbitrary domain point.
    fn interpolate(&self, values: &ndarray::ArrayView1<f64>, p: Point) -> f64 {
        let val = |structured_idx: usize| -> Option<f64> {
            let ia = self.active_of_structured[structured_idx];
            (ia >= 0).then(|| values[ia as usize])
        };
        match &self.structured {
            StructuredGrid::Line { x0, h, n } => {
                let t = ((p[0] - x0) / h).clamp(0.0, (*n - 1) as f64);
                let i = (t.floor() as usize).min(n - 2);
                let frac = t - i as f64;
                match (val(i), val(i + 1)) {
                    (Some(a), Some(b)) => a * (1.0 - frac) + b * frac,
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => 0.0,
                }
            }
            StructuredGrid::Ring { n, .. } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let h = two_pi / *n as f64;
                let mut theta = p[0] % two_pi;
                if theta < 0.0 {
                    theta += two_pi;
                }
                let t = theta / h;
                let i = (t.floor() as usize) % n;
                let frac = t - t.floor();
                match (val(i), val((i + 1) % n)) {
                    (Some(a), Some(b)) => a * (1.0 - frac) + b * frac,
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => 0.0,
                }
            }
            StructuredGrid::Plane { x0, y0, h, nx, ny } => {
                let tx = ((p[0] - x0) / h).clamp(0.0, (*nx - 1) as f64);
                let ty = ((p[1] - y0) / h).clamp(0.0, (*ny - 1) as f64);
                let i = (tx.floor() as usize).min(nx - 2);
                let j = (ty.floor() as usize).min(ny - 2);
                let (fx, fy) = (tx - i as f64, ty - j as f64);
                let corners = [
                    (j * nx + i, (1.0 - fx) * (1.0 - fy)),
                    (j * nx + i + 1, fx * (1.0 - fy)),
                    ((j + 1) * nx + i, (1.0 - fx) * fy),
                    ((j + 1) * nx + i + 1, fx * fy),
                ];
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (idx, w) in corners {
                    if let Some(v) = val(idx) {
                        acc += w * v;
                        wsum += w;
                    }
                }
                if wsum > 0.0 {
                    acc / wsum
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndivisibilityReport {
    /// min_k Θ_k
    pub value: f64,
    pub per_component: Vec<f64>,
    /// True where the component's active set was disconnected (a second
    /// eigenvalue near zero is then expected).
    pub disconnected: Vec<bool>,
    pub resolution: usize,
}

/// Θ_k as the second eigenvalue of `Δ_{ρ_k}`, per component, and their min.
pub fn indivisibility_parameter(
    model: &MixtureModel,
    resolution: usize,
) -> Result<IndivisibilityReport> {
    let mut per_component = Vec::with_capacity(model.n_components());
    let mut disconnected = Vec::with_capacity(model.n_components());
    for c in &model.components {
        let op = discretize(
            |p| c.value(p),
            &model.domain,
            resolution,
            Connectivity::AllowDisconnected,
        )?;
        let eig = op.eigenpairs(2, 0)?;
        per_component.push(eig.eigenvalues[1].max(0.0));
        disconnected.push(op.connected_components > 1);
    }
    let value = per_component.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(IndivisibilityReport {
        value,
        per_component,
        disconnected,
        resolution,
    })
}

/// The low spectrum of `Δ_ρ` for the mixture, with mass-orthonormal
/// eigenfunctions and the grid data needed to evaluate the spectral
/// embedding.
#[derive(Debug, Clone)]
pub struct ContinuumSpectrum {
    /// λ_1 .. λ_{N+1}, ascending.
    pub eigenvalues: Vec<f64>,
    /// Active nodes × N; orthonormal in the mass inner product.
    pub eigenfunctions: Array2<f64>,
    pub residuals: Vec<f64>,
    pub resolution: usize,
    pub operator: GridOperator,
}

impl ContinuumSpectrum {
    /// The embedding `F(x) = (u_1(x), …, u_N(x))` by grid interpolation.
    pub fn embedding_at(&self, p: Point) -> Vec<f64> {
        (0..self.eigenfunctions.ncols())
            .map(|j| self.operator.interpolate(&self.eigenfunctions.column(j), p))
            .collect()
    }

    /// Grid-weighted embedded cloud: rows are embedded nodes, the weights are
    /// the normalized mass entries, and coordinates are rescaled so each
    /// eigenfunction has unit mass-weighted mean square.
    pub fn weighted_cloud(&self) -> (Array2<f64>, Vec<f64>) {
        let total: f64 = self.operator.mass.iter().sum();
        let masses: Vec<f64> = self.operator.mass.iter().map(|m| m / total).collect();
        let mut pts = self.eigenfunctions.clone();
        pts.mapv_inplace(|v| v * total.sqrt());
        (pts, masses)
    }
}

/// First `n + 1` eigenvalues of `Δ_ρ` and the first `n` eigenfunctions.
pub fn continuum_embedding_spectrum(
    model: &MixtureModel,
    n: usize,
    resolution: usize,
) -> Result<ContinuumSpectrum> {
    let op = discretize(
        |p| model.density(p),
        &model.domain,
        resolution,
        Connectivity::RequireConnected,
    )?;
    let eig = op.eigenpairs(n + 1, 0)?;
    let eigenfunctions = eig.eigenvectors.slice(ndarray::s![.., ..n]).to_owned();
    Ok(ContinuumSpectrum {
        eigenvalues: eig.eigenvalues.clone(),
        eigenfunctions,
        residuals: eig.residuals,
        resolution,
        operator: op,
    })
}

/// A bound value or the reason it does not apply.
#[derive(Debug, Clone, Serialize)]
pub struct BoundValue {
    pub value: Option<f64>,
    pub reason: Option<String>,
}

impl BoundValue {
    pub(crate) fn available(v: f64) -> Self {
        BoundValue {
            value: Some(v),
            reason: None,
        }
    }
    pub(crate) fn unavailable(reason: impl Into<String>) -> Self {
        BoundValue {
            value: None,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueBounds {
    /// λ_N ≤ N·C / (1 − N·√S), valid when N·√S < 1.
    pub lambda_n_upper: BoundValue,
    /// λ_{N+1} ≥ (√(Θ(1 − N·S)) − √(C·N·S)/(1 − S))², valid when N·S < 1.
    pub lambda_n1_lower: BoundValue,
}

pub fn eigenvalue_bounds(s: f64, c: f64, theta: f64, n: usize) -> EigenvalueBounds {
    let nf = n as f64;
    let lambda_n_upper = if nf * s.sqrt() < 1.0 {
        BoundValue::available(nf * c / (1.0 - nf * s.sqrt()))
    } else {
        BoundValue::unavailable("requires N*sqrt(S) < 1")
    };
    let lambda_n1_lower = if nf * s < 1.0 {
        let bracket = (theta * (1.0 - nf * s)).sqrt() - (c * nf * s).sqrt() / (1.0 - s);
        BoundValue::available(bracket.max(0.0).powi(2))
    } else {
        BoundValue::unavailable("requires N*S < 1")
    };
    EigenvalueBounds {
        lambda_n_upper,
        lambda_n1_lower,
    }
}

/// Cut functional sweep over axis-aligned half spaces `A_t`.
#[derive(Debug, Clone, Serialize)]
pub struct CheegerSweep {
    pub axis: Axis,
    pub ts: Vec<f64>,
    pub cut: Vec<f64>,
    pub min_cut: f64,
    pub min_t: f64,
    /// `(min cut)² / 4`, a two-sided cut certificate for Θ.
    pub lower_bound: f64,
}

fn simpson_scalar<F: Fn(f64) -> f64>(a: f64, b: f64, nodes: usize, f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = if nodes.is_multiple_of(2) {
        nodes + 1
    } else {
        nodes
    };
    let h = (b - a) / (n - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

struct CutParts {
    boundary: f64,
    mass_lo: f64,
    mass_hi: f64,
}

fn cut_parts<F: Fn(Point) -> f64 + Sync>(
    f: &F,
    domain: &Domain,
    axis: Axis,
    t: f64,
    inner_nodes: usize,
) -> CutParts {
    match domain {
        Domain::Interval { a, b } => CutParts {
            boundary: f([t, 0.0]),
            mass_lo: simpson_scalar(*a, t, inner_nodes, |x| f([x, 0.0])),
            mass_hi: simpson_scalar(t, *b, inner_nodes, |x| f([x, 0.0])),
        },
        Domain::Circle { radius } => {
            let two_pi = 2.0 * std::f64::consts::PI;
            CutParts {
                boundary: f([0.0, 0.0]) + f([t, 0.0]),
                mass_lo: radius * simpson_scalar(0.0, t, inner_nodes, |th| f([th, 0.0])),
                mass_hi: radius * simpson_scalar(t, two_pi, inner_nodes, |th| f([th, 0.0])),
            }
        }
        Domain::Rectangles { rects } => {
            let (lo, hi) = domain.bounding_box();
            let delta = 1e-9 * ((hi[0] - lo[0]).max(hi[1] - lo[1]));
            // transverse intervals of the slice {axis coordinate = s}
            let slice_at = |s: f64| -> Vec<(f64, f64)> {
                let mut intervals: Vec<(f64, f64)> = rects
                    .iter()
                    .filter_map(|r| match axis {
                        Axis::X => (s > r.x0 && s < r.x1).then_some((r.y0, r.y1)),
                        Axis::Y => (s > r.y0 && s < r.y1).then_some((r.x0, r.x1)),
                    })
                    .collect();
                intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for iv in intervals {
                    match merged.last_mut() {
                        Some(last) if iv.0 <= last.1 => last.1 = last.1.max(iv.1),
                        _ => merged.push(iv),
                    }
                }
                merged
            };
            let intersect = |a: &[(f64, f64)], b: &[(f64, f64)]| -> Vec<(f64, f64)> {
                let mut out = Vec::new();
                for &(a0, a1) in a {
                    for &(b0, b1) in b {
                        let lo = a0.max(b0);
                        let hi = a1.min(b1);
                        if lo < hi {
                            out.push((lo, hi));
                        }
                    }
                }
                out
            };
            // a cut at a rectangle interface only crosses the interior of the
            // domain: intersect the slices just left and right of it
            let cross = |coord: f64| -> f64 {
                let interior = intersect(&slice_at(coord - delta), &slice_at(coord + delta));
                interior
                    .iter()
                    .map(|&(a, b)| {
                        simpson_scalar(a, b, 129, |u| match axis {
                            Axis::X => f([coord, u]),
                            Axis::Y => f([u, coord]),
                        })
                    })
                    .sum()
            };
            let (axis_lo, axis_hi) = match axis {
                Axis::X => (lo[0], hi[0]),
                Axis::Y => (lo[1], hi[1]),
            };
            CutParts {
                boundary: cross(t),
                mass_lo: simpson_scalar(axis_lo, t, inner_nodes, cross),
                mass_hi: simpson_scalar(t, axis_hi, inner_nodes, cross),
            }
        }
    }
}

/// Cut value of the half-space family at one threshold.
pub fn cut_at<F: Fn(Point) -> f64 + Sync>(f: &F, domain: &Domain, axis: Axis, t: f64) -> f64 {
    let parts = cut_parts(f, domain, axis, t, 2049);
    let denom = parts.mass_lo.min(parts.mass_hi);
    if denom > 0.0 {
        parts.boundary / denom
    } else {
        f64::INFINITY
    }
}

/// Sweeps `Cut(A_t)` over a grid of thresholds along the axis. The minimum is
/// restricted to thresholds where both sides carry mass above a relative
/// floor of 1e-9, and `(min cut)²/4` is reported as the spectral certificate.
pub fn cheeger_sweep<F: Fn(Point) -> f64 + Sync>(
    f: &F,
    domain: &Domain,
    axis: Axis,
    resolution: usize,
) -> Result<CheegerSweep> {
    use rayon::prelude::*;
    let (lo, hi) = domain.bounding_box();
    let (axis_lo, axis_hi) = match (domain, axis) {
        (Domain::Circle { .. }, _) => (0.0, 2.0 * std::f64::consts::PI),
        (_, Axis::X) => (lo[0], hi[0]),
        (_, Axis::Y) => (lo[1], hi[1]),
    };
    let n = resolution.max(16);
    let inner = (resolution / 2 + 1).clamp(257, 2049);
    let ts: Vec<f64> = (1..n)
        .map(|i| axis_lo + (axis_hi - axis_lo) * i as f64 / n as f64)
        .collect();
    let parts: Vec<CutParts> = ts
        .par_iter()
        .map(|&t| cut_parts(f, domain, axis, t, inner))
        .collect();
    let total: f64 = parts.first().map(|p| p.mass_lo + p.mass_hi).unwrap_or(0.0);
    let floor = 1e-9 * total;
    let mut cut = Vec::with_capacity(ts.len());
    let mut min_cut = f64::INFINITY;
    let mut min_t = f64::NAN;
    let mut any_valid = false;
    for (t, p) in ts.iter().zip(&parts) {
        let denom = p.mass_lo.min(p.mass_hi);
        let value = if denom > 0.0 {
            p.boundary / denom
        } else {
            f64::INFINITY
        };
        cut.push(value);
        if p.mass_lo > floor && p.mass_hi > floor {
            any_valid = true;
            if value < min_cut {
                min_cut = value;
                min_t = *t;
            }
        }
    }
    if !any_valid {
        return Err(Error::DegenerateSweep);
    }
    Ok(CheegerSweep {
        axis,
        ts,
        cut,
        min_cut,
        min_t,
        lower_bound: min_cut * min_cut / 4.0,
    })
}
