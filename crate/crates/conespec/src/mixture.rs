//! Mixture models `ρ = Σ w_k ρ_k` on intervals, rectangle unions, and the
//! circle, together with the separation quantities computed from them by
//! quadrature: the overlapping parameter `S = max_{i≠j} ∫ ρ_i ρ_j / ρ` and the
//! coupling parameter `C = max_k (1/4) ∫ |∇ρ_k/ρ_k − ∇ρ/ρ|² ρ_k`.
//!
//! Densities are taken with respect to the volume form of the domain (arc
//! length on the circle). Components are normalized at construction so that
//! their integral over the domain is one.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Domain, Point, Rect};
use crate::error::{Error, Result};
use crate::quad::{self, QuadratureSpec};

/// Piecewise profile used by the dumbbell mixture: 1 on `t ≤ 0`, a quadratic
/// ramp down to 0 at `t = eps`, 0 beyond.
pub fn dumbbell_psi(t: f64, eps: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t <= eps / 2.0 {
        1.0 - 2.0 * t * t / (eps * eps)
    } else if t <= eps {
        2.0 * (t - eps) * (t - eps) / (eps * eps)
    } else {
        0.0
    }
}

pub fn dumbbell_psi_deriv(t: f64, eps: f64) -> f64 {
    if t <= 0.0 || t >= eps {
        0.0
    } else if t <= eps / 2.0 {
        -4.0 * t / (eps * eps)
    } else {
        4.0 * (t - eps) / (eps * eps)
    }
}

/// Solves `ell^2 + 2 ell vartheta = 1` so the dumbbell domain has unit area.
pub fn dumbbell_ell(vartheta: f64) -> f64 {
    (vartheta * vartheta + 1.0).sqrt() - vartheta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DumbbellAxis {
    /// Cut perpendicular to the bottleneck (the good partition).
    #[default]
    X,
    /// Cut along the bottleneck axis (the bad partition).
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentKind {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    UniformRect {
        rect: Rect,
    },
    CircleUniform,
    DumbbellLeft {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    DumbbellRight {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    /// Unnormalized ψ profile (left side), normalized by its own mass. Scale
    /// invariant quantities such as cut curves match the raw profile exactly.
    DumbbellProfileLeft {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    DumbbellProfileRight {
        vartheta: f64,
        eps: f64,
        #[serde(default)]
        axis: DumbbellAxis,
    },
    /// Piecewise-linear density table over the 1-D coordinate.
    Table {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
}

impl ComponentKind {
    fn dumbbell_coord(axis: DumbbellAxis, p: Point) -> f64 {
        match axis {
            DumbbellAxis::X => p[0],
            DumbbellAxis::Y => p[1],
        }
    }

    /// Density before normalization.
    fn raw_value(&self, p: Point) -> f64 {
        match self {
            ComponentKind::Gaussian { mean, sd } => {
                let z = (p[0] - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            ComponentKind::Uniform { a, b } => {
                if p[0] >= *a && p[0] <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            ComponentKind::UniformRect { rect } => {
                if rect.contains(p) {
                    1.0 / rect.area()
                } else {
                    0.0
                }
            }
            ComponentKind::CircleUniform => 1.0,
            ComponentKind::DumbbellLeft { eps, axis, .. } => {
                let s = Self::dumbbell_coord(*axis, p);
                let ps = dumbbell_psi(s, *eps);
                let pm = dumbbell_psi(-s, *eps);
                if ps + pm > 0.0 {
                    2.0 * ps / (ps + pm)
                } else {
                    0.0
                }
            }
            ComponentKind::DumbbellRight { eps, axis, .. } => {
                let s = Self::dumbbell_coord(*axis, p);
                let ps = dumbbell_psi(s, *eps);
                let pm = dumbbell_psi(-s, *eps);
                if ps + pm > 0.0 {
                    2.0 * pm / (ps + pm)
                } else {
                    0.0
                }
            }
            ComponentKind::DumbbellProfileLeft { eps, axis, .. } => {
                dumbbell_psi(Self::dumbbell_coord(*axis, p), *eps)
            }
            ComponentKind::DumbbellProfileRight { eps, axis, .. } => {
                dumbbell_psi(-Self::dumbbell_coord(*axis, p), *eps)
            }
            ComponentKind::Table { xs, ys } => {
                let x = p[0];
                if xs.is_empty() || x < xs[0] || x > *xs.last().unwrap() {
                    return 0.0;
                }
                let idx = xs.partition_point(|&v| v <= x).min(xs.len() - 1);
                if idx == 0 {
                    return ys[0].max(0.0);
                }
                let (x0, x1) = (xs[idx - 1], xs[idx]);
                let (y0, y1) = (ys[idx - 1], ys[idx]);
                let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
                (y0 + t * (y1 - y0)).max(0.0)
            }
        }
    }

    /// Analytic gradient of the unnormalized density, if available.
    fn raw_gradient(&self, p: Point) -> Option<[f64; 2]> {
        match self {
            ComponentKind::Gaussian { mean, sd } => {
                let v = self.raw_value(p);
                Some([-(p[0] - mean) / (sd * sd) * v, 0.0])
            }
            ComponentKind::Uniform { .. }
            | ComponentKind::UniformRect { .. }
            | ComponentKind::CircleUniform => Some([0.0, 0.0]),
            ComponentKind::DumbbellLeft { eps, axis, .. }
            | ComponentKind::DumbbellRight { eps, axis, .. } => {
                let s = Self::dumbbell_coord(*axis, p);
                let ps = dumbbell_psi(s, *eps);
                let pm = dumbbell_psi(-s, *eps);
                let sum = ps + pm;
                if sum <= 0.0 {
                    return Some([0.0, 0.0]);
                }
                let dps = dumbbell_psi_deriv(s, *eps);
                let dpm = dumbbell_psi_deriv(-s, *eps);
                // d/ds of 2ψ(s)/(ψ(s)+ψ(−s)); ψ(−s) differentiates to −ψ'(−s).
                let d = match self {
                    ComponentKind::DumbbellLeft { .. } => 2.0 * (dps * pm + ps * dpm) / (sum * sum),
                    _ => -2.0 * (dpm * ps + pm * dps) / (sum * sum),
                };
                Some(match axis {
                    DumbbellAxis::X => [d, 0.0],
                    DumbbellAxis::Y => [0.0, d],
                })
            }
            ComponentKind::DumbbellProfileLeft { eps, axis, .. } => {
                let d = dumbbell_psi_deriv(Self::dumbbell_coord(*axis, p), *eps);
                Some(match axis {
                    DumbbellAxis::X => [d, 0.0],
                    DumbbellAxis::Y => [0.0, d],
                })
            }
            ComponentKind::DumbbellProfileRight { eps, axis, .. } => {
                let d = -dumbbell_psi_deriv(-Self::dumbbell_coord(*axis, p), *eps);
                Some(match axis {
                    DumbbellAxis::X => [d, 0.0],
                    DumbbellAxis::Y => [0.0, d],
                })
            }
            // Table densities fall back to central differences.
            ComponentKind::Table { .. } => None,
        }
    }

    /// Exact upper bound on the unnormalized density, used by the rejection
    /// sampler.
    fn raw_upper_bound(&self) -> f64 {
        match self {
            ComponentKind::Gaussian { sd, .. } => 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt()),
            ComponentKind::Uniform { a, b } => 1.0 / (b - a),
            ComponentKind::UniformRect { rect } => 1.0 / rect.area(),
            ComponentKind::CircleUniform => 1.0,
            ComponentKind::DumbbellLeft { .. } | ComponentKind::DumbbellRight { .. } => 2.0,
            ComponentKind::DumbbellProfileLeft { .. }
            | ComponentKind::DumbbellProfileRight { .. } => 1.0,
            ComponentKind::Table { ys, .. } => ys.iter().cloned().fold(0.0, f64::max),
        }
    }

    fn support(&self, domain: &Domain) -> (Point, Point) {
        let (lo, hi) = domain.bounding_box();
        match self {
            ComponentKind::Gaussian { mean, sd } => (
                [(mean - 12.0 * sd).max(lo[0]), 0.0],
                [(mean + 12.0 * sd).min(hi[0]), 0.0],
            ),
            ComponentKind::Uniform { a, b } => ([a.max(lo[0]), 0.0], [b.min(hi[0]), 0.0]),
            ComponentKind::UniformRect { rect } => ([rect.x0, rect.y0], [rect.x1, rect.y1]),
            ComponentKind::CircleUniform | ComponentKind::Table { .. } => {
                if let ComponentKind::Table { xs, .. } = self {
                    if !xs.is_empty() && matches!(domain, Domain::Interval { .. }) {
                        return (
                            [xs[0].max(lo[0]), 0.0],
                            [xs.last().unwrap().min(hi[0]), 0.0],
                        );
                    }
                }
                (lo, hi)
            }
            ComponentKind::DumbbellLeft { eps, axis, .. }
            | ComponentKind::DumbbellProfileLeft { eps, axis, .. } => match axis {
                DumbbellAxis::X => (lo, [eps.min(hi[0]), hi[1]]),
                DumbbellAxis::Y => (lo, [hi[0], eps.min(hi[1])]),
            },
            ComponentKind::DumbbellRight { eps, axis, .. }
            | ComponentKind::DumbbellProfileRight { eps, axis, .. } => match axis {
                DumbbellAxis::X => ([(-eps).max(lo[0]), lo[1]], hi),
                DumbbellAxis::Y => ([lo[0], (-eps).max(lo[1])], hi),
            },
        }
    }

    /// Exact mass of the unnormalized density on the domain, for the kinds
    /// where quadrature would struggle (jump discontinuities) or is wasteful.
    fn raw_mass_analytic(&self, domain: &Domain) -> Option<f64> {
        match self {
            ComponentKind::Gaussian { mean, sd } => {
                let (lo, hi) = domain.bounding_box();
                // Tail mass beyond 12 sd is ~5e-33; treat the integral as 1.
                (mean - 12.0 * sd >= lo[0] && mean + 12.0 * sd <= hi[0]).then_some(1.0)
            }
            ComponentKind::Uniform { a, b } => {
                let (lo, hi) = domain.bounding_box();
                let overlap = (b.min(hi[0]) - a.max(lo[0])).max(0.0);
                Some(overlap / (b - a))
            }
            ComponentKind::UniformRect { rect } => match domain {
                Domain::Rectangles { rects } => {
                    let mut covered = 0.0;
                    for r in rects {
                        let w = (rect.x1.min(r.x1) - rect.x0.max(r.x0)).max(0.0);
                        let h = (rect.y1.min(r.y1) - rect.y0.max(r.y0)).max(0.0);
                        covered += w * h;
                    }
                    Some(covered / rect.area())
                }
                _ => None,
            },
            ComponentKind::CircleUniform => match domain {
                Domain::Circle { radius } => Some(2.0 * std::f64::consts::PI * radius),
                _ => None,
            },
            ComponentKind::Table { xs, ys } => match domain {
                // Piecewise linear: trapezoid is exact on an enclosing interval.
                Domain::Interval { a, b } if *a <= xs[0] && *b >= *xs.last().unwrap() => Some(
                    xs.windows(2)
                        .zip(ys.windows(2))
                        .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]))
                        .sum(),
                ),
                _ => None,
            },
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        match self {
            ComponentKind::Gaussian { sd, .. } if !(*sd > 0.0) => {
                bad(format!("gaussian sd must be positive, got {sd}"))
            }
            ComponentKind::Uniform { a, b } if !(a < b) => {
                bad(format!("uniform needs a < b, got [{a}, {b}]"))
            }
            ComponentKind::DumbbellLeft { vartheta, eps, .. }
            | ComponentKind::DumbbellRight { vartheta, eps, .. }
            | ComponentKind::DumbbellProfileLeft { vartheta, eps, .. }
            | ComponentKind::DumbbellProfileRight { vartheta, eps, .. } => {
                let ell = dumbbell_ell(*vartheta);
                if !(*vartheta > 0.0) || !(*eps > 0.0) || *eps >= ell / 2.0 {
                    bad(format!(
                        "dumbbell needs 0 < eps < ell/2 and vartheta > 0 (vartheta={vartheta}, eps={eps})"
                    ))
                } else {
                    Ok(())
                }
            }
            ComponentKind::Table { xs, ys } => {
                if xs.len() != ys.len() || xs.len() < 2 {
                    return bad("table needs matching xs/ys with at least two rows".into());
                }
                if xs.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("table xs must be strictly increasing".into());
                }
                if ys.iter().any(|y| !y.is_finite() || *y < 0.0) {
                    return bad("table densities must be finite and non-negative".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A mixture component bound to its domain: normalized to unit mass, with a
/// gradient (analytic for built-ins, central differences otherwise).
#[derive(Debug, Clone)]
pub struct Component {
    pub kind: ComponentKind,
    norm: f64,
    support: (Point, Point),
    fd_step: f64,
}

impl Component {
    pub fn bind(kind: ComponentKind, domain: &Domain, spec: &QuadratureSpec) -> Result<Self> {
        kind.validate()?;
        let support = kind.support(domain);
        let norm = kind
            .raw_mass_analytic(domain)
            .unwrap_or_else(|| quad::integrate(domain, spec, |p| kind.raw_value(p)));
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidModel(format!(
                "component {kind:?} has non-positive mass {norm} on the domain"
            )));
        }
        Ok(Component {
            kind,
            norm,
            support,
            fd_step: 1e-5 * domain.diameter(),
        })
    }

    pub fn value(&self, p: Point) -> f64 {
        self.kind.raw_value(p) / self.norm
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        match self.kind.raw_gradient(p) {
            Some(g) => [g[0] / self.norm, g[1] / self.norm],
            None => {
                let h = self.fd_step;
                let dx = (self.value([p[0] + h, p[1]]) - self.value([p[0] - h, p[1]])) / (2.0 * h);
                let dy = (self.value([p[0], p[1] + h]) - self.value([p[0], p[1] - h])) / (2.0 * h);
                [dx, dy]
            }
        }
    }

    pub fn support(&self) -> (Point, Point) {
        self.support
    }

    pub fn upper_bound(&self) -> f64 {
        self.kind.raw_upper_bound() / self.norm
    }
}

#[derive(Debug, Clone)]
pub struct MixtureModel {
    pub domain: Domain,
    pub components: Vec<Component>,
    pub weights: Vec<f64>,
}

/// Overlap computation result: the value at the requested resolution plus a
/// convergence diagnostic from a doubled rule.
#[derive(Debug, Clone, Serialize)]
pub struct OverlapReport {
    pub value: f64,
    /// `∫ ρ_i ρ_j / ρ` for every unordered pair, row-major over i < j.
    pub pairs: Vec<PairOverlap>,
    pub refinement_delta: f64,
    pub accuracy_warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairOverlap {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    /// max_k C_k
    pub value: f64,
    pub per_component: Vec<f64>,
    /// Component mass at nodes excluded by the truncation threshold.
    pub excluded_mass: Vec<f64>,
    pub refinement_delta: f64,
    pub accuracy_warning: bool,
}

impl MixtureModel {
    pub fn new(
        domain: Domain,
        kinds: Vec<ComponentKind>,
        weights: Vec<f64>,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        if kinds.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "a mixture needs at least two components, got {}",
                kinds.len()
            )));
        }
        if kinds.len() != weights.len() {
            return Err(Error::InvalidModel(format!(
                "{} components but {} weights",
                kinds.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidModel("all weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "weights must sum to one within 1e-12, got {total}"
            )));
        }
        let components = kinds
            .into_iter()
            .map(|k| Component::bind(k, &domain, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixtureModel {
            domain,
            components,
            weights,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Mixture density ρ(x) without a domain check.
    pub fn density(&self, p: Point) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * c.value(p))
            .sum()
    }

    pub fn density_checked(&self, p: Point) -> Result<f64> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { point: p });
        }
        Ok(self.density(p))
    }

    pub fn density_gradient(&self, p: Point) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for (c, w) in self.components.iter().zip(&self.weights) {
            let cg = c.gradient(p);
            g[0] += w * cg[0];
            g[1] += w * cg[1];
        }
        g
    }

    /// Square-root likelihood vector `q_k(x) = sqrt(w_k ρ_k(x) / ρ(x))`.
    pub fn likelihood_vector(&self, p: Point) -> Result<Vec<f64>> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { point: p });
        }
        let rho = self.density(p);
        if !(rho > 0.0) {
            return Err(Error::SingularPoint { point: p });
        }
        Ok(self
            .components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| (w * c.value(p).max(0.0) / rho).sqrt().min(1.0))
            .collect())
    }

    /// Quadrature region: union of the component supports.
    pub fn quad_region(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.components {
            let (slo, shi) = c.support();
            for d in 0..2 {
                lo[d] = lo[d].min(slo[d]);
                hi[d] = hi[d].max(shi[d]);
            }
        }
        (lo, hi)
    }

    fn region_nodes(&self, spec: &QuadratureSpec) -> Vec<(Point, f64)> {
        let (lo, hi) = self.quad_region();
        quad::nodes(&self.domain, spec, lo, hi)
    }

    /// Checks that ρ is strictly positive at every quadrature node.
    pub fn validate_positivity(&self, spec: &QuadratureSpec) -> Result<()> {
        let nodes = self.region_nodes(spec);
        for (p, _) in &nodes {
            if !(self.density(*p) > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "mixture density vanishes at quadrature node {p:?}"
                )));
            }
        }
        Ok(())
    }

    fn overlap_at(&self, spec: &QuadratureSpec) -> Vec<PairOverlap> {
        let n = self.n_components();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let ci = &self.components[i];
                let cj = &self.components[j];
                // the integrand lives on the support intersection; aligning
                // the quadrature range with the support edges keeps composite
                // rules at full order
                let (ilo, ihi) = ci.support();
                let (jlo, jhi) = cj.support();
                let lo = [ilo[0].max(jlo[0]), ilo[1].max(jlo[1])];
                let hi = [ihi[0].min(jhi[0]), ihi[1].min(jhi[1])];
                if lo[0] >= hi[0]
                    && self.domain.coord_dim() >= 1
                    && !matches!(self.domain, Domain::Circle { .. })
                {
                    out.push(PairOverlap { i, j, value: 0.0 });
                    continue;
                }
                let nodes = quad::nodes(&self.domain, spec, lo, hi);
                let v = quad::chunked_sum(&nodes, |(p, w)| {
                    let rho = self.density(*p);
                    if rho <= 0.0 {
                        return 0.0;
                    }
                    let num = ci.value(*p) * cj.value(*p);
                    if num <= 0.0 {
                        return 0.0;
                    }
                    w * num / rho
                });
                out.push(PairOverlap { i, j, value: v });
            }
        }
        out
    }

    /// Overlapping parameter `S = max_{i≠j} ∫ ρ_i ρ_j / ρ`.
    pub fn overlap_parameter(&self, spec: &QuadratureSpec) -> OverlapReport {
        let pairs = self.overlap_at(spec);
        let refined = self.overlap_at(&spec.refined());
        let value = pairs.iter().map(|p| p.value).fold(0.0, f64::max);
        let refined_value = refined.iter().map(|p| p.value).fold(0.0, f64::max);
        let delta = (value - refined_value).abs();
        OverlapReport {
            value,
            pairs,
            refinement_delta: delta,
            accuracy_warning: delta > 1e-6,
        }
    }

    fn coupling_at(&self, spec: &QuadratureSpec) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_components();
        let mut values = Vec::with_capacity(n);
        let mut excluded = Vec::with_capacity(n);
        // open panels: at a support edge the weighted score integrand
        // attains a finite limit while the density itself vanishes, so
        // closed rules sampling the edge node lose an O(h) contribution
        let open_spec = QuadratureSpec {
            rule: crate::quad::QuadratureRule::GaussLegendreTensor,
            ..*spec
        };
        for k in 0..n {
            let ck = &self.components[k];
            let (slo, shi) = ck.support();
            let nodes = quad::nodes(&self.domain, &open_spec, slo, shi);
            let max_k = nodes.iter().map(|(p, _)| ck.value(*p)).fold(0.0, f64::max);
            let cutoff = spec.truncation_threshold * max_k;
            let val = quad::chunked_sum(&nodes, |(p, w)| {
                let rk = ck.value(*p);
                let rho = self.density(*p);
                if rk <= cutoff || rho <= 0.0 {
                    return 0.0;
                }
                let gk = ck.gradient(*p);
                let gr = self.density_gradient(*p);
                let dx = gk[0] / rk - gr[0] / rho;
                let dy = gk[1] / rk - gr[1] / rho;
                0.25 * (dx * dx + dy * dy) * rk * w
            });
            let excl = quad::chunked_sum(&nodes, |(p, w)| {
                let rk = ck.value(*p);
                if rk > 0.0 && rk <= cutoff {
                    rk * w
                } else {
                    0.0
                }
            });
            values.push(val);
            excluded.push(excl);
        }
        (values, excluded)
    }

    /// Coupling parameter `C_k = (1/4) ∫ |∇ρ_k/ρ_k − ∇ρ/ρ|² ρ_k` and its max.
    pub fn coupling_parameter(&self, spec: &QuadratureSpec) -> CouplingReport {
        let (per_component, excluded_mass) = self.coupling_at(spec);
        let (refined, _) = self.coupling_at(&spec.refined());
        let value = per_component.iter().cloned().fold(0.0, f64::max);
        let refined_value = refined.iter().cloned().fold(0.0, f64::max);
        let delta = (value - refined_value).abs();
        CouplingReport {
            value,
            per_component,
            excluded_mass,
            refinement_delta: delta,
            accuracy_warning: delta > 1e-6,
        }
    }

    /// Draws `n` i.i.d. samples: a categorical draw on the weights followed by
    /// a component draw (inverse CDF in 1-D, rejection in 2-D). Deterministic
    /// for a fixed seed. Points are in domain coordinates.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Point>> {
        Ok(self.sample_labeled(n, seed)?.0)
    }

    /// As [`sample`](Self::sample) but also returns the component index of
    /// each draw.
    pub fn sample_labeled(&self, n: usize, seed: u64) -> Result<(Vec<Point>, Vec<usize>)> {
        if n == 0 {
            return Err(Error::InvalidModel("sample size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samplers: Vec<ComponentSampler> = self
            .components
            .iter()
            .map(|c| ComponentSampler::build(c, &self.domain))
            .collect();
        let mut pts = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = self.weights.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    k = i;
                    break;
                }
            }
            let p = samplers[k].draw(&mut rng)?;
            pts.push(p);
            labels.push(k);
        }
        Ok((pts, labels))
    }

    /// Ambient coordinates of sampled points (what graph constructions use).
    pub fn to_ambient_cloud(&self, pts: &[Point]) -> Vec<Point> {
        pts.iter().map(|p| self.domain.to_ambient(*p)).collect()
    }
}

enum ComponentSampler {
    /// Inverse CDF via a tabulated cumulative integral on the support.
    InverseCdf { xs: Vec<f64>, cdf: Vec<f64> },
    /// Rejection sampling on the rectangle union.
    Rejection {
        rects: Vec<Rect>,
        areas: Vec<f64>,
        bound: f64,
        component: Component,
    },
}

impl ComponentSampler {
    const TABLE: usize = 8192;

    fn build(c: &Component, domain: &Domain) -> Self {
        match domain {
            Domain::Interval { .. } | Domain::Circle { .. } => {
                let (lo, hi) = match domain {
                    Domain::Circle { .. } => (0.0, 2.0 * std::f64::consts::PI),
                    _ => {
                        let (slo, shi) = c.support();
                        (slo[0], shi[0])
                    }
                };
                let arc = match domain {
                    Domain::Circle { radius } => *radius,
                    _ => 1.0,
                };
                let m = Self::TABLE;
                let h = (hi - lo) / m as f64;
                let mut xs = Vec::with_capacity(m + 1);
                let mut cdf = Vec::with_capacity(m + 1);
                let mut acc = 0.0;
                xs.push(lo);
                cdf.push(0.0);
                let mut prev = c.value([lo, 0.0]) * arc;
                for i in 1..=m {
                    let x = lo + i as f64 * h;
                    let cur = c.value([x, 0.0]) * arc;
                    acc += 0.5 * (prev + cur) * h;
                    xs.push(x);
                    cdf.push(acc);
                    prev = cur;
                }
                let total = acc.max(f64::MIN_POSITIVE);
                for v in cdf.iter_mut() {
                    *v /= total;
                }
                ComponentSampler::InverseCdf { xs, cdf }
            }
            Domain::Rectangles { rects } => {
                let (slo, shi) = c.support();
                let clipped: Vec<Rect> = rects
                    .iter()
                    .filter_map(|r| {
                        let x0 = r.x0.max(slo[0]);
                        let x1 = r.x1.min(shi[0]);
                        let y0 = r.y0.max(slo[1]);
                        let y1 = r.y1.min(shi[1]);
                        (x0 < x1 && y0 < y1).then(|| Rect::new(x0, x1, y0, y1))
                    })
                    .collect();
                let areas: Vec<f64> = clipped.iter().map(|r| r.area()).collect();
                ComponentSampler::Rejection {
                    rects: clipped,
                    areas,
                    bound: c.upper_bound(),
                    component: c.clone(),
                }
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Point> {
        match self {
            ComponentSampler::InverseCdf { xs, cdf } => {
                let u: f64 = rng.random();
                let idx = cdf.partition_point(|&v| v < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[idx - 1], cdf[idx]);
                let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
                Ok([xs[idx - 1] + t * (xs[idx] - xs[idx - 1]), 0.0])
            }
            ComponentSampler::Rejection {
                rects,
                areas,
                bound,
                component,
            } => {
                let total: f64 = areas.iter().sum();
                let mut proposals = 0usize;
                loop {
                    let mut u: f64 = rng.random::<f64>() * total;
                    let mut rect = &rects[rects.len() - 1];
                    for (r, a) in rects.iter().zip(areas) {
                        if u < *a {
                            rect = r;
                            break;
                        }
                        u -= a;
                    }
                    let x = rect.x0 + rng.random::<f64>() * (rect.x1 - rect.x0);
                    let y = rect.y0 + rng.random::<f64>() * (rect.y1 - rect.y0);
                    let v: f64 = rng.random();
                    proposals += 1;
                    if v * bound <= component.value([x, y]) {
                        return Ok([x, y]);
                    }
                    if proposals >= 100_000 {
                        return Err(Error::SamplerInefficiency {
                            rate: 1.0 / proposals as f64,
                        });
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_uniform_pair() -> MixtureModel {
        let spec = QuadratureSpec::simpson(257).unwrap();
        MixtureModel::new(
            Domain::interval(0.0, 1.0).unwrap(),
            vec![
                ComponentKind::Uniform { a: 0.0, b: 1.0 },
                ComponentKind::Uniform { a: 0.0, b: 1.0 },
            ],
            vec![0.5, 0.5],
            &spec,
        )
        .unwrap()
    }

    fn gaussian_pair(gamma: f64, nodes: usize) -> (MixtureModel, QuadratureSpec) {
        let spec = QuadratureSpec::simpson(nodes).unwrap();
        let model = MixtureModel::new(
            Domain::interval(-12.0, gamma + 12.0).unwrap(),
            vec![
                ComponentKind::Gaussian { mean: 0.0, sd: 1.0 },
                ComponentKind::Gaussian {
                    mean: gamma,
                    sd: 1.0,
                },
            ],
            vec![0.5, 0.5],
            &spec,
        )
        .unwrap();
        (model, spec)
    }

    fn disjoint_uniforms() -> MixtureModel {
        let spec = QuadratureSpec::simpson(257).unwrap();
        MixtureModel::new(
            Domain::interval(0.0, 3.0).unwrap(),
            vec![
                ComponentKind::Uniform { a: 0.0, b: 1.0 },
                ComponentKind::Uniform { a: 2.0, b: 3.0 },
            ],
            vec![0.5, 0.5],
            &spec,
        )
        .unwrap()
    }

    /// Pointwise oracle for the normal pdf, independent of the component code.
    fn normal_pdf(x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn density_of_identical_uniforms() {
        let m = unit_uniform_pair();
        assert_abs_diff_eq!(m.density_checked([0.3, 0.0]).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn density_with_single_active_component() {
        let m = disjoint_uniforms();
        assert_abs_diff_eq!(m.density_checked([0.5, 0.0]).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn density_of_gaussian_pair_matches_pointwise_formula() {
        let (m, _) = gaussian_pair(4.0, 1025);
        let expected = 0.5 * (normal_pdf(2.0) + normal_pdf(-2.0));
        assert_abs_diff_eq!(
            m.density_checked([2.0, 0.0]).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn density_outside_domain_errors() {
        let m = unit_uniform_pair();
        assert!(matches!(
            m.density_checked([4.0, 0.0]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn likelihoods_for_identical_components() {
        let m = unit_uniform_pair();
        let q = m.likelihood_vector([0.7, 0.0]).unwrap();
        for v in q {
            assert_abs_diff_eq!(v, 0.5f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn likelihoods_for_disjoint_supports() {
        let m = disjoint_uniforms();
        let q = m.likelihood_vector([0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(q[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], 0.0, epsilon = 1e-12);
        assert!(matches!(
            m.likelihood_vector([1.5, 0.0]),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn likelihoods_symmetric_at_gaussian_midpoint() {
        let (m, _) = gaussian_pair(4.0, 1025);
        let q = m.likelihood_vector([2.0, 0.0]).unwrap();
        assert_abs_diff_eq!(q[0], (0.5f64).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(q[1], (0.5f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn likelihood_normalization_along_domain() {
        let (m, _) = gaussian_pair(4.0, 1025);
        for i in 0..100 {
            let x = -3.0 + i as f64 * 0.1;
            let q = m.likelihood_vector([x, 0.0]).unwrap();
            let sum_sq: f64 = q.iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(sum_sq, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn component_gradients_match_central_differences() {
        let (m, _) = gaussian_pair(3.0, 1025);
        let h = 1e-5;
        for i in 0..100 {
            let x = -2.0 + i as f64 * 0.08;
            for c in &m.components {
                let g = c.gradient([x, 0.0]);
                let fd = (c.value([x + h, 0.0]) - c.value([x - h, 0.0])) / (2.0 * h);
                assert_abs_diff_eq!(g[0], fd, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn components_integrate_to_one() {
        let (m, spec) = gaussian_pair(4.0, 4097);
        for c in &m.components {
            let total = quad::integrate(&m.domain, &spec, |p| c.value(p));
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn overlap_of_identical_components_is_one() {
        let m = unit_uniform_pair();
        let spec = QuadratureSpec::simpson(257).unwrap();
        let s = m.overlap_parameter(&spec);
        assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn overlap_of_disjoint_supports_is_zero() {
        let m = disjoint_uniforms();
        let spec = QuadratureSpec::simpson(257).unwrap();
        let s = m.overlap_parameter(&spec);
        assert_abs_diff_eq!(s.value, 0.0, epsilon = 1e-14);
    }

    /// Independent oracle: scalar Simpson over the pointwise integrand
    /// 2 ρ1 ρ2 / (ρ1 + ρ2) at 2^16 cells on [-12, 16], Richardson-extrapolated.
    fn gaussian_overlap_oracle(gamma: f64) -> f64 {
        let simpson = |cells: usize| -> f64 {
            let (a, b) = (-12.0, gamma + 12.0);
            let n = cells + 1;
            let h = (b - a) / (n - 1) as f64;
            let f = |x: f64| {
                let r1 = normal_pdf(x);
                let r2 = normal_pdf(x - gamma);
                let denom = r1 + r2;
                if denom > 0.0 {
                    2.0 * r1 * r2 / denom
                } else {
                    0.0
                }
            };
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
        };
        let coarse = simpson(1 << 15);
        let fine = simpson(1 << 16);
        fine + (fine - coarse) / 15.0
    }

    #[test]
    fn overlap_of_gaussian_pair_matches_oracle() {
        let (m, spec) = gaussian_pair(4.0, (1 << 14) + 1);
        let s = m.overlap_parameter(&spec);
        let golden = gaussian_overlap_oracle(4.0);
        assert!(
            (s.value - golden).abs() < 1e-9,
            "S = {} vs oracle {}",
            s.value,
            golden
        );
        assert!(!s.accuracy_warning);
    }

    #[test]
    fn coupling_vanishes_for_identical_components() {
        let m = unit_uniform_pair();
        let spec = QuadratureSpec::simpson(257).unwrap();
        let c = m.coupling_parameter(&spec);
        assert_abs_diff_eq!(c.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_coupling_controlled_by_overlap() {
        for gamma in [1.0, 2.0, 4.0, 8.0] {
            let (m, spec) = gaussian_pair(gamma, 4097);
            let s = m.overlap_parameter(&spec).value;
            let c = m.coupling_parameter(&spec).value;
            assert!(
                c <= gamma * gamma / 8.0 * s + 1e-8,
                "gamma={gamma}: C={c} vs bound {}",
                gamma * gamma / 8.0 * s
            );
        }
    }

    #[test]
    fn quadrature_refinement_is_stable_on_gaussian_pair() {
        let (m, spec) = gaussian_pair(4.0, 4097);
        assert!(m.overlap_parameter(&spec).refinement_delta < 1e-6);
        assert!(m.coupling_parameter(&spec).refinement_delta < 1e-6);
    }

    #[test]
    fn translation_leaves_parameters_unchanged() {
        let shift = 5.0;
        let spec = QuadratureSpec::simpson(4097).unwrap();
        let (m, _) = gaussian_pair(4.0, 4097);
        let shifted = MixtureModel::new(
            Domain::interval(-12.0 + shift, 4.0 + 12.0 + shift).unwrap(),
            vec![
                ComponentKind::Gaussian {
                    mean: shift,
                    sd: 1.0,
                },
                ComponentKind::Gaussian {
                    mean: 4.0 + shift,
                    sd: 1.0,
                },
            ],
            vec![0.5, 0.5],
            &spec,
        )
        .unwrap();
        let (s0, s1) = (
            m.overlap_parameter(&spec).value,
            shifted.overlap_parameter(&spec).value,
        );
        let (c0, c1) = (
            m.coupling_parameter(&spec).value,
            shifted.coupling_parameter(&spec).value,
        );
        assert_abs_diff_eq!(s0, s1, epsilon = 1e-10);
        assert_abs_diff_eq!(c0, c1, epsilon = 1e-10);
    }

    #[test]
    fn q_norm_bracket_holds() {
        // <q_j, q_j>_{ρ_j} must land in [1 - S, 1 + S].
        let (m, spec) = gaussian_pair(2.0, 8193);
        let s = m.overlap_parameter(&spec).value;
        for j in 0..2 {
            let cj = m.components[j].clone();
            let wj = m.weights[j];
            let v = quad::integrate(&m.domain, &spec, |p| {
                let rho = m.density(p);
                let rj = cj.value(p);
                if rho > 0.0 && rj > 0.0 {
                    (wj * rj / rho) * rj
                } else {
                    0.0
                }
            });
            assert!(
                v >= 1.0 - s - 1e-6 && v <= 1.0 + s + 1e-6,
                "<q,q> = {v}, S = {s}"
            );
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let m = unit_uniform_pair();
        assert!(m.sample(0, 1).is_err());
        let a = m.sample(64, 9).unwrap();
        let b = m.sample(64, 9).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert!((0.0..=1.0).contains(&p[0]));
        }
    }

    #[test]
    fn sampling_proportions_and_mean() {
        let (m, _) = gaussian_pair(6.0, 4097);
        let n = 10_000;
        let (pts, labels) = m.sample_labeled(n, 7).unwrap();
        let n1 = labels.iter().filter(|&&l| l == 0).count() as f64;
        // binomial concentration: 3 sigma around n/2
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((n1 - n as f64 / 2.0).abs() <= 3.0 * sigma);
        // CLT bound on the mean of component-1 draws
        let mean1: f64 = pts
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == 0)
            .map(|(p, _)| p[0])
            .sum::<f64>()
            / n1;
        assert!(mean1.abs() <= 4.0 / (n as f64).sqrt() * (n as f64 / n1).sqrt() + 0.01);
    }

    #[test]
    fn dumbbell_partition_of_unity() {
        let vartheta = 0.01;
        let eps = 0.1;
        let ell = dumbbell_ell(vartheta);
        let domain = Domain::rectangles(vec![
            Rect::new(-ell, -ell / 2.0, -ell / 2.0, ell / 2.0),
            Rect::new(-ell / 2.0, ell / 2.0, -vartheta, vartheta),
            Rect::new(ell / 2.0, ell, -ell / 2.0, ell / 2.0),
        ])
        .unwrap();
        let spec = QuadratureSpec::simpson(513).unwrap();
        let m = MixtureModel::new(
            domain,
            vec![
                ComponentKind::DumbbellLeft {
                    vartheta,
                    eps,
                    axis: DumbbellAxis::X,
                },
                ComponentKind::DumbbellRight {
                    vartheta,
                    eps,
                    axis: DumbbellAxis::X,
                },
            ],
            vec![0.5, 0.5],
            &spec,
        )
        .unwrap();
        // mixture density is identically 1 on the unit-area dumbbell
        for p in [[-0.7, 0.1], [0.0, 0.0], [0.03, -0.005], [0.8, -0.3]] {
            assert_abs_diff_eq!(m.density(p), 1.0, epsilon = 1e-9);
        }
        let s = m.overlap_parameter(&spec);
        assert!(s.value <= 16.0 * vartheta * eps);
        let c = m.coupling_parameter(&spec);
        assert!(c.value <= 4.0 * vartheta / eps, "C = {}", c.value);
    }
}
