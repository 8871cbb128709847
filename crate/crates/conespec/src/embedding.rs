//! Embedded clouds and orthogonal cone structures.
//!
//! A cloud has an orthogonal cone structure with parameters `(σ, δ, r)` when
//! all but a δ-fraction of its mass lies in the disjoint cones
//! `C(e_j, σ, r) = { z : z·e_j/|z| > cos σ, |z| > r }` around an orthonormal
//! basis. `σ < π/4` keeps the cones disjoint; boundary points are excluded by
//! the strict inequalities.
//!
//! This module produces the spectral embedding of a graph Laplacian, the
//! square-root-likelihood embedding of a declared mixture, verifies and
//! detects cone structures, aligns embeddings over the orthogonal group, and
//! measures Wasserstein-2 distances between clouds.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::domain::Point;
use crate::eigen::{self, EigenRequest};
use crate::error::{Error, Result};
use crate::graph::GraphLaplacian;
use crate::mixture::MixtureModel;
use crate::ot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Each coordinate has unit mass-weighted mean square.
    EmpiricalL2,
    Unspecified,
}

#[derive(Debug, Clone)]
pub struct EmbeddedCloud {
    /// n × N embedding coordinates.
    pub points: Array2<f64>,
    /// Per-point masses, non-negative, summing to one.
    pub masses: Vec<f64>,
    pub normalization: Normalization,
}

impl EmbeddedCloud {
    pub fn uniform(points: Array2<f64>, normalization: Normalization) -> Self {
        let n = points.nrows();
        EmbeddedCloud {
            points,
            masses: vec![1.0 / n as f64; n],
            normalization,
        }
    }

    pub fn weighted(
        points: Array2<f64>,
        masses: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        if masses.len() != points.nrows() {
            return Err(Error::DimensionMismatch {
                left: masses.len(),
                right: points.nrows(),
            });
        }
        if masses.iter().any(|m| *m < 0.0) {
            return Err(Error::InvalidConfig("negative point mass".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "masses must sum to one within 1e-12, got {total}"
            )));
        }
        Ok(EmbeddedCloud {
            points,
            masses,
            normalization,
        })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn has_uniform_masses(&self) -> bool {
        let n = self.len() as f64;
        self.masses.iter().all(|m| (m - 1.0 / n).abs() < 1e-12)
    }

    /// Largest deviation of any coordinate's mass-weighted mean square from
    /// one; meaningful under the empirical-L2 tag.
    pub fn normalization_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim() {
            let ms: f64 = self
                .masses
                .iter()
                .enumerate()
                .map(|(i, m)| m * self.points[[i, j]].powi(2))
                .sum();
            worst = worst.max((ms - 1.0).abs());
        }
        worst
    }

    /// CSV with header `u1,...,uN[,mass]`; the mass column is omitted for
    /// uniform clouds.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let uniform = self.has_uniform_masses();
        let emit = |w: &mut W| -> std::io::Result<()> {
            let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("u{j}")).collect();
            if !uniform {
                header.push("mass".into());
            }
            writeln!(w, "{}", header.join(","))?;
            for i in 0..self.len() {
                let mut row: Vec<String> = (0..self.dim())
                    .map(|j| self.points[[i, j]].to_string())
                    .collect();
                if !uniform {
                    row.push(self.masses[i].to_string());
                }
                writeln!(w, "{}", row.join(","))?;
            }
            Ok(())
        };
        emit(&mut w).map_err(|e| Error::io("<embedding stream>", e))
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(file);
        let headers = reader.headers()?.clone();
        let has_mass = headers
            .iter()
            .next_back()
            .map(|h| h.trim() == "mass")
            .unwrap_or(false);
        let ncols = headers.len() - usize::from(has_mass);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut masses = Vec::new();
        for record in reader.records() {
            let record = record?;
            let vals: Vec<f64> = record
                .iter()
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidConfig(format!(
                            "non-numeric field {f:?} in {}",
                            path.display()
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if has_mass {
                masses.push(vals[ncols]);
            }
            rows.push(vals[..ncols].to_vec());
        }
        if rows.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "no rows in {}",
                path.display()
            )));
        }
        let n = rows.len();
        let mut points = Array2::zeros((n, ncols));
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                points[[i, j]] = *v;
            }
        }
        if has_mass {
            EmbeddedCloud::weighted(points, masses, Normalization::Unspecified)
        } else {
            Ok(EmbeddedCloud::uniform(points, Normalization::Unspecified))
        }
    }
}

/// An orthonormal basis with cone parameters and the mass split they achieve.
#[derive(Debug, Clone, Serialize)]
pub struct ConeStructure {
    /// Columns are the cone directions e_j.
    pub basis: Vec<Vec<f64>>,
    pub sigma: f64,
    pub r: f64,
    /// Mass outside every cone.
    pub delta: f64,
    pub per_cone_mass: Vec<f64>,
}

fn basis_orthonormality_error(basis: &Array2<f64>) -> f64 {
    let g = basis.t().dot(basis);
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[[i, j]] - target).abs());
        }
    }
    worst
}

/// Counts the cloud's mass inside the cones `C(e_j, σ, r)`.
///
/// A point z belongs to cone j iff `z·e_j > cos(σ)·|z|` and `|z| > r`, both
/// strict; the zero point is always outside. Requires `σ ∈ (0, π/4)` so the
/// cones cannot overlap, and a basis orthonormal within 1e-8.
pub fn verify_cone_structure(
    cloud: &EmbeddedCloud,
    basis: &Array2<f64>,
    sigma: f64,
    r: f64,
) -> Result<ConeStructure> {
    let dim = cloud.dim();
    if basis.nrows() != dim {
        return Err(Error::DimensionMismatch {
            left: basis.nrows(),
            right: dim,
        });
    }
    let k = basis.ncols();
    if !(sigma > 0.0 && sigma < std::f64::consts::FRAC_PI_4) {
        return Err(Error::InvalidConeParameters(format!(
            "sigma must lie in (0, pi/4), got {sigma}"
        )));
    }
    if !(r >= 0.0) {
        return Err(Error::InvalidConeParameters(format!(
            "r must be >= 0, got {r}"
        )));
    }
    let ortho_err = basis_orthonormality_error(basis);
    if ortho_err > 1e-8 {
        return Err(Error::InvalidConeParameters(format!(
            "basis is not orthonormal (deviation {ortho_err:.2e})"
        )));
    }
    let cos_sigma = sigma.cos();
    let mut per_cone_mass = vec![0.0; k];
    let mut outside = 0.0;
    for i in 0..cloud.len() {
        let z = cloud.points.row(i);
        let norm = z.dot(&z).sqrt();
        let mut cone = None;
        if norm > r && norm > 0.0 {
            for j in 0..k {
                let dot = z.dot(&basis.column(j));
                if dot > cos_sigma * norm {
                    cone = Some(j);
                    break; // cones are disjoint
                }
            }
        }
        match cone {
            Some(j) => per_cone_mass[j] += cloud.masses[i],
            None => outside += cloud.masses[i],
        }
    }
    Ok(ConeStructure {
        basis: (0..k).map(|j| basis.column(j).to_vec()).collect(),
        sigma,
        r,
        delta: outside,
        per_cone_mass,
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DetectionOutcome {
    Detected(ConeStructure),
    Failed { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionCell {
    pub sigma: f64,
    pub r: f64,
    pub outcome: DetectionOutcome,
}

/// Greedy cone detection at a single `(σ, r)`:
/// survivors outside radius r are normalized to the sphere, directions are
/// picked greedily by captured mass (ties to the lower point index), the
/// picked directions are snapped to the nearest orthonormal basis, and the
/// result is re-verified against the full cloud.
pub fn detect_cone_structure_at(
    cloud: &EmbeddedCloud,
    n_cones: usize,
    sigma: f64,
    r: f64,
) -> DetectionOutcome {
    let dim = cloud.dim();
    if n_cones > dim {
        return DetectionOutcome::Failed {
            reason: format!("{n_cones} cones requested in dimension {dim}"),
        };
    }
    let mut survivors: Vec<(usize, Array1<f64>, f64)> = Vec::new();
    for i in 0..cloud.len() {
        let z = cloud.points.row(i).to_owned();
        let norm = z.dot(&z).sqrt();
        if norm > r && norm > 0.0 {
            survivors.push((i, z / norm, cloud.masses[i]));
        }
    }
    if survivors.len() < n_cones {
        return DetectionOutcome::Failed {
            reason: format!(
                "only {} points outside radius {r}, need at least {n_cones}",
                survivors.len()
            ),
        };
    }
    let cos_sigma = sigma.cos();
    let mut remaining: Vec<bool> = vec![true; survivors.len()];
    let mut picked: Vec<Array1<f64>> = Vec::with_capacity(n_cones);
    for _ in 0..n_cones {
        let mut best: Option<(f64, usize)> = None;
        for (c, (_, dir, _)) in survivors.iter().enumerate() {
            if !remaining[c] {
                continue;
            }
            let mut captured = 0.0;
            for (o, (_, other, mass)) in survivors.iter().enumerate() {
                if remaining[o] && dir.dot(other) > cos_sigma {
                    captured += mass;
                }
            }
            let better = match best {
                None => true,
                Some((mass, _)) => captured > mass + 0.0,
            };
            if better {
                best = Some((captured, c));
            }
        }
        let Some((_, c)) = best else {
            return DetectionOutcome::Failed {
                reason: "no remaining candidate directions".into(),
            };
        };
        let dir = survivors[c].1.clone();
        for (o, (_, other, _)) in survivors.iter().enumerate() {
            if remaining[o] && dir.dot(other) > cos_sigma {
                remaining[o] = false;
            }
        }
        picked.push(dir);
    }
    let mut v = Array2::zeros((dim, n_cones));
    for (j, dir) in picked.iter().enumerate() {
        for i in 0..dim {
            v[[i, j]] = dir[i];
        }
    }
    let snapped = match nearest_orthonormal_basis(&v) {
        Ok(res) => res.basis,
        Err(_) => {
            return DetectionOutcome::Failed {
                reason: "picked directions are not linearly independent".into(),
            }
        }
    };
    match verify_cone_structure(cloud, &snapped, sigma, r) {
        Ok(cones) => DetectionOutcome::Detected(cones),
        Err(e) => DetectionOutcome::Failed {
            reason: e.to_string(),
        },
    }
}

/// Detection over a `(σ, r)` grid; one outcome per cell.
pub fn detect_cone_structure(
    cloud: &EmbeddedCloud,
    n_cones: usize,
    sigmas: &[f64],
    rs: &[f64],
) -> Result<Vec<DetectionCell>> {
    if n_cones > cloud.dim() {
        return Err(Error::InvalidConeParameters(format!(
            "{n_cones} cones requested in dimension {}",
            cloud.dim()
        )));
    }
    use rayon::prelude::*;
    let cells: Vec<(f64, f64)> = sigmas
        .iter()
        .flat_map(|s| rs.iter().map(move |r| (*s, *r)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(sigma, r)| DetectionCell {
            sigma,
            r,
            outcome: detect_cone_structure_at(cloud, n_cones, sigma, r),
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct NearestBasis {
    /// dim × N orthonormal columns.
    pub basis: Array2<f64>,
    /// Largest pairwise |<v_i, v_j>| of the input.
    pub max_pairwise: f64,
    /// `√N (1/√(1 - N δ) - 1)`, when `N δ < 1`.
    pub deviation_bound: Option<f64>,
    /// Linear independence is guaranteed by the inputs when `2 N δ < 1`.
    pub independence_certified: bool,
}

/// Nearest orthonormal basis `Ṽ = V (VᵀV)^{-1/2}` to unit columns `V`, via
/// the symmetric eigendecomposition of the Gram matrix.
pub fn nearest_orthonormal_basis(v: &Array2<f64>) -> Result<NearestBasis> {
    let n = v.ncols();
    let g = v.t().dot(v);
    let mut max_pairwise: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_pairwise = max_pairwise.max(g[[i, j]].abs());
            }
        }
    }
    let mut gm = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gm[(i, j)] = g[[i, j]];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(gm);
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    if eig
        .eigenvalues
        .iter()
        .any(|l| *l <= 1e-12 * max_eig.max(1e-300))
    {
        return Err(Error::RankDeficientBasis);
    }
    // G^{-1/2}
    let mut ginv_sqrt = nalgebra::DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s +=
                    eig.eigenvectors[(a, k)] * eig.eigenvectors[(b, k)] / eig.eigenvalues[k].sqrt();
            }
            ginv_sqrt[(a, b)] = s;
        }
    }
    let mut basis = Array2::zeros((v.nrows(), n));
    for i in 0..v.nrows() {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += v[[i, k]] * ginv_sqrt[(k, j)];
            }
            basis[[i, j]] = s;
        }
    }
    let nf = n as f64;
    let deviation_bound = (nf * max_pairwise < 1.0)
        .then(|| nf.sqrt() * (1.0 / (1.0 - nf * max_pairwise).sqrt() - 1.0));
    Ok(NearestBasis {
        basis,
        max_pairwise,
        deviation_bound,
        independence_certified: 2.0 * nf * max_pairwise < 1.0,
    })
}

/// Eigenvector rows of the Laplacian in empirical-L2 normalization, without
/// a connectivity check. On a disconnected graph the first eigenvectors span
/// the component indicators, which is exactly the picture the trivial
/// disconnected case reproduces.
pub fn spectral_coordinates(
    lap: &GraphLaplacian,
    n_coords: usize,
    seed: u64,
) -> Result<(EmbeddedCloud, Vec<f64>, Vec<f64>)> {
    let req = EigenRequest::new(n_coords).with_seed(seed);
    let res = eigen::smallest_eigenpairs(&lap.laplacian, None, &req)?;
    res.ensure_converged()?;
    let mut vectors = res.eigenvectors;
    lap.to_embedding_coords(&mut vectors);
    let n = lap.n as f64;
    for j in 0..n_coords {
        let ms: f64 = (0..lap.n).map(|i| vectors[[i, j]].powi(2)).sum::<f64>() / n;
        let scale = 1.0 / ms.sqrt();
        for i in 0..lap.n {
            vectors[[i, j]] *= scale;
        }
    }
    Ok((
        EmbeddedCloud::uniform(vectors, Normalization::EmpiricalL2),
        res.eigenvalues,
        res.residuals,
    ))
}

/// Spectral embedding rows `F_n(x_i)` from the first `n_coords` eigenvectors,
/// rescaled to empirical-L2 normalization. The graph must be connected.
pub fn discrete_embedding(
    lap: &GraphLaplacian,
    n_coords: usize,
    seed: u64,
) -> Result<EmbeddedCloud> {
    Ok(discrete_embedding_with_spectrum(lap, n_coords, seed)?.0)
}

/// Eigenvalues alongside the embedding, for reporting.
pub fn discrete_embedding_with_spectrum(
    lap: &GraphLaplacian,
    n_coords: usize,
    seed: u64,
) -> Result<(EmbeddedCloud, Vec<f64>, Vec<f64>)> {
    let (components, _) = lap.connected_components();
    if components > 1 {
        return Err(Error::DisconnectedGraph { components });
    }
    spectral_coordinates(lap, n_coords, seed)
}

/// Square-root-likelihood embedding: row i is
/// `(q_1(x_i)/√w_1, …, q_N(x_i)/√w_N)`, i.e. `√(ρ_k(x_i)/ρ(x_i))` per entry.
pub fn fq_embedding(model: &MixtureModel, points: &[Point]) -> Result<EmbeddedCloud> {
    let n = points.len();
    let k = model.n_components();
    let mut rows = Array2::zeros((n, k));
    for (i, p) in points.iter().enumerate() {
        let q = model.likelihood_vector(*p)?;
        for (j, qv) in q.iter().enumerate() {
            rows[[i, j]] = qv / model.weights[j].sqrt();
        }
    }
    Ok(EmbeddedCloud::uniform(rows, Normalization::Unspecified))
}

#[derive(Debug, Clone, Serialize)]
pub struct W2Result {
    /// Wasserstein-2 distance (exact, or a certified upper bound).
    pub value: f64,
    pub exact: bool,
    /// Bounds on the squared-distance transport cost when entropic.
    pub cost_upper: f64,
    pub cost_lower: f64,
    pub duality_gap: Option<f64>,
}

/// Wasserstein-2 distance between embedded clouds.
///
/// Equal-size uniform clouds with at most 512 points are solved exactly by
/// optimal assignment; anything larger or non-uniform goes through entropic
/// regularization with a decreasing regularizer, returning a certified upper
/// bound and the duality gap.
pub fn wasserstein2(a: &EmbeddedCloud, b: &EmbeddedCloud) -> Result<W2Result> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let cost = squared_distance_matrix(a, b);
    let exact_ok =
        a.len() == b.len() && a.len() <= 512 && a.has_uniform_masses() && b.has_uniform_masses();
    if exact_ok {
        let (_, total) = ot::solve_assignment(&cost);
        let cost_value = total / a.len() as f64;
        Ok(W2Result {
            value: cost_value.max(0.0).sqrt(),
            exact: true,
            cost_upper: cost_value,
            cost_lower: cost_value,
            duality_gap: None,
        })
    } else {
        let ent = ot::entropic_transport(&cost, &a.masses, &b.masses)?;
        Ok(W2Result {
            value: ent.cost_upper.max(0.0).sqrt(),
            exact: false,
            cost_upper: ent.cost_upper,
            cost_lower: ent.cost_lower,
            duality_gap: Some(ent.duality_gap),
        })
    }
}

fn squared_distance_matrix(a: &EmbeddedCloud, b: &EmbeddedCloud) -> Array2<f64> {
    let (n, m) = (a.len(), b.len());
    let d = a.dim();
    Array2::from_shape_fn((n, m), |(i, j)| {
        (0..d)
            .map(|c| (a.points[[i, c]] - b.points[[j, c]]).powi(2))
            .sum()
    })
}

#[derive(Debug, Clone)]
pub struct Alignment {
    /// Orthogonal matrix minimizing `Σ m_i |O a_i - b_i|²`.
    pub rotation: Array2<f64>,
    pub aligned: EmbeddedCloud,
    pub residual: f64,
    /// Set when the cross-covariance was rank deficient; any minimizer is
    /// returned in that case.
    pub ambiguous: bool,
}

/// Aligns cloud `a` onto cloud `b` over the full orthogonal group
/// (reflections permitted) under the given correspondence (identity when
/// omitted; then the clouds must have equal sizes).
pub fn align_embeddings(
    a: &EmbeddedCloud,
    b: &EmbeddedCloud,
    correspondence: Option<&[usize]>,
) -> Result<Alignment> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let pairs: Vec<(usize, usize)> = match correspondence {
        Some(map) => {
            if map.len() != a.len() {
                return Err(Error::DimensionMismatch {
                    left: map.len(),
                    right: a.len(),
                });
            }
            map.iter().enumerate().map(|(i, &j)| (i, j)).collect()
        }
        None => {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch {
                    left: a.len(),
                    right: b.len(),
                });
            }
            (0..a.len()).map(|i| (i, i)).collect()
        }
    };
    let d = a.dim();
    // weighted cross covariance C = Σ m_i b_i a_iᵀ
    let mut c = nalgebra::DMatrix::zeros(d, d);
    for &(i, j) in &pairs {
        let m = a.masses[i];
        for r in 0..d {
            for s in 0..d {
                c[(r, s)] += m * b.points[[j, r]] * a.points[[i, s]];
            }
        }
    }
    let svd = nalgebra::SVD::new(c.clone(), true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let vt = svd.v_t.as_ref().expect("svd with vt");
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let ambiguous = svd
        .singular_values
        .iter()
        .any(|s| *s <= 1e-12 * max_sv.max(1e-300));
    let o_na = u * vt;
    let mut rotation = Array2::zeros((d, d));
    for r in 0..d {
        for s in 0..d {
            rotation[[r, s]] = o_na[(r, s)];
        }
    }
    let aligned_points = a.points.dot(&rotation.t());
    let mut residual = 0.0;
    for &(i, j) in &pairs {
        let mut dist2 = 0.0;
        for r in 0..d {
            dist2 += (aligned_points[[i, r]] - b.points[[j, r]]).powi(2);
        }
        residual += a.masses[i] * dist2;
    }
    Ok(Alignment {
        rotation,
        aligned: EmbeddedCloud {
            points: aligned_points,
            masses: a.masses.clone(),
            normalization: Normalization::Unspecified,
        },
        residual: residual.sqrt(),
        ambiguous,
    })
}
