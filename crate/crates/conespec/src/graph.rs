//! ε-proximity graphs on point clouds and their Laplacians.
//!
//! Weights are kernelized: `W_ij = 2 η_ε(|x_i - x_j|) / (σ_η ε² √(d_i d_j))`
//! with `d_ε` the degree function (a kernel density estimate up to `1/n`),
//! producing `Δ_n = D - W` whose spectrum tracks the weighted continuum
//! operator. A γ-family of renormalized Laplacians
//! `Δ_n^γ = I - D^{-1} W` with `W_ij = η_ε / (d̃_i^γ d̃_j^γ)` is also
//! available; it is solved through its symmetric conjugate.
//!
//! Neighbor search is exact: uniform spatial binning with cell size ε
//! returns precisely the pairs at distance `< ε`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::domain::Point;
use crate::error::{Error, Result};
use crate::kernel::KernelProfile;
use crate::sparse::SparseSymmetricMatrix;

/// Points in ambient coordinates; `dim` is the ambient dimension (1 or 2),
/// with the second coordinate zero when `dim == 1`.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<Point>,
    pub dim: usize,
}

impl PointCloud {
    pub fn new(points: Vec<Point>, dim: usize) -> Self {
        PointCloud { points, dim }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads a cloud from CSV: header row, then one point per row with 1 or 2
    /// numeric columns.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(file);
        let mut points = Vec::new();
        let mut dim = 1usize;
        for record in reader.records() {
            let record = record?;
            let mut p = [0.0, 0.0];
            let cols = record.len().min(2);
            if cols == 0 {
                continue;
            }
            dim = dim.max(cols);
            for (c, field) in record.iter().take(2).enumerate() {
                p[c] = field.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidConfig(format!(
                        "non-numeric coordinate {field:?} in {}",
                        path.display()
                    ))
                })?;
            }
            points.push(p);
        }
        if points.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "no points in {}",
                path.display()
            )));
        }
        Ok(PointCloud { points, dim })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let emit = |w: &mut W| -> std::io::Result<()> {
            if self.dim == 1 {
                writeln!(w, "x")?;
                for p in &self.points {
                    writeln!(w, "{}", p[0])?;
                }
            } else {
                writeln!(w, "x,y")?;
                for p in &self.points {
                    writeln!(w, "{},{}", p[0], p[1])?;
                }
            }
            Ok(())
        };
        emit(&mut w).map_err(|e| Error::io("<point cloud stream>", e))
    }
}

/// `ε = multiplier · (log(n)^{p_m} / n^{1/m})^{1/2}` with `p_1 = 1`,
/// `p_2 = 3/4`, `p_m = 1/m` for m ≥ 3.
pub fn default_epsilon(n: usize, m: usize, multiplier: f64) -> f64 {
    assert!(n >= 2 && m >= 1);
    let p_m = match m {
        1 => 1.0,
        2 => 0.75,
        _ => 1.0 / m as f64,
    };
    let ln = (n as f64).ln();
    multiplier * (ln.powf(p_m) / (n as f64).powf(1.0 / m as f64)).sqrt()
}

/// Exact strict-inequality neighbor pairs `(i, j, |x_i - x_j|)` with `i < j`,
/// found by uniform binning with cell size ε. Output is sorted by `(i, j)`.
pub fn neighbor_pairs(points: &[Point], epsilon: f64) -> Vec<(usize, usize, f64)> {
    assert!(epsilon > 0.0);
    let mut lo = [f64::INFINITY; 2];
    for p in points {
        lo[0] = lo[0].min(p[0]);
        lo[1] = lo[1].min(p[1]);
    }
    let cell_of = |p: &Point| -> (i64, i64) {
        (
            ((p[0] - lo[0]) / epsilon).floor() as i64,
            ((p[1] - lo[1]) / epsilon).floor() as i64,
        )
    };
    let mut bins: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        bins.entry(cell_of(p)).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let (cx, cy) = cell_of(p);
        let mut js = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = bins.get(&(cx + dx, cy + dy)) {
                    for &j in list {
                        if j > i {
                            let d2 = (points[i][0] - points[j][0]).powi(2)
                                + (points[i][1] - points[j][1]).powi(2);
                            if d2 < epsilon * epsilon {
                                js.push((j, d2.sqrt()));
                            }
                        }
                    }
                }
            }
        }
        js.sort_by_key(|a| a.0);
        for (j, d) in js {
            pairs.push((i, j, d));
        }
    }
    pairs
}

/// Degree function `d_ε(x_i) = Σ_j η_ε(|x_i - x_j|)`, self term included.
/// `d_ε(x_i)/n` is a kernel density estimate of the sampling density.
pub fn degree_function(
    cloud: &PointCloud,
    epsilon: f64,
    kernel: &KernelProfile,
) -> Result<Vec<f64>> {
    let n = cloud.len();
    let self_term = kernel.eval_scaled(0.0, epsilon);
    let mut degrees = vec![self_term; n];
    for (i, j, d) in neighbor_pairs(&cloud.points, epsilon) {
        let v = kernel.eval_scaled(d, epsilon);
        degrees[i] += v;
        degrees[j] += v;
    }
    for (i, d) in degrees.iter().enumerate() {
        if !(*d > 0.0) {
            return Err(Error::IsolatedVertex { index: i, epsilon });
        }
    }
    Ok(degrees)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LaplacianVariant {
    Kernelized,
    Gamma { gamma: f64 },
}

/// A graph Laplacian ready for eigensolving.
///
/// For the kernelized variant `laplacian = D - W`. For the γ variant
/// `laplacian` is the symmetric conjugate `I - D^{-1/2} W D^{-1/2}` of the
/// random-walk operator `Δ_n^γ = I - D^{-1} W`; the two share eigenvalues and
/// eigenvectors map through `D^{-1/2}`.
#[derive(Debug, Clone)]
pub struct GraphLaplacian {
    pub weights: SparseSymmetricMatrix,
    /// Row sums of W (including the self loop).
    pub degrees: Vec<f64>,
    pub laplacian: SparseSymmetricMatrix,
    pub epsilon: f64,
    pub kernel: KernelProfile,
    pub variant: LaplacianVariant,
    pub n: usize,
}

impl GraphLaplacian {
    /// Connected components of the off-diagonal weight pattern.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let n = self.n;
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = count;
            while let Some(v) = stack.pop() {
                for (u, _) in self.weights.row_entries(v) {
                    if u != v && label[u] == usize::MAX {
                        label[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    /// Maps eigenvectors of the symmetric conjugate back to random-walk
    /// coordinates (identity for the kernelized variant).
    pub fn to_embedding_coords(&self, v: &mut ndarray::Array2<f64>) {
        if let LaplacianVariant::Gamma { .. } = self.variant {
            for (i, d) in self.degrees.iter().enumerate() {
                let scale = 1.0 / d.sqrt();
                for j in 0..v.ncols() {
                    v[[i, j]] *= scale;
                }
            }
        }
    }

    pub fn write_matrix_market<W: Write>(&self, w: W) -> Result<()> {
        self.laplacian.write_matrix_market(w)
    }
}

/// Kernelized weights and `Δ_n = D - W`.
pub fn kernelized_weights(
    cloud: &PointCloud,
    epsilon: f64,
    kernel: &KernelProfile,
) -> Result<GraphLaplacian> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = cloud.len();
    let degrees_raw = degree_function(cloud, epsilon, kernel)?;
    let scale = 2.0 / (kernel.sigma * epsilon * epsilon);
    let pairs = neighbor_pairs(&cloud.points, epsilon);

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len() + n);
    for i in 0..n {
        let w_ii = scale * kernel.eval_scaled(0.0, epsilon) / degrees_raw[i];
        triplets.push((i, i, w_ii));
    }
    for &(i, j, d) in &pairs {
        let w = scale * kernel.eval_scaled(d, epsilon) / (degrees_raw[i] * degrees_raw[j]).sqrt();
        triplets.push((i, j, w));
    }
    let weights = SparseSymmetricMatrix::from_triplets(n, triplets);

    let mut degrees = vec![0.0; n];
    for i in 0..n {
        let mut js: Vec<(usize, f64)> = weights.row_entries(i).collect();
        js.sort_by_key(|e| e.0);
        degrees[i] = js.iter().map(|(_, v)| v).sum();
    }

    // Δ = D - W: same off-diagonal pattern, diagonal degrees - W_ii
    let mut lap_triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        let w_ii = weights
            .row_entries(i)
            .find(|(j, _)| *j == i)
            .map(|(_, v)| v)
            .unwrap_or(0.0);
        lap_triplets.push((i, i, degrees[i] - w_ii));
    }
    for (i, j, v) in weights.upper_triplets() {
        if i != j {
            lap_triplets.push((i, j, -v));
        }
    }
    let laplacian = SparseSymmetricMatrix::from_triplets(n, lap_triplets);

    Ok(GraphLaplacian {
        weights,
        degrees,
        laplacian,
        epsilon,
        kernel: *kernel,
        variant: LaplacianVariant::Kernelized,
        n,
    })
}

/// γ-renormalized weights `η_ε / (d̃_i^γ d̃_j^γ)` and the symmetric conjugate
/// of `Δ_n^γ = I - D^{-1} W`.
pub fn gamma_laplacian(
    cloud: &PointCloud,
    epsilon: f64,
    kernel: &KernelProfile,
    gamma: f64,
) -> Result<GraphLaplacian> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!(
            "gamma must lie in [0, 1], got {gamma}"
        )));
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = cloud.len();
    let raw = degree_function(cloud, epsilon, kernel)?;
    let pairs = neighbor_pairs(&cloud.points, epsilon);

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len() + n);
    for i in 0..n {
        triplets.push((
            i,
            i,
            kernel.eval_scaled(0.0, epsilon) / raw[i].powf(2.0 * gamma),
        ));
    }
    for &(i, j, d) in &pairs {
        let w = kernel.eval_scaled(d, epsilon) / (raw[i].powf(gamma) * raw[j].powf(gamma));
        triplets.push((i, j, w));
    }
    let weights = SparseSymmetricMatrix::from_triplets(n, triplets);

    let mut degrees = vec![0.0; n];
    for (i, d) in degrees.iter_mut().enumerate() {
        *d = weights.row_entries(i).map(|(_, v)| v).sum();
    }

    // I - D^{-1/2} W D^{-1/2}
    let mut lap_triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        let w_ii = weights
            .row_entries(i)
            .find(|(j, _)| *j == i)
            .map(|(_, v)| v)
            .unwrap_or(0.0);
        lap_triplets.push((i, i, 1.0 - w_ii / degrees[i]));
    }
    for (i, j, v) in weights.upper_triplets() {
        if i != j {
            lap_triplets.push((i, j, -v / (degrees[i] * degrees[j]).sqrt()));
        }
    }
    let laplacian = SparseSymmetricMatrix::from_triplets(n, lap_triplets);

    Ok(GraphLaplacian {
        weights,
        degrees,
        laplacian,
        epsilon,
        kernel: *kernel,
        variant: LaplacianVariant::Gamma { gamma },
        n,
    })
}

/// Smallest ε that makes the proximity graph connected, by bisection.
/// Used as a diagnostic when an embedding request hits a disconnected graph.
pub fn connecting_epsilon(points: &[Point]) -> f64 {
    let mut lo_pt = [f64::INFINITY; 2];
    let mut hi_pt = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo_pt[d] = lo_pt[d].min(p[d]);
            hi_pt[d] = hi_pt[d].max(p[d]);
        }
    }
    let mut hi =
        ((hi_pt[0] - lo_pt[0]).powi(2) + (hi_pt[1] - lo_pt[1]).powi(2)).sqrt() * 1.01 + 1e-12;
    let mut lo = 0.0;
    let connected = |eps: f64| -> bool {
        let pairs = neighbor_pairs(points, eps);
        let mut uf: Vec<usize> = (0..points.len()).collect();
        fn find(uf: &mut [usize], mut i: usize) -> usize {
            while uf[i] != i {
                uf[i] = uf[uf[i]];
                i = uf[i];
            }
            i
        }
        let mut comps = points.len();
        for (i, j, _) in pairs {
            let (a, b) = (find(&mut uf, i), find(&mut uf, j));
            if a != b {
                uf[a] = b;
                comps -= 1;
            }
        }
        comps == 1
    };
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if connected(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
