//! Built-in models and point-cloud generators used by the CLI presets, the
//! examples, and the acceptance suite.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{Domain, Rect};
use crate::embedding::{EmbeddedCloud, Normalization};
use crate::error::Result;
use crate::graph::PointCloud;
use crate::mixture::{dumbbell_ell, ComponentKind, DumbbellAxis, MixtureModel};
use crate::quad::QuadratureSpec;

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: MixtureModel,
    pub intrinsic_dim: usize,
    pub default_resolution: usize,
}

/// Two unit-variance bumps at distance `gamma`, equal weights.
pub fn gaussian_pair(gamma: f64, quad: &QuadratureSpec) -> Result<BuiltModel> {
    let model = MixtureModel::new(
        Domain::interval(-12.0, gamma + 12.0)?,
        vec![
            ComponentKind::Gaussian { mean: 0.0, sd: 1.0 },
            ComponentKind::Gaussian {
                mean: gamma,
                sd: 1.0,
            },
        ],
        vec![0.5, 0.5],
        quad,
    )?;
    Ok(BuiltModel {
        model,
        intrinsic_dim: 1,
        default_resolution: 2048,
    })
}

/// Unit-area dumbbell: two boxes of side `ell` joined by a neck of half-height
/// `vartheta`, with `ell² + 2 ell vartheta = 1`.
pub fn dumbbell_domain(vartheta: f64) -> Result<Domain> {
    let ell = dumbbell_ell(vartheta);
    Domain::rectangles(vec![
        Rect::new(-ell, -ell / 2.0, -ell / 2.0, ell / 2.0),
        Rect::new(-ell / 2.0, ell / 2.0, -vartheta, vartheta),
        Rect::new(ell / 2.0, ell, -ell / 2.0, ell / 2.0),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumbbellPartition {
    /// Cut across the bottleneck: well separated for small vartheta.
    Good,
    /// Cut along the bottleneck axis: the components stay divisible.
    Bad,
}

/// The two-component partition-of-unity mixture on the dumbbell.
pub fn dumbbell(
    vartheta: f64,
    eps_psi: f64,
    partition: DumbbellPartition,
    quad: &QuadratureSpec,
) -> Result<BuiltModel> {
    let axis = match partition {
        DumbbellPartition::Good => DumbbellAxis::X,
        DumbbellPartition::Bad => DumbbellAxis::Y,
    };
    let model = MixtureModel::new(
        dumbbell_domain(vartheta)?,
        vec![
            ComponentKind::DumbbellLeft {
                vartheta,
                eps: eps_psi,
                axis,
            },
            ComponentKind::DumbbellRight {
                vartheta,
                eps: eps_psi,
                axis,
            },
        ],
        vec![0.5, 0.5],
        quad,
    )?;
    Ok(BuiltModel {
        model,
        intrinsic_dim: 2,
        default_resolution: 256,
    })
}

/// Uniform measure on the unit circle, declared as a two-component mixture of
/// identical uniforms (a spectral sanity anchor, not a separated model).
pub fn uniform_circle(quad: &QuadratureSpec) -> Result<BuiltModel> {
    let model = MixtureModel::new(
        Domain::circle(1.0)?,
        vec![ComponentKind::CircleUniform, ComponentKind::CircleUniform],
        vec![0.5, 0.5],
        quad,
    )?;
    Ok(BuiltModel {
        model,
        intrinsic_dim: 1,
        default_resolution: 512,
    })
}

/// Points on two unit circles centered at (±2, 0): a disconnected two-cluster
/// cloud once ε drops below the gap between the circles.
pub fn two_circles_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n);
    for _ in 0..n {
        let center = if rng.random::<f64>() < 0.5 { -2.0 } else { 2.0 };
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        pts.push([center + theta.cos(), theta.sin()]);
    }
    PointCloud::new(pts, 2)
}

/// Synthetic embedded cloud with `k` tight clusters on scaled basis axes.
pub fn orthogonal_clusters_cloud(n: usize, k: usize, seed: u64) -> EmbeddedCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = ndarray::Array2::zeros((n, k));
    for i in 0..n {
        let axis = i % k;
        let radial = 1.5 + 0.3 * rng.random::<f64>();
        let wobble = 0.03 * (rng.random::<f64>() - 0.5);
        for j in 0..k {
            pts[[i, j]] = if j == axis {
                radial * (1.0 - wobble * wobble / 2.0)
            } else {
                radial * wobble / (k as f64 - 1.0).max(1.0)
            };
        }
    }
    EmbeddedCloud::uniform(pts, Normalization::Unspecified)
}
