//! Cone structures are stable under Wasserstein perturbation: a cloud
//! verified at (sigma, delta, r) still verifies at
//! (sigma + s, delta + t^2, r(1 - sin s)) after any perturbation of
//! Wasserstein-2 size r·t·sin(s)/sqrt(N).
//!
//!     cargo run --release --example wasserstein_stability

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use conespec::embedding::{verify_cone_structure, wasserstein2, EmbeddedCloud, Normalization};

fn main() -> conespec::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 400;
    let mut pts = Array2::zeros((n, 2));
    for i in 0..n {
        let axis = i % 2;
        let radial = 1.2 + 0.4 * rng.random::<f64>();
        let wobble = 0.12 * (rng.random::<f64>() - 0.5);
        pts[[i, axis]] = radial * wobble.cos();
        pts[[i, 1 - axis]] = radial * wobble.sin();
    }
    let cloud = EmbeddedCloud::uniform(pts.clone(), Normalization::Unspecified);
    let basis = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
    let (sigma, r) = (0.25, 0.5);
    let before = verify_cone_structure(&cloud, &basis, sigma, r)?;
    println!(
        "before: delta = {:.4} at (sigma, r) = ({sigma}, {r})",
        before.delta
    );

    let (s, t) = (0.2f64, 0.35f64);
    let budget = r * t * s.sin() / 2f64.sqrt();
    let mut moved = pts;
    for i in 0..n {
        let angle = rng.random::<f64>() * std::f64::consts::TAU;
        let len = rng.random::<f64>() * budget;
        moved[[i, 0]] += len * angle.cos();
        moved[[i, 1]] += len * angle.sin();
    }
    let perturbed = EmbeddedCloud::uniform(moved, Normalization::Unspecified);
    let w2 = wasserstein2(&cloud, &perturbed)?;
    println!(
        "perturbation W2 = {:.5} (budget {budget:.5}, exact = {})",
        w2.value, w2.exact
    );

    let after = verify_cone_structure(&perturbed, &basis, sigma + s, r * (1.0 - s.sin()))?;
    println!(
        "after:  delta = {:.4} at the shifted parameters (allowed: {:.4})",
        after.delta,
        before.delta + t * t
    );
    Ok(())
}
