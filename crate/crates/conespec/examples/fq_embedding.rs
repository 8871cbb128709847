//! The square-root-likelihood embedding x -> (q_1/sqrt(w_1), ..., q_N/sqrt(w_N))
//! sends well-separated mixtures onto near-orthogonal rays: every row has
//! norm at least 1/sqrt(w_max), and the picked directions snap onto an
//! orthonormal basis within the near-orthogonality bound.
//!
//!     cargo run --release --example fq_embedding

use ndarray::Array2;

use conespec::embedding::{
    detect_cone_structure_at, fq_embedding, nearest_orthonormal_basis, DetectionOutcome,
};
use conespec::presets;
use conespec::quad::QuadratureSpec;

fn main() -> conespec::Result<()> {
    let quad = QuadratureSpec::simpson(4097)?;
    let built = presets::gaussian_pair(6.0, &quad)?;
    let pts = built.model.sample(1500, 4)?;
    let cloud = fq_embedding(&built.model, &pts)?;

    let min_norm = (0..cloud.len())
        .map(|i| {
            (0..cloud.dim())
                .map(|j| cloud.points[[i, j]].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min);
    println!(
        "min row norm {min_norm:.4} (floor 1/sqrt(w_max) = {:.4})",
        2f64.sqrt()
    );

    match detect_cone_structure_at(&cloud, 2, std::f64::consts::FRAC_PI_8, 0.5) {
        DetectionOutcome::Detected(c) => {
            println!(
                "detected cones: delta = {:.5}, per-cone mass {:?}",
                c.delta, c.per_cone_mass
            )
        }
        DetectionOutcome::Failed { reason } => println!("detection failed: {reason}"),
    }

    // the near-orthonormal correction on two slightly mixed directions
    let v = Array2::from_shape_vec((2, 2), vec![1.0, 0.08, 0.0, (1.0f64 - 0.08 * 0.08).sqrt()])
        .unwrap();
    let snapped = nearest_orthonormal_basis(&v)?;
    println!(
        "pairwise overlap {:.3} snaps within bound {:?}",
        snapped.max_pairwise, snapped.deviation_bound
    );
    Ok(())
}
