//! Samples the uniform circle, builds the kernelized graph Laplacian, and
//! compares its low spectrum against the analytic circle eigenvalues
//! (0, 1, 1, 4, 4).
//!
//!     cargo run --release --example spectral_embedding

use conespec::embedding::spectral_coordinates;
use conespec::graph::{default_epsilon, kernelized_weights, PointCloud};
use conespec::kernel::KernelProfile;
use conespec::presets;
use conespec::quad::QuadratureSpec;

fn main() -> conespec::Result<()> {
    let quad = QuadratureSpec::simpson(257)?;
    let circle = presets::uniform_circle(&quad)?;
    let kernel = KernelProfile::tent(1)?;
    println!("n      epsilon   lambda_2..5 (target 1, 1, 4, 4)");
    for n in [500usize, 1000, 2000] {
        let pts = circle.model.sample(n, 2)?;
        let ambient = circle.model.to_ambient_cloud(&pts);
        let cloud = PointCloud::new(ambient, 2);
        let eps = default_epsilon(n, 1, 1.0);
        let lap = kernelized_weights(&cloud, eps, &kernel)?;
        let (_, eigenvalues, _) = spectral_coordinates(&lap, 5, 2)?;
        println!(
            "{n:<6} {eps:<9.4} {:.4} {:.4} {:.4} {:.4}",
            eigenvalues[1], eigenvalues[2], eigenvalues[3], eigenvalues[4]
        );
    }
    Ok(())
}
