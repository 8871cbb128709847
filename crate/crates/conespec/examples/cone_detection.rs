//! End-to-end cone detection: sample the gaussian pair, embed through the
//! graph Laplacian, and scan the (sigma, r) grid for orthogonal cone
//! structures.
//!
//!     cargo run --release --example cone_detection

use conespec::embedding::{detect_cone_structure, discrete_embedding, DetectionOutcome};
use conespec::graph::{kernelized_weights, PointCloud};
use conespec::kernel::KernelProfile;
use conespec::presets;
use conespec::quad::QuadratureSpec;

fn main() -> conespec::Result<()> {
    let quad = QuadratureSpec::simpson(4097)?;
    let built = presets::gaussian_pair(6.0, &quad)?;
    let pts = built.model.sample(2000, 7)?;
    let cloud = PointCloud::new(built.model.to_ambient_cloud(&pts), 1);
    let kernel = KernelProfile::tent(1)?;
    let lap = kernelized_weights(&cloud, 0.8, &kernel)?;
    let embedded = discrete_embedding(&lap, 2, 7)?;

    let sigmas = [0.2, std::f64::consts::FRAC_PI_8, 0.6];
    let rs = [0.25, 0.5, 1.0];
    println!("sigma   r     outcome");
    for cell in detect_cone_structure(&embedded, 2, &sigmas, &rs)? {
        match cell.outcome {
            DetectionOutcome::Detected(c) => println!(
                "{:<7.4} {:<5.2} delta = {:.4}, per-cone mass {:?}",
                cell.sigma, cell.r, c.delta, c.per_cone_mass
            ),
            DetectionOutcome::Failed { reason } => {
                println!("{:<7.4} {:<5.2} failed: {reason}", cell.sigma, cell.r)
            }
        }
    }
    Ok(())
}
