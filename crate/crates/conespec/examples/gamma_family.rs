//! The γ-renormalized Laplacian family on a density-imbalanced cloud: γ near
//! one suppresses the density's influence on the spectrum, γ near zero
//! maximizes it.
//!
//!     cargo run --release --example gamma_family

use conespec::domain::Domain;
use conespec::embedding::spectral_coordinates;
use conespec::graph::{gamma_laplacian, PointCloud};
use conespec::kernel::KernelProfile;
use conespec::mixture::{ComponentKind, MixtureModel};
use conespec::quad::QuadratureSpec;

fn main() -> conespec::Result<()> {
    // two-plateau density: 0.35 on [0, 2], 0.06 on [2, 7]
    let quad = QuadratureSpec::simpson(2049)?;
    let model = MixtureModel::new(
        Domain::interval(0.0, 7.0)?,
        vec![
            ComponentKind::Uniform { a: 0.0, b: 2.0 },
            ComponentKind::Uniform { a: 2.0, b: 7.0 },
        ],
        vec![0.7, 0.3],
        &quad,
    )?;
    let pts = model.sample(1200, 3)?;
    let cloud = PointCloud::new(model.to_ambient_cloud(&pts), 1);
    let kernel = KernelProfile::tent(1)?;

    println!("gamma  lambda_2..4 of the renormalized family");
    for gamma in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let lap = gamma_laplacian(&cloud, 0.4, &kernel, gamma)?;
        let (_, eigenvalues, _) = spectral_coordinates(&lap, 4, 3)?;
        println!(
            "{gamma:<6} {:.5} {:.5} {:.5}",
            eigenvalues[1], eigenvalues[2], eigenvalues[3]
        );
    }
    Ok(())
}
