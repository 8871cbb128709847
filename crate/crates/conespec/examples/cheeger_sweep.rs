//! Cut-functional sweeps over axis-aligned half spaces on the dumbbell, with
//! the resulting spectral certificate (min cut)^2 / 4 next to the computed
//! second eigenvalue.
//!
//!     cargo run --release --example cheeger_sweep

use conespec::continuum::{cheeger_sweep, cut_at, discretize, Axis, Connectivity};
use conespec::mixture::{Component, ComponentKind, DumbbellAxis};
use conespec::presets::dumbbell_domain;
use conespec::quad::QuadratureSpec;

fn main() -> conespec::Result<()> {
    let (vartheta, eps) = (0.01, 0.1);
    let domain = dumbbell_domain(vartheta)?;
    let quad = QuadratureSpec::simpson(513)?;
    let profile = Component::bind(
        ComponentKind::DumbbellProfileLeft {
            vartheta,
            eps,
            axis: DumbbellAxis::X,
        },
        &domain,
        &quad,
    )?;

    let anchor = cut_at(&|p| profile.value(p), &domain, Axis::X, eps / 2.0);
    println!(
        "Cut(A_t) at the ramp midpoint t = eps/2: {anchor:.2} (closed form: {})",
        6.0 / eps
    );

    for axis in [Axis::X, Axis::Y] {
        let sweep = cheeger_sweep(&|p| profile.value(p), &domain, axis, 512)?;
        println!(
            "{axis:?} sweep: min cut {:.4} at t = {:.4}; certificate {:.4}",
            sweep.min_cut, sweep.min_t, sweep.lower_bound
        );
    }

    let op = discretize(
        |p| profile.value(p),
        &domain,
        256,
        Connectivity::AllowDisconnected,
    )?;
    let theta = op.eigenpairs(2, 0)?.eigenvalues[1];
    println!("second eigenvalue of the weighted operator: {theta:.4}");
    Ok(())
}
