//! The same dumbbell density decomposed two ways: cutting across the
//! bottleneck keeps the components indivisible, cutting along it does not.
//! Separation is a property of the decomposition, not of the density.
//!
//!     cargo run --release --example dumbbell_partitions

use conespec::continuum::indivisibility_parameter;
use conespec::presets::{dumbbell, DumbbellPartition};
use conespec::quad::QuadratureSpec;

fn main() -> conespec::Result<()> {
    let quad = QuadratureSpec::simpson(1025)?;
    let eps = 0.1;
    println!("partition  vartheta  S          C          Theta");
    for vartheta in [0.05, 0.02, 0.01] {
        for (name, partition) in [
            ("good", DumbbellPartition::Good),
            ("bad", DumbbellPartition::Bad),
        ] {
            let built = dumbbell(vartheta, eps, partition, &quad)?;
            let s = built.model.overlap_parameter(&quad).value;
            let c = built.model.coupling_parameter(&quad).value;
            let theta = indivisibility_parameter(&built.model, 192)?.value;
            println!("{name:<10} {vartheta:<9} {s:<10.4e} {c:<10.4e} {theta:.4}");
        }
    }
    println!("\nbounds: S <= 16*vartheta*eps and C <= 4*vartheta/eps for the good partition");
    Ok(())
}
