//! Computes the full separation certificate for the two-Gaussian mixture at
//! a few offsets: overlap, coupling, indivisibility, tau, the delta*/(s, t)
//! table, eigenvalue bounds, and the verdict.
//!
//!     cargo run --release --example separation_report

use conespec::presets;
use conespec::quad::QuadratureSpec;
use conespec::report::{assemble_report, ReportParams};

fn main() -> conespec::Result<()> {
    let quad = QuadratureSpec::simpson((1 << 14) + 1)?;
    for gamma in [2.0, 6.0, 12.0] {
        let built = presets::gaussian_pair(gamma, &quad)?;
        let epsilon = conespec::graph::default_epsilon(2000, built.intrinsic_dim, 1.0);
        let mut params =
            ReportParams::new(built.default_resolution, 2000, built.intrinsic_dim, epsilon);
        params.refine_s = true;
        let report = assemble_report(&built.model, &quad, &params)?;
        println!("==== gaussian pair, offset gamma = {gamma} ====");
        println!("{}", report.to_text());
    }
    Ok(())
}
