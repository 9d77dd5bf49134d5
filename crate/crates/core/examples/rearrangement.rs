//! Symmetric decreasing rearrangement of an off-centre double well and the
//! rearrangement inequality for a few decreasing kernels.

use s2b::potential::{sample_negative_part, Grid2D, PotentialSpec, Term};
use s2b::rearrangement::{equimeasure_check, luttinger_check, rearrange, DecreasingKernel};

fn main() -> s2b::Result<()> {
    let spec = PotentialSpec::sum_of_terms(vec![
        Term::Gaussian { amplitude: -3.0, width: 0.5, center: [-1.0, 0.5] },
        Term::Gaussian { amplitude: -1.5, width: 0.7, center: [1.0, -0.4] },
    ])?;
    let grid = Grid2D::new(3.0, 32)?;
    let field = sample_negative_part(&spec, &grid)?;
    let profile = rearrange(&field);
    println!("mass {:.6} -> {:.6}", field.mass(), profile.mass());
    let worst = equimeasure_check(&field, &profile, &[0.1, 0.5, 1.0, 2.0])?
        .iter()
        .map(|m| m.mismatch_cells.abs())
        .max()
        .unwrap_or(0);
    println!("level-set mismatch: {worst} cells");
    for kernel in [DecreasingKernel::LnMinusSq, DecreasingKernel::Indicator { radius: 1.0 }, DecreasingKernel::Gaussian { width: 0.8 }] {
        let (lhs, rhs) = luttinger_check(&field, &kernel, &field)?;
        println!("{kernel:?}: {lhs:.6} <= {rhs:.6}");
    }
    Ok(())
}
