//! Finiteness conditions and the inequality chain for a disk well, plus the
//! closed-form angular average of ln².

use s2b::conditions::{angular_log_closed_form, condition_integrals};
use s2b::potential::{sample_negative_part, Grid2D, PotentialSpec};
use s2b::rearrangement::rearrange;

fn main() -> s2b::Result<()> {
    let spec = PotentialSpec::circular_well(2.0, 1.5)?;
    let field = sample_negative_part(&spec, &Grid2D::new(spec.default_half_width()?, 64)?)?;
    let r = condition_integrals(&field, &rearrange(&field))?;
    println!("I = {:.6} = I+ {:.6} + I- {:.6}  (residual {:.1e})", r.i, r.i_plus, r.i_minus, r.flags.split_residual);
    println!("I+ {:.4} <= {:.4}: {}", r.i_plus, r.rhs_a8, r.flags.a8_holds);
    println!("I- {:.4} <= {:.4}: {}", r.i_minus, r.rhs_a14, r.flags.a14_holds);
    for ratio in [0.0, 0.5, 0.9, 0.999_999] {
        let v = angular_log_closed_form(1.0, ratio)?;
        println!("angular mean of ln² at ry/rx = {ratio}: {v:.12}");
    }
    println!("limit pi²/3 = {:.12}", std::f64::consts::PI.powi(2) / 3.0);
    Ok(())
}
