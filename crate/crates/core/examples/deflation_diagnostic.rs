//! The deflated kernel: `K'a = 0`, the trace identity, and coupling thresholds
//! from its spectrum compared with the oracle.

use s2b::bound::{bound_terms, prepared_field, KernelSettings};
use s2b::bskernel::{build_a, build_k, build_kprime};
use s2b::oracle::{bs_coupling_diagnostic, fd_negative_count, FdSettings};
use s2b::potential::{Grid2D, PotentialSpec};

fn main() -> s2b::Result<()> {
    let spec = PotentialSpec::gaussian_well(5.0, 1.0, [0.0, 0.0])?;
    let l = spec.default_half_width()?;
    let (field, _, _) = prepared_field(&spec, &Grid2D::new(l, 32)?, &KernelSettings::default())?;
    let k = build_k(&field, 1.0)?;
    let a = build_a(&field)?;
    let kp = build_kprime(&k, &a)?;
    let t = bound_terms(&k, &a)?;
    println!("|K'a| / |K|_F = {:.2e}", (kp.entries() * &a.a).norm() / k.frobenius_norm());
    println!("tr K'^2 = {:.12}, T1 - 2T2 + T3^2 = {:.12}", kp.frobenius_sq(), t.deflated_trace());
    let diag = bs_coupling_diagnostic(&kp, 6.0)?;
    println!("thresholds g_i <= 6: {:?}", diag.thresholds.iter().map(|g| format!("{g:.3}")).collect::<Vec<_>>());
    for g in [1.0, 5.0] {
        let fd = fd_negative_count(&spec, g, &FdSettings { half_width: 1.5 * l, n: 96, tol_e: None, eigenvalues: false })?;
        let predicted = diag.lambdas.iter().filter(|x| g * **x >= 1.0).count() + 1;
        println!("g = {g}: predicted {predicted}, oracle {}", fd.count);
    }
    Ok(())
}
