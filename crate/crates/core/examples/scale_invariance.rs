//! `T1` depends on the arbitrary scale `k0`; the two bound combinations do not.

use s2b::bound::{k0_invariance_scan, prepared_field, KernelSettings};
use s2b::potential::{Grid2D, PotentialSpec, Term};

fn main() -> s2b::Result<()> {
    let spec = PotentialSpec::sum_of_terms(vec![
        Term::Gaussian { amplitude: -4.0, width: 0.8, center: [-1.2, 0.0] },
        Term::Gaussian { amplitude: -2.5, width: 0.6, center: [1.0, 0.3] },
    ])?;
    let grid = Grid2D::new(spec.default_half_width()?, 40)?;
    let (field, _, _) = prepared_field(&spec, &grid, &KernelSettings::default())?;
    let scan = k0_invariance_scan(&field, &[0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0])?;
    println!("{:>8} {:>14} {:>18} {:>14}", "k0", "T1", "T1-2T2+T3^2", "T1-T2");
    for r in &scan.rows {
        println!("{:>8} {:>14.8} {:>18.12} {:>14.10}", r.k0, r.terms.t1, r.deflated_trace, r.type_one);
    }
    println!("max relative deviation: {:.2e} (T1 alone: {:.2e})", scan.max_rel_deviation, scan.t1_rel_spread);
    Ok(())
}
