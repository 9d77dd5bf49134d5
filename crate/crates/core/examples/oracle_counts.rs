//! Finite-difference and radial shooting counts for central wells.

use s2b::oracle::{fd_count_search, radial_count};
use s2b::potential::{PotentialSpec, Term};

fn main() -> s2b::Result<()> {
    let ring = PotentialSpec::sum_of_terms(vec![Term::Ring { amplitude: -3.0, radius: 2.0, width: 0.5, center: [0.0, 0.0] }])?;
    let cases = [
        ("disk depth 2", PotentialSpec::circular_well(2.0, 1.5)?),
        ("disk depth 20", PotentialSpec::circular_well(20.0, 1.0)?),
        ("ring", ring),
    ];
    for (name, spec) in cases {
        let radial = radial_count(&spec, 64)?;
        let fd = fd_count_search(&spec, 1.0, spec.default_half_width()?, 96, &[1.5, 3.0], None)?;
        println!(
            "{name:>14}: radial {} {:?}, fd {} (L_box {:.2}, converged {})",
            radial.total, radial.per_channel, fd.count, fd.half_width, fd.converged
        );
    }
    Ok(())
}
