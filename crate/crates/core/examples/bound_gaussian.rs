//! Bound on the number of bound states of a Gaussian well, compared with the
//! finite-difference count, over a few couplings.

use s2b::bound::{compute_bound, KernelSettings};
use s2b::oracle::{fd_negative_count, FdSettings};
use s2b::potential::{Grid2D, PotentialSpec};

fn main() -> s2b::Result<()> {
    let well = PotentialSpec::gaussian_well(5.0, 1.0, [0.0, 0.0])?;
    let l = well.default_half_width()?;
    let grid = Grid2D::new(l, 48)?;
    println!("{:>6} {:>10} {:>10} {:>8}", "g", "N_I", "N_total", "oracle");
    for g in [0.5, 1.0, 2.0, 5.0] {
        let spec = well.clone().with_coupling(g)?;
        let bound = compute_bound(&spec, &grid, &KernelSettings::default())?;
        let count = fd_negative_count(&spec, 1.0, &FdSettings { half_width: 1.5 * l, n: 96, tol_e: None, eigenvalues: false })?;
        println!("{g:>6} {:>10.4} {:>10.4} {:>8}", bound.n_i_bound, bound.n_total_bound, count.count);
    }
    Ok(())
}
