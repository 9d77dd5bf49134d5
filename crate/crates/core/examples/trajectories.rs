//! Coupling-constant trajectories of an asymmetric double well, as CSV on stdout.

use s2b::oracle::{trajectories, FdGrid};
use s2b::potential::{PotentialSpec, Term};

fn main() -> s2b::Result<()> {
    let spec = PotentialSpec::sum_of_terms(vec![
        Term::Gaussian { amplitude: -4.0, width: 0.8, center: [-1.2, 0.0] },
        Term::Gaussian { amplitude: -2.5, width: 0.6, center: [1.0, 0.3] },
    ])?;
    let g: Vec<f64> = (0..12).map(|i| 0.3 + 0.15 * f64::from(i)).collect();
    let rep = trajectories(&spec, &g, FdGrid::new(1.5 * spec.default_half_width()?, 48)?, None)?;
    print!("{}", rep.to_csv());
    eprintln!(
        "{} branches, monotone {}, max Feynman-Hellmann rel err {:.2e}",
        rep.branches.len(),
        rep.all_monotone(),
        rep.max_fh_rel_err()
    );
    Ok(())
}
