//! Coupling-constant trajectories `E_i(g)` of the negative eigenvalues.
//!
//! Each branch is followed from one coupling to the next by maximal
//! eigenvector overlap. Along a branch `dE/dg = <ψ|V|ψ>` (Feynman–Hellmann);
//! the finite-difference slope is compared against that expectation.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::{eigenpairs, fd_hamiltonian, lowest_eigenvalues, shape_on, FdGrid};
use crate::error::{config_err, Result};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    /// Index into the coupling list where the branch first appears below `-tol_E`.
    pub start: usize,
    /// `(g, E)` pairs, ascending in `g`.
    pub points: Vec<(f64, f64)>,
    /// `<ψ|V|ψ>` at each point.
    pub expectations: Vec<f64>,
    pub strictly_decreasing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhCheck {
    pub branch: usize,
    pub g: f64,
    pub finite_difference: f64,
    pub expectation: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub g_values: Vec<f64>,
    pub grid: FdGrid,
    pub tol_e: f64,
    pub branches: Vec<Branch>,
    /// Central-difference slopes at interior points of each branch.
    pub feynman_hellmann: Vec<FhCheck>,
    /// Coupling intervals `(g_j, g_{j+1})` where the best overlap was below 0.9.
    pub ambiguous_intervals: Vec<(f64, f64)>,
    /// Negative eigenvalue count at each coupling.
    pub counts: Vec<usize>,
}

impl TrajectoryReport {
    pub fn all_monotone(&self) -> bool {
        self.branches.iter().all(|b| b.strictly_decreasing)
    }

    pub fn max_fh_rel_err(&self) -> f64 {
        self.feynman_hellmann.iter().map(|c| c.rel_err).fold(0.0, f64::max)
    }

    /// Branches alive (`E < -tol_E`) at coupling index `j`.
    pub fn branches_at(&self, j: usize) -> usize {
        let g = self.g_values[j];
        self.branches.iter().filter(|b| b.points.iter().any(|(gg, _)| *gg == g)).count()
    }

    /// CSV `g,branch_id,E` sorted by branch then coupling.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("g,branch_id,E\n");
        for b in &self.branches {
            for (g, e) in &b.points {
                let _ = writeln!(s, "{g:?},{},{e:?}", b.id);
            }
        }
        s
    }
}

struct Level {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    expectations: Vec<f64>,
}

/// Tracks every negative eigenvalue of `-Δ + g V` on the box grid over `g_list`,
/// with `V` the potential of `spec` including its coupling.
pub fn trajectories(spec: &PotentialSpec, g_list: &[f64], grid: FdGrid, tol_e: Option<f64>) -> Result<TrajectoryReport> {
    if g_list.len() < 4 {
        return config_err("trajectories need at least 4 couplings");
    }
    if g_list.windows(2).any(|w| !(w[1] > w[0])) || g_list[0] < 0.0 {
        return config_err("couplings must be non-negative and strictly ascending");
    }
    let shape = shape_on(spec, &grid)?;
    let tol_e = tol_e.unwrap_or_else(|| grid.default_tol_e());
    let levels: Vec<Level> = g_list
        .par_iter()
        .map(|&g| {
            let h = fd_hamiltonian(&shape, &grid, g);
            let k = h.count_below(-tol_e)?;
            if k == 0 {
                return Ok(Level { values: Vec::new(), vectors: DMatrix::zeros(grid.len(), 0), expectations: Vec::new() });
            }
            let vals = lowest_eigenvalues(&h, k)?;
            let (values, vectors) = eigenpairs(&h, &vals)?;
            let expectations = (0..k)
                .map(|j| vectors.column(j).iter().zip(&shape).map(|(p, v)| p * p * v).sum())
                .collect();
            Ok(Level { values, vectors, expectations })
        })
        .collect::<Result<_>>()?;

    let mut branches: Vec<Branch> = Vec::new();
    // branch id of each eigenvector at the previous coupling
    let mut prev_ids: Vec<usize> = Vec::new();
    let mut ambiguous = Vec::new();
    for (j, level) in levels.iter().enumerate() {
        let k = level.values.len();
        let mut ids = vec![usize::MAX; k];
        if j > 0 && !prev_ids.is_empty() && k > 0 {
            let prev = &levels[j - 1];
            let overlap = prev.vectors.transpose() * &level.vectors;
            let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
            for p in 0..overlap.nrows() {
                for q in 0..overlap.ncols() {
                    pairs.push((overlap[(p, q)].abs(), p, q));
                }
            }
            // greedy by overlap, ties by energy order
            pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used_prev = vec![false; overlap.nrows()];
            let mut weak = false;
            for (o, p, q) in pairs {
                if used_prev[p] || ids[q] != usize::MAX {
                    continue;
                }
                used_prev[p] = true;
                ids[q] = prev_ids[p];
                if o < 0.9 {
                    weak = true;
                }
            }
            if weak {
                ambiguous.push((g_list[j - 1], g_list[j]));
            }
        }
        for (q, id) in ids.iter_mut().enumerate() {
            if *id == usize::MAX {
                *id = branches.len();
                branches.push(Branch {
                    id: *id,
                    start: j,
                    points: Vec::new(),
                    expectations: Vec::new(),
                    strictly_decreasing: true,
                });
            }
            let b = &mut branches[*id];
            b.points.push((g_list[j], level.values[q]));
            b.expectations.push(level.expectations[q]);
        }
        prev_ids = ids;
    }

    let mut fh = Vec::new();
    for b in &mut branches {
        b.points.sort_by(|x, y| x.0.total_cmp(&y.0));
        b.strictly_decreasing = b.points.windows(2).all(|w| w[1].1 < w[0].1);
        for i in 1..b.points.len().saturating_sub(1) {
            let (g0, e0) = b.points[i - 1];
            let (g1, _) = b.points[i];
            let (g2, e2) = b.points[i + 1];
            let fd = (e2 - e0) / (g2 - g0);
            let ex = b.expectations[i];
            fh.push(FhCheck { branch: b.id, g: g1, finite_difference: fd, expectation: ex, rel_err: ((fd - ex) / ex).abs() });
        }
    }
    Ok(TrajectoryReport {
        g_values: g_list.to_vec(),
        grid,
        tol_e,
        branches,
        feynman_hellmann: fh,
        ambiguous_intervals: ambiguous,
        counts: levels.iter().map(|l| l.values.len()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_single_branch() {
        let spec = PotentialSpec::gaussian_well(1.0, 1.0, [0.0, 0.0]).unwrap();
        let g: Vec<f64> = (0..6).map(|i| 1.6 + 0.2 * i as f64).collect();
        let rep = trajectories(&spec, &g, FdGrid::new(5.0, 40).unwrap(), None).unwrap();
        assert!(rep.all_monotone());
        assert_eq!(rep.branches[0].points.len(), 6);
        assert!(rep.max_fh_rel_err() < 0.05, "{}", rep.max_fh_rel_err());
        let csv = rep.to_csv();
        assert!(csv.starts_with("g,branch_id,E\n"));
    }

    #[test]
    fn preconditions() {
        let spec = PotentialSpec::gaussian_well(1.0, 1.0, [0.0, 0.0]).unwrap();
        let grid = FdGrid::new(5.0, 20).unwrap();
        assert!(trajectories(&spec, &[1.0, 2.0, 3.0], grid, None).is_err());
        assert!(trajectories(&spec, &[1.0, 2.0, 2.0, 3.0], grid, None).is_err());
    }
}
