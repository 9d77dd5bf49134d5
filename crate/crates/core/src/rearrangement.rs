//! Circular decreasing rearrangement of a sampled `V⁻`.
//!
//! The cell values are sorted in decreasing order and the `k`-th largest value
//! is placed on the annulus `r_{k-1} < |x| <= r_k` with `π r_k² = k h²`. Every
//! annulus has the area of one cell, so the rearranged profile carries exactly
//! the same multiset of values as the field and the level-set measures agree
//! exactly. Ties are broken by node index.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{config_err, Error, Result};
use crate::potential::{Grid2D, SampledField};
use crate::quadrature::{compensated_sum, disk_mean_ln_minus_sq, pair_sum};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    annulus_area: f64,
}

impl RadialProfile {
    /// Outer radius of each annulus, ascending.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Rearranged value on each annulus, non-increasing.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn annulus_area(&self) -> f64 {
        self.annulus_area
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Step-function value at radius `r` (zero beyond the last annulus).
    pub fn value_at(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|&rk| rk < r);
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// `μ(V_R > level)`.
    pub fn measure_above(&self, level: f64) -> f64 {
        self.values.partition_point(|&v| v > level) as f64 * self.annulus_area
    }

    /// `∫ V_R d²x`.
    pub fn mass(&self) -> f64 {
        self.annulus_area * compensated_sum(self.values.iter().copied())
    }

    /// `Σ_k V_R(k) (G(r_k) - G(r_{k-1}))` for a cumulative disk integral
    /// `G(r) = ∫_{|x|<r} φ(|x|) d²x`.
    pub fn integrate_with(&self, cumulative: impl Fn(f64) -> f64) -> f64 {
        let mut g_prev = cumulative(0.0);
        compensated_sum(self.radii.iter().zip(&self.values).map(|(&r, &v)| {
            let g = cumulative(r);
            let piece = v * (g - g_prev);
            g_prev = g;
            piece
        }))
    }

    /// Places the sorted values on the nodes of `grid` in order of increasing
    /// distance from the origin (ties by node index): the lattice version of
    /// `V_R(|x|)`.
    pub fn to_lattice_field(&self, grid: &Grid2D) -> Result<SampledField> {
        if grid.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), found: grid.len() });
        }
        let order = nodes_by_distance(grid);
        let mut out = vec![0.0; grid.len()];
        for (slot, value) in order.into_iter().zip(&self.values) {
            out[slot] = *value;
        }
        SampledField::from_values(*grid, out)
    }

    /// CSV with columns `r_outer,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r_outer,value\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(s, "{r:?},{v:?}");
        }
        s
    }
}

fn nodes_by_distance(grid: &Grid2D) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..grid.len()).collect();
    let r2 = |i: usize| {
        let p = grid.node(i);
        p[0] * p[0] + p[1] * p[1]
    };
    idx.sort_by(|&a, &b| r2(a).total_cmp(&r2(b)).then(a.cmp(&b)));
    idx
}

/// Sorts the cell values in decreasing order onto equal-area annuli.
pub fn rearrange(field: &SampledField) -> RadialProfile {
    let v = field.values();
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let area = field.grid().weight();
    let radii = (1..=v.len()).map(|k| (k as f64 * area / PI).sqrt()).collect();
    let values = idx.into_iter().map(|i| v[i]).collect();
    RadialProfile { radii, values, annulus_area: area }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelMismatch {
    pub level: f64,
    /// `μ(V⁻ > level)` by cell counting.
    pub field_measure: f64,
    /// `μ(V_R > level)` by annulus counting.
    pub profile_measure: f64,
    /// Difference in number of cells; zero for an exact rearrangement.
    pub mismatch_cells: i64,
}

/// Compares level-set measures of the field and its rearrangement.
pub fn equimeasure_check(
    field: &SampledField,
    profile: &RadialProfile,
    levels: &[f64],
) -> Result<Vec<LevelMismatch>> {
    if field.values().len() != profile.len() {
        return Err(Error::DimensionMismatch { expected: field.values().len(), found: profile.len() });
    }
    let w = field.grid().weight();
    Ok(levels
        .iter()
        .map(|&level| {
            let nf = field.values().iter().filter(|&&v| v > level).count() as i64;
            let np = profile.values().partition_point(|&v| v > level) as i64;
            LevelMismatch {
                level,
                field_measure: nf as f64 * w,
                profile_measure: np as f64 * profile.annulus_area(),
                mismatch_cells: nf - np,
            }
        })
        .collect())
}

/// A non-negative, non-increasing function of `|x - y|`.
#[derive(Clone)]
pub enum DecreasingKernel {
    /// `(ln⁻ r)²`
    LnMinusSq,
    /// `1` for `r < radius`, else `0`.
    Indicator { radius: f64 },
    /// `exp(-r²/width²)`
    Gaussian { width: f64 },
    /// Arbitrary kernel with an explicit cell-diagonal value; monotonicity is
    /// checked on the lattice distances before use.
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, diag: f64 },
}

impl std::fmt::Debug for DecreasingKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::LnMinusSq => write!(f, "LnMinusSq"),
            Self::Indicator { radius } => write!(f, "Indicator({radius})"),
            Self::Gaussian { width } => write!(f, "Gaussian({width})"),
            Self::Custom { diag, .. } => write!(f, "Custom(diag={diag})"),
        }
    }
}

impl DecreasingKernel {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::LnMinusSq => crate::conditions::ln_minus(r).powi(2),
            Self::Indicator { radius } => f64::from(u8::from(r < *radius)),
            Self::Gaussian { width } => (-(r / width).powi(2)).exp(),
            Self::Custom { f, .. } => f(r),
        }
    }

    /// Kernel value used on the diagonal: its mean over the equal-area disk.
    pub fn diag(&self, h: f64) -> f64 {
        let rho = h / PI.sqrt();
        match self {
            Self::LnMinusSq => disk_mean_ln_minus_sq(rho),
            Self::Indicator { radius } => (radius * radius / (rho * rho)).min(1.0),
            Self::Gaussian { width } => {
                let t = (rho / width).powi(2);
                (1.0 - (-t).exp()) / t
            }
            Self::Custom { diag, .. } => *diag,
        }
    }

    fn check_on(&self, grid: &Grid2D) -> Result<()> {
        let n = grid.n() as i64;
        let h = grid.spacing();
        let mut dists: Vec<f64> = (0..n)
            .flat_map(|dy| (0..n).map(move |dx| h * ((dx * dx + dy * dy) as f64).sqrt()))
            .filter(|r| *r > 0.0)
            .collect();
        dists.sort_by(f64::total_cmp);
        let mut prev = self.diag(h);
        if !(prev.is_finite() && prev >= 0.0) {
            return config_err("kernel diagonal must be finite and >= 0");
        }
        for r in dists {
            let v = self.eval(r);
            if !(v.is_finite() && v >= 0.0) {
                return config_err(format!("kernel must be finite and >= 0, got {v} at r = {r}"));
            }
            if v > prev * (1.0 + 1e-12) + 1e-300 {
                return config_err(format!("kernel is not non-increasing near r = {r}"));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Both sides of `∬ A(x) B(|x-y|) C(y) <= ∬ A_R(|x|) B(|x-y|) C_R(|y|)` by
/// grid pair quadrature. Returns `(lhs, rhs)`.
pub fn luttinger_check(a: &SampledField, kernel: &DecreasingKernel, c: &SampledField) -> Result<(f64, f64)> {
    if a.grid() != c.grid() {
        return config_err("luttinger check needs both fields on the same grid");
    }
    let grid = *a.grid();
    kernel.check_on(&grid)?;
    let diag = kernel.diag(grid.spacing());
    let lhs = pair_sum(a, c, |r| kernel.eval(r), diag)?;
    let a_r = rearrange(a).to_lattice_field(&grid)?;
    let c_r = rearrange(c).to_lattice_field(&grid)?;
    let rhs = pair_sum(&a_r, &c_r, |r| kernel.eval(r), diag)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{sample_negative_part, PotentialSpec};
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Grid2D {
        Grid2D::new(2.0, n).unwrap()
    }

    #[test]
    fn constant_field_profile() {
        let g = grid(16);
        let f = SampledField::from_values(g, vec![3.0; g.len()]).unwrap();
        let p = rearrange(&f);
        assert!(p.values().iter().all(|v| *v == 3.0));
        let outer = *p.radii().last().unwrap();
        assert_relative_eq!(outer, 4.0 / PI.sqrt(), max_relative = 1e-14);
        assert_eq!(p.value_at(outer * 1.01), 0.0);
        assert_eq!(p.value_at(0.0), 3.0);
    }

    #[test]
    fn radial_decreasing_field_is_reproduced() {
        let g = Grid2D::new(4.0, 64).unwrap();
        let f = sample_negative_part(&PotentialSpec::gaussian_well(2.0, 1.0, [0.0, 0.0]).unwrap(), &g).unwrap();
        let p = rearrange(&f);
        let h = g.spacing();
        // the profile at r_k equals V⁻ somewhere within one cell width of r_k,
        // as long as the annulus lies inside the inscribed disk of the square
        for k in (0..p.len()).step_by(97) {
            let r = p.radii()[k];
            if r > g.half_width() - h {
                break;
            }
            let v = p.values()[k];
            let lo = 2.0 * (-((r + h) * (r + h))).exp();
            let hi = 2.0 * (-((r - h).max(0.0).powi(2))).exp();
            assert!(v >= lo - 1e-15 && v <= hi + 1e-15, "k={k} r={r} v={v} [{lo},{hi}]");
        }
        // placing the sorted values back by distance recovers the field up to
        // rounding-level ties between equidistant nodes
        let back = p.to_lattice_field(&g).unwrap();
        let worst = back.values().iter().zip(f.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-15, "{worst}");
    }

    #[test]
    fn two_bumps_merge_into_one_peak() {
        let g = Grid2D::new(4.0, 48).unwrap();
        let spec = PotentialSpec::sum_of_terms(vec![
            crate::potential::Term::Gaussian { amplitude: -1.0, width: 0.5, center: [-1.5, 0.0] },
            crate::potential::Term::Gaussian { amplitude: -1.0, width: 0.5, center: [1.5, 0.0] },
        ])
        .unwrap();
        let f = sample_negative_part(&spec, &g).unwrap();
        let p = rearrange(&f);
        assert!(p.values().windows(2).all(|w| w[0] >= w[1]));
        let rep = equimeasure_check(&f, &p, &[0.5]).unwrap();
        assert_eq!(rep[0].mismatch_cells, 0);
        assert_eq!(rep[0].field_measure, p.measure_above(0.5));
    }

    #[test]
    fn level_extremes() {
        let g = grid(16);
        let vals: Vec<f64> = (0..g.len()).map(|i| if i % 3 == 0 { 0.0 } else { (i % 7) as f64 }).collect();
        let f = SampledField::from_values(g, vals).unwrap();
        let p = rearrange(&f);
        let nz = f.values().iter().filter(|v| **v > 0.0).count() as f64 * g.weight();
        let rep = equimeasure_check(&f, &p, &[100.0, -1e-300, 0.0]).unwrap();
        assert_eq!(rep[0].field_measure, 0.0);
        assert_eq!(rep[0].profile_measure, 0.0);
        assert_eq!(rep[2].field_measure, nz);
        assert_eq!(rep[2].profile_measure, nz);
        assert!(rep.iter().all(|r| r.mismatch_cells == 0));
        let other = rearrange(&SampledField::zeros(grid(8)));
        assert!(equimeasure_check(&f, &other, &[0.0]).is_err());
    }

    #[test]
    fn mass_is_preserved_exactly() {
        let g = grid(20);
        let vals: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 101) as f64 / 13.0).collect();
        let f = SampledField::from_values(g, vals).unwrap();
        let p = rearrange(&f);
        assert_relative_eq!(p.mass(), f.mass(), max_relative = 1e-15);
    }

    #[test]
    fn concentric_case_is_equality() {
        let g = Grid2D::new(3.0, 32).unwrap();
        let a = sample_negative_part(&PotentialSpec::gaussian_well(1.0, 0.9, [0.0, 0.0]).unwrap(), &g).unwrap();
        let c = sample_negative_part(&PotentialSpec::gaussian_well(2.0, 0.6, [0.0, 0.0]).unwrap(), &g).unwrap();
        let (lhs, rhs) = luttinger_check(&a, &DecreasingKernel::LnMinusSq, &c).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn lattice_translate_of_concentric_bump_is_equality() {
        let g = Grid2D::new(3.0, 32).unwrap();
        let h = g.spacing();
        let a = sample_negative_part(&PotentialSpec::gaussian_well(1.0, 0.5, [5.0 * h, -4.0 * h]).unwrap(), &g).unwrap();
        let (lhs, rhs) = luttinger_check(&a, &DecreasingKernel::LnMinusSq, &a).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-8), "{lhs} > {rhs}");
    }

    #[test]
    fn off_lattice_bump_defect_shrinks_with_refinement() {
        // a bump centred between nodes sorts onto a lattice disk centred at a
        // cell corner; the lattice inequality then holds only up to O(h²)
        let defect = |n: usize| {
            let g = Grid2D::new(3.0, n).unwrap();
            let a = sample_negative_part(&PotentialSpec::gaussian_well(1.0, 0.5, [1.0, -0.7]).unwrap(), &g).unwrap();
            let (lhs, rhs) = luttinger_check(&a, &DecreasingKernel::LnMinusSq, &a).unwrap();
            lhs / rhs - 1.0
        };
        let (d32, d64) = (defect(32), defect(64));
        assert!(d32 < 5e-3 && d64 < 0.5 * d32, "{d32} {d64}");
    }

    #[test]
    fn random_fields_satisfy_inequality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = Grid2D::new(2.0, 16).unwrap();
        for _ in 0..5 {
            let mut field = || {
                let v: Vec<f64> = (0..g.len()).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() }).collect();
                SampledField::from_values(g, v).unwrap()
            };
            let (a, c) = (field(), field());
            let (lhs, rhs) = luttinger_check(&a, &DecreasingKernel::Indicator { radius: 0.5 }, &c).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-8));
        }
    }

    #[test]
    fn increasing_kernel_is_rejected() {
        let g = grid(8);
        let f = SampledField::from_values(g, vec![1.0; g.len()]).unwrap();
        let k = DecreasingKernel::Custom { f: Arc::new(|r: f64| r), diag: 0.0 };
        assert!(matches!(luttinger_check(&f, &k, &f), Err(Error::Config(_))));
    }

    #[test]
    fn csv_header() {
        let p = rearrange(&SampledField::zeros(grid(8)));
        let csv = p.to_csv();
        assert!(csv.starts_with("r_outer,value\n"));
        assert_eq!(csv.lines().count(), 65);
    }
}
