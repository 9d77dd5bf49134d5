//! Grid pair quadrature for `ln` / `ln²` kernels and adaptive 1D radial quadrature.
//!
//! Double sums `Σ_ij A_i B_j w² k(|x_i - x_j|)` use the midpoint value of the
//! kernel off the diagonal. On the diagonal the kernel is replaced by its mean
//! over the disk of the same area as a cell, radius `ρ = h/√π`:
//!
//! ```text
//! <ln(k0 r)>   = ln(k0 ρ) - 1/2
//! <ln²(k0 r)>  = ln²(k0 ρ) - ln(k0 ρ) + 1/2
//! ```
//!
//! Both are polynomials in `ln k0` with the same structure as the off-diagonal
//! entries, so every `k0`-shift identity holds exactly on the discretization.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::conditions::{ln_minus, ln_plus};
use crate::error::{config_err, Error, Result};
use crate::potential::SampledField;

/// Neumaier-compensated sum, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Diagonal rule for one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRule {
    pub h: f64,
    pub k0: f64,
    /// Mean of `ln(k0 r)` over the equal-area disk.
    pub diag_ln: f64,
    /// Mean of `ln²(k0 r)` over the equal-area disk.
    pub diag_lnsq: f64,
}

impl CellRule {
    /// Radius of the disk with the area of one cell.
    pub fn disk_radius(&self) -> f64 {
        self.h / PI.sqrt()
    }
}

pub fn cell_log_averages(h: f64, k0: f64) -> CellRule {
    let l = (k0 * h / PI.sqrt()).ln();
    CellRule { h, k0, diag_ln: l - 0.5, diag_lnsq: l * l - l + 0.5 }
}

/// Mean of `(ln⁺ r)²` over the disk of radius `rho`.
pub fn disk_mean_ln_plus_sq(rho: f64) -> f64 {
    if rho <= 1.0 {
        return 0.0;
    }
    // ∫ 2r ln²r dr = r² ln²r - r² ln r + r²/2
    let l = rho.ln();
    let r2 = rho * rho;
    (r2 * (l * l - l + 0.5) - 0.5) / r2
}

/// Mean of `(ln⁻ r)²` over the disk of radius `rho`.
pub fn disk_mean_ln_minus_sq(rho: f64) -> f64 {
    if rho <= 1.0 {
        let l = rho.ln();
        l * l - l + 0.5
    } else {
        0.5 / (rho * rho)
    }
}

/// Generic pair quadrature `Σ_ij A_i B_j w² k(|x_i - x_j|)` with `diag` standing
/// in for the kernel on `i == j`.
///
/// The kernel only depends on the lattice offset, so it is tabulated once.
/// Rows are reduced in parallel into per-row partial sums which are then
/// combined in index order; the result does not depend on the thread count.
pub fn pair_sum<K>(a: &SampledField, b: &SampledField, kernel: K, diag: f64) -> Result<f64>
where
    K: Fn(f64) -> f64 + Sync,
{
    if a.grid() != b.grid() {
        return config_err("pair quadrature needs both fields on the same grid");
    }
    // fixed argument order makes the result bitwise symmetric
    let (a, b) = if a.values().iter().zip(b.values()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne())
        == Some(std::cmp::Ordering::Greater)
    {
        (b, a)
    } else {
        (a, b)
    };
    let grid = *a.grid();
    let n = grid.n();
    let h = grid.spacing();
    let w = grid.weight();
    let span = 2 * n - 1;
    let table: Vec<f64> = (0..span * span)
        .into_par_iter()
        .map(|t| {
            let dx = (t % span) as f64 - (n as f64 - 1.0);
            let dy = (t / span) as f64 - (n as f64 - 1.0);
            if dx == 0.0 && dy == 0.0 {
                diag
            } else {
                kernel(h * dx.hypot(dy))
            }
        })
        .collect();

    let av = a.values();
    let bv = b.values();
    let b_rows: Vec<usize> =
        (0..n).filter(|&iy| bv[iy * n..(iy + 1) * n].iter().any(|v| *v != 0.0)).collect();

    let partial: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let ai = av[i];
            if ai == 0.0 {
                return 0.0;
            }
            let (ix, iy) = (i % n, i / n);
            let mut acc = 0.0;
            for &jy in &b_rows {
                let dy = jy + n - 1 - iy;
                let trow = &table[dy * span..(dy + 1) * span];
                let brow = &bv[jy * n..(jy + 1) * n];
                // offset index for jx is jx + n - 1 - ix
                let tslice = &trow[n - 1 - ix..n - 1 - ix + n];
                acc += brow.iter().zip(tslice).map(|(bj, k)| bj * k).sum::<f64>();
            }
            ai * acc
        })
        .collect();
    let total = w * w * compensated_sum(partial);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonFinite("pair quadrature".into()))
    }
}

/// `Σ_ij A_i B_j w² ln²(k0|x_i - x_j|)` with the disk-mean diagonal.
pub fn pair_integral_logsq(a: &SampledField, b: &SampledField, k0: f64) -> Result<f64> {
    check_k0(k0)?;
    let rule = cell_log_averages(a.grid().spacing(), k0);
    pair_sum(a, b, |r| (k0 * r).ln().powi(2), rule.diag_lnsq)
}

/// `Σ_ij A_i B_j w² ln(k0|x_i - x_j|)` with the disk-mean diagonal.
pub fn pair_integral_ln(a: &SampledField, b: &SampledField, k0: f64) -> Result<f64> {
    check_k0(k0)?;
    let rule = cell_log_averages(a.grid().spacing(), k0);
    pair_sum(a, b, |r| (k0 * r).ln(), rule.diag_ln)
}

/// Pair quadrature with kernel `(ln⁺|x - y|)²`.
pub fn pair_integral_ln_plus_sq(a: &SampledField, b: &SampledField) -> Result<f64> {
    let rho = a.grid().spacing() / PI.sqrt();
    pair_sum(a, b, |r| ln_plus(r).powi(2), disk_mean_ln_plus_sq(rho))
}

/// Pair quadrature with kernel `(ln⁻|x - y|)²`.
pub fn pair_integral_ln_minus_sq(a: &SampledField, b: &SampledField) -> Result<f64> {
    let rho = a.grid().spacing() / PI.sqrt();
    pair_sum(a, b, |r| ln_minus(r).powi(2), disk_mean_ln_minus_sq(rho))
}

fn check_k0(k0: f64) -> Result<()> {
    if k0.is_finite() && k0 > 0.0 {
        Ok(())
    } else {
        config_err(format!("scale k0 must be > 0, got {k0}"))
    }
}

/// Radial weights for [`radial_integral`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialWeight {
    One,
    /// `ln⁻ r`
    LnMinus,
    /// `(ln⁺ r)²`
    LnPlusSq,
    /// `(ln(2 + r))²`
    LogTwoPlusSq,
}

impl RadialWeight {
    pub fn apply(self, r: f64) -> f64 {
        match self {
            RadialWeight::One => 1.0,
            RadialWeight::LnMinus => ln_minus(r),
            RadialWeight::LnPlusSq => ln_plus(r).powi(2),
            RadialWeight::LogTwoPlusSq => (2.0 + r).ln().powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    /// False when the panel budget ran out before the tolerance was met.
    pub converged: bool,
}

/// `2π ∫_a^b r f(r) weight(r) dr`, adaptive, relative tolerance `rel_tol`.
pub fn radial_integral<F>(f: F, weight: RadialWeight, a: f64, b: f64, rel_tol: f64) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    let out = adaptive_integrate(|r| r * f(r) * weight.apply(r), a, b, rel_tol, 0.0)?;
    Ok(Integral {
        value: 2.0 * PI * out.value,
        error_estimate: 2.0 * PI * out.error_estimate,
        converged: out.converged,
    })
}

// Gauss-Kronrod 7/15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = hl * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        finite &= f1.is_finite() && f2.is_finite();
        kron += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !finite {
        return Err(Error::NonFinite(format!("integrand on [{a}, {b}]")));
    }
    Ok(Panel { a, b, value: kron * hl, err: ((kron - gauss) * hl).abs() })
}

/// Adaptive Gauss-Kronrod quadrature of `f` on `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the summed
/// estimate is below `max(abs_tol, rel_tol |I|)`. Panels are kept in position
/// order, so the result is reproducible bit for bit.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return config_err(format!("integration range must be finite, got [{a}, {b}]"));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error_estimate: 0.0, converged: true });
    }
    let mut panels = vec![gk15(&f, a, b)?];
    loop {
        let value = compensated_sum(panels.iter().map(|p| p.value));
        let err: f64 = panels.iter().map(|p| p.err).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if err <= target || panels.len() >= MAX_PANELS {
            return Ok(Integral { value, error_estimate: err, converged: err <= target });
        }
        let (idx, worst) = panels
            .iter()
            .enumerate()
            .fold((0, panels[0]), |acc, (i, p)| if p.err > acc.1.err { (i, *p) } else { acc });
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            return Ok(Integral { value, error_estimate: err, converged: false });
        }
        let left = gk15(&f, worst.a, mid)?;
        let right = gk15(&f, mid, worst.b)?;
        panels[idx] = left;
        panels.insert(idx + 1, right);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{sample_negative_part, Grid2D, PotentialSpec};
    use approx::assert_relative_eq;

    #[test]
    fn cell_rule_closed_forms() {
        let h = 0.37;
        let k0 = PI.sqrt() / h;
        let r = cell_log_averages(h, k0);
        assert_relative_eq!(r.diag_ln, -0.5, epsilon = 1e-15);
        assert_relative_eq!(r.diag_lnsq, 0.5, epsilon = 1e-15);

        for &(h, k0) in &[(0.1, 1.0), (0.03, 7.0), (2.0, 0.01)] {
            let r = cell_log_averages(h, k0);
            assert_relative_eq!(r.diag_lnsq - r.diag_ln * r.diag_ln, 0.25, epsilon = 1e-12);
        }
        let r = cell_log_averages(0.1, 1.0);
        assert_relative_eq!(r.diag_ln, (0.1 / PI.sqrt()).ln() - 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cell_means_match_radial_quadrature() {
        for &rho in &[0.05, 0.5, 1.0, 3.0] {
            let mean = |g: &dyn Fn(f64) -> f64| {
                adaptive_integrate(|r| 2.0 * r * g(r), 0.0, rho, 1e-12, 0.0).unwrap().value / (rho * rho)
            };
            assert_relative_eq!(
                mean(&|r: f64| ln_plus(r).powi(2)),
                disk_mean_ln_plus_sq(rho),
                epsilon = 1e-9
            );
            assert_relative_eq!(
                mean(&|r: f64| ln_minus(r).powi(2)),
                disk_mean_ln_minus_sq(rho),
                epsilon = 1e-9
            );
            let r = cell_log_averages(rho * PI.sqrt(), 1.0);
            assert_relative_eq!(mean(&|r: f64| r.ln()), r.diag_ln, epsilon = 1e-9);
            assert_relative_eq!(
                disk_mean_ln_plus_sq(rho) + disk_mean_ln_minus_sq(rho),
                r.diag_lnsq,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn single_cell_pair_is_diagonal() {
        let grid = Grid2D::new(1.0, 8).unwrap();
        let mut v = vec![0.0; grid.len()];
        v[27] = 2.5;
        let f = SampledField::from_values(grid, v).unwrap();
        let w = grid.weight();
        let rule = cell_log_averages(grid.spacing(), 3.0);
        let got = pair_integral_logsq(&f, &f, 3.0).unwrap();
        assert_relative_eq!(got, 2.5 * 2.5 * w * w * rule.diag_lnsq, max_relative = 1e-14);
        assert_eq!(pair_integral_logsq(&SampledField::zeros(grid), &f, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn pair_sum_matches_direct_double_loop() {
        let grid = Grid2D::new(2.0, 12).unwrap();
        let a_spec = PotentialSpec::gaussian_well(1.0, 0.8, [0.3, -0.2]).unwrap();
        let b_spec = PotentialSpec::gaussian_well(2.0, 0.5, [-0.4, 0.1]).unwrap();
        let a = sample_negative_part(&a_spec, &grid).unwrap();
        let b = sample_negative_part(&b_spec, &grid).unwrap();
        let k0 = 1.7;
        let rule = cell_log_averages(grid.spacing(), k0);
        let w = grid.weight();
        let mut direct = 0.0;
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                let (p, q) = (grid.node(i), grid.node(j));
                let k = if i == j { rule.diag_lnsq } else { (k0 * (p[0] - q[0]).hypot(p[1] - q[1])).ln().powi(2) };
                direct += a.values()[i] * b.values()[j] * w * w * k;
            }
        }
        let fast = pair_integral_logsq(&a, &b, k0).unwrap();
        assert_relative_eq!(fast, direct, max_relative = 1e-12);
        let swapped = pair_integral_logsq(&b, &a, k0).unwrap();
        assert_eq!(fast, swapped);
    }

    #[test]
    fn k0_polynomial_identity() {
        let grid = Grid2D::new(3.0, 24).unwrap();
        let a = sample_negative_part(&PotentialSpec::gaussian_well(1.0, 1.0, [0.5, 0.0]).unwrap(), &grid).unwrap();
        let b = sample_negative_part(&PotentialSpec::gaussian_well(3.0, 0.6, [-0.5, 0.2]).unwrap(), &grid).unwrap();
        let base = pair_integral_logsq(&a, &b, 1.0).unwrap();
        let p1 = pair_integral_ln(&a, &b, 1.0).unwrap();
        for &k0 in &[0.1, 0.5, 2.0, 10.0] {
            let lk = f64::ln(k0);
            let lhs = pair_integral_logsq(&a, &b, k0).unwrap() - base;
            let rhs = 2.0 * lk * p1 + lk * lk * a.mass() * b.mass();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn split_kernels_add_up() {
        let grid = Grid2D::new(2.5, 20).unwrap();
        let a = sample_negative_part(&PotentialSpec::circular_well(1.0, 1.0).unwrap(), &grid).unwrap();
        let whole = pair_integral_logsq(&a, &a, 1.0).unwrap();
        let plus = pair_integral_ln_plus_sq(&a, &a).unwrap();
        let minus = pair_integral_ln_minus_sq(&a, &a).unwrap();
        assert_relative_eq!(whole, plus + minus, max_relative = 1e-12);
    }

    #[test]
    fn radial_closed_forms() {
        let one = radial_integral(|_| 1.0, RadialWeight::One, 0.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(one.value, PI, max_relative = 1e-12);
        let lm = radial_integral(|_| 1.0, RadialWeight::LnMinus, 0.0, 1.0, 1e-10).unwrap();
        assert_relative_eq!(lm.value, PI / 2.0, max_relative = 1e-9);
        assert!(lm.converged);
    }

    #[test]
    fn non_finite_integrand_is_flagged() {
        let out = radial_integral(|r| 1.0 / (r - 0.5), RadialWeight::One, 0.0, 1.0, 1e-8);
        // the midpoint of [0, 1] is sampled exactly
        assert!(matches!(out, Err(Error::NonFinite(_))));
    }
}
