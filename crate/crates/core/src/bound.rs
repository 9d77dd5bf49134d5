//! The bound-state upper bound and its exactness properties.
//!
//! With `T1 = tr K²`, `T2 = <a|K²|a>`, `T3 = <a|K|a>`:
//!
//! ```text
//! N_I    <  T1 - T2
//! N      <  1 + T1 - 2 T2 + T3²   ( = 1 + tr K'² )
//! ```
//!
//! Both combinations are independent of the scale `k0`; `T1` alone is not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bskernel::{build_a, build_k, AVector, KernelMatrix};
use crate::error::{config_err, Error, Result};
use crate::potential::{epsilon_regularize, integral_of_potential, sample_negative_part, Grid2D, PotentialSpec, SampledField};
use crate::quadrature::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `tr K²`
    pub t1: f64,
    /// `<a|K²|a> = ‖K a‖²`
    pub t2: f64,
    /// `<a|K|a>`
    pub t3: f64,
}

impl BoundTerms {
    /// `T1 - 2 T2 + T3²`, the `k0`-invariant trace `tr K'²`.
    pub fn deflated_trace(&self) -> f64 {
        self.t1 - 2.0 * self.t2 + self.t3 * self.t3
    }

    /// `T1 - T2`.
    pub fn type_one(&self) -> f64 {
        self.t1 - self.t2
    }

    /// Terms for the potential `g V` given terms for `V`.
    pub fn rescaled(&self, g: f64) -> Self {
        Self { t1: g * g * self.t1, t2: g * g * self.t2, t3: g * self.t3 }
    }
}

pub fn bound_terms(k: &KernelMatrix, a: &AVector) -> Result<BoundTerms> {
    if a.a.len() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), found: a.a.len() });
    }
    let b = k.entries() * &a.a;
    let t1 = k.frobenius_sq();
    let t2 = compensated_sum(b.iter().map(|x| x * x));
    let t3 = compensated_sum(a.a.iter().zip(b.iter()).map(|(x, y)| x * y));
    let terms = BoundTerms { t1, t2, t3 };
    if [t1, t2, t3].iter().all(|x| x.is_finite()) {
        Ok(terms)
    } else {
        Err(Error::NonFinite(format!("bound terms {terms:?}")))
    }
}

/// Grid and regularization metadata carried by a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundMeta {
    pub k0: f64,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub eps: f64,
    pub mu: f64,
    pub int_v: f64,
    pub int_vminus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    #[serde(rename = "T3")]
    pub t3: f64,
    #[serde(rename = "N_I_bound")]
    pub n_i_bound: f64,
    #[serde(rename = "N_total_bound")]
    pub n_total_bound: f64,
    pub k0: f64,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub eps: f64,
    pub mu: f64,
    pub g: f64,
    #[serde(rename = "int_V")]
    pub int_v: f64,
    #[serde(rename = "int_Vminus")]
    pub int_vminus: f64,
    /// `∫ V < 0`: the weakly bound state the `+1` accounts for is guaranteed.
    pub attractive: bool,
    /// `min over k0 of 1 + g² T1(k0)`, the scale-dependent bound without the deflation terms.
    pub truncated_bound_min: f64,
    pub truncated_bound_k0: f64,
}

/// Assembles the report for coupling `g` from unit-coupling terms.
///
/// `meta.int_v` and `meta.int_vminus` must already include the coupling.
pub fn assemble_bounds(unit_terms: BoundTerms, norm_sq_s: f64, g: f64, meta: BoundMeta) -> BoundReport {
    let t = unit_terms.rescaled(g);
    let (k0_min, t1_min) = minimize_truncated_scale(unit_terms, norm_sq_s, meta.k0);
    BoundReport {
        t1: t.t1,
        t2: t.t2,
        t3: t.t3,
        n_i_bound: t.type_one(),
        n_total_bound: 1.0 + t.deflated_trace(),
        k0: meta.k0,
        n: meta.n,
        half_width: meta.half_width,
        eps: meta.eps,
        mu: meta.mu,
        g,
        int_v: meta.int_v,
        int_vminus: meta.int_vminus,
        attractive: meta.int_v < 0.0,
        truncated_bound_min: 1.0 + g * g * t1_min,
        truncated_bound_k0: k0_min,
    }
}

/// `T1` at scale `k0` from terms computed at `k0_ref`, via the exact shift
/// `K(k0) = K(k0_ref) - (ln(k0/k0_ref)/2π) s sᵀ`.
pub fn t1_at_scale(terms: BoundTerms, norm_sq_s: f64, k0_ref: f64, k0: f64) -> f64 {
    let c = (k0 / k0_ref).ln() / (2.0 * PI);
    terms.t1 - 2.0 * c * norm_sq_s * terms.t3 + c * c * norm_sq_s * norm_sq_s
}

/// Golden-section minimization of `T1(k0)` over `ln k0`; returns `(k0, T1_min)`.
pub fn minimize_truncated_scale(terms: BoundTerms, norm_sq_s: f64, k0_ref: f64) -> (f64, f64) {
    if norm_sq_s == 0.0 {
        return (k0_ref, terms.t1);
    }
    let f = |lk: f64| t1_at_scale(terms, norm_sq_s, k0_ref, lk.exp());
    // the minimizer sits at ln k0 = ln k0_ref + 2π T3 / ‖s‖²; bracket generously around k0_ref
    let centre = k0_ref.ln();
    let span = 2.0 * PI * terms.t3.abs() / norm_sq_s + 50.0;
    let (mut lo, mut hi) = (centre - span, centre + span);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo < 1e-12 * (1.0 + centre.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x.exp(), f(x))
}

/// Discretization and regularization settings for a bound computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSettings {
    pub k0: f64,
    /// `None`: `1e-10 * max V⁻`. `Some(0.0)` disables the floor.
    #[serde(default)]
    pub eps: Option<f64>,
    /// `None`: `1 / L`.
    #[serde(default)]
    pub mu: Option<f64>,
}

impl Default for KernelSettings {
    fn default() -> Self {
        Self { k0: 1.0, eps: None, mu: None }
    }
}

/// Unit-coupling `V⁻` of `spec`, regularized per `settings`; returns the field and `(eps, mu)`.
pub fn prepared_field(spec: &PotentialSpec, grid: &Grid2D, settings: &KernelSettings) -> Result<(SampledField, f64, f64)> {
    let unit = spec.clone().with_coupling(1.0)?;
    let raw = sample_negative_part(&unit, grid)?;
    let mu = settings.mu.unwrap_or(1.0 / grid.half_width());
    let eps = settings.eps.unwrap_or(1e-10 * raw.max_value());
    if eps > 0.0 {
        Ok((epsilon_regularize(&raw, eps, mu)?, eps, mu))
    } else if eps == 0.0 {
        Ok((raw, 0.0, mu))
    } else {
        config_err(format!("eps must be >= 0, got {eps}"))
    }
}

/// Full pipeline: sample, regularize, build `K` and `a`, assemble the report.
pub fn compute_bound(spec: &PotentialSpec, grid: &Grid2D, settings: &KernelSettings) -> Result<BoundReport> {
    let g = spec.coupling();
    let (field, eps, mu) = prepared_field(spec, grid, settings)?;
    let int_v = integral_of_potential(spec, grid)?;
    let int_vminus = g * sample_negative_part(&spec.clone().with_coupling(1.0)?, grid)?.mass();
    if field.max_value() == 0.0 {
        // V⁻ ≡ 0: K vanishes and only the evanescent unit remains
        let meta = BoundMeta { k0: settings.k0, n: grid.n(), half_width: grid.half_width(), eps, mu, int_v, int_vminus };
        return Ok(assemble_bounds(BoundTerms { t1: 0.0, t2: 0.0, t3: 0.0 }, 0.0, g, meta));
    }
    let k = build_k(&field, settings.k0)?;
    let a = build_a(&field)?;
    let terms = bound_terms(&k, &a)?;
    let meta = BoundMeta { k0: settings.k0, n: grid.n(), half_width: grid.half_width(), eps, mu, int_v, int_vminus };
    Ok(assemble_bounds(terms, a.norm_sq_s, g, meta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K0ScanRow {
    pub k0: f64,
    pub terms: BoundTerms,
    pub deflated_trace: f64,
    pub type_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct K0Scan {
    pub rows: Vec<K0ScanRow>,
    /// Max relative deviation of `T1 - 2T2 + T3²` across the scan.
    pub max_rel_deviation: f64,
    /// Same for `T1 - T2`.
    pub type_one_max_rel_deviation: f64,
    /// Relative spread of `T1` alone (not invariant).
    pub t1_rel_spread: f64,
}

fn max_rel_dev(values: &[f64]) -> f64 {
    let r = values[0];
    values.iter().map(|v| ((v - r) / r).abs()).fold(0.0, f64::max)
}

/// Rebuilds `K` for every scale on the same field.
pub fn k0_invariance_scan(field: &SampledField, k0_list: &[f64]) -> Result<K0Scan> {
    if k0_list.len() < 3 {
        return config_err("k0 scan needs at least 3 scales");
    }
    let (lo, hi) = k0_list.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    if !(lo > 0.0 && hi / lo >= 100.0 * (1.0 - 1e-12)) {
        return config_err("k0 scan must span at least two decades");
    }
    let a = build_a(field)?;
    let rows = k0_list
        .iter()
        .map(|&k0| {
            let k = build_k(field, k0)?;
            let terms = bound_terms(&k, &a)?;
            Ok(K0ScanRow { k0, terms, deflated_trace: terms.deflated_trace(), type_one: terms.type_one() })
        })
        .collect::<Result<Vec<_>>>()?;
    let combo: Vec<f64> = rows.iter().map(|r| r.deflated_trace).collect();
    let one: Vec<f64> = rows.iter().map(|r| r.type_one).collect();
    let t1: Vec<f64> = rows.iter().map(|r| r.terms.t1).collect();
    Ok(K0Scan {
        max_rel_deviation: max_rel_dev(&combo),
        type_one_max_rel_deviation: max_rel_dev(&one),
        t1_rel_spread: max_rel_dev(&t1),
        rows,
    })
}

/// `N_I` from its scale-free triple-sum form
/// `(1/(4π² ∫V⁻)) ∭ V⁻V⁻V⁻ [L(x,y)² - L(x,z) L(y,z)]`, with `L` the kernel
/// logarithm including the cell-diagonal rule. Cost is `O(M³)`; small grids only.
pub fn type_one_triple_sum(field: &SampledField, k0: f64) -> Result<f64> {
    let k = build_k(field, k0)?;
    let m = k.dim();
    let s = k.s();
    // L_ij = K_ij / (-(1/2π) s_i s_j)
    let lmat: Vec<f64> = (0..m * m)
        .map(|t| {
            let (i, j) = (t / m, t % m);
            k.entries()[(i, j)] * (-2.0 * PI) / (s[i] * s[j])
        })
        .collect();
    let wv: Vec<f64> = s.iter().map(|x| x * x).collect();
    let mass: f64 = compensated_sum(wv.iter().copied());
    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|z| {
            let mut acc = Vec::with_capacity(m);
            for x in 0..m {
                let lxz = lmat[x * m + z];
                let mut row = 0.0;
                for y in 0..m {
                    let lxy = lmat[x * m + y];
                    row += wv[y] * (lxy * lxy - lxz * lmat[y * m + z]);
                }
                acc.push(wv[x] * row);
            }
            wv[z] * compensated_sum(acc)
        })
        .collect();
    Ok(compensated_sum(partial) / (4.0 * PI * PI * mass))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GScalingReport {
    pub g: Vec<f64>,
    pub n_total_bound: Vec<f64>,
    /// `(N(g) - 1) / g²` for `g > 0`.
    pub normalized: Vec<f64>,
    pub max_rel_spread: f64,
}

/// Assembles the bound across couplings and measures the spread of `(N - 1)/g²`.
pub fn g_scaling_check(unit_terms: BoundTerms, g_list: &[f64]) -> Result<GScalingReport> {
    if g_list.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return config_err("couplings must be finite and >= 0");
    }
    let n: Vec<f64> = g_list.iter().map(|&g| 1.0 + unit_terms.rescaled(g).deflated_trace()).collect();
    let normalized: Vec<f64> =
        g_list.iter().zip(&n).filter(|(g, _)| **g > 0.0).map(|(g, n)| (n - 1.0) / (g * g)).collect();
    let max_rel_spread = if normalized.is_empty() { 0.0 } else { max_rel_dev(&normalized) };
    Ok(GScalingReport { g: g_list.to_vec(), n_total_bound: n, normalized, max_rel_spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bskernel::build_kprime;
    use crate::quadrature::pair_integral_logsq;
    use approx::assert_relative_eq;

    fn field(spec: &PotentialSpec, n: usize) -> SampledField {
        let grid = Grid2D::new(spec.default_half_width().unwrap(), n).unwrap();
        prepared_field(spec, &grid, &KernelSettings::default()).unwrap().0
    }

    fn meta() -> BoundMeta {
        BoundMeta { k0: 1.0, n: 16, half_width: 1.0, eps: 0.0, mu: 1.0, int_v: -1.0, int_vminus: 1.0 }
    }

    #[test]
    fn zero_terms_give_one() {
        let r = assemble_bounds(BoundTerms { t1: 0.0, t2: 0.0, t3: 0.0 }, 0.0, 1.0, meta());
        assert_eq!(r.n_total_bound, 1.0);
    }

    #[test]
    fn rank_one_kernel_contributes_nothing() {
        let grid = Grid2D::new(1.0, 8).unwrap();
        let vals: Vec<f64> = (0..grid.len()).map(|i| 0.5 + (i % 3) as f64).collect();
        let f = SampledField::from_values(grid, vals).unwrap();
        let k = build_k(&f, 1.0).unwrap();
        let s = k.s().clone();
        let sigma = s.norm_squared();
        let k = k.with_entries(&s * s.transpose()).unwrap();
        let a = build_a(&f).unwrap();
        assert!(build_kprime(&k, &a).unwrap().entries().amax() < 1e-12 * sigma);
        let t = bound_terms(&k, &a).unwrap();
        assert_relative_eq!(t.t1, sigma * sigma, max_relative = 1e-12);
        assert_relative_eq!(t.t2, sigma * sigma, max_relative = 1e-12);
        assert_relative_eq!(t.t3, sigma, max_relative = 1e-12);
        let r = assemble_bounds(t, sigma, 1.0, meta());
        assert_relative_eq!(r.n_total_bound, 1.0, epsilon = 1e-10);
        let sub = BoundTerms { t1: 7.0, t2: 4.0, t3: 2.0 };
        assert_relative_eq!(assemble_bounds(sub, 1.0, 1.0, meta()).n_total_bound, 1.0 + 7.0 - 4.0);
    }

    #[test]
    fn t1_matches_pair_quadrature() {
        let spec = PotentialSpec::gaussian_well(5.0, 1.0, [0.0, 0.0]).unwrap();
        let grid = Grid2D::new(4.0, 32).unwrap();
        let f = sample_negative_part(&spec, &grid).unwrap();
        let k = build_k(&f, 1.0).unwrap();
        let a = build_a(&f).unwrap();
        let t = bound_terms(&k, &a).unwrap();
        // trK² uses diag_ln² on the diagonal, the pair rule uses the disk mean of ln²;
        // they differ by the variance 1/4 on each diagonal cell
        let w = grid.weight();
        let diag_var: f64 = f.values().iter().map(|v| v * v * w * w * 0.25).sum();
        let pair = pair_integral_logsq(&f, &f, 1.0).unwrap();
        assert_relative_eq!(t.t1, (pair - diag_var) / (4.0 * PI * PI), max_relative = 1e-10);
    }

    #[test]
    fn triple_sum_matches_matrix_route() {
        let spec = PotentialSpec::gaussian_well(3.0, 0.8, [0.2, -0.1]).unwrap();
        let f = field(&spec, 12);
        for &k0 in &[0.3, 1.0, 4.0] {
            let k = build_k(&f, k0).unwrap();
            let a = build_a(&f).unwrap();
            let t = bound_terms(&k, &a).unwrap();
            assert_relative_eq!(type_one_triple_sum(&f, k0).unwrap(), t.type_one(), max_relative = 1e-9);
        }
    }

    #[test]
    fn golden_section_matches_closed_form() {
        let spec = PotentialSpec::gaussian_well(2.0, 1.0, [0.0, 0.0]).unwrap();
        let f = field(&spec, 16);
        let k = build_k(&f, 1.0).unwrap();
        let a = build_a(&f).unwrap();
        let t = bound_terms(&k, &a).unwrap();
        let (k0, t1min) = minimize_truncated_scale(t, a.norm_sq_s, 1.0);
        // quadratic in ln k0 with minimum T1 - T3²
        assert_relative_eq!(t1min, t.t1 - t.t3 * t.t3, max_relative = 1e-9);
        assert_relative_eq!(k0.ln(), 2.0 * PI * t.t3 / a.norm_sq_s, max_relative = 1e-5);
        let kk = build_k(&f, k0).unwrap();
        let direct = bound_terms(&kk, &a).unwrap().t1;
        assert_relative_eq!(direct, t1min, max_relative = 1e-8);
    }

    #[test]
    fn scan_preconditions() {
        let spec = PotentialSpec::gaussian_well(2.0, 1.0, [0.0, 0.0]).unwrap();
        let f = field(&spec, 12);
        assert!(k0_invariance_scan(&f, &[1.0, 2.0]).is_err());
        assert!(k0_invariance_scan(&f, &[1.0, 2.0, 5.0]).is_err());
        let scan = k0_invariance_scan(&f, &[0.1, 1.0, 10.0]).unwrap();
        assert!(scan.max_rel_deviation <= 1e-10);
        assert!(scan.type_one_max_rel_deviation <= 1e-10);
        assert!(scan.t1_rel_spread > 1e-3);
    }

    #[test]
    fn coupling_rescale() {
        let t = BoundTerms { t1: 3.0, t2: 1.5, t3: 0.7 };
        let rep = g_scaling_check(t, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(rep.n_total_bound[0], 1.0);
        assert_relative_eq!(rep.n_total_bound[2] - 1.0, 4.0 * (rep.n_total_bound[1] - 1.0), max_relative = 1e-12);
        assert!(rep.max_rel_spread <= 1e-12);
    }

    #[test]
    fn zero_potential_bound_is_one() {
        let spec = PotentialSpec::sum_of_terms(vec![crate::potential::Term::Constant { amplitude: 0.0 }]).unwrap();
        let grid = Grid2D::new(2.0, 16).unwrap();
        let r = compute_bound(&spec, &grid, &KernelSettings::default()).unwrap();
        assert_eq!(r.n_total_bound, 1.0);
        assert!(!r.attractive);
    }

    #[test]
    fn report_json_field_names() {
        let r = assemble_bounds(BoundTerms { t1: 1.0, t2: 0.5, t3: 0.1 }, 1.0, 1.0, meta());
        let v = serde_json::to_value(&r).unwrap();
        for key in ["T1", "T2", "T3", "N_I_bound", "N_total_bound", "k0", "n", "L", "eps", "mu", "g", "int_V", "int_Vminus"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
