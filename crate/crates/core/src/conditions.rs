//! Integrability conditions for `V⁻` and the chain of bounds relating them.
//!
//! * `I   = ∬ V⁻(x) ln²|x-y| V⁻(y)`, split as `I = I₊ + I₋` with the kernels
//!   `(ln⁺)²` and `(ln⁻)²`;
//! * `L1  = ∫ (ln(2+|x|))² V⁻(x)` and `L2 = ∫ V_R(|x|) ln⁻|x|`;
//! * `I₊ <= 4 (∫V⁻) L1` and
//!   `I₋ <= 16π² L2² + 32π² (∫V⁻) L1 + (4π⁴/3) (∫V⁻)²`.
//!
//! The central family `-1/(r² ln²r (ln|ln r|)^γ)` is classified separately from
//! 1D reductions in the variable `u = ln|ln r|`.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{config_err, Error, Result};
use crate::potential::{SampledField, A17_SUPPORT_RADIUS};
use crate::quadrature::{
    adaptive_integrate, compensated_sum, pair_integral_ln_minus_sq, pair_integral_ln_plus_sq,
    pair_integral_logsq,
};
use crate::rearrangement::RadialProfile;

/// `ln⁻ t = -ln t` for `t < 1`, else `0`.
pub fn ln_minus(t: f64) -> f64 {
    if t < 1.0 {
        -t.ln()
    } else {
        0.0
    }
}

/// `ln⁺ t = ln t` for `t >= 1`, else `0`.
pub fn ln_plus(t: f64) -> f64 {
    if t >= 1.0 {
        t.ln()
    } else {
        0.0
    }
}

/// Dilogarithm `Li₂(x) = Σ x^k / k²` for `-1 <= x <= 1`.
pub fn dilog(x: f64) -> f64 {
    assert!((-1.0..=1.0).contains(&x), "dilog argument {x} outside [-1, 1]");
    if x == 1.0 {
        return PI * PI / 6.0;
    }
    if x < 0.0 {
        // Li₂(x) + Li₂(-x) = Li₂(x²)/2
        return 0.5 * dilog(x * x) - dilog(-x);
    }
    if x <= 0.5 {
        dilog_series(x)
    } else {
        // reflection: Li₂(x) + Li₂(1-x) = π²/6 - ln x ln(1-x)
        PI * PI / 6.0 - x.ln() * (1.0 - x).ln() - dilog_series(1.0 - x)
    }
}

fn dilog_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = x;
    let mut k = 1.0f64;
    loop {
        let term = pow / (k * k);
        sum += term;
        if term <= 1e-17 * sum.abs() || pow == 0.0 {
            return sum;
        }
        pow *= x;
        k += 1.0;
    }
}

/// `∫ dθ/2π (ln(rx² + ry² - 2 rx ry cos θ))² = 4 ln²rx + 2 Li₂(ry²/rx²)` for `rx > ry >= 0`.
pub fn angular_log_closed_form(rx: f64, ry: f64) -> Result<f64> {
    if !(rx > ry && ry >= 0.0 && rx.is_finite()) {
        return Err(Error::Domain(format!("angular closed form needs rx > ry >= 0, got ({rx}, {ry})")));
    }
    let l = rx.ln();
    Ok(4.0 * l * l + 2.0 * dilog((ry / rx).powi(2)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionFlags {
    /// Every term was finite.
    pub finite: bool,
    /// Names of terms that overflowed or hit a non-finite sample.
    pub divergent_terms: Vec<String>,
    /// `|I - I₊ - I₋| / I`.
    pub split_residual: f64,
    pub a8_holds: bool,
    pub a14_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "I_plus")]
    pub i_plus: f64,
    #[serde(rename = "I_minus")]
    pub i_minus: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    /// `∫ V⁻ d²x`
    pub mass: f64,
    #[serde(rename = "rhs_A8")]
    pub rhs_a8: f64,
    #[serde(rename = "rhs_A14")]
    pub rhs_a14: f64,
    pub flags: ConditionFlags,
}

/// `L1 = Σ (ln(2+|x_i|))² V⁻(x_i) w`.
pub fn linear_condition_l1(field: &SampledField) -> f64 {
    let g = field.grid();
    g.weight()
        * compensated_sum(field.values().iter().enumerate().map(|(i, v)| {
            let p = g.node(i);
            (2.0 + p[0].hypot(p[1])).ln().powi(2) * v
        }))
}

/// `∫_{|x|<r} ln⁻|x| d²x`.
pub fn ln_minus_disk_integral(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else if r < 1.0 {
        PI * r * r * (0.5 - r.ln())
    } else {
        PI / 2.0
    }
}

/// `L2 = ∫ V_R(|x|) ln⁻|x| d²x`, each annulus integrated exactly.
pub fn linear_condition_l2(profile: &RadialProfile) -> f64 {
    profile.integrate_with(ln_minus_disk_integral)
}

/// Right-hand sides of the `I₊` and `I₋` bounds, `(rhs_A8, rhs_A14)`.
pub fn appendix_bounds(field: &SampledField, profile: &RadialProfile) -> (f64, f64) {
    let mass = field.mass();
    let l1 = linear_condition_l1(field);
    let l2 = linear_condition_l2(profile);
    bounds_from_terms(mass, l1, l2)
}

fn bounds_from_terms(mass: f64, l1: f64, l2: f64) -> (f64, f64) {
    let a8 = 4.0 * mass * l1;
    let a14 = 16.0 * PI * PI * l2 * l2 + 32.0 * PI * PI * mass * l1 + 4.0 * PI.powi(4) / 3.0 * mass * mass;
    (a8, a14)
}

/// Evaluates `I`, `I±`, `L1`, `L2` and the appendix bounds for one field.
pub fn condition_integrals(field: &SampledField, profile: &RadialProfile) -> Result<ConditionReport> {
    if profile.len() != field.values().len() {
        return Err(Error::DimensionMismatch { expected: field.values().len(), found: profile.len() });
    }
    let mut divergent = Vec::new();
    let mut guard = |name: &str, r: Result<f64>| -> Result<f64> {
        match r {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) | Err(Error::NonFinite(_)) => {
                divergent.push(name.to_owned());
                Ok(f64::INFINITY)
            }
            Err(e) => Err(e),
        }
    };
    let i = guard("I", pair_integral_logsq(field, field, 1.0))?;
    let i_plus = guard("I_plus", pair_integral_ln_plus_sq(field, field))?;
    let i_minus = guard("I_minus", pair_integral_ln_minus_sq(field, field))?;
    let mass = guard("mass", Ok(field.mass()))?;
    let l1 = guard("L1", Ok(linear_condition_l1(field)))?;
    let l2 = guard("L2", Ok(linear_condition_l2(profile)))?;
    let (rhs_a8, rhs_a14) = bounds_from_terms(mass, l1, l2);
    let finite = divergent.is_empty();
    let split_residual = if finite && i != 0.0 { ((i - i_plus - i_minus) / i).abs() } else { 0.0 };
    Ok(ConditionReport {
        i,
        i_plus,
        i_minus,
        l1,
        l2,
        mass,
        rhs_a8,
        rhs_a14,
        flags: ConditionFlags {
            finite,
            divergent_terms: divergent,
            split_residual,
            a8_holds: finite && i_plus <= rhs_a8,
            a14_holds: finite && i_minus <= rhs_a14,
        },
    })
}

/// Numerical convergence verdict from a cutoff scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Convergent,
    Divergent,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Convergent => "convergent",
            Verdict::Divergent => "divergent",
        })
    }
}

/// One cutoff of the `a17_family` scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A17ScanRow {
    /// Inner cutoff in `u = ln|ln δ|`.
    pub cutoff_u: f64,
    pub i_partial: f64,
    pub a3_partial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A17Classification {
    pub gamma: f64,
    /// Verdict for `∬ V⁻ ln²|x-y| V⁻`.
    pub i: Verdict,
    /// Verdict for `∫ V_R ln⁻|x|`.
    pub a3: Verdict,
    pub rows: Vec<A17ScanRow>,
    /// Ratios of successive increments over the scan, `I` then `A3`.
    pub i_ratios: Vec<f64>,
    pub a3_ratios: Vec<f64>,
}

impl A17Classification {
    /// CSV `gamma,cutoff_u,I_partial,A3_partial,I_verdict,A3_verdict`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma,cutoff_u,I_partial,A3_partial,I_verdict,A3_verdict\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:?},{:?},{:?},{:?},{},{}",
                self.gamma, r.cutoff_u, r.i_partial, r.a3_partial, self.i, self.a3
            );
        }
        s
    }

    pub fn verdict_line(&self) -> String {
        format!("I: {}, A3: {}", self.i, self.a3)
    }
}

/// Default scan: `u = 25 / 2^k`, `k = 4..0`, i.e. inner radii `exp(-e^u)` down to `exp(-e^25)`.
pub fn default_a17_cutoffs() -> Vec<f64> {
    (0..5).rev().map(|k| 25.0 / f64::from(1u32 << k)).collect()
}

/// Value of `u = ln|ln r|` at the outer edge `r = 1/(2e)`.
pub fn a17_u_edge() -> f64 {
    (-A17_SUPPORT_RADIUS.ln()).ln()
}

/// Increments ratio below which a doubling scan is read as convergent.
const CONVERGENT_RATIO: f64 = 1.0 - 1e-3;

fn verdict_from(values: &[f64]) -> (Verdict, Vec<f64>) {
    let incr: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = incr.windows(2).map(|w| w[1] / w[0]).collect();
    let last = *ratios.last().expect("at least two increments");
    let verdict = if last.is_finite() && last < CONVERGENT_RATIO { Verdict::Convergent } else { Verdict::Divergent };
    (verdict, ratios)
}

/// Classifies `∬ V⁻ ln² V⁻` and `∫ V_R ln⁻` for the central family
/// `V = -1/(r² ln²r (ln|ln r|)^γ)` on `r < 1/(2e)`.
///
/// The cutoffs are inner radii expressed as `u = ln|ln δ|` (strictly
/// increasing, i.e. decreasing radii); radii below `exp(-e^{700})` are not
/// representable in floating point, which is why the scan is parametrized in `u`.
/// With `ρ(u) du = e^{-u} u^{-γ} du = r V⁻ dr`:
///
/// ```text
/// A3(U) = 2π ∫ u^{-γ} du
/// I(U)  = 8π² ∫ ρ(u) [ e^{2u} m(u) + ½ ∫_u^U ρ(u') Li₂(e^{-2(e^{u'} - e^u)}) du' ] du
/// ```
///
/// where `m(u) = ∫_u^U ρ`. The angular average of `ln²|x-y|` for `|x| > |y|` is
/// `ln²|x| + ½ Li₂(|y|²/|x|²)`.
pub fn classify_a17(gamma: f64, cutoffs_u: &[f64]) -> Result<A17Classification> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return config_err(format!("a17 classification needs gamma > 0, got {gamma}"));
    }
    if cutoffs_u.len() < 4 {
        return config_err(format!("cutoff scan needs at least 4 cutoffs, got {}", cutoffs_u.len()));
    }
    let u0 = a17_u_edge();
    if cutoffs_u[0] <= u0 || cutoffs_u.windows(2).any(|w| w[1] <= w[0]) || cutoffs_u.iter().any(|u| *u > 700.0) {
        return config_err("cutoffs must be strictly increasing in u = ln|ln δ| within (u_edge, 700]");
    }
    let rows = cutoffs_u
        .par_iter()
        .map(|&u_cut| {
            Ok(A17ScanRow {
                cutoff_u: u_cut,
                i_partial: a17_pair_integral(gamma, u_cut)?,
                a3_partial: a17_a3_integral(gamma, u_cut)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (i, i_ratios) = verdict_from(&rows.iter().map(|r| r.i_partial).collect::<Vec<_>>());
    let (a3, a3_ratios) = verdict_from(&rows.iter().map(|r| r.a3_partial).collect::<Vec<_>>());
    Ok(A17Classification { gamma, i, a3, rows, i_ratios, a3_ratios })
}

const A17_TOL: f64 = 1e-10;

/// `∫_{δ<|x|<1/(2e)} V⁻ ln⁻|x| d²x` with `δ = exp(-e^{u_cut})`.
pub fn a17_a3_integral(gamma: f64, u_cut: f64) -> Result<f64> {
    let u0 = a17_u_edge();
    Ok(2.0 * PI * adaptive_integrate(|u| u.powf(-gamma), u0, u_cut, A17_TOL, 0.0)?.value)
}

/// `E(u) = e^u ∫_u^∞ e^{-t} t^{-γ} dt = ∫_0^∞ e^{-s} (u+s)^{-γ} ds`.
fn scaled_tail(gamma: f64, u: f64) -> Result<f64> {
    // e^{-60} is far below the tolerance
    Ok(adaptive_integrate(|s| (-s).exp() * (u + s).powf(-gamma), 0.0, 60.0, A17_TOL, 0.0)?.value)
}

/// `∬_{δ<|x|,|y|<1/(2e)} V⁻(x) ln²|x-y| V⁻(y)` with `δ = exp(-e^{u_cut})`.
pub fn a17_pair_integral(gamma: f64, u_cut: f64) -> Result<f64> {
    let u0 = a17_u_edge();
    let tail_cut = scaled_tail(gamma, u_cut)?;
    // ρ(u) e^{2u} m(u) = u^{-γ} (E(u) - e^{u-U} E(U))
    let log_part = adaptive_integrate(
        |u| {
            let e = scaled_tail(gamma, u).unwrap_or(f64::NAN);
            u.powf(-gamma) * (e - (u - u_cut).exp() * tail_cut)
        },
        u0,
        u_cut,
        A17_TOL,
        0.0,
    )?;
    // Li₂ part, inner variable t = e^{u'} - e^u
    let dilog_part = adaptive_integrate(
        |u| {
            let eu = u.exp();
            let t_max = (u_cut.exp() - eu).min(40.0);
            if t_max <= 0.0 {
                return 0.0;
            }
            let inner = adaptive_integrate(
                |t| {
                    let up = (eu + t).ln();
                    dilog((-2.0 * t).exp()) * up.powf(-gamma) / ((t + eu) * (t + eu))
                },
                0.0,
                t_max,
                A17_TOL,
                0.0,
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
            (-u).exp() * u.powf(-gamma) * inner
        },
        u0,
        u_cut.min(u0 + 40.0),
        A17_TOL,
        0.0,
    )?;
    let total = 8.0 * PI * PI * (log_part.value + 0.5 * dilog_part.value);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonFinite(format!("a17 pair integral at u = {u_cut}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{sample_negative_part, Grid2D, PotentialSpec};
    use crate::quadrature::{radial_integral, RadialWeight};
    use crate::rearrangement::rearrange;
    use approx::assert_relative_eq;

    #[test]
    fn log_parts() {
        assert_eq!(ln_minus(2.0), 0.0);
        assert_eq!(ln_plus(0.5), 0.0);
        assert_relative_eq!(ln_minus(0.5), 2f64.ln());
        assert_relative_eq!(ln_plus(3.0), 3f64.ln());
        for &t in &[0.1, 0.9, 1.0, 4.0] {
            assert_relative_eq!(ln_plus(t) - ln_minus(t), f64::ln(t), epsilon = 1e-15);
        }
    }

    #[test]
    fn dilog_reference_values() {
        assert_relative_eq!(dilog(0.0), 0.0);
        assert_relative_eq!(dilog(1.0), PI * PI / 6.0, max_relative = 1e-15);
        // Li₂(1/2) = π²/12 - ln²2 / 2
        assert_relative_eq!(dilog(0.5), PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2), max_relative = 1e-14);
        // Li₂(-1) = -π²/12
        assert_relative_eq!(dilog(-1.0), -PI * PI / 12.0, max_relative = 1e-14);
        // direct series at 0.9 (slow but convergent)
        let direct: f64 = (1..20000).map(|k| 0.9f64.powi(k) / f64::from(k * k)).sum();
        assert_relative_eq!(dilog(0.9), direct, max_relative = 1e-13);
    }

    #[test]
    fn angular_closed_form_limits() {
        assert_relative_eq!(angular_log_closed_form(3.0, 0.0).unwrap(), 4.0 * 3f64.ln().powi(2));
        let near = angular_log_closed_form(2.0, 2.0 * (1.0 - 1e-13)).unwrap();
        assert_relative_eq!(near - 4.0 * 2f64.ln().powi(2), PI * PI / 3.0, epsilon = 1e-9);
        assert!(angular_log_closed_form(1.0, 1.0).is_err());
        assert!(angular_log_closed_form(1.0, 2.0).is_err());
    }

    #[test]
    fn zero_field_report() {
        let g = Grid2D::new(1.0, 8).unwrap();
        let f = SampledField::zeros(g);
        let p = rearrange(&f);
        let r = condition_integrals(&f, &p).unwrap();
        assert_eq!((r.i, r.i_plus, r.i_minus, r.l1, r.l2), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(appendix_bounds(&f, &p), (0.0, 0.0));
    }

    #[test]
    fn unit_disk_rhs_a8_matches_radial() {
        let g = Grid2D::new(1.2, 160).unwrap();
        let f = sample_negative_part(&PotentialSpec::circular_well(1.0, 1.0).unwrap(), &g).unwrap();
        let p = rearrange(&f);
        let (a8, _) = appendix_bounds(&f, &p);
        let radial = radial_integral(|_| 1.0, RadialWeight::LogTwoPlusSq, 0.0, 1.0, 1e-12).unwrap().value;
        // 4 · mass · L1 with mass → π; jagged disk edge gives O(h) error
        assert_relative_eq!(a8, 4.0 * PI * radial, max_relative = 2e-2);
    }

    #[test]
    fn split_identity_and_bounds_on_disk() {
        let g = Grid2D::new(1.5, 48).unwrap();
        let f = sample_negative_part(&PotentialSpec::circular_well(1.0, 1.0).unwrap(), &g).unwrap();
        let r = condition_integrals(&f, &rearrange(&f)).unwrap();
        assert!(r.flags.finite);
        assert!(r.flags.split_residual < 1e-10);
        assert!(r.flags.a8_holds && r.flags.a14_holds);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["I", "I_plus", "I_minus", "L1", "L2", "rhs_A8", "rhs_A14"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn a3_closed_form() {
        for &(gamma, u) in &[(1.5, 3.0), (0.75, 10.0), (1.0, 25.0)] {
            let u0 = a17_u_edge();
            let exact = if gamma == 1.0 {
                2.0 * PI * (f64::ln(u) - f64::ln(u0))
            } else {
                2.0 * PI * (f64::powf(u, 1.0 - gamma) - u0.powf(1.0 - gamma)) / (1.0 - gamma)
            };
            assert_relative_eq!(a17_a3_integral(gamma, u).unwrap(), exact, max_relative = 1e-9);
        }
    }

    #[test]
    fn a3_matches_radial_quadrature_in_r() {
        // u = 2 puts the inner cutoff at exp(-e²) ≈ 6e-4
        let gamma = 1.5;
        let u: f64 = 2.0;
        let delta = (-u.exp()).exp();
        let vminus = |r: f64| -crate::potential::a17_value(gamma, r).unwrap();
        let by_r = radial_integral(vminus, RadialWeight::LnMinus, delta, A17_SUPPORT_RADIUS, 1e-10).unwrap();
        assert_relative_eq!(by_r.value, a17_a3_integral(gamma, u).unwrap(), max_relative = 1e-6);
    }

    #[test]
    fn classification_rejects_short_scans() {
        assert!(classify_a17(1.0, &[1.0, 2.0, 3.0]).is_err());
        assert!(classify_a17(1.0, &[2.0, 1.0, 3.0, 4.0]).is_err());
        assert!(classify_a17(0.0, &default_a17_cutoffs()).is_err());
    }
}
