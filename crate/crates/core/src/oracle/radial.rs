//! Zero-energy radial shooting for central potentials.
//!
//! In `t = ln r` the zero-energy radial equation for `R(r) e^{imθ}` reads
//! `R'' = (m² + r² g V(r)) R`. Starting from the regular solution `R ≈ r^m`
//! near the origin, each sign change of `R` on `(0, ∞)` is one bound state in
//! the channel (Sturm oscillation). Beyond the support the solution is
//! `α + β t` (m = 0) or `p e^{mt} + q e^{-mt}`, so the remaining zero, if any,
//! is located in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialCount {
    /// Bound states summed over channels, `m ≠ 0` counted twice.
    pub total: usize,
    /// Nodes per channel `|m| = 0, 1, ...` (multiplicity not applied).
    pub per_channel: Vec<usize>,
    /// `false` when `m_max` was reached while channels still bound.
    pub complete: bool,
}

const STEPS_PER_UNIT_T: f64 = 2000.0;

/// Sign changes of the regular zero-energy solution in channel `m`.
pub fn channel_nodes(spec: &PotentialSpec, m: u32) -> Result<usize> {
    let g = spec.coupling();
    let r_max = spec
        .support_radius(1e-17)
        .ok_or_else(|| crate::error::Error::Config("radial shooting needs a decaying potential".into()))?;
    if r_max == 0.0 || g == 0.0 {
        return Ok(0);
    }
    let r_min = 1e-10 * r_max;
    let mut cuts: Vec<f64> = spec.radial_breakpoints().into_iter().filter(|&b| b > r_min && b < r_max).collect();
    cuts.insert(0, r_min);
    cuts.push(r_max);
    let m2 = f64::from(m * m);
    let pot = |r: f64| spec.shape_value([r, 0.0]);

    let (mut y, mut yt) = (1.0f64, f64::from(m));
    let mut nodes = 0usize;
    let mut sign = 1.0f64;
    for seg in cuts.windows(2) {
        let (ta, tb) = (seg[0].ln(), seg[1].ln());
        if tb <= ta {
            continue;
        }
        let steps = ((tb - ta) * STEPS_PER_UNIT_T).ceil().max(4.0) as usize;
        let dt = (tb - ta) / steps as f64;
        // evaluate strictly inside the segment so jumps sit on its ends
        let (ra, rb) = (seg[0] * (1.0 + 1e-13), seg[1] * (1.0 - 1e-13));
        let coef = |t: f64| -> Result<f64> {
            let r = t.exp().clamp(ra, rb);
            Ok(m2 + r * r * g * pot(r)?)
        };
        let mut t = ta;
        for _ in 0..steps {
            let c0 = coef(t)?;
            let cm = coef(t + 0.5 * dt)?;
            let c1 = coef(t + dt)?;
            let k1y = yt;
            let k1v = c0 * y;
            let k2y = yt + 0.5 * dt * k1v;
            let k2v = cm * (y + 0.5 * dt * k1y);
            let k3y = yt + 0.5 * dt * k2v;
            let k3v = cm * (y + 0.5 * dt * k2y);
            let k4y = yt + dt * k3v;
            let k4v = c1 * (y + dt * k3y);
            y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            yt += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += dt;
            if y != 0.0 && y.signum() != sign {
                nodes += 1;
                sign = y.signum();
            }
            let big = y.abs().max(yt.abs());
            if big > 1e100 {
                y /= big;
                yt /= big;
            }
        }
    }
    // exterior: free solution continued from t = ln r_max
    let exterior_zero = if m == 0 {
        y * yt < 0.0
    } else {
        let mf = f64::from(m);
        let p = 0.5 * (y + yt / mf);
        let q = 0.5 * (y - yt / mf);
        p * q < 0.0 && q.abs() > p.abs()
    };
    Ok(nodes + usize::from(exterior_zero))
}

/// Bound states of a central potential by channel-wise node counting.
pub fn radial_count(spec: &PotentialSpec, m_max: u32) -> Result<RadialCount> {
    if !spec.is_central() {
        return config_err(format!("radial count needs a central potential, got {}", spec.family_name()));
    }
    let mut per_channel = Vec::new();
    let mut total = 0;
    let mut empty_run = 0;
    let mut complete = false;
    for m in 0..=m_max {
        let k = channel_nodes(spec, m)?;
        per_channel.push(k);
        total += if m == 0 { k } else { 2 * k };
        empty_run = if k == 0 { empty_run + 1 } else { 0 };
        if empty_run == 2 {
            complete = true;
            break;
        }
    }
    Ok(RadialCount { total, per_channel, complete })
}
