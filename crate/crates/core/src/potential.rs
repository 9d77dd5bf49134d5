//! Two-dimensional potentials, their negative parts and grid sampling.
//!
//! Units follow `hbar^2 / 2m = 1`, so the Schrodinger operator is `-Δ + g V`.
//! Potentials are declarative: a [`PotentialSpec`] is plain data that
//! serializes to `{"family": .., "params": {..}, "g": ..}` and can be
//! evaluated at any point of its domain.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::E;

use crate::error::{config_err, Error, Result};

/// Outer edge of the `a17_family` support, `1/(2e)`.
pub const A17_SUPPORT_RADIUS: f64 = 0.5 / E;

/// Fraction of `V⁻` mass allowed outside the default box.
const BOX_MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianWell {
    /// Well depth (>= 0); the well contributes `-depth * exp(-|x-c|^2 / width^2)`.
    pub depth: f64,
    pub width: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianWellsParams {
    pub wells: Vec<GaussianWell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularWellParams {
    pub depth: f64,
    pub radius: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct A17Params {
    pub gamma: f64,
}

/// One signed term of a `sum_of_terms` potential. Negative amplitudes are wells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Disk {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `amplitude * exp(-(|x-c| - radius)^2 / width^2)`.
    Ring {
        amplitude: f64,
        radius: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Constant { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumOfTermsParams {
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    GaussianWells(GaussianWellsParams),
    CircularWell(CircularWellParams),
    A17Family(A17Params),
    SumOfTerms(SumOfTermsParams),
}

/// A validated potential `g * V(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct PotentialSpec {
    family: Family,
    g: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    family: String,
    params: Value,
    #[serde(default = "unit_coupling")]
    g: f64,
}

fn unit_coupling() -> f64 {
    1.0
}

impl TryFrom<RawSpec> for PotentialSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        make_family(&raw.family, &raw.params)?.with_coupling(raw.g)
    }
}

impl From<PotentialSpec> for RawSpec {
    fn from(spec: PotentialSpec) -> Self {
        let mut tagged = serde_json::to_value(&spec.family).expect("family serializes");
        let obj = tagged.as_object_mut().expect("adjacently tagged");
        let family = obj["family"].as_str().unwrap_or_default().to_owned();
        let params = obj.remove("params").unwrap_or(Value::Null);
        RawSpec { family, params, g: spec.g }
    }
}

/// Builds and validates a potential from a family id and its parameter object.
pub fn make_family(name: &str, params: &Value) -> Result<PotentialSpec> {
    let tagged = serde_json::json!({ "family": name, "params": params });
    let family: Family = serde_json::from_value(tagged)
        .map_err(|e| Error::Config(format!("family `{name}`: {e}")))?;
    validate_family(&family)?;
    Ok(PotentialSpec { family, g: 1.0 })
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        config_err(msg)
    }
}

fn finite_center(c: &[f64; 2]) -> bool {
    c[0].is_finite() && c[1].is_finite()
}

fn validate_family(family: &Family) -> Result<()> {
    match family {
        Family::GaussianWells(p) => {
            check(!p.wells.is_empty(), "gaussian_wells needs at least one well")?;
            for w in &p.wells {
                check(w.depth.is_finite() && w.depth >= 0.0, "well depth must be finite and >= 0")?;
                check(w.width.is_finite() && w.width > 0.0, "well width must be > 0")?;
                check(finite_center(&w.center), "well center must be finite")?;
            }
        }
        Family::CircularWell(p) => {
            check(p.depth.is_finite() && p.depth >= 0.0, "circular_well depth must be >= 0")?;
            check(p.radius.is_finite() && p.radius > 0.0, "circular_well radius must be > 0")?;
            check(finite_center(&p.center), "circular_well center must be finite")?;
        }
        Family::A17Family(p) => {
            check(p.gamma.is_finite() && p.gamma > 0.0, "a17_family requires gamma > 0")?;
        }
        Family::SumOfTerms(p) => {
            check(!p.terms.is_empty(), "sum_of_terms needs at least one term")?;
            for t in &p.terms {
                match t {
                    Term::Gaussian { amplitude, width, center } => {
                        check(amplitude.is_finite(), "amplitude must be finite")?;
                        check(width.is_finite() && *width > 0.0, "gaussian width must be > 0")?;
                        check(finite_center(center), "center must be finite")?;
                    }
                    Term::Disk { amplitude, radius, center } => {
                        check(amplitude.is_finite(), "amplitude must be finite")?;
                        check(radius.is_finite() && *radius > 0.0, "disk radius must be > 0")?;
                        check(finite_center(center), "center must be finite")?;
                    }
                    Term::Ring { amplitude, radius, width, center } => {
                        check(amplitude.is_finite(), "amplitude must be finite")?;
                        check(radius.is_finite() && *radius >= 0.0, "ring radius must be >= 0")?;
                        check(width.is_finite() && *width > 0.0, "ring width must be > 0")?;
                        check(finite_center(center), "center must be finite")?;
                    }
                    Term::Constant { amplitude } => {
                        check(amplitude.is_finite(), "amplitude must be finite")?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn dist(p: [f64; 2], c: [f64; 2]) -> f64 {
    (p[0] - c[0]).hypot(p[1] - c[1])
}

impl PotentialSpec {
    /// A single Gaussian well of the given depth and width centered at `center`.
    pub fn gaussian_well(depth: f64, width: f64, center: [f64; 2]) -> Result<Self> {
        Self::from_family(Family::GaussianWells(GaussianWellsParams {
            wells: vec![GaussianWell { depth, width, center }],
        }))
    }

    pub fn circular_well(depth: f64, radius: f64) -> Result<Self> {
        Self::from_family(Family::CircularWell(CircularWellParams {
            depth,
            radius,
            center: [0.0, 0.0],
        }))
    }

    pub fn a17(gamma: f64) -> Result<Self> {
        Self::from_family(Family::A17Family(A17Params { gamma }))
    }

    pub fn sum_of_terms(terms: Vec<Term>) -> Result<Self> {
        Self::from_family(Family::SumOfTerms(SumOfTermsParams { terms }))
    }

    pub fn from_family(family: Family) -> Result<Self> {
        validate_family(&family)?;
        Ok(Self { family, g: 1.0 })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::GaussianWells(_) => "gaussian_wells",
            Family::CircularWell(_) => "circular_well",
            Family::A17Family(_) => "a17_family",
            Family::SumOfTerms(_) => "sum_of_terms",
        }
    }

    pub fn coupling(&self) -> f64 {
        self.g
    }

    /// Same shape with coupling `g` (>= 0).
    pub fn with_coupling(mut self, g: f64) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return config_err(format!("coupling g must be finite and >= 0, got {g}"));
        }
        self.g = g;
        Ok(self)
    }

    /// `g * V(point)`.
    pub fn evaluate(&self, point: [f64; 2]) -> Result<f64> {
        Ok(self.g * self.shape_value(point)?)
    }

    /// `V(point)` without the coupling factor.
    pub fn shape_value(&self, p: [f64; 2]) -> Result<f64> {
        let v = match &self.family {
            Family::GaussianWells(params) => params
                .wells
                .iter()
                .map(|w| {
                    let r = dist(p, w.center) / w.width;
                    -w.depth * (-r * r).exp()
                })
                .sum(),
            Family::CircularWell(c) => {
                if dist(p, c.center) < c.radius {
                    -c.depth
                } else {
                    0.0
                }
            }
            Family::A17Family(a) => a17_value(a.gamma, dist(p, [0.0, 0.0]))?,
            Family::SumOfTerms(s) => s.terms.iter().map(|t| term_value(t, p)).sum(),
        };
        Ok(v)
    }

    /// True when `V` depends only on `|x|` about the origin.
    pub fn is_central(&self) -> bool {
        let origin = |c: &[f64; 2]| c[0] == 0.0 && c[1] == 0.0;
        match &self.family {
            Family::GaussianWells(p) => p.wells.iter().all(|w| origin(&w.center)),
            Family::CircularWell(c) => origin(&c.center),
            Family::A17Family(_) => true,
            Family::SumOfTerms(s) => s.terms.iter().all(|t| match t {
                Term::Gaussian { center, .. }
                | Term::Disk { center, .. }
                | Term::Ring { center, .. } => origin(center),
                Term::Constant { .. } => true,
            }),
        }
    }

    /// Radii where `V` is discontinuous along a ray (only for central specs).
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        let mut out = match &self.family {
            Family::CircularWell(c) => vec![c.radius],
            Family::A17Family(_) => vec![A17_SUPPORT_RADIUS],
            Family::SumOfTerms(s) => s
                .terms
                .iter()
                .filter_map(|t| match t {
                    Term::Disk { radius, .. } => Some(*radius),
                    _ => None,
                })
                .collect(),
            Family::GaussianWells(_) => Vec::new(),
        };
        out.sort_by(f64::total_cmp);
        out
    }

    /// Radius beyond which `V` vanishes, or is below `tol` relative to its scale
    /// for Gaussian tails. `None` for potentials with a constant term.
    pub fn support_radius(&self, tol: f64) -> Option<f64> {
        let tail = (1.0 / tol).ln().sqrt();
        let norm = |c: &[f64; 2]| c[0].hypot(c[1]);
        match &self.family {
            Family::GaussianWells(p) => {
                Some(p.wells.iter().map(|w| norm(&w.center) + tail * w.width).fold(0.0, f64::max))
            }
            Family::CircularWell(c) => Some(norm(&c.center) + c.radius),
            Family::A17Family(_) => Some(A17_SUPPORT_RADIUS),
            Family::SumOfTerms(s) => s.terms.iter().try_fold(0.0f64, |acc, t| {
                let r = match t {
                    Term::Gaussian { width, center, .. } => norm(center) + tail * width,
                    Term::Disk { radius, center, .. } => norm(center) + radius,
                    Term::Ring { radius, width, center, .. } => norm(center) + radius + tail * width,
                    Term::Constant { amplitude } if *amplitude == 0.0 => 0.0,
                    Term::Constant { .. } => return None,
                };
                Some(acc.max(r))
            }),
        }
    }

    /// Default half-width `L` of the sampling box: the `V⁻` mass outside
    /// `[-L, L]^2` is below `1e-6` of the total for every built-in family.
    ///
    /// Gaussian tails: mass outside radius `|c| + t w` is `exp(-t^2)` of the
    /// well, so `t = sqrt(ln 1e6)`. Disks, circular wells and `a17_family` have
    /// compact support and are enclosed exactly; a 5% margin is added.
    pub fn default_half_width(&self) -> Result<f64> {
        match self.support_radius(BOX_MASS_TOLERANCE) {
            Some(r) if r > 0.0 => Ok(1.05 * r),
            Some(_) => Ok(1.0),
            None => config_err("potential with a constant term has no finite default box"),
        }
    }

    /// Rigidly translated copy. Fails for `a17_family`, which is pinned to the origin.
    pub fn translated(&self, shift: [f64; 2]) -> Result<Self> {
        let mv = |c: &mut [f64; 2]| {
            c[0] += shift[0];
            c[1] += shift[1];
        };
        let mut out = self.clone();
        match &mut out.family {
            Family::GaussianWells(p) => p.wells.iter_mut().for_each(|w| mv(&mut w.center)),
            Family::CircularWell(c) => mv(&mut c.center),
            Family::A17Family(_) => return config_err("a17_family cannot be translated"),
            Family::SumOfTerms(s) => {
                for t in &mut s.terms {
                    match t {
                        Term::Gaussian { center, .. }
                        | Term::Disk { center, .. }
                        | Term::Ring { center, .. } => mv(center),
                        Term::Constant { .. } => {}
                    }
                }
            }
        }
        Ok(out)
    }
}

fn term_value(t: &Term, p: [f64; 2]) -> f64 {
    match t {
        Term::Gaussian { amplitude, width, center } => {
            let r = dist(p, *center) / width;
            amplitude * (-r * r).exp()
        }
        Term::Disk { amplitude, radius, center } => {
            if dist(p, *center) < *radius {
                *amplitude
            } else {
                0.0
            }
        }
        Term::Ring { amplitude, radius, width, center } => {
            let r = (dist(p, *center) - radius) / width;
            amplitude * (-r * r).exp()
        }
        Term::Constant { amplitude } => *amplitude,
    }
}

/// `-1 / (r^2 (ln r)^2 (ln|ln r|)^gamma)` on `0 < r < 1/(2e)`, zero beyond.
pub fn a17_value(gamma: f64, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::Domain(format!("a17_family is singular at r = {r}")));
    }
    if r >= A17_SUPPORT_RADIUS {
        return Ok(0.0);
    }
    let lr = r.ln();
    let llr = (-lr).ln();
    Ok(-1.0 / (r * r * lr * lr * llr.powf(gamma)))
}

/// Uniform `n x n` partition of `[-L, L]^2`; nodes are cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    half_width: f64,
    n: usize,
}

impl Grid2D {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return config_err(format!("grid half-width must be > 0, got {half_width}"));
        }
        if n < 8 {
            return config_err(format!("grid needs n >= 8 nodes per axis, got {n}"));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Cell area `h^2`.
    pub fn weight(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.half_width + (k as f64 + 0.5) * self.spacing()
    }

    /// Node `idx = iy * n + ix`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        [self.coord(idx % self.n), self.coord(idx / self.n)]
    }

    pub fn nodes(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }
}

/// Parameters of the `eps * exp(-mu |x|)` floor added by [`epsilon_regularize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonFloor {
    pub eps: f64,
    pub mu: f64,
}

/// `V⁻` sampled at grid nodes. Values are never negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: Grid2D,
    values: Vec<f64>,
    epsilon_floor: Option<EpsilonFloor>,
}

impl SampledField {
    pub fn from_values(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return config_err(format!("sampled negative part must be finite and >= 0, got {v}"));
        }
        Ok(Self { grid, values, epsilon_floor: None })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![0.0; grid.len()], epsilon_floor: None }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn epsilon_floor(&self) -> Option<EpsilonFloor> {
        self.epsilon_floor
    }

    /// `Σ V⁻ w`, the discrete `∫ V⁻ d²x`.
    pub fn mass(&self) -> f64 {
        self.grid.weight() * crate::quadrature::compensated_sum(self.values.iter().copied())
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Field multiplied pointwise by `lambda >= 0`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * lambda).collect(),
            epsilon_floor: self.epsilon_floor,
        }
    }
}

/// Samples `V⁻ = max(-g V, 0)` at every node.
pub fn sample_negative_part(spec: &PotentialSpec, grid: &Grid2D) -> Result<SampledField> {
    let values = grid
        .nodes()
        .map(|p| spec.evaluate(p).map(|v| (-v).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledField { grid: *grid, values, epsilon_floor: None })
}

/// Discrete `∫ g V d²x` over the grid (signed).
pub fn integral_of_potential(spec: &PotentialSpec, grid: &Grid2D) -> Result<f64> {
    let vals = grid.nodes().map(|p| spec.evaluate(p)).collect::<Result<Vec<_>>>()?;
    Ok(grid.weight() * crate::quadrature::compensated_sum(vals))
}

/// Adds `eps * exp(-mu |x|)` to every node value.
pub fn epsilon_regularize(field: &SampledField, eps: f64, mu: f64) -> Result<SampledField> {
    if !(eps.is_finite() && eps > 0.0) || !(mu.is_finite() && mu > 0.0) {
        return config_err(format!("epsilon regularization needs eps > 0 and mu > 0, got ({eps}, {mu})"));
    }
    let grid = field.grid;
    let values = field
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let p = grid.node(i);
            v + eps * (-mu * p[0].hypot(p[1])).exp()
        })
        .collect();
    Ok(SampledField { grid, values, epsilon_floor: Some(EpsilonFloor { eps, mu }) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use serde_json::json;

    #[test]
    fn gaussian_peak_value() {
        let s = PotentialSpec::gaussian_well(5.0, 1.0, [0.0, 0.0]).unwrap();
        assert_eq!(s.evaluate([0.0, 0.0]).unwrap(), -5.0);
    }

    #[test]
    fn a17_edge_and_substitution() {
        let s = PotentialSpec::a17(1.5).unwrap();
        assert_eq!(s.evaluate([A17_SUPPORT_RADIUS, 0.0]).unwrap(), 0.0);
        assert!(matches!(s.evaluate([0.0, 0.0]), Err(Error::Domain(_))));

        // gamma = 1, r = e^{-e}: ln r = -e, ln|ln r| = 1.
        let r = (-E).exp();
        let v = a17_value(1.0, r).unwrap();
        let expected = -1.0 / ((-2.0 * E).exp() * E * E);
        assert_relative_eq!(v, expected, max_relative = 1e-13);
    }

    #[test]
    fn circular_well_outside_support() {
        let s = PotentialSpec::circular_well(3.0, 1.0).unwrap();
        assert_eq!(s.evaluate([2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(s.evaluate([0.5, 0.0]).unwrap(), -3.0);
    }

    #[test]
    fn superposition_of_two_wells() {
        let two = make_family(
            "gaussian_wells",
            &json!({"wells": [
                {"depth": 2.0, "width": 0.7, "center": [1.0, 0.0]},
                {"depth": 3.0, "width": 1.1, "center": [-1.0, 0.0]}
            ]}),
        )
        .unwrap();
        let a = PotentialSpec::gaussian_well(2.0, 0.7, [1.0, 0.0]).unwrap();
        let b = PotentialSpec::gaussian_well(3.0, 1.1, [-1.0, 0.0]).unwrap();
        let p = [0.0, 1.0];
        assert_relative_eq!(
            two.evaluate(p).unwrap(),
            a.evaluate(p).unwrap() + b.evaluate(p).unwrap(),
            max_relative = 1e-15
        );
        assert!(!two.is_central());
    }

    #[test]
    fn configuration_errors() {
        assert!(matches!(make_family("bessel", &json!({})), Err(Error::Config(_))));
        assert!(matches!(make_family("a17_family", &json!({"gamma": -1.0})), Err(Error::Config(_))));
        assert!(matches!(make_family("a17_family", &json!({})), Err(Error::Config(_))));
        assert!(matches!(
            make_family("circular_well", &json!({"depth": 1.0, "radius": 1.0, "extra": 2})),
            Err(Error::Config(_))
        ));
        assert!(Grid2D::new(1.0, 7).is_err());
        assert!(Grid2D::new(0.0, 16).is_err());
    }

    #[test]
    fn json_shape_round_trip() {
        let doc = json!({
            "family": "sum_of_terms",
            "params": {"terms": [
                {"kind": "gaussian", "amplitude": -4.0, "width": 1.0},
                {"kind": "gaussian", "amplitude": 3.0, "width": 0.5, "center": [1.2, 0.0]}
            ]},
            "g": 0.5
        });
        let spec: PotentialSpec = serde_json::from_value(doc.clone()).unwrap();
        assert_eq!(spec.coupling(), 0.5);
        let back = serde_json::to_value(&spec).unwrap();
        let again: PotentialSpec = serde_json::from_value(back.clone()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(back["family"], "sum_of_terms");
        assert_eq!(back["g"], 0.5);

        let bad = json!({"family": "a17_family", "params": {"gamma": 1.0}, "g": 1.0, "h": 2});
        assert!(serde_json::from_value::<PotentialSpec>(bad).is_err());
    }

    #[test]
    fn repulsive_constant_has_no_negative_part() {
        let spec = PotentialSpec::sum_of_terms(vec![Term::Constant { amplitude: 7.0 }]).unwrap();
        let grid = Grid2D::new(2.0, 16).unwrap();
        let f = sample_negative_part(&spec, &grid).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sampled_gaussian_is_sign_flip() {
        let spec = PotentialSpec::gaussian_well(5.0, 1.3, [0.0, 0.0]).unwrap();
        let grid = Grid2D::new(3.0, 16).unwrap();
        let f = sample_negative_part(&spec, &grid).unwrap();
        for (i, v) in f.values().iter().enumerate() {
            let p = grid.node(i);
            let r2 = (p[0] * p[0] + p[1] * p[1]) / (1.3 * 1.3);
            assert_relative_eq!(*v, 5.0 * (-r2).exp(), max_relative = 1e-14);
        }
    }

    #[test]
    fn well_minus_bump_is_clipped() {
        let spec = PotentialSpec::sum_of_terms(vec![
            Term::Gaussian { amplitude: -1.0, width: 1.5, center: [0.0, 0.0] },
            Term::Gaussian { amplitude: 2.0, width: 0.6, center: [0.8, 0.4] },
        ])
        .unwrap();
        let grid = Grid2D::new(3.0, 32).unwrap();
        let f = sample_negative_part(&spec, &grid).unwrap();
        let mut rng_state = 12345u64;
        for _ in 0..10 {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let idx = (rng_state >> 33) as usize % grid.len();
            let v = spec.evaluate(grid.node(idx)).unwrap();
            assert_eq!(f.values()[idx], if v < 0.0 { -v } else { 0.0 });
        }
        assert!(f.values().contains(&0.0));
    }

    #[test]
    fn epsilon_floor_formula() {
        let grid = Grid2D::new(4.0, 16).unwrap();
        let zero = SampledField::zeros(grid);
        let f = epsilon_regularize(&zero, 1.0, 1e-6).unwrap();
        assert!(f.values().iter().all(|v| (v - 1.0).abs() < 1e-5));

        let g = epsilon_regularize(&zero, 1.0, 1.0).unwrap();
        for (i, v) in g.values().iter().enumerate() {
            let p = grid.node(i);
            assert_relative_eq!(*v, (-p[0].hypot(p[1])).exp(), max_relative = 1e-15);
            let floor = (-(2.0f64.sqrt()) * grid.half_width()).exp();
            assert!(*v >= floor);
        }
        assert!(epsilon_regularize(&zero, 0.0, 1.0).is_err());
        assert!(epsilon_regularize(&zero, 1.0, -1.0).is_err());
    }

    #[test]
    fn default_box_contains_gaussian_mass() {
        let spec = PotentialSpec::gaussian_well(5.0, 1.0, [0.0, 0.0]).unwrap();
        let l = spec.default_half_width().unwrap();
        // mass outside the inscribed disk of radius L is exp(-L^2/w^2) of the total
        assert!((-(l * l)).exp() < BOX_MASS_TOLERANCE);
        let a17 = PotentialSpec::a17(1.5).unwrap();
        assert!(a17.default_half_width().unwrap() > A17_SUPPORT_RADIUS);
        let c = PotentialSpec::sum_of_terms(vec![Term::Constant { amplitude: -1.0 }]).unwrap();
        assert!(c.default_half_width().is_err());
    }

    #[test]
    fn even_grid_avoids_origin() {
        let grid = Grid2D::new(A17_SUPPORT_RADIUS * 1.05, 32).unwrap();
        let spec = PotentialSpec::a17(1.5).unwrap();
        let f = sample_negative_part(&spec, &grid).unwrap();
        assert!(f.values().iter().all(|v| v.is_finite()));
        let total: f64 = grid.nodes().count() as f64 * grid.weight();
        assert_relative_eq!(total, (2.0 * grid.half_width()).powi(2), max_relative = 1e-12);
    }
}
