//! Brute-force spectral oracles for the number of negative eigenvalues of
//! `-Δ + g V`: a finite-difference Dirichlet box, radial shooting for central
//! potentials, coupling-constant trajectories, and the Birman–Schwinger
//! threshold diagnostic built from the deflated kernel.

pub mod banded;
pub mod radial;
pub mod trajectory;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bskernel::{symmetric_eigenvalues, KernelMatrix};
use crate::error::{config_err, Result};
use crate::potential::{sample_negative_part, Grid2D, PotentialSpec};
use banded::BandedSym;

pub use radial::{radial_count, RadialCount};
pub use trajectory::{trajectories, Branch, FhCheck, TrajectoryReport};

/// Interior nodes of the Dirichlet box `[-L, L]²` with `n` points per axis,
/// spacing `h = 2L/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdGrid {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
}

impl FdGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if n < 4 {
            return config_err(format!("finite-difference grid needs n >= 4, got {n}"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return config_err(format!("box half-width must be > 0, got {half_width}"));
        }
        Ok(Self { half_width, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n + 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let (iy, ix) = (idx / self.n, idx % self.n);
        [-self.half_width + (ix + 1) as f64 * h, -self.half_width + (iy + 1) as f64 * h]
    }

    /// The grid refined by 1.5 in `n` and enlarged by 1.25 in `L`.
    pub fn refined(&self) -> Self {
        Self { half_width: 1.25 * self.half_width, n: (3 * self.n).div_ceil(2) }
    }

    /// `10 × (h²/12) × λ_floor`, with `λ_floor = 2 (π / 2L)²` the lowest
    /// Dirichlet eigenvalue of the empty box: ten times the leading
    /// five-point truncation error of the box's spectral floor.
    pub fn default_tol_e(&self) -> f64 {
        let h = self.spacing();
        let floor = 2.0 * (PI / (2.0 * self.half_width)).powi(2);
        10.0 * h * h / 12.0 * floor
    }
}

/// The potential (including its own coupling) on the interior nodes.
pub fn shape_on(spec: &PotentialSpec, grid: &FdGrid) -> Result<Vec<f64>> {
    (0..grid.len()).map(|i| spec.evaluate(grid.node(i))).collect()
}

/// Five-point Dirichlet Laplacian plus `g V` as a banded matrix of bandwidth `n`.
pub fn fd_hamiltonian(shape: &[f64], grid: &FdGrid, g: f64) -> BandedSym {
    let n = grid.n;
    let inv_h2 = 1.0 / grid.spacing().powi(2);
    let mut h = BandedSym::zeros(grid.len(), n);
    for (idx, v) in shape.iter().enumerate().take(grid.len()) {
        h.set(idx, idx, 4.0 * inv_h2 + g * v);
        if idx % n != 0 {
            h.set(idx, idx - 1, -inv_h2);
        }
        if idx >= n {
            h.set(idx, idx - n, -inv_h2);
        }
    }
    h
}

/// Box/grid settings for [`fd_negative_count`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdSettings {
    #[serde(rename = "L_box")]
    pub half_width: f64,
    #[serde(rename = "n_box")]
    pub n: usize,
    /// `None`: [`FdGrid::default_tol_e`].
    #[serde(default)]
    pub tol_e: Option<f64>,
    /// Also resolve the negative eigenvalues at the base resolution (bisection; slower).
    #[serde(default)]
    pub eigenvalues: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionCount {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub tol_e: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCount {
    /// Number of eigenvalues below `-tol_E`; the larger of the two resolutions.
    pub count: usize,
    /// Negative eigenvalues at the base resolution, ascending (empty unless requested).
    pub eigenvalues: Vec<f64>,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub tol_e: f64,
    pub g: f64,
    /// Both resolutions agree.
    pub converged: bool,
    pub scan: Vec<ResolutionCount>,
}

fn check_box(spec: &PotentialSpec, half_width: f64) -> Result<()> {
    // V⁻ mass outside the box must be below 1e-6 of the total
    let inner = Grid2D::new(half_width, 128)?;
    let outer = Grid2D::new(3.0 * half_width, 384)?;
    let unit = spec.clone().with_coupling(1.0)?;
    let m_in = sample_negative_part(&unit, &inner)?.mass();
    let m_all = sample_negative_part(&unit, &outer)?.mass();
    if m_all > 0.0 && (m_all - m_in) > 1e-6 * m_all + 1e-12 * m_all.max(1.0) {
        return config_err(format!(
            "box L = {half_width} leaves a fraction {:.2e} of the V⁻ mass outside",
            (m_all - m_in) / m_all
        ));
    }
    Ok(())
}

fn count_at(spec: &PotentialSpec, grid: &FdGrid, g: f64, tol_e: Option<f64>) -> Result<(ResolutionCount, BandedSym)> {
    let shape = shape_on(spec, grid)?;
    let h = fd_hamiltonian(&shape, grid, g);
    let tol_e = tol_e.unwrap_or_else(|| grid.default_tol_e());
    let count = h.count_below(-tol_e)?;
    Ok((ResolutionCount { n: grid.n, half_width: grid.half_width, tol_e, count }, h))
}

/// Counts eigenvalues of `-Δ + g V` below `-tol_E` at `(n, L)` and
/// `(1.5n, 1.25L)`, where `V` is the potential of `spec` including its coupling.
///
/// An explicit `tol_e` is used at both resolutions; the default is recomputed per grid.
pub fn fd_negative_count(spec: &PotentialSpec, g: f64, settings: &FdSettings) -> Result<SpectralCount> {
    if settings.n < 32 {
        return config_err(format!("oracle grid needs n >= 32, got {}", settings.n));
    }
    if !(g.is_finite() && g >= 0.0) {
        return config_err(format!("coupling must be >= 0, got {g}"));
    }
    if let Some(t) = settings.tol_e {
        if !(t.is_finite() && t >= 0.0) {
            return config_err(format!("tol_E must be >= 0, got {t}"));
        }
    }
    let base = FdGrid::new(settings.half_width, settings.n)?;
    check_box(spec, base.half_width)?;
    let fine = base.refined();
    let (a, b) = rayon::join(|| count_at(spec, &base, g, settings.tol_e), || count_at(spec, &fine, g, settings.tol_e));
    let ((c_base, h_base), (c_fine, _)) = (a?, b?);
    let eigenvalues = if settings.eigenvalues && c_base.count > 0 {
        lowest_eigenvalues(&h_base, c_base.count)?
    } else {
        Vec::new()
    };
    Ok(SpectralCount {
        count: c_base.count.max(c_fine.count),
        eigenvalues,
        n: base.n,
        half_width: base.half_width,
        tol_e: c_base.tol_e,
        g,
        converged: c_base.count == c_fine.count,
        scan: vec![c_base, c_fine],
    })
}

/// Runs [`fd_negative_count`] on boxes `m × base_half_width` for each
/// multiplier in turn and returns the first converged count, or the last
/// attempt (flagged unconverged) when none converges.
pub fn fd_count_search(
    spec: &PotentialSpec,
    g: f64,
    base_half_width: f64,
    n: usize,
    multipliers: &[f64],
    tol_e: Option<f64>,
) -> Result<SpectralCount> {
    if multipliers.is_empty() {
        return config_err("box search needs at least one multiplier");
    }
    let mut last = None;
    for &m in multipliers {
        let settings = FdSettings { half_width: m * base_half_width, n, tol_e, eigenvalues: false };
        let c = fd_negative_count(spec, g, &settings)?;
        if c.converged {
            return Ok(c);
        }
        last = Some(c);
    }
    Ok(last.expect("at least one attempt"))
}

/// The `k` lowest eigenvalues, ascending, by inertia bisection.
pub fn lowest_eigenvalues(h: &BandedSym, k: usize) -> Result<Vec<f64>> {
    let (lo, hi) = h.gershgorin();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let tol = 1e-13 * scale;
    let mut out = Vec::with_capacity(k);
    for j in 1..=k {
        // smallest σ with count_below(σ) >= j
        let mut a = out.last().copied().unwrap_or(lo) - tol;
        let mut b = hi + tol;
        while b - a > tol.max(1e-15 * a.abs().max(b.abs())) {
            let mid = 0.5 * (a + b);
            if h.count_below(mid)? >= j {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Eigenpairs for the given (ascending) eigenvalues: inverse iteration per
/// cluster of near-degenerate values followed by Rayleigh–Ritz in the cluster.
/// Eigenvectors are unit-norm columns.
pub fn eigenpairs(h: &BandedSym, values: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let dim = h.dim();
    let k = values.len();
    let (lo, hi) = h.gershgorin();
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=k {
        if i == k || values[i] - values[i - 1] > 1e-7 * scale {
            clusters.push((start, i));
            start = i;
        }
    }
    let mut out_vals = vec![0.0; k];
    let mut vecs = DMatrix::zeros(dim, k);
    for &(s, e) in &clusters {
        let c = e - s;
        let centre = values[s..e].iter().sum::<f64>() / c as f64;
        let below = if s > 0 { values[s - 1] } else { f64::NEG_INFINITY };
        let above = if e < k { values[e] } else { f64::INFINITY };
        // stay much closer to the cluster than to any neighbour, known or not
        let gap = (centre - below).min(above - centre);
        let shift = centre - (1e-3 * gap).min(1e-6 * scale);
        let f = h.factor(shift)?;
        let mut q = DMatrix::from_fn(dim, c, |i, j| start_entry((i * k + s + j) as u64));
        for _ in 0..6 {
            for j in 0..c {
                let mut col: Vec<f64> = q.column(j).iter().copied().collect();
                f.solve_in_place(&mut col);
                q.set_column(j, &nalgebra::DVector::from_vec(col));
            }
            orthonormalize(&mut q);
        }
        let hq = DMatrix::from_columns(
            &(0..c)
                .map(|j| nalgebra::DVector::from_vec(h.matvec(q.column(j).as_slice())))
                .collect::<Vec<_>>(),
        );
        let small = q.transpose() * &hq;
        let small = 0.5 * (&small + small.transpose());
        let eig = small.symmetric_eigen();
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        for (slot, &o) in order.iter().enumerate() {
            out_vals[s + slot] = eig.eigenvalues[o];
            let v = &q * eig.eigenvectors.column(o);
            vecs.set_column(s + slot, &(v.normalize()));
        }
    }
    Ok((out_vals, vecs))
}

/// Deterministic pseudo-random start vector entries in `[-1, 1)` (splitmix64).
fn start_entry(index: u64) -> f64 {
    let mut z = index.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn orthonormalize(q: &mut DMatrix<f64>) {
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for p in 0..j {
                let d = q.column(p).dot(&q.column(j));
                let pc = q.column(p).into_owned();
                let mut cj = q.column_mut(j);
                cj.axpy(-d, &pc, 1.0);
            }
        }
        let nrm = q.column(j).norm();
        q.column_mut(j).scale_mut(1.0 / nrm);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsDiagnostic {
    /// Positive eigenvalues of `K'`, descending.
    pub lambdas: Vec<f64>,
    /// `g_i = 1/λ_i` for those with `g_i <= g_cap`.
    pub thresholds: Vec<f64>,
    /// `#{λ_i >= 1}`.
    pub count_ge_one: usize,
    /// `#{λ_i >= 1} + 1`.
    pub predicted_count: usize,
    pub fd_count: Option<usize>,
    /// `predicted - fd`.
    pub discrepancy: Option<i64>,
}

impl BsDiagnostic {
    pub fn compare_with(mut self, fd_count: usize) -> Self {
        self.fd_count = Some(fd_count);
        self.discrepancy = Some(self.predicted_count as i64 - fd_count as i64);
        self
    }
}

/// Coupling thresholds from the positive spectrum of `K'`.
pub fn bs_coupling_diagnostic(kprime: &KernelMatrix, g_cap: f64) -> Result<BsDiagnostic> {
    let scale = kprime.entries().amax();
    let lambdas: Vec<f64> = if scale == 0.0 {
        Vec::new()
    } else {
        symmetric_eigenvalues(kprime)?.into_iter().filter(|l| *l > 1e-13 * scale * kprime.dim() as f64).collect()
    };
    let thresholds = lambdas.iter().map(|l| 1.0 / l).filter(|g| *g <= g_cap).collect();
    let count_ge_one = lambdas.iter().filter(|l| **l >= 1.0).count();
    Ok(BsDiagnostic { lambdas, thresholds, count_ge_one, predicted_count: count_ge_one + 1, fd_count: None, discrepancy: None })
}
