//! The invariant suite: every numerical promise of the library checked
//! against an independent computation, one pass/fail outcome per check.
//!
//! The checks are exposed individually so that callers (the CLI, the
//! integration tests) can run any subset; the expensive shared inputs
//! (oracle counts, kernel builds) are computed once and passed in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::bound::{compute_bound, k0_invariance_scan, prepared_field, BoundTerms, K0Scan, KernelSettings};
use crate::bskernel::{build_a, build_k, build_kprime};
use crate::conditions::{angular_log_closed_form, classify_a17, condition_integrals, default_a17_cutoffs, Verdict};
use crate::error::Result;
use crate::oracle::{
    bs_coupling_diagnostic, fd_count_search, fd_negative_count, radial_count, trajectories, FdGrid, FdSettings,
    SpectralCount,
};
use crate::potential::{sample_negative_part, Grid2D, PotentialSpec, SampledField, Term};
use crate::quadrature::adaptive_integrate;
use crate::rearrangement::{luttinger_check, rearrange, DecreasingKernel};

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub spec: PotentialSpec,
}

/// Six test potentials: deep and shallow Gaussian wells, an asymmetric
/// double well, a disk, a ring, and a well with a repulsive bump.
pub fn corpus() -> Vec<CorpusEntry> {
    let terms = |t: Vec<Term>| PotentialSpec::sum_of_terms(t).expect("valid corpus potential");
    vec![
        CorpusEntry { name: "deep_gaussian", spec: PotentialSpec::gaussian_well(5.0, 1.0, [0.0, 0.0]).expect("valid") },
        CorpusEntry { name: "shallow_gaussian", spec: PotentialSpec::gaussian_well(0.5, 1.0, [0.0, 0.0]).expect("valid") },
        CorpusEntry {
            name: "double_well",
            spec: terms(vec![
                Term::Gaussian { amplitude: -4.0, width: 0.8, center: [-1.2, 0.0] },
                Term::Gaussian { amplitude: -2.5, width: 0.6, center: [1.0, 0.3] },
            ]),
        },
        CorpusEntry { name: "disk", spec: PotentialSpec::circular_well(2.0, 1.5).expect("valid") },
        CorpusEntry {
            name: "ring",
            spec: terms(vec![Term::Ring { amplitude: -3.0, radius: 2.0, width: 0.5, center: [0.0, 0.0] }]),
        },
        CorpusEntry {
            name: "well_bump",
            spec: terms(vec![
                Term::Gaussian { amplitude: -4.0, width: 1.0, center: [0.0, 0.0] },
                Term::Gaussian { amplitude: 3.0, width: 0.5, center: [1.2, 0.0] },
            ]),
        },
    ]
}

pub const CORPUS_COUPLINGS: [f64; 3] = [0.5, 1.0, 5.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    /// Per-case lines, including logged (non-asserted) discrepancies.
    pub details: Vec<String>,
}

impl CheckOutcome {
    fn new(id: u8, name: &str, passed: bool, summary: String, details: Vec<String>) -> Self {
        Self { id, name: name.to_owned(), passed, summary, details }
    }

    fn failed_with(id: u8, name: &str, err: &crate::Error) -> Self {
        Self::new(id, name, false, format!("could not run: {err}"), Vec::new())
    }

    pub fn line(&self) -> String {
        format!("{} [{:>2}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.summary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn new(suite: &str, checks: Vec<CheckOutcome>) -> Self {
        Self { suite: suite.to_owned(), passed: checks.iter().all(|c| c.passed), checks }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Kernel grid points per axis.
    pub kernel_n: usize,
    /// Oracle box points per axis (the refined box uses 1.5×).
    pub oracle_n: usize,
    /// Oracle box half-widths tried, in units of the potential's default box.
    pub box_multipliers: Vec<f64>,
    pub k0_list: Vec<f64>,
    pub g_scaling: Vec<f64>,
    pub seed: u64,
    pub random_pairs: usize,
    /// Kernel grids for the Birman–Schwinger comparison (dense eigensolves).
    pub bs_grids: Vec<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            kernel_n: 64,
            oracle_n: 128,
            box_multipliers: vec![1.5, 3.0, 6.0],
            k0_list: vec![0.1, 0.5, 1.0, 2.0, 10.0],
            g_scaling: vec![0.1, 1.0, 10.0, 100.0],
            seed: 20_260_101,
            random_pairs: 20,
            bs_grids: vec![32, 48],
        }
    }
}

fn kernel_grid(spec: &PotentialSpec, n: usize) -> Result<Grid2D> {
    Grid2D::new(spec.default_half_width()?, n)
}

/// Bound and converged oracle count for one corpus potential at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub name: String,
    pub g: f64,
    pub n_total_bound: f64,
    pub n_i_bound: f64,
    pub oracle: SpectralCount,
}

/// Bounds at `n = kernel_n` and box-searched oracle counts for every corpus
/// potential and coupling.
pub fn oracle_rows(corpus: &[CorpusEntry], couplings: &[f64], opts: &VerifyOptions) -> Result<Vec<OracleRow>> {
    let jobs: Vec<(usize, f64)> = (0..corpus.len()).flat_map(|i| couplings.iter().map(move |&g| (i, g))).collect();
    let unit: Vec<BoundTerms> = corpus
        .iter()
        .map(|e| {
            let spec = e.spec.clone().with_coupling(1.0)?;
            let r = compute_bound(&spec, &kernel_grid(&spec, opts.kernel_n)?, &KernelSettings::default())?;
            Ok(BoundTerms { t1: r.t1, t2: r.t2, t3: r.t3 })
        })
        .collect::<Result<_>>()?;
    jobs.par_iter()
        .map(|&(i, g)| {
            let e = &corpus[i];
            let t = unit[i].rescaled(g);
            let l0 = e.spec.default_half_width()?;
            let oracle = fd_count_search(&e.spec, g, l0, opts.oracle_n, &opts.box_multipliers, None)?;
            Ok(OracleRow { name: e.name.to_owned(), g, n_total_bound: 1.0 + t.deflated_trace(), n_i_bound: t.type_one(), oracle })
        })
        .collect()
}

/// Main inequality: the bound is at least the converged oracle count everywhere.
pub fn check_main_inequality(rows: &[OracleRow]) -> CheckOutcome {
    let mut details = Vec::new();
    let mut violations = 0;
    let mut unconverged = 0;
    let mut min_margin = f64::INFINITY;
    for r in rows {
        let ok = r.n_total_bound >= r.oracle.count as f64;
        if !r.oracle.converged {
            unconverged += 1;
        } else if !ok {
            violations += 1;
        }
        if r.oracle.converged {
            min_margin = min_margin.min(r.n_total_bound - r.oracle.count as f64);
        }
        details.push(format!(
            "{} g={}: bound {:.4} vs count {} (L_box {:.3}, {})",
            r.name,
            r.g,
            r.n_total_bound,
            r.oracle.count,
            r.oracle.half_width,
            if r.oracle.converged { "converged" } else { "NOT converged" }
        ));
    }
    let passed = violations == 0 && unconverged == 0 && !rows.is_empty();
    let summary = format!(
        "{} cases, {violations} violations, {unconverged} unconverged oracle counts, min margin {min_margin:.4}",
        rows.len()
    );
    CheckOutcome::new(1, "main inequality", passed, summary, details)
}

/// Kernel-level quantities shared by the algebraic checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelStudy {
    pub name: String,
    pub scan: K0Scan,
    /// Terms at `k0 = 1`, unit coupling.
    pub unit_terms: BoundTerms,
    /// `‖K'a‖ / ‖K‖_F`.
    pub annihilation: f64,
    /// `tr K'²` summed entry by entry from the explicit `K'`.
    pub kprime_trace: f64,
}

pub fn kernel_study(entry: &CorpusEntry, opts: &VerifyOptions) -> Result<KernelStudy> {
    let spec = entry.spec.clone().with_coupling(1.0)?;
    let grid = kernel_grid(&spec, opts.kernel_n)?;
    let (field, _, _) = prepared_field(&spec, &grid, &KernelSettings::default())?;
    let scan = k0_invariance_scan(&field, &opts.k0_list)?;
    let k = build_k(&field, 1.0)?;
    let a = build_a(&field)?;
    let unit_terms = crate::bound::bound_terms(&k, &a)?;
    let kp = build_kprime(&k, &a)?;
    let annihilation = (kp.entries() * &a.a).norm() / k.frobenius_norm();
    let kprime_trace = kp.frobenius_sq();
    Ok(KernelStudy { name: entry.name.to_owned(), scan, unit_terms, annihilation, kprime_trace })
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b.abs().max(a.abs())).abs()
    }
}

/// Scale invariance of `T1 - 2T2 + T3²` over the `k0` list.
pub fn check_scale_invariance(studies: &[KernelStudy]) -> CheckOutcome {
    let worst = studies.iter().map(|s| s.scan.max_rel_deviation).fold(0.0, f64::max);
    let details = studies
        .iter()
        .map(|s| {
            format!(
                "{}: deflated trace dev {:.2e}, T1-T2 dev {:.2e}, T1 alone varies {:.2e}",
                s.name, s.scan.max_rel_deviation, s.scan.type_one_max_rel_deviation, s.scan.t1_rel_spread
            )
        })
        .collect();
    let passed = !studies.is_empty() && worst <= 1e-10;
    CheckOutcome::new(2, "k0 scale invariance", passed, format!("max rel deviation {worst:.2e} (tol 1e-10)"), details)
}

/// `K'a = 0` and `tr K'² = T1 - 2T2 + T3²` through two code paths.
pub fn check_deflation(studies: &[KernelStudy]) -> CheckOutcome {
    let worst_a = studies.iter().map(|s| s.annihilation).fold(0.0, f64::max);
    let worst_t = studies.iter().map(|s| rel(s.kprime_trace, s.unit_terms.deflated_trace())).fold(0.0, f64::max);
    let details = studies
        .iter()
        .map(|s| {
            format!(
                "{}: |K'a|/|K|_F {:.2e}, trace rel err {:.2e}",
                s.name,
                s.annihilation,
                rel(s.kprime_trace, s.unit_terms.deflated_trace())
            )
        })
        .collect();
    let passed = !studies.is_empty() && worst_a <= 1e-12 && worst_t <= 1e-10;
    CheckOutcome::new(
        3,
        "deflation identities",
        passed,
        format!("max |K'a|/|K|_F {worst_a:.2e} (tol 1e-12), max trace rel err {worst_t:.2e} (tol 1e-10)"),
        details,
    )
}

/// `T2 >= T3²` and `N_total <= 1 + N_I` at every scale and coupling.
pub fn check_cauchy_schwarz(studies: &[KernelStudy], couplings: &[f64]) -> CheckOutcome {
    let mut cases = 0;
    let mut failures = Vec::new();
    let mut min_gap = f64::INFINITY;
    for s in studies {
        for row in &s.scan.rows {
            for &g in couplings {
                let t = row.terms.rescaled(g);
                cases += 1;
                let n_total = 1.0 + t.deflated_trace();
                let n_i = t.type_one();
                min_gap = min_gap.min((t.t2 - t.t3 * t.t3) / t.t2.max(f64::MIN_POSITIVE));
                if !(t.t2 >= t.t3 * t.t3 && n_total <= 1.0 + n_i) {
                    failures.push(format!("{} k0={} g={g}: T2={} T3²={}", s.name, row.k0, t.t2, t.t3 * t.t3));
                }
            }
        }
    }
    let passed = cases > 0 && failures.is_empty();
    CheckOutcome::new(
        4,
        "Cauchy-Schwarz chain",
        passed,
        format!("{cases} cases, {} failures, min (T2-T3²)/T2 = {min_gap:.3e}", failures.len()),
        failures,
    )
}

/// `(N_total(g) - 1)/g²` constant over the coupling list.
pub fn check_g_scaling(studies: &[KernelStudy], g_list: &[f64]) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for s in studies {
        match crate::bound::g_scaling_check(s.unit_terms, g_list) {
            Ok(r) => {
                worst = worst.max(r.max_rel_spread);
                details.push(format!("{}: spread {:.2e}", s.name, r.max_rel_spread));
            }
            Err(e) => return CheckOutcome::failed_with(5, "g² scaling", &e),
        }
    }
    let passed = !studies.is_empty() && worst <= 1e-12;
    CheckOutcome::new(5, "g² scaling", passed, format!("max rel spread {worst:.2e} (tol 1e-12)"), details)
}

/// Direct `θ` average of `ln²(rx² + ry² - 2 rx ry cos θ)`.
pub fn angular_log_quadrature(rx: f64, ry: f64) -> Result<f64> {
    let f = |t: f64| (rx * rx + ry * ry - 2.0 * rx * ry * t.cos()).ln().powi(2);
    // the integrand is even in θ
    Ok(adaptive_integrate(f, 0.0, PI, 1e-13, 1e-14)?.value / PI)
}

/// Closed form of the angular average against quadrature on random radius
/// pairs, and its limiting constant as the radii meet.
pub fn check_angular_identity(seed: u64, pairs: usize) -> CheckOutcome {
    let name = "angular identity";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for _ in 0..pairs {
        let rx = 10f64.powf(rng.gen_range(-1.5..1.0));
        let ry = rx * rng.gen_range(0.0..0.95);
        let (closed, direct) = match (angular_log_closed_form(rx, ry), angular_log_quadrature(rx, ry)) {
            (Ok(c), Ok(d)) => (c, d),
            (Err(e), _) | (_, Err(e)) => return CheckOutcome::failed_with(6, name, &e),
        };
        worst = worst.max((closed - direct).abs());
        details.push(format!("rx={rx:.6} ry={ry:.6}: closed {closed:.12} direct {direct:.12}"));
    }
    let limit_err = [0.3, 1.0, 4.0]
        .iter()
        .map(|&rx: &f64| {
            let ry = rx * (1.0 - 1e-13);
            angular_log_closed_form(rx, ry).map(|v| (v - 4.0 * rx.ln().powi(2) - PI * PI / 3.0).abs())
        })
        .collect::<Result<Vec<_>>>();
    let limit_err = match limit_err {
        Ok(v) => v.into_iter().fold(0.0, f64::max),
        Err(e) => return CheckOutcome::failed_with(6, name, &e),
    };
    let passed = pairs > 0 && worst <= 1e-8 && limit_err <= 1e-9;
    CheckOutcome::new(
        6,
        name,
        passed,
        format!("{pairs} pairs, max abs err {worst:.2e} (tol 1e-8); limit err {limit_err:.2e} (tol 1e-9)"),
        details,
    )
}

/// `I = I₊ + I₋` and both appendix bounds on every corpus potential.
pub fn check_appendix_chain(corpus: &[CorpusEntry], n: usize) -> CheckOutcome {
    let name = "appendix inequality chain";
    let mut details = Vec::new();
    let mut passed = !corpus.is_empty();
    let mut worst_split = 0.0f64;
    for e in corpus {
        let run = || -> Result<_> {
            let spec = e.spec.clone().with_coupling(1.0)?;
            let field = sample_negative_part(&spec, &kernel_grid(&spec, n)?)?;
            condition_integrals(&field, &rearrange(&field))
        };
        match run() {
            Ok(r) if r.flags.finite => {
                worst_split = worst_split.max(r.flags.split_residual);
                let ok = r.flags.split_residual <= 1e-10 && r.flags.a8_holds && r.flags.a14_holds;
                passed &= ok;
                details.push(format!(
                    "{}: split residual {:.1e}, I+ {:.4e} <= {:.4e}, I- {:.4e} <= {:.4e}",
                    e.name, r.flags.split_residual, r.i_plus, r.rhs_a8, r.i_minus, r.rhs_a14
                ));
            }
            Ok(_) => details.push(format!("{}: conditions not finite, skipped", e.name)),
            Err(err) => return CheckOutcome::failed_with(7, name, &err),
        }
    }
    CheckOutcome::new(
        7,
        name,
        passed,
        format!("{} potentials, max split residual {worst_split:.2e} (tol 1e-10)", corpus.len()),
        details,
    )
}

fn random_field(rng: &mut ChaCha8Rng, grid: Grid2D) -> Result<SampledField> {
    if rng.gen_bool(0.5) {
        let density = rng.gen_range(0.2..0.9);
        let v = (0..grid.len()).map(|_| if rng.gen_bool(density) { rng.gen::<f64>() } else { 0.0 }).collect();
        SampledField::from_values(grid, v)
    } else {
        let bumps: Vec<Term> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let c = grid.node(rng.gen_range(0..grid.len()));
                Term::Gaussian { amplitude: -rng.gen_range(0.2..2.0), width: rng.gen_range(0.2..0.8), center: c }
            })
            .collect();
        sample_negative_part(&PotentialSpec::sum_of_terms(bumps)?, &grid)
    }
}

fn random_kernel(rng: &mut ChaCha8Rng) -> DecreasingKernel {
    match rng.gen_range(0..3) {
        0 => DecreasingKernel::LnMinusSq,
        1 => DecreasingKernel::Indicator { radius: rng.gen_range(0.2..1.5) },
        _ => DecreasingKernel::Gaussian { width: rng.gen_range(0.2..1.5) },
    }
}

/// Rearrangement inequality on random non-negative field pairs, and its equality case.
pub fn check_luttinger(seed: u64, pairs: usize) -> CheckOutcome {
    let name = "rearrangement inequality";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let run = |rng: &mut ChaCha8Rng| -> Result<(f64, Vec<String>, f64)> {
        let grid = Grid2D::new(2.0, 20)?;
        let mut worst = f64::NEG_INFINITY;
        let mut details = Vec::new();
        for _ in 0..pairs {
            let a = random_field(rng, grid)?;
            let c = random_field(rng, grid)?;
            let kernel = random_kernel(rng);
            let (lhs, rhs) = luttinger_check(&a, &kernel, &c)?;
            let excess = if rhs > 0.0 { lhs / rhs - 1.0 } else { lhs };
            worst = worst.max(excess);
            details.push(format!("{kernel:?}: lhs {lhs:.6e} rhs {rhs:.6e}"));
        }
        let cgrid = Grid2D::new(3.0, 32)?;
        let a = sample_negative_part(&PotentialSpec::gaussian_well(1.0, 0.9, [0.0, 0.0])?, &cgrid)?;
        let c = sample_negative_part(&PotentialSpec::circular_well(2.0, 1.2)?, &cgrid)?;
        let mut eq = 0.0f64;
        for kernel in [DecreasingKernel::LnMinusSq, DecreasingKernel::Gaussian { width: 0.7 }] {
            let (lhs, rhs) = luttinger_check(&a, &kernel, &c)?;
            eq = eq.max(rel(lhs, rhs));
        }
        Ok((worst, details, eq))
    };
    match run(&mut rng) {
        Ok((worst, details, eq)) => CheckOutcome::new(
            8,
            name,
            pairs > 0 && worst <= 1e-8 && eq <= 1e-8,
            format!("{pairs} pairs, max lhs/rhs - 1 = {worst:.3e} (tol 1e-8); concentric rel gap {eq:.2e} (tol 1e-8)"),
            details,
        ),
        Err(e) => CheckOutcome::failed_with(8, name, &e),
    }
}

/// The three convergence regimes of the log-log singular family.
pub fn check_a17() -> CheckOutcome {
    let name = "gamma classification";
    let expected = [
        (0.4, Verdict::Divergent, Verdict::Divergent),
        (0.75, Verdict::Convergent, Verdict::Divergent),
        (1.5, Verdict::Convergent, Verdict::Convergent),
    ];
    let cutoffs = default_a17_cutoffs();
    let mut details = Vec::new();
    let mut passed = true;
    for (gamma, i, a3) in expected {
        match classify_a17(gamma, &cutoffs) {
            Ok(c) => {
                let ok = c.i == i && c.a3 == a3;
                passed &= ok;
                details.push(format!("gamma={gamma}: {} (expected I: {i}, A3: {a3})", c.verdict_line()));
            }
            Err(e) => return CheckOutcome::failed_with(9, name, &e),
        }
    }
    let summary = details.join("; ");
    CheckOutcome::new(9, name, passed, summary, details)
}

/// Monotone trajectories, Feynman–Hellmann slopes, and binding of a moderate shallow well.
pub fn check_spectral_flow(corpus: &[CorpusEntry]) -> CheckOutcome {
    let name = "spectral flow";
    let run = || -> Result<(bool, String, Vec<String>)> {
        let g_list: Vec<f64> = (0..9).map(|i| 0.4 + 0.2 * f64::from(i)).collect();
        let mut details = Vec::new();
        let mut ok = true;
        let mut branches = 0;
        let mut worst_fh = 0.0f64;
        for e in corpus.iter().filter(|e| matches!(e.name, "deep_gaussian" | "double_well")) {
            let grid = FdGrid::new(1.5 * e.spec.default_half_width()?, 64)?;
            let rep = trajectories(&e.spec, &g_list, grid, None)?;
            branches += rep.branches.len();
            worst_fh = worst_fh.max(rep.max_fh_rel_err());
            ok &= rep.all_monotone() && rep.max_fh_rel_err() <= 0.05 && !rep.branches.is_empty();
            details.push(format!(
                "{}: {} branches, monotone {}, max FH rel err {:.2e}, ambiguous intervals {:?}",
                e.name,
                rep.branches.len(),
                rep.all_monotone(),
                rep.max_fh_rel_err(),
                rep.ambiguous_intervals
            ));
        }
        // moderate depth: the binding length fits the box
        let shallow = PotentialSpec::gaussian_well(2.0, 1.0, [0.0, 0.0])?;
        let fd = fd_negative_count(&shallow, 1.0, &FdSettings { half_width: 8.0, n: 96, tol_e: None, eigenvalues: true })?;
        let disk = radial_count(&PotentialSpec::circular_well(0.2, 1.0)?, 8)?;
        let binds = fd.converged && fd.count >= 1 && disk.total >= 1;
        ok &= binds;
        details.push(format!(
            "shallow Gaussian (depth 2): fd count {} (converged {}, E {:?}); shallow disk (depth 0.2): radial count {}",
            fd.count, fd.converged, fd.eigenvalues, disk.total
        ));
        let summary = format!("{branches} branches, max FH rel err {worst_fh:.2e} (tol 5e-2), shallow wells bind: {binds}");
        Ok((ok, summary, details))
    };
    match run() {
        Ok((ok, summary, details)) => CheckOutcome::new(10, name, ok, summary, details),
        Err(e) => CheckOutcome::failed_with(10, name, &e),
    }
}

/// Radial against finite-difference counts on converged central cases, and
/// the Birman–Schwinger threshold count against the oracle.
///
/// The shallow Gaussian is excluded from the radial comparison: its single
/// state is bound by far less than the box tolerance. Only the deep Gaussian
/// asserts the ±1 Birman–Schwinger window; other potentials are logged.
pub fn check_cross_oracle(corpus: &[CorpusEntry], rows: &[OracleRow], opts: &VerifyOptions) -> CheckOutcome {
    let name = "cross-oracle agreement";
    let run = || -> Result<(bool, String, Vec<String>)> {
        let mut details = Vec::new();
        let mut ok = true;
        let mut compared = 0;
        for r in rows.iter().filter(|r| matches!(r.name.as_str(), "deep_gaussian" | "disk" | "ring")) {
            if !r.oracle.converged {
                details.push(format!("{} g={}: fd not converged, skipped", r.name, r.g));
                continue;
            }
            let spec = &corpus.iter().find(|e| e.name == r.name).expect("row from corpus").spec;
            let rc = radial_count(&spec.clone().with_coupling(spec.coupling() * r.g)?, 64)?;
            compared += 1;
            ok &= rc.complete && rc.total == r.oracle.count;
            details.push(format!("{} g={}: radial {} fd {}", r.name, r.g, rc.total, r.oracle.count));
        }
        let deep_disk = PotentialSpec::circular_well(100.0, 1.0)?;
        let rc = radial_count(&deep_disk, 64)?;
        let fd = fd_count_search(&deep_disk, 1.0, deep_disk.default_half_width()?, opts.oracle_n, &opts.box_multipliers, None)?;
        compared += 1;
        ok &= fd.converged && rc.total == fd.count;
        details.push(format!("deep disk (depth 100): radial {} fd {} (converged {})", rc.total, fd.count, fd.converged));
        ok &= compared >= 4;

        let mut max_deep = 0i64;
        let mut logged = Vec::new();
        for e in corpus {
            let grids: &[usize] = if e.name == "deep_gaussian" { &opts.bs_grids } else { &opts.bs_grids[..1] };
            for &n in grids {
                let spec = e.spec.clone().with_coupling(1.0)?;
                let (field, _, _) = prepared_field(&spec, &kernel_grid(&spec, n)?, &KernelSettings::default())?;
                let k = build_k(&field, 1.0)?;
                let a = build_a(&field)?;
                let diag = bs_coupling_diagnostic(&build_kprime(&k, &a)?, 100.0)?;
                for r in rows.iter().filter(|r| r.name == e.name && r.oracle.converged) {
                    // eigenvalues of g K' are g λ
                    let predicted = diag.lambdas.iter().filter(|l| r.g * **l >= 1.0).count() + 1;
                    let d = predicted as i64 - r.oracle.count as i64;
                    if e.name == "deep_gaussian" {
                        max_deep = max_deep.max(d.abs());
                        ok &= d.abs() <= 1;
                    }
                    logged.push(format!(
                        "B-S {} n={n} g={}: predicted {predicted} fd {} discrepancy {d:+}",
                        e.name, r.g, r.oracle.count
                    ));
                }
            }
        }
        details.extend(logged);
        let summary = format!("{compared} radial/fd comparisons; deep Gaussian B-S max |discrepancy| {max_deep} (tol 1)");
        Ok((ok, summary, details))
    };
    match run() {
        Ok((ok, summary, details)) => CheckOutcome::new(11, name, ok, summary, details),
        Err(e) => CheckOutcome::failed_with(11, name, &e),
    }
}

/// Angular identity, appendix chain and rearrangement inequality.
pub fn appendix_suite(opts: &VerifyOptions) -> SuiteReport {
    let corpus = corpus();
    SuiteReport::new(
        "appendix",
        vec![
            check_angular_identity(opts.seed, opts.random_pairs),
            check_appendix_chain(&corpus, opts.kernel_n),
            check_luttinger(opts.seed.wrapping_add(1), opts.random_pairs),
        ],
    )
}

/// Every check, in order. `progress` receives each outcome as it completes.
pub fn full_suite(opts: &VerifyOptions, mut progress: impl FnMut(&CheckOutcome)) -> SuiteReport {
    let corpus = corpus();
    let mut checks = Vec::new();
    let mut push = |c: CheckOutcome, checks: &mut Vec<CheckOutcome>| {
        progress(&c);
        checks.push(c);
    };
    let rows = oracle_rows(&corpus, &CORPUS_COUPLINGS, opts);
    match &rows {
        Ok(r) => push(check_main_inequality(r), &mut checks),
        Err(e) => push(CheckOutcome::failed_with(1, "main inequality", e), &mut checks),
    }
    match corpus.iter().map(|e| kernel_study(e, opts)).collect::<Result<Vec<_>>>() {
        Ok(studies) => {
            push(check_scale_invariance(&studies), &mut checks);
            push(check_deflation(&studies), &mut checks);
            push(check_cauchy_schwarz(&studies, &CORPUS_COUPLINGS), &mut checks);
            push(check_g_scaling(&studies, &opts.g_scaling), &mut checks);
        }
        Err(e) => {
            for (id, name) in [(2, "k0 scale invariance"), (3, "deflation identities"), (4, "Cauchy-Schwarz chain"), (5, "g² scaling")] {
                push(CheckOutcome::failed_with(id, name, &e), &mut checks);
            }
        }
    }
    push(check_angular_identity(opts.seed, opts.random_pairs), &mut checks);
    push(check_appendix_chain(&corpus, opts.kernel_n), &mut checks);
    push(check_luttinger(opts.seed.wrapping_add(1), opts.random_pairs), &mut checks);
    push(check_a17(), &mut checks);
    push(check_spectral_flow(&corpus), &mut checks);
    match &rows {
        Ok(r) => push(check_cross_oracle(&corpus, r, opts), &mut checks),
        Err(e) => push(CheckOutcome::failed_with(11, "cross-oracle agreement", e), &mut checks),
    }
    SuiteReport::new("all", checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_valid() {
        let c = corpus();
        assert_eq!(c.len(), 6);
        assert!(c.iter().any(|e| !e.spec.is_central()));
        for e in &c {
            assert!(e.spec.default_half_width().unwrap() > 0.0);
        }
    }

    #[test]
    fn quick_checks_pass() {
        assert!(check_angular_identity(3, 5).passed);
        assert!(check_a17().passed);
        let out = check_luttinger(5, 4);
        assert!(out.passed, "{}", out.line());
    }

    #[test]
    fn main_inequality_flags_violations() {
        let row = |bound: f64, count: usize, converged: bool| OracleRow {
            name: "x".into(),
            g: 1.0,
            n_total_bound: bound,
            n_i_bound: bound,
            oracle: SpectralCount {
                count,
                eigenvalues: vec![],
                n: 32,
                half_width: 1.0,
                tol_e: 1e-3,
                g: 1.0,
                converged,
                scan: vec![],
            },
        };
        assert!(check_main_inequality(&[row(2.5, 2, true)]).passed);
        assert!(!check_main_inequality(&[row(1.5, 2, true)]).passed);
        assert!(!check_main_inequality(&[row(2.5, 2, false)]).passed);
        assert!(!check_main_inequality(&[]).passed);
    }
}
