//! Command-line front end. [`run`] parses arguments, executes one subcommand
//! and returns the process exit status: 0 on success, 1 when a checked
//! property fails or output cannot be written, 2 on configuration or usage
//! errors.

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use std::path::{Path, PathBuf};

use crate::bound::{compute_bound, g_scaling_check, k0_invariance_scan, prepared_field, BoundReport, BoundTerms};
use crate::conditions::{classify_a17, condition_integrals, default_a17_cutoffs, ConditionReport};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::oracle::{fd_negative_count, radial_count, trajectories, FdGrid, RadialCount, SpectralCount};
use crate::potential::sample_negative_part;
use crate::rearrangement::rearrange;
use crate::report::{object_to_csv, render_json, rows_to_csv, with_provenance, write_text, Format};
use crate::verify::{appendix_suite, full_suite, SuiteReport, VerifyOptions};

#[derive(Parser, Debug)]
#[command(name = "s2b", version, about = "Bound-state counting bounds for 2D Schrödinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the bound and its scale/coupling properties.
    #[command(subcommand)]
    Bound(BoundCmd),
    /// Brute-force spectral counts.
    #[command(subcommand)]
    Oracle(OracleCmd),
    /// Finiteness conditions and the singular-family classification.
    #[command(subcommand)]
    Conditions(ConditionsCmd),
    /// Run check suites.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand, Debug)]
enum BoundCmd {
    Compute(Common),
    ScanK0(Common),
    ScanG(Common),
}

#[derive(Subcommand, Debug)]
enum OracleCmd {
    Count(Common),
    Trajectories(Common),
}

#[derive(Subcommand, Debug)]
enum ConditionsCmd {
    Check(Common),
    A17(A17Args),
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    Appendix(Output),
    All(Output),
}

#[derive(Args, Debug, Clone)]
struct Output {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    verbose: bool,
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    output: Output,
    #[arg(long)]
    k0: Option<f64>,
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long = "grid-L")]
    grid_l: Option<f64>,
    /// Coupling: replaces the potential's own for `bound`/`conditions`,
    /// multiplies it for `oracle count`.
    #[arg(long)]
    g: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct A17Args {
    #[arg(long)]
    gamma: f64,
    #[command(flatten)]
    output: Output,
}

/// Outcome of a subcommand that completed: `false` means a checked property failed.
type Outcome = Result<bool>;

/// Runs the command line `argv` (including the program name) and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) | Error::EmptyActiveSet | Error::DimensionMismatch { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("S2B_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0) {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Bound(BoundCmd::Compute(c)) => bound_compute(&c),
        Command::Bound(BoundCmd::ScanK0(c)) => bound_scan_k0(&c),
        Command::Bound(BoundCmd::ScanG(c)) => bound_scan_g(&c),
        Command::Oracle(OracleCmd::Count(c)) => oracle_count(&c),
        Command::Oracle(OracleCmd::Trajectories(c)) => oracle_trajectories(&c),
        Command::Conditions(ConditionsCmd::Check(c)) => conditions_check(&c),
        Command::Conditions(ConditionsCmd::A17(a)) => conditions_a17(&a),
        Command::Verify(VerifyCmd::Appendix(o)) => verify(&o, false),
        Command::Verify(VerifyCmd::All(o)) => verify(&o, true),
    }
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(k0) = c.k0 {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::Config(format!("--k0 must be > 0, got {k0}")));
        }
        cfg.kernel.k0 = k0;
    }
    if let Some(n) = c.grid_n {
        cfg.grid.n = n;
    }
    if let Some(l) = c.grid_l {
        cfg.grid.half_width = Some(l);
    }
    if c.verbose() {
        eprintln!("config {} (hash {})", c.config.display(), cfg.hash());
    }
    Ok(cfg)
}

impl Common {
    fn verbose(&self) -> bool {
        self.output.verbose
    }
}

fn emit(output: &Output, value: &Value, default: Format) -> Result<()> {
    let text = match output.format.unwrap_or(default) {
        Format::Json => render_json(value)?,
        Format::Csv => object_to_csv(value)?,
    };
    write_text(output.out.as_deref(), &text)
}

#[derive(Serialize)]
struct BoundComputeOutput<'a> {
    #[serde(flatten)]
    report: &'a BoundReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<SpectralCount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound_holds: Option<bool>,
}

fn bound_compute(c: &Common) -> Outcome {
    let mut cfg = load(c)?;
    if let Some(g) = c.g {
        cfg.potential = cfg.potential.with_coupling(g)?;
    }
    let grid = cfg.kernel_grid()?;
    let report = compute_bound(&cfg.potential, &grid, &cfg.kernel)?;
    let oracle = match &cfg.oracle {
        Some(_) => {
            let settings = cfg.fd_settings(false)?;
            if c.verbose() {
                eprintln!("oracle: L_box {} n_box {}", settings.half_width, settings.n);
            }
            Some(fd_negative_count(&cfg.potential, 1.0, &settings)?)
        }
        None => None,
    };
    let bound_holds = oracle.as_ref().map(|o| report.n_total_bound >= o.count as f64);
    if let (Some(o), Some(false)) = (&oracle, bound_holds) {
        eprintln!("bound {} is below the oracle count {}", report.n_total_bound, o.count);
    }
    let out = BoundComputeOutput { report: &report, oracle, bound_holds };
    emit(&c.output, &with_provenance(&out, &cfg.hash())?, Format::Json)?;
    Ok(bound_holds != Some(false))
}

fn bound_scan_k0(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let spec = cfg.potential.clone().with_coupling(c.g.unwrap_or(1.0))?;
    let (field, _, _) = prepared_field(&spec, &cfg.kernel_grid()?, &cfg.kernel)?;
    let field = field.scaled(spec.coupling());
    let scan = k0_invariance_scan(&field, &cfg.scan.k0_list)?;
    let ok = scan.max_rel_deviation <= 1e-10 && scan.type_one_max_rel_deviation <= 1e-10;
    let hash = cfg.hash();
    match c.output.format.unwrap_or(Format::Json) {
        Format::Json => write_text(c.output.out.as_deref(), &render_json(&with_provenance(&scan, &hash)?)?)?,
        Format::Csv => {
            let rows: Vec<Value> = scan
                .rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "k0": r.k0, "T1": r.terms.t1, "T2": r.terms.t2, "T3": r.terms.t3,
                        "deflated_trace": r.deflated_trace, "type_one": r.type_one,
                    })
                })
                .collect();
            write_text(c.output.out.as_deref(), &rows_to_csv(&rows)?)?;
        }
    }
    if !ok {
        eprintln!("scale invariance violated: max rel deviation {:.3e}", scan.max_rel_deviation);
    }
    Ok(ok)
}

fn bound_scan_g(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let unit = cfg.potential.clone().with_coupling(1.0)?;
    let r = compute_bound(&unit, &cfg.kernel_grid()?, &cfg.kernel)?;
    let terms = BoundTerms { t1: r.t1, t2: r.t2, t3: r.t3 };
    let g_list = match c.g {
        Some(g) => vec![g],
        None => cfg.scan.g_list.clone(),
    };
    let rep = g_scaling_check(terms, &g_list)?;
    let ok = rep.max_rel_spread <= 1e-12;
    let hash = cfg.hash();
    match c.output.format.unwrap_or(Format::Json) {
        Format::Json => write_text(c.output.out.as_deref(), &render_json(&with_provenance(&rep, &hash)?)?)?,
        Format::Csv => {
            let rows: Vec<Value> = rep
                .g
                .iter()
                .zip(&rep.n_total_bound)
                .map(|(g, n)| serde_json::json!({ "g": g, "N_total_bound": n }))
                .collect();
            write_text(c.output.out.as_deref(), &rows_to_csv(&rows)?)?;
        }
    }
    Ok(ok)
}

#[derive(Serialize)]
struct OracleCountOutput {
    fd: SpectralCount,
    #[serde(skip_serializing_if = "Option::is_none")]
    radial: Option<RadialCount>,
}

fn oracle_count(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let g = c.g.unwrap_or(1.0);
    let settings = cfg.fd_settings(true)?;
    let fd = fd_negative_count(&cfg.potential, g, &settings)?;
    let radial = if cfg.potential.is_central() {
        let scaled = cfg.potential.clone().with_coupling(cfg.potential.coupling() * g)?;
        Some(radial_count(&scaled, cfg.oracle_config().m_max)?)
    } else {
        None
    };
    if c.verbose() {
        eprintln!("fd count {} (converged {}), radial {:?}", fd.count, fd.converged, radial.as_ref().map(|r| r.total));
    }
    emit(&c.output, &with_provenance(&OracleCountOutput { fd, radial }, &cfg.hash())?, Format::Json)?;
    Ok(true)
}

fn oracle_trajectories(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let o = cfg.oracle_config();
    let settings = cfg.fd_settings(false)?;
    let grid = FdGrid::new(settings.half_width, settings.n)?;
    let rep = trajectories(&cfg.potential, &o.g_list, grid, o.tol_e)?;
    let ok = rep.all_monotone() && rep.max_fh_rel_err() <= 0.05;
    match c.output.format.unwrap_or(Format::Csv) {
        Format::Csv => write_text(c.output.out.as_deref(), &rep.to_csv())?,
        Format::Json => write_text(c.output.out.as_deref(), &render_json(&with_provenance(&rep, &cfg.hash())?)?)?,
    }
    if !rep.ambiguous_intervals.is_empty() {
        eprintln!("ambiguous branch matching on {:?}", rep.ambiguous_intervals);
    }
    if !ok {
        eprintln!("monotone: {}, max Feynman-Hellmann rel err {:.3e}", rep.all_monotone(), rep.max_fh_rel_err());
    }
    Ok(ok)
}

fn conditions_check(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let spec = cfg.potential.clone().with_coupling(c.g.unwrap_or(cfg.potential.coupling()))?;
    let field = sample_negative_part(&spec, &cfg.kernel_grid()?)?;
    let rep: ConditionReport = condition_integrals(&field, &rearrange(&field))?;
    let ok = !rep.flags.finite || (rep.flags.split_residual <= 1e-10 && rep.flags.a8_holds && rep.flags.a14_holds);
    emit(&c.output, &with_provenance(&rep, &cfg.hash())?, Format::Json)?;
    Ok(ok)
}

fn conditions_a17(a: &A17Args) -> Outcome {
    let cls = classify_a17(a.gamma, &default_a17_cutoffs())?;
    println!("{}", cls.verdict_line());
    if let Some(path) = &a.output.out {
        let text = match a.output.format.unwrap_or(Format::Csv) {
            Format::Csv => cls.to_csv(),
            Format::Json => render_json(&with_provenance(&cls, &args_hash(&serde_json::json!({ "gamma": a.gamma })))?)?,
        };
        write_text(Some(path), &text)?;
    }
    Ok(true)
}

fn args_hash(v: &Value) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(v.to_string().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn verify(o: &Output, all: bool) -> Outcome {
    let opts = VerifyOptions::default();
    let report: SuiteReport = if all {
        full_suite(&opts, |c| {
            println!("{}", c.line());
            if o.verbose {
                for d in &c.details {
                    println!("    {d}");
                }
            }
        })
    } else {
        let r = appendix_suite(&opts);
        for c in &r.checks {
            println!("{}", c.line());
        }
        r
    };
    println!("{}", if report.passed { "all checks passed" } else { "some checks FAILED" });
    if let Some(path) = &o.out {
        write_report(&report, path, o.format.unwrap_or(Format::Json))?;
    }
    Ok(report.passed)
}

fn write_report(report: &SuiteReport, path: &Path, format: Format) -> Result<()> {
    let hash = args_hash(&serde_json::json!({ "suite": report.suite }));
    let text = match format {
        Format::Json => render_json(&with_provenance(report, &hash)?)?,
        Format::Csv => {
            let rows: Vec<Value> = report
                .checks
                .iter()
                .map(|c| serde_json::json!({ "id": c.id, "name": c.name, "passed": c.passed, "summary": c.summary }))
                .collect();
            rows_to_csv(&rows)?
        }
    };
    write_text(Some(path), &text)
}
