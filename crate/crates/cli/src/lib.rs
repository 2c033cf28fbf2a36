//! Command-line runner: solves scenarios, sweeps the period, checks solution files
//! and writes reports, per-slot tables and traces.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use coexist::poa::{poa_solve_with, PoaOptions, PoaTraceRow};
use coexist::scalar::{db_to_linear, dbm_to_watts};
use coexist::scenario::scenario_to_toml;
use coexist::{
    communication_design, load_scenario_file, run_scheme, sample_rician_power, theorem1_sandwich,
    validate_solution, BcdOptions, BcdReport, Sandwich, ScenarioConfig, Scheme, Solution,
    Trajectory, Violation,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "coexist",
    version,
    about = "UAV uplink/downlink coexistence planner"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario with one scheme or solver.
    Solve(SolveArgs),
    /// Objective of every scheme over a list of periods.
    Sweep(SweepArgs),
    /// Expected-rate bounds against Monte Carlo samples under Rician fading.
    #[command(name = "validate-theorem1")]
    ValidateTheorem1(TheoremArgs),
    /// Polyblock optimum against the SCA design along the straight-line trajectory.
    #[command(name = "compare-poa-sca")]
    ComparePoaSca(CompareArgs),
    /// Validate a solution file against its scenario.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Outer tolerance (relative objective gain for BCD, vertex movement for POA).
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Outer iteration cap (BCD) or polyblock iteration cap (POA).
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Recorded in the report; every solver here is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Scheme id, `poa` or `sca-fixed` (the last two keep the straight-line trajectory).
    #[arg(long, default_value = "3d-traj-power")]
    pub scheme: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Periods in seconds; the slot duration of the scenario is kept.
    #[arg(long = "T-list", value_delimiter = ',', required = true)]
    pub t_list: Vec<f64>,
    /// Comma-separated scheme ids; all five by default.
    #[arg(long, value_delimiter = ',')]
    pub scheme: Vec<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TheoremArgs {
    /// Rician factor in dB, shared by the signal and interference links.
    #[arg(long = "K-db", default_value_t = 3.0)]
    pub k_db: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long = "out-dir", default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

/// Failure carrying its exit code; printed as one JSON record on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

impl CliError {
    fn new(kind: &'static str, exit_code: u8, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            exit_code,
            violations: Vec::new(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", EXIT_CONFIG, message)
    }

    fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new("io", EXIT_FAILURE, format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("error serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<coexist::Error> for CliError {
    fn from(e: coexist::Error) -> Self {
        use coexist::Error as E;
        let (kind, code) = match &e {
            E::Parse(_) | E::InvalidScenario(_) | E::DimensionGuard { .. } => {
                ("config", EXIT_CONFIG)
            }
            E::Dimension(_) | E::ZeroDistance { .. } => ("validation", EXIT_VALIDATION),
            E::MultipleActive { .. } => ("not-converged", EXIT_NOT_CONVERGED),
            _ => ("solver", EXIT_FAILURE),
        };
        Self::new(kind, code, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Hex SHA-256 of the canonical TOML form of a scenario.
pub fn scenario_digest(cfg: &ScenarioConfig<f64>) -> String {
    hex::encode(Sha256::digest(scenario_to_toml(cfg).as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Scheme(Scheme),
    Poa,
    ScaFixed,
}

impl Solver {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "poa" => Ok(Solver::Poa),
            "sca-fixed" => Ok(Solver::ScaFixed),
            _ => s
                .parse::<Scheme>()
                .map(Solver::Scheme)
                .map_err(|e| CliError::config(format!("{e}; or poa, sca-fixed"))),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Solver::Scheme(s) => s.id(),
            Solver::Poa => "poa",
            Solver::ScaFixed => "sca-fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub eps: f64,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub objective: f64,
    pub uplink_total: f64,
    pub downlink_total: f64,
    pub total_mbit: f64,
    pub iterations: usize,
    pub converged: bool,
    pub upper_bound: Option<f64>,
    pub max_residual: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Trace {
    Bcd(Vec<coexist::sca::BcdTraceRow>),
    Poa(Vec<PoaTraceRow>),
}

/// Deterministic part of a run; wall-clock time goes to `timing.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_digest: String,
    pub solver: String,
    pub options: SolverOptions,
    pub seed: u64,
    pub summary: Summary,
    pub notes: Vec<String>,
    pub trace: Trace,
}

pub struct Run {
    pub report: RunReport,
    pub solution: Solution<f64>,
    pub seconds: f64,
}

fn bcd_options(args: &SolverArgs) -> BcdOptions {
    let mut o = BcdOptions {
        eps: args.eps,
        ..Default::default()
    };
    if let Some(m) = args.max_iters {
        o.max_outer = m;
    }
    o
}

/// Runs one solver on a loaded scenario.
pub fn solve(cfg: &ScenarioConfig<f64>, solver: Solver, args: &SolverArgs) -> CliResult<Run> {
    let started = Instant::now();
    let (solution, trace) = match solver {
        Solver::Scheme(s) => {
            let BcdReport { solution, trace } = run_scheme(cfg, s, &bcd_options(args))?;
            (solution, Trace::Bcd(trace))
        }
        Solver::ScaFixed => {
            let traj = Trajectory::straight_line(cfg);
            let r = communication_design(cfg, &traj, &bcd_options(args))?;
            (r.solution, Trace::Bcd(r.trace))
        }
        Solver::Poa => {
            let mut o = PoaOptions {
                eps: args.eps,
                bisection_eps: args.eps,
                ..Default::default()
            };
            if let Some(m) = args.max_iters {
                o.max_iters = m;
            }
            let r = poa_solve_with(cfg, &Trajectory::straight_line(cfg), &o)?;
            (r.solution, Trace::Poa(r.trace))
        }
    };
    let seconds = started.elapsed().as_secs_f64();
    let violations = validate_solution(cfg, &solution, 1e-6)?.len();
    let d = &solution.diagnostics;
    let report = RunReport {
        scenario_digest: scenario_digest(cfg),
        solver: solver.id().into(),
        options: SolverOptions {
            eps: args.eps,
            max_iters: args.max_iters,
        },
        seed: args.seed,
        summary: Summary {
            objective: solution.objective,
            uplink_total: solution.rates.uplink_total,
            downlink_total: solution.rates.downlink_total,
            total_mbit: solution.total_mbit(cfg),
            iterations: d.iterations,
            converged: d.converged,
            upper_bound: d.upper_bound,
            max_residual: d.max_residual,
            violations,
        },
        notes: d.notes.clone(),
        trace,
    };
    Ok(Run {
        report,
        solution,
        seconds,
    })
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let io = |e: csv::Error| CliError::io(path, e);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Per-slot table. Row 0 holds the start positions only.
pub fn slot_table(
    cfg: &ScenarioConfig<f64>,
    sol: &Solution<f64>,
) -> (Vec<String>, Vec<Vec<String>>) {
    let (k_n, l_n) = (cfg.num_sns(), cfg.num_aps());
    let mut header: Vec<String> = ["n", "t", "q_bx", "q_by", "H_b", "q_ux", "q_uy", "H_u"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=l_n).map(|l| format!("x_{l}")));
    header.extend((1..=k_n).map(|k| format!("y_{k}")));
    header.push("p_u".into());
    header.extend((1..=k_n).map(|k| format!("p_s{k}")));
    header.push("r_u_total".into());
    header.push("r_s_total".into());
    let t = &sol.trajectory;
    let rows = (0..=cfg.slots)
        .map(|n| {
            let mut r = vec![
                n.to_string(),
                (n as f64 * cfg.slot_delta).to_string(),
                t.uav_bs.q[n][0].to_string(),
                t.uav_bs.q[n][1].to_string(),
                t.uav_bs.h[n].to_string(),
                t.uav_ap.q[n][0].to_string(),
                t.uav_ap.q[n][1].to_string(),
                t.uav_ap.h[n].to_string(),
            ];
            if n == 0 {
                r.extend(std::iter::repeat_n(String::new(), l_n + 2 * k_n + 3));
                return r;
            }
            let i = n - 1;
            r.extend(sol.schedule.x.iter().map(|row| row[i].to_string()));
            r.extend(sol.schedule.y.iter().map(|row| row[i].to_string()));
            r.push(sol.power.p_u[i].to_string());
            r.extend(sol.power.p_s.iter().map(|row| row[i].to_string()));
            r.push(sol.rates.downlink_in_slot(&sol.schedule, i).to_string());
            r.push(sol.rates.uplink_in_slot(&sol.schedule, i).to_string());
            r
        })
        .collect();
    (header, rows)
}

fn trace_table(trace: &Trace) -> (Vec<String>, Vec<Vec<String>>) {
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match trace {
        Trace::Bcd(rows) => (
            strs(&[
                "iteration",
                "objective",
                "schedule_gain",
                "trajectory_gain",
                "power_gain",
                "max_residual",
            ]),
            rows.iter()
                .map(|r| {
                    vec![
                        r.iteration.to_string(),
                        r.objective.to_string(),
                        r.schedule_gain.to_string(),
                        r.trajectory_gain.to_string(),
                        r.power_gain.to_string(),
                        r.max_residual.to_string(),
                    ]
                })
                .collect(),
        ),
        Trace::Poa(rows) => (
            strs(&[
                "block",
                "iteration",
                "vertices",
                "upper_bound",
                "lower_bound",
                "lambda",
            ]),
            rows.iter()
                .map(|r| {
                    vec![
                        r.block.to_string(),
                        r.iteration.to_string(),
                        r.vertices.to_string(),
                        r.upper_bound.to_string(),
                        r.lower_bound.to_string(),
                        r.lambda.to_string(),
                    ]
                })
                .collect(),
        ),
    }
}

#[derive(Serialize)]
struct Timing {
    wall_clock_s: f64,
}

/// Writes `report.json`, `solution.json`, `slots.csv`, `trace.csv` and `timing.json`.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig<f64>, run: &Run) -> CliResult<()> {
    create_dir(dir)?;
    write_json(&dir.join("report.json"), &run.report)?;
    write_json(&dir.join("solution.json"), &run.solution)?;
    let (h, rows) = slot_table(cfg, &run.solution);
    write_rows(&dir.join("slots.csv"), &h, &rows)?;
    let (h, rows) = trace_table(&run.report.trace);
    write_rows(&dir.join("trace.csv"), &h, &rows)?;
    write_json(
        &dir.join("timing.json"),
        &Timing {
            wall_clock_s: run.seconds,
        },
    )
}

fn load(path: &Path) -> CliResult<ScenarioConfig<f64>> {
    load_scenario_file(path).map_err(|e| {
        let mut err = CliError::from(e);
        let shown = path.display().to_string();
        if !err.message.contains(&shown) {
            err.message = format!("{shown}: {}", err.message);
        }
        err
    })
}

fn convergence(run: &Run) -> CliResult<()> {
    if run.report.summary.violations > 0 {
        return Err(CliError::new(
            "validation",
            EXIT_VALIDATION,
            format!(
                "{} returned a plan with {} violations",
                run.report.solver, run.report.summary.violations
            ),
        ));
    }
    if !run.report.summary.converged {
        return Err(CliError::new(
            "not-converged",
            EXIT_NOT_CONVERGED,
            format!(
                "{} stopped after {} iterations without meeting the tolerance",
                run.report.solver, run.report.summary.iterations
            ),
        ));
    }
    Ok(())
}

fn cmd_solve(a: &SolveArgs) -> CliResult<String> {
    let cfg = load(&a.scenario)?;
    let solver = Solver::parse(&a.scheme)?;
    let run = solve(&cfg, solver, &a.solver)?;
    write_run(&a.out_dir, &cfg, &run)?;
    convergence(&run)?;
    Ok(format!(
        "{} objective {:.6} ({:.3} Mbit) in {} iterations",
        solver.id(),
        run.report.summary.objective,
        run.report.summary.total_mbit,
        run.report.summary.iterations
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub period: f64,
    pub slots: usize,
    pub scheme: String,
    pub label: String,
    pub objective: f64,
    pub total_mbit: f64,
    pub converged: bool,
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<String> {
    let base = load(&a.scenario)?;
    let schemes: Vec<Scheme> = if a.scheme.is_empty() {
        Scheme::ALL.to_vec()
    } else {
        a.scheme
            .iter()
            .map(|s| {
                s.parse::<Scheme>()
                    .map_err(|e| CliError::config(e.to_string()))
            })
            .collect::<CliResult<_>>()?
    };
    let mut jobs = Vec::new();
    for &t in &a.t_list {
        let cfg = base.with_period(t).map_err(CliError::from)?;
        for &s in &schemes {
            jobs.push((t, cfg.clone(), s));
        }
    }
    create_dir(&a.out_dir)?;
    let results: Vec<CliResult<(SweepRow, Run)>> = jobs
        .par_iter()
        .map(|(t, cfg, s)| {
            let run = solve(cfg, Solver::Scheme(*s), &a.solver)?;
            let dir = a.out_dir.join(format!("T{t}")).join(s.id());
            write_run(&dir, cfg, &run)?;
            let row = SweepRow {
                period: *t,
                slots: cfg.slots,
                scheme: s.id().into(),
                label: s.label().into(),
                objective: run.report.summary.objective,
                total_mbit: run.report.summary.total_mbit,
                converged: run.report.summary.converged,
            };
            Ok((row, run))
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        let (row, run) = r?;
        convergence(&run)?;
        rows.push(row);
    }
    let mut header = vec!["T".to_string(), "N".to_string()];
    header.extend(schemes.iter().map(|s| s.label().to_string()));
    let table: Vec<Vec<String>> = a
        .t_list
        .iter()
        .map(|&t| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.period == t).collect();
            let mut line = vec![t.to_string(), mine[0].slots.to_string()];
            line.extend(mine.iter().map(|r| r.total_mbit.to_string()));
            line
        })
        .collect();
    write_rows(&a.out_dir.join("sweep.csv"), &header, &table)?;
    write_json(
        &a.out_dir.join("sweep.json"),
        &serde_json::json!({ "scenario_digest": scenario_digest(&base), "rows": rows }),
    )?;
    Ok(format!(
        "{} periods x {} schemes written to {}",
        a.t_list.len(),
        schemes.len(),
        a.out_dir.display()
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub p_dbm: f64,
    pub sandwich: Sandwich<f64>,
    pub ordered: bool,
    pub within_3se: bool,
}

/// Sandwich rows over transmit power for a 100 m link with a fixed interferer.
pub fn theorem1_rows(k_db: f64, samples: usize, seed: u64) -> CliResult<Vec<TheoremRow>> {
    if samples < 2 {
        return Err(CliError::config("need at least 2 samples"));
    }
    if !k_db.is_finite() {
        return Err(CliError::config("K-db must be finite"));
    }
    let k = db_to_linear(k_db);
    let gain = 1e-6 / 100.0f64.powi(2);
    let interference = 0.1 * 1e-6 / 300.0f64.powi(2);
    let noise = dbm_to_watts(-110.0);
    let hs = sample_rician_power(k, seed, samples);
    let hi = sample_rician_power(k, seed.wrapping_add(1), samples);
    let y: Vec<f64> = hi.iter().map(|v| noise + interference * v).collect();
    (-20..=30)
        .step_by(5)
        .map(|p_dbm| {
            let p = dbm_to_watts(p_dbm as f64);
            let x: Vec<f64> = hs.iter().map(|v| p * gain * v).collect();
            let sw = theorem1_sandwich(&x, &y)?;
            Ok(TheoremRow {
                p_dbm: p_dbm as f64,
                ordered: sw.bounds_ordered(),
                within_3se: sw.empirical_within(3.0),
                sandwich: sw,
            })
        })
        .collect()
}

fn cmd_theorem(a: &TheoremArgs) -> CliResult<String> {
    let rows = theorem1_rows(a.k_db, a.samples, a.seed)?;
    create_dir(&a.out_dir)?;
    let header: Vec<String> = [
        "p_dbm",
        "lower",
        "approx",
        "upper",
        "empirical",
        "empirical_se",
        "ordered",
        "within_3se",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let s = &r.sandwich;
            vec![
                r.p_dbm.to_string(),
                s.lower.to_string(),
                s.approx.to_string(),
                s.upper.to_string(),
                s.empirical.to_string(),
                s.empirical_se.to_string(),
                r.ordered.to_string(),
                r.within_3se.to_string(),
            ]
        })
        .collect();
    write_rows(&a.out_dir.join("theorem1.csv"), &header, &table)?;
    write_json(
        &a.out_dir.join("theorem1.json"),
        &serde_json::json!({
            "K_db": a.k_db,
            "samples": a.samples,
            "seed": a.seed,
            "rows": rows,
        }),
    )?;
    let bad = rows.iter().filter(|r| !(r.ordered && r.within_3se)).count();
    if bad > 0 {
        return Err(CliError::new(
            "validation",
            EXIT_VALIDATION,
            format!("{bad} of {} rows break the sandwich", rows.len()),
        ));
    }
    Ok(format!(
        "{} rows, all ordered and within 3 standard errors",
        rows.len()
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario_digest: String,
    pub sca_objective: f64,
    pub poa_objective: f64,
    pub poa_upper_bound: f64,
    pub poa_certified: bool,
    /// `(sca - poa) / poa`.
    pub relative_gap: f64,
}

fn cmd_compare(a: &CompareArgs) -> CliResult<String> {
    let cfg = load(&a.scenario)?;
    let sca = solve(&cfg, Solver::ScaFixed, &a.solver)?;
    let poa = solve(&cfg, Solver::Poa, &a.solver)?;
    write_run(&a.out_dir.join("sca"), &cfg, &sca)?;
    write_run(&a.out_dir.join("poa"), &cfg, &poa)?;
    let (s, p) = (sca.report.summary.objective, poa.report.summary.objective);
    let cmp = Comparison {
        scenario_digest: scenario_digest(&cfg),
        sca_objective: s,
        poa_objective: p,
        poa_upper_bound: poa.report.summary.upper_bound.unwrap_or(f64::NAN),
        poa_certified: poa.report.summary.converged,
        relative_gap: if p > 0.0 { (s - p) / p } else { 0.0 },
    };
    write_json(&a.out_dir.join("compare.json"), &cmp)?;
    write_json(
        &a.out_dir.join("timing.json"),
        &serde_json::json!({ "sca_s": sca.seconds, "poa_s": poa.seconds }),
    )?;
    convergence(&poa)?;
    Ok(format!(
        "sca {s:.6} poa {p:.6} (upper bound {:.6}) relative gap {:+.3e}",
        cmp.poa_upper_bound, cmp.relative_gap
    ))
}

fn cmd_check(a: &CheckArgs) -> CliResult<String> {
    let cfg = load(&a.scenario)?;
    let text = fs::read_to_string(&a.solution).map_err(|e| CliError::io(&a.solution, e))?;
    let sol: Solution<f64> = serde_json::from_str(&text).map_err(|e| {
        CliError::config(format!(
            "{}: not a solution file: {e}",
            a.solution.display()
        ))
    })?;
    let violations = validate_solution(&cfg, &sol, a.tol)?;
    if !violations.is_empty() {
        let mut err = CliError::new(
            "validation",
            EXIT_VALIDATION,
            format!("{} constraint violations", violations.len()),
        );
        err.violations = violations;
        return Err(err);
    }
    let again = coexist::evaluate_objective(&cfg, &sol.trajectory, &sol.schedule, &sol.power)?;
    let diff = (again.objective - sol.objective).abs();
    if diff > 1e-9 * sol.objective.abs().max(1.0) {
        return Err(CliError::new(
            "validation",
            EXIT_VALIDATION,
            format!(
                "stored objective {} but the plan evaluates to {}",
                sol.objective, again.objective
            ),
        ));
    }
    Ok(format!(
        "feasible within {}, objective {:.6}",
        a.tol, sol.objective
    ))
}

/// Executes a parsed command; returns the one-line summary for stdout.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ValidateTheorem1(a) => cmd_theorem(a),
        Command::ComparePoaSca(a) => cmd_compare(a),
        Command::Check(a) => cmd_check(a),
    }
}
