//! The `depart-sched` command line.

pub mod config;
pub mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError, ComparisonTable, Proposition, SweepRow};
use crate::network::{self, NetworkError, RouteOutcome, TripOptions};
use crate::solver::{self, RegimeReport, ScheduleSolution, SchedulingWindow, SolveMode, SolverError, SolverKind};
use crate::su::{self, Formulation, UtilityBreakdown, Violation};
use crate::time::{Duration, TimePoint};

pub use config::{Config, LoadedConfig, SolverDefaults};

pub const NO_COLOR_ENV: &str = "DEPART_SCHED_NO_COLOR";

pub const SWEEP_HEADER: [&str; 6] = ["T", "s_star_mrd", "s_star_dmrd", "gu_star_mrd", "gu_star_dmrd", "regime_case"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("invalid configuration: {}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("{0}")]
    Regime(SolverError),
    #[error("{0}")]
    Infeasible(String),
    #[error("verification failed")]
    VerificationFailed,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(Violation::to_string).collect::<Vec<_>>().join("; ")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Parse(_) => 1,
            CliError::Validation(_) | CliError::Regime(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::VerificationFailed => 4,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::EmptyWindow { .. } => CliError::Infeasible(e.to_string()),
            SolverError::InvalidStep(_) => CliError::Usage(e.to_string()),
            SolverError::RegimeViolation(_) | SolverError::UnsupportedFormulation(_) => CliError::Regime(e),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::NoFeasibleRoute => CliError::Infeasible(e.to_string()),
            NetworkError::NoRoutes | NetworkError::Route(_) => CliError::Parse(e.to_string()),
            NetworkError::Solver(s) => s.into(),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Solver(s) => s.into(),
            AnalysisError::InvalidRange(_) => CliError::Usage(e.to_string()),
            AnalysisError::NoScenarios => CliError::Parse(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "depart-sched", version, about = "Departure-time scheduling utility, optimizers and verifiers")]
pub struct Cli {
    /// Configuration JSON; the bundled P0/K0 example when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Utility breakdown of one departure.
    Eval {
        /// Departure time, HH:MM[:SS] or minutes after midnight.
        #[arg(long)]
        depart: TimePoint,
        /// Travel time in minutes.
        #[arg(long)]
        travel: Duration,
        #[arg(long)]
        formulation: Option<Formulation>,
    },
    /// Optimal departure time for a fixed travel time.
    Optimize {
        #[arg(long)]
        travel: Duration,
        /// auto, closed or numeric.
        #[arg(long, default_value = "auto")]
        solver: SolveMode,
        /// Overrides the configured earliest departure time.
        #[arg(long)]
        edt: Option<TimePoint>,
        /// Free-flow travel time bounding the latest departure; defaults to
        /// the travel time.
        #[arg(long)]
        t_free: Option<Duration>,
        #[arg(long)]
        formulation: Option<Formulation>,
    },
    /// Joint route and departure-time choice.
    RouteOptimize {
        #[arg(long)]
        routes: PathBuf,
        #[arg(long)]
        formulation: Option<Formulation>,
    },
    /// Optimal departures of MRD and DMRD over a range of travel times.
    Sweep {
        #[arg(long, default_value_t = 5.0)]
        t_min: f64,
        #[arg(long, default_value_t = 60.0)]
        t_max: f64,
        #[arg(long, default_value_t = 5.0)]
        t_step: f64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Randomized checks of the closed-form results against the oracle.
    Verify {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Comma-separated subset of p1,p2,p3,p4,fig4.
        #[arg(long, value_delimiter = ',')]
        props: Vec<Proposition>,
    },
    /// Utilities of a set of trips under every formulation.
    Compare {
        /// Scenario JSON; the bundled case1 example when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Print the table as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionView {
    pub s_star: f64,
    pub s_star_clock: String,
    pub gu_star: f64,
    pub solver: SolverKind,
    pub clamped: bool,
    pub window: SchedulingWindow,
    pub breakdown: UtilityBreakdown,
    pub regime: RegimeReport,
}

impl SolutionView {
    pub fn new(solution: &ScheduleSolution, window: SchedulingWindow) -> Self {
        SolutionView {
            s_star: solution.s_star.minutes(),
            s_star_clock: solution.s_star.to_clock(),
            gu_star: solution.gu_star,
            solver: solution.solver,
            clamped: solution.clamped,
            window,
            breakdown: solution.breakdown.clone(),
            regime: solution.regime.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteView {
    pub id: String,
    pub feasible: bool,
    pub window: SchedulingWindow,
    pub solution: Option<SolutionView>,
}

impl RouteView {
    fn new(outcome: &RouteOutcome) -> Self {
        RouteView {
            id: outcome.route_id.clone(),
            feasible: outcome.feasible(),
            window: outcome.window,
            solution: outcome.solution.as_ref().map(|s| SolutionView::new(s, outcome.window)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub selected: String,
    pub best: SolutionView,
    pub routes: Vec<RouteView>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(e, CliError::VerificationFailed) {
                let _ = writeln!(stderr, "error: {e}");
            }
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let loaded = Config::load(cli.config.as_deref())?;
    for w in &loaded.warnings {
        let _ = writeln!(stderr, "{w}");
    }
    let config = &loaded.config;
    match &cli.command {
        Command::Eval {
            depart,
            travel,
            formulation,
        } => {
            check_time(*depart, "--depart")?;
            let f = formulation.unwrap_or(config.formulation);
            let breakdown = su::gross_utility(*depart, *travel, &config.profile, &config.preferences, f);
            emit_json(stdout, &breakdown)
        }
        Command::Optimize {
            travel,
            solver,
            edt,
            t_free,
            formulation,
        } => {
            if let Some(edt) = edt {
                check_time(*edt, "--edt")?;
            }
            let view = cmd_optimize(config, *travel, *solver, *edt, *t_free, *formulation)?;
            emit_json(stdout, &view)
        }
        Command::RouteOptimize { routes, formulation } => {
            let report = cmd_route_optimize(config, routes, *formulation)?;
            emit_json(stdout, &report)
        }
        Command::Sweep {
            t_min,
            t_max,
            t_step,
            out,
            svg,
        } => cmd_sweep(config, *t_min, *t_max, *t_step, out.as_deref(), svg.as_deref(), stdout),
        Command::Verify { trials, seed, props } => {
            if *trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let props = if props.is_empty() {
                Proposition::ALL.to_vec()
            } else {
                props.clone()
            };
            let summary = analysis::run_verifiers(&props, *seed, *trials);
            emit_json(stdout, &summary)?;
            if summary.passed {
                Ok(())
            } else {
                Err(CliError::VerificationFailed)
            }
        }
        Command::Compare { scenario, json } => {
            let (text, origin) = match scenario {
                Some(p) => (config::read(p)?, p.display().to_string()),
                None => (config::DEFAULT_SCENARIO.to_string(), "case1.json".to_string()),
            };
            let scenarios = config::parse_scenarios(&text, &origin)?;
            let table = analysis::compare_formulations(&scenarios, &config.profile, &config.preferences)?;
            if *json {
                emit_json(stdout, &table)
            } else {
                let color = std::env::var_os(NO_COLOR_ENV).is_none();
                write_out(stdout, &render_table(&table, color))
            }
        }
    }
}

fn check_time(t: TimePoint, flag: &str) -> Result<(), CliError> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(CliError::Parse(format!("{flag} must be finite")))
    }
}

pub fn cmd_optimize(
    config: &Config,
    travel: Duration,
    mode: SolveMode,
    edt: Option<TimePoint>,
    t_free: Option<Duration>,
    formulation: Option<Formulation>,
) -> Result<SolutionView, CliError> {
    let profile = &config.profile;
    let window = SchedulingWindow::new(edt.unwrap_or(profile.edt), profile.pal - t_free.unwrap_or(travel));
    let solution = solver::optimal(
        travel,
        profile,
        &config.preferences,
        formulation.unwrap_or(config.formulation),
        window,
        mode,
        config.solver.numeric(),
    )?;
    Ok(SolutionView::new(&solution, window))
}

pub fn cmd_route_optimize(
    config: &Config,
    routes: &Path,
    formulation: Option<Formulation>,
) -> Result<RouteReport, CliError> {
    let routes = config::load_routes(routes)?;
    let options = TripOptions {
        numeric: config.solver.numeric(),
        depart_grid: config.solver.depart_grid,
    };
    let solution = network::schedule_trip(
        &routes,
        &config.profile,
        &config.preferences,
        formulation.unwrap_or(config.formulation),
        &options,
    )?;
    let best = solution.best_outcome();
    Ok(RouteReport {
        selected: solution.route_id.clone(),
        best: SolutionView::new(&solution.best, best.window),
        routes: solution.per_route.iter().map(RouteView::new).collect(),
    })
}

/// Sweep rows as CSV with six decimals on every number.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Io(format!("csv: {e}"));
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            format!("{:.6}", r.t.minutes()),
            format!("{:.6}", r.s_star_mrd.minutes()),
            format!("{:.6}", r.s_star_dmrd.minutes()),
            format!("{:.6}", r.gu_star_mrd + 0.0),
            format!("{:.6}", r.gu_star_dmrd + 0.0),
            r.regime_case.name().to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(format!("csv: {e}")))
}

fn cmd_sweep(
    config: &Config,
    t_min: f64,
    t_max: f64,
    t_step: f64,
    out: Option<&Path>,
    svg_path: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let profile = &config.profile;
    let rows = analysis::sweep_congestion(profile, &config.preferences, t_min, t_max, t_step)?;
    let csv = sweep_csv(&rows)?;
    match out {
        Some(path) => write_file(path, &csv)?,
        None => write_out(stdout, &csv)?,
    }
    if let Some(path) = svg_path {
        let markers = [profile.pat.since(profile.ndt), profile.pal.since(profile.ndt)];
        write_file(path, &svg::sweep_chart(&rows, &markers))?;
    }
    Ok(())
}

fn paint(text: &str, code: &str, color: bool) -> String {
    if color {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

/// Plain-text comparison table; bold header and signed coloring when
/// `color` is set.
pub fn render_table(table: &ComparisonTable, color: bool) -> String {
    let mut out = String::new();
    let header = format!(
        "{:<12} {:>8} {:>8} {:>8} {:>12} {:>12} {:>12}",
        "scenario", "depart", "arrive", "travel", "MRP", "MRD", "DMRD"
    );
    out.push_str(&paint(&header, "1", color));
    out.push('\n');
    let signed = |v: f64| {
        let cell = format!("{:>12.3}", v + 0.0);
        if v < 0.0 {
            paint(&cell, "31", color)
        } else {
            paint(&cell, "32", color)
        }
    };
    for (i, row) in table.rows.iter().enumerate() {
        let sc = &row.scenario;
        out.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8.1}",
            sc.label,
            sc.depart.to_clock(),
            (sc.depart + sc.travel).to_clock(),
            sc.travel.minutes()
        ));
        for f in Formulation::ALL {
            out.push(' ');
            out.push_str(&signed(table.gu(i, f)));
        }
        out.push('\n');
    }
    if !table.differences.is_empty() {
        out.push('\n');
        out.push_str(&paint("GU differences (first - second)", "1", color));
        out.push('\n');
        for d in &table.differences {
            out.push_str(&format!(
                "{:<6} {} - {}: {:.3}\n",
                d.formulation.name().to_uppercase(),
                d.first,
                d.second,
                d.gu_difference + 0.0
            ));
        }
    }
    out
}

fn emit_json<T: Serialize>(stdout: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("json: {e}")))?;
    write_out(stdout, &format!("{text}\n"))
}

fn write_out(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
