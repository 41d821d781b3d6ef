//! Config-driven experiment runs.
//!
//! A run reads a TOML config, builds the scenario, drives the selected
//! solver over one or more windows and writes its artifacts into the output
//! directory:
//!
//! - `manifest.toml`: the fully resolved config, every default explicit.
//! - `norms.csv`: one cumulative [`NormReport`] row per completed window.
//! - `picard_trace.csv`: `window,sweep,df,de,dh,ratio`, including the
//!   failing window when the iteration breaks down.
//! - `trajectory.nmf`: field dump every `dump_stride` levels (optional).
//! - `final_slice.csv`: all fields along the x line through the centre.
//! - `summary.toml`: outcome, invariant diagnostics and exit code.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, StateSnapshot};
use crate::io::{read_trajectory, write_snapshot, write_x_slice};
use crate::linalg::EllipticSolveOptions;
use crate::norms::{divergence_residual, energy, h0, h_functional, snapshot_unit_drift, NormConfig, NormReport};
use crate::picard::{run_windows, validate_initial, PicardTrace, SolveConfig, SolveMode};
use crate::scenario::{make_scenario, ScenarioConfig};
use crate::stokes::STEP_DIVERGENCE_TOL;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable that replaces `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "NEMATIC_OUTPUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub extent: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { n: 25, extent: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    /// Window length.
    pub horizon: f64,
    /// Steps per window.
    pub steps: usize,
    pub windows: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            horizon: 0.05,
            steps: 64,
            windows: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub mode: SolveMode,
    pub picard_tol: f64,
    pub max_sweeps: usize,
    pub elliptic_tol: f64,
    /// 0 selects `10 n^2`; the manifest records the resolved value.
    pub elliptic_max_iters: usize,
    pub renormalize_director: bool,
    pub blowup_threshold: f64,
    pub concurrent: bool,
    /// Largest `||d| - 1|` accepted before the run is flagged.
    pub unit_drift_limit: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolveConfig::default();
        Self {
            mode: s.mode,
            picard_tol: s.picard_tol,
            max_sweeps: s.max_sweeps,
            elliptic_tol: s.elliptic.tol,
            elliptic_max_iters: 0,
            renormalize_director: s.renormalize_director,
            blowup_threshold: s.blowup_threshold,
            concurrent: s.concurrent,
            unit_drift_limit: 5e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Dump every this many time levels; 0 disables dumps.
    pub dump_stride: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("output"),
            dump_stride: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridSection,
    pub time: TimeSection,
    pub norms: NormConfig,
    pub solver: SolverSection,
    pub scenario: ScenarioConfig,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Validates and fills every automatic setting with its concrete value.
    pub fn resolve(&mut self) -> Result<()> {
        let grid = self.grid_spec()?;
        if self.solver.elliptic_max_iters == 0 {
            self.solver.elliptic_max_iters = EllipticSolveOptions::default().iteration_cap(&grid);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        if self.time.windows == 0 {
            return Err(Error::InvalidInput("windows must be at least 1".into()));
        }
        if !(self.solver.unit_drift_limit > 0.0) {
            return Err(Error::InvalidInput("unit_drift_limit must be positive".into()));
        }
        self.solve_config().validate()?;
        self.scenario.validate()
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n, self.grid.extent)
    }

    pub fn elliptic(&self) -> EllipticSolveOptions {
        EllipticSolveOptions {
            tol: self.solver.elliptic_tol,
            max_iters: (self.solver.elliptic_max_iters > 0).then_some(self.solver.elliptic_max_iters),
        }
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            horizon: self.time.horizon,
            steps: self.time.steps,
            picard_tol: self.solver.picard_tol,
            max_sweeps: self.solver.max_sweeps,
            mode: self.solver.mode,
            renormalize_director: self.solver.renormalize_director,
            blowup_threshold: self.solver.blowup_threshold,
            elliptic: self.elliptic(),
            norms: self.norms,
            concurrent: self.solver.concurrent,
            advection: true,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable")
    }
}

/// Builds the initial state and checks every precondition of the solvers.
pub fn validate(cfg: &RunConfig) -> Result<StateSnapshot> {
    cfg.validate()?;
    let init = make_scenario(cfg.grid_spec()?, &cfg.scenario, &cfg.elliptic())?;
    validate_initial(&init)?;
    Ok(init)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub kinetic: f64,
    pub elastic: f64,
    pub total: f64,
}

impl From<crate::norms::Energy> for EnergySummary {
    fn from(e: crate::norms::Energy) -> Self {
        Self {
            kinetic: e.kinetic,
            elastic: e.elastic,
            total: e.total,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub exit_code: i32,
    pub converged: bool,
    pub windows_completed: usize,
    pub total_sweeps: usize,
    pub final_time: f64,
    pub h0: f64,
    pub final_h_total: f64,
    pub unit_drift: f64,
    pub max_divergence_residual: f64,
    pub initial_energy: EnergySummary,
    pub final_energy: EnergySummary,
    /// Names of invariant checks that fired.
    pub flags: Vec<String>,
    /// Error message of a failed solve, empty otherwise.
    pub failure: String,
}

/// Exit status for an error that ended a run or a command.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_solver_failure() {
        return EXIT_SOLVER;
    }
    match err.root() {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_trace_rows<W: Write>(w: &mut W, window: usize, trace: &PicardTrace) -> Result<()> {
    for row in trace.csv_rows() {
        writeln!(w, "{window},{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// Streaming artifact writers of one run.
struct Artifacts {
    norms: BufWriter<File>,
    trace: BufWriter<File>,
    dump: Option<BufWriter<File>>,
    stride: usize,
}

/// Runs the experiment and writes its artifacts into `out_dir`. Solver
/// failures are reported through the summary (exit code 3) after all
/// artifacts are written; only configuration and I/O problems are errors.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let init = validate(cfg)?;
    fs::create_dir_all(out_dir)?;
    let mut manifest = cfg.clone();
    manifest.output.dir = out_dir.to_path_buf();
    fs::write(out_dir.join("manifest.toml"), manifest.to_toml())?;

    let mut art = Artifacts {
        norms: create(out_dir, "norms.csv")?,
        trace: create(out_dir, "picard_trace.csv")?,
        dump: if cfg.output.dump_stride > 0 {
            Some(create(out_dir, "trajectory.nmf")?)
        } else {
            None
        },
        stride: cfg.output.dump_stride,
    };
    writeln!(art.norms, "{}", NormReport::CSV_HEADER)?;
    writeln!(art.trace, "window,{}", PicardTrace::CSV_HEADER)?;
    if let Some(d) = art.dump.as_mut() {
        write_snapshot(d, &init)?;
    }

    let solve = cfg.solve_config();
    let e = cfg.scenario.reference;
    let mut summary = RunSummary {
        h0: h0(&init, e, &cfg.norms),
        unit_drift: snapshot_unit_drift(&init.d),
        max_divergence_residual: divergence_residual(&init),
        initial_energy: energy(&init).into(),
        final_energy: energy(&init).into(),
        ..RunSummary::default()
    };
    let mut last = init.clone();
    let mut io_error: Option<Error> = None;
    let mut observe = |w: crate::picard::WindowOutcome<'_>| {
        let mut step = || -> Result<()> {
            writeln!(art.norms, "{}", w.report.csv_row())?;
            art.norms.flush()?;
            if let Some(t) = w.trace {
                write_trace_rows(&mut art.trace, w.window, t)?;
            }
            if let Some(d) = art.dump.as_mut() {
                let base = w.window * w.trajectory.steps;
                for (k, s) in w.trajectory.snapshots.iter().enumerate().skip(1) {
                    if (base + k) % art.stride == 0 {
                        write_snapshot(d, s)?;
                    }
                }
                d.flush()?;
            }
            Ok(())
        };
        if io_error.is_none() {
            io_error = step().err();
        }
        for s in &w.trajectory.snapshots[1..] {
            summary.unit_drift = summary.unit_drift.max(snapshot_unit_drift(&s.d));
            summary.max_divergence_residual =
                summary.max_divergence_residual.max(divergence_residual(s));
        }
        summary.windows_completed = w.window + 1;
        summary.total_sweeps += w.trace.map_or(0, |t| t.sweeps_used);
        summary.final_h_total = w.report.h_total;
        last = w.trajectory.last().clone();
    };
    let outcome = run_windows(&init, e, &solve, cfg.time.windows, &mut observe);
    if let Some(err) = io_error {
        return Err(err);
    }
    match outcome {
        Ok(()) => summary.converged = true,
        Err(err) if err.is_solver_failure() => {
            if let (Error::WindowFailed { window, .. }, Some(t)) = (&err, err.trace()) {
                write_trace_rows(&mut art.trace, *window, t)?;
                summary.total_sweeps += t.sweeps_used;
            }
            summary.failure = err.to_string();
        }
        Err(err) => return Err(err),
    }

    summary.final_time = last.time;
    summary.final_energy = energy(&last).into();
    let n = last.grid().n();
    let (c, u, d) = (n / 2, last.u.components(), last.d.components());
    write_x_slice(
        create(out_dir, "final_slice.csv")?,
        last.grid(),
        c,
        c,
        &[
            ("u_x", &u[0]),
            ("u_y", &u[1]),
            ("u_z", &u[2]),
            ("d_x", &d[0]),
            ("d_y", &d[1]),
            ("d_z", &d[2]),
            ("p", last.p.values()),
        ],
    )?;

    if !cfg.solver.renormalize_director && summary.unit_drift > cfg.solver.unit_drift_limit {
        summary.flags.push("unit_drift".into());
    }
    if summary.max_divergence_residual > STEP_DIVERGENCE_TOL * (1.0 + last.u.max_abs().max(1.0)) {
        summary.flags.push("divergence".into());
    }
    summary.exit_code = if summary.converged && summary.flags.is_empty() {
        EXIT_OK
    } else {
        EXIT_SOLVER
    };
    fs::write(
        out_dir.join("summary.toml"),
        toml::to_string_pretty(&summary).expect("summary is always representable"),
    )?;
    Ok(summary)
}

/// Recomputes the trajectory functional of a dump. With no reference
/// director given, the director at the first lattice node (a corner, where
/// the trace equals `e`) is used.
pub fn offline_norms(path: &Path, cfg: &NormConfig, reference: Option<[f64; 3]>) -> Result<NormReport> {
    cfg.validate()?;
    let traj = read_trajectory(&mut BufReader::new(File::open(path)?))?;
    let e = reference.unwrap_or_else(|| traj.snapshots[0].d.node(0));
    Ok(h_functional(&traj, e, cfg))
}
