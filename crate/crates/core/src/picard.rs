//! Solution construction by global-in-time Picard sweeps.
//!
//! Iterate `n` solves, over the whole time window at once, the linear
//! Stokes and heat problems whose right-hand sides are the nonlinear terms
//! of iterate `n - 1`. The zeroth iterate is the initial data held constant
//! in time. Sweeps stop once the difference functional `DH_n` falls below
//! `picard_tol * H_1`. A semi-implicit time-marching mode built on the same
//! linear solvers serves as an independent cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, StateSnapshot, VectorField};
use crate::linalg::EllipticSolveOptions;
use crate::nonlinear::{director_forcing_with, momentum_forcing_with};
use crate::norms::{h_functional, snapshot_unit_drift, NormAccumulator, NormConfig, NormReport};
use crate::parabolic::{HeatStepper, COMPATIBILITY_TOL};
use crate::stokes::{interior_divergence, StokesStepper, INITIAL_DIVERGENCE_TOL};

/// Accepted deviation of `|d0|` from 1.
pub const UNIT_LENGTH_TOL: f64 = 1e-10;
/// Ratios are only recorded above this denominator.
pub const RATIO_FLOOR: f64 = 1e-14;

/// Time levels `t0 + k dt`, `k = 0..=steps`; level 0 is the initial data.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub dt: f64,
    pub steps: usize,
    pub snapshots: Vec<StateSnapshot>,
}

impl Trajectory {
    /// `init` repeated at every level.
    pub fn constant(init: &StateSnapshot, dt: f64, steps: usize) -> Self {
        let snapshots = (0..=steps)
            .map(|k| {
                let mut s = init.clone();
                s.time = init.time + k as f64 * dt;
                s
            })
            .collect();
        Self {
            grid: *init.grid(),
            dt,
            steps,
            snapshots,
        }
    }

    pub fn initial(&self) -> &StateSnapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &StateSnapshot {
        self.snapshots.last().expect("trajectory is never empty")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    PicardGlobal,
    TimeMarching,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Window length `T`.
    pub horizon: f64,
    pub steps: usize,
    pub picard_tol: f64,
    pub max_sweeps: usize,
    pub mode: SolveMode,
    pub renormalize_director: bool,
    pub blowup_threshold: f64,
    pub elliptic: EllipticSolveOptions,
    pub norms: NormConfig,
    /// Run the Stokes and heat solves of a sweep on two threads.
    pub concurrent: bool,
    /// Include the transport terms `u . grad u` and `u . grad d`.
    pub advection: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            horizon: 0.05,
            steps: 64,
            picard_tol: 1e-8,
            max_sweeps: 50,
            mode: SolveMode::PicardGlobal,
            renormalize_director: false,
            blowup_threshold: 1e6,
            elliptic: EllipticSolveOptions::default(),
            norms: NormConfig::default(),
            concurrent: true,
            advection: true,
        }
    }
}

impl SolveConfig {
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be at least 1".into()));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "picard_tol must lie in (0, 1), got {}",
                self.picard_tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidInput("max_sweeps must be at least 1".into()));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::InvalidInput("blowup_threshold must be positive".into()));
        }
        self.elliptic.validate()?;
        self.norms.validate()
    }
}

/// Difference functionals of one sweep against its predecessor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub df: f64,
    pub de: f64,
    pub dh: f64,
    /// `DH_sweep / DH_{sweep-1}` when the denominator exceeds the floor.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    pub records: Vec<SweepRecord>,
    /// Trajectory functional of the first iterate; the stopping scale.
    pub h1: f64,
    pub converged: bool,
    pub sweeps_used: usize,
}

impl PicardTrace {
    pub const CSV_HEADER: &'static str = "sweep,df,de,dh,ratio";

    /// `DH_{n+1} / DH_n`, if recorded.
    pub fn ratio(&self, n: usize) -> Option<f64> {
        self.records.iter().find(|r| r.sweep == n + 1)?.ratio
    }

    pub fn dh(&self, n: usize) -> Option<f64> {
        self.records.iter().find(|r| r.sweep == n).map(|r| r.dh)
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| {
                let ratio = r.ratio.map_or(String::new(), |v| format!("{v:.17e}"));
                format!("{},{:.17e},{:.17e},{:.17e},{}", r.sweep, r.df, r.de, r.dh, ratio)
            })
            .collect()
    }
}

/// Solvers shared by all sweeps of one run.
struct SweepContext {
    stokes: StokesStepper,
    heat: HeatStepper,
}

impl SweepContext {
    fn new(boundary_d: &VectorField, cfg: &SolveConfig) -> Result<Self> {
        let grid = *boundary_d.grid();
        Ok(Self {
            stokes: StokesStepper::new(grid, cfg.dt(), &cfg.elliptic)?,
            heat: HeatStepper::new(boundary_d, cfg.dt(), &cfg.elliptic)?,
        })
    }
}

fn check_blowup(s: &StateSnapshot, step: usize, threshold: f64) -> Result<()> {
    let value = s.max_norm();
    if !s.is_finite() || value > threshold {
        return Err(Error::BlowUp {
            step,
            value: if value.is_finite() { value } else { f64::INFINITY },
        });
    }
    Ok(())
}

fn sweep_with(
    ctx: &SweepContext,
    prev: &Trajectory,
    init: &StateSnapshot,
    cfg: &SolveConfig,
) -> Result<Trajectory> {
    let steps = prev.steps;
    let dt = prev.dt;
    let flow = || -> Result<Vec<(VectorField, ScalarField)>> {
        let mut out: Vec<(VectorField, ScalarField)> = Vec::with_capacity(steps);
        for k in 1..=steps {
            let f = momentum_forcing_with(&prev.snapshots[k], cfg.advection);
            let u = out.last().map_or(&init.u, |s| &s.0);
            let guess = &prev.snapshots[k];
            out.push(ctx.stokes.advance(u, &f, k, Some((&guess.u, &guess.p)))?);
        }
        Ok(out)
    };
    let director = || -> Result<Vec<VectorField>> {
        let mut out: Vec<VectorField> = Vec::with_capacity(steps);
        for k in 1..=steps {
            let f = director_forcing_with(&prev.snapshots[k], cfg.advection);
            let d = out.last().unwrap_or(&init.d);
            let next = ctx
                .heat
                .advance(d, &f, Some(&prev.snapshots[k].d))
                .map_err(|e| e.at_step(k))?;
            out.push(if cfg.renormalize_director {
                next.normalized()
            } else {
                next
            });
        }
        Ok(out)
    };
    let (flow, director) = if cfg.concurrent {
        rayon::join(flow, director)
    } else {
        (flow(), director())
    };
    let (flow, director) = (flow?, director?);

    let mut snapshots = Vec::with_capacity(steps + 1);
    snapshots.push(init.clone());
    for (k, ((u, p), d)) in flow.into_iter().zip(director).enumerate() {
        let s = StateSnapshot {
            u,
            d,
            p,
            time: init.time + (k + 1) as f64 * dt,
        };
        check_blowup(&s, k + 1, cfg.blowup_threshold)?;
        snapshots.push(s);
    }
    Ok(Trajectory {
        grid: prev.grid,
        dt,
        steps,
        snapshots,
    })
}

/// One Picard sweep: linear Stokes and heat solves driven by the nonlinear
/// terms of `prev`, with the director held at `boundary_d` on the faces.
pub fn picard_sweep(
    prev: &Trajectory,
    init: &StateSnapshot,
    boundary_d: &VectorField,
    cfg: &SolveConfig,
) -> Result<Trajectory> {
    let mut cfg = *cfg;
    cfg.horizon = prev.dt * prev.steps as f64;
    cfg.steps = prev.steps;
    let mismatch = init.d.boundary_mismatch(boundary_d);
    if mismatch > COMPATIBILITY_TOL {
        return Err(Error::TraceIncompatibility { mismatch });
    }
    let ctx = SweepContext::new(boundary_d, &cfg)?;
    sweep_with(&ctx, prev, init, &cfg)
}

/// Trajectory functional of the level-wise difference `a - b`, split into
/// its flow part (DF) and director part (DE).
pub fn difference_report(a: &Trajectory, b: &Trajectory, cfg: &NormConfig) -> NormReport {
    let mut acc = NormAccumulator::new(*cfg, a.dt, [0.0; 3]);
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        acc.push(&sa.u.sub(&sb.u), &sa.d.sub(&sb.d), &sa.p.sub(&sb.p), sa.time);
    }
    acc.report()
}

/// Checks the data requirements shared by both solution modes.
pub fn validate_initial(init: &StateSnapshot) -> Result<()> {
    let grid = *init.grid();
    let slip = init.u.boundary_mismatch(&VectorField::zeros(grid));
    if slip > 0.0 {
        return Err(Error::TraceIncompatibility { mismatch: slip });
    }
    let div = interior_divergence(&init.u);
    if div > INITIAL_DIVERGENCE_TOL * (1.0 + init.u.max_abs()) {
        return Err(Error::InvalidInput(format!(
            "initial velocity has divergence residual {div:e}"
        )));
    }
    let drift = snapshot_unit_drift(&init.d);
    if drift > UNIT_LENGTH_TOL {
        return Err(Error::InvalidInput(format!(
            "initial director deviates from unit length by {drift:e}"
        )));
    }
    if !init.is_finite() {
        return Err(Error::InvalidInput("initial data is not finite".into()));
    }
    Ok(())
}

/// Picard iteration from the constant-in-time zeroth iterate until
/// `DH_n <= picard_tol * H_1`.
pub fn solve_local(init: &StateSnapshot, cfg: &SolveConfig) -> Result<(Trajectory, PicardTrace)> {
    cfg.validate()?;
    validate_initial(init)?;
    iterate(init, cfg)
}

fn iterate(init: &StateSnapshot, cfg: &SolveConfig) -> Result<(Trajectory, PicardTrace)> {
    let boundary_d = init.d.clone();
    let ctx = SweepContext::new(&boundary_d, cfg)?;
    let mut prev = Trajectory::constant(init, cfg.dt(), cfg.steps);
    let mut trace = PicardTrace::default();
    for sweep in 1..=cfg.max_sweeps {
        let next = match sweep_with(&ctx, &prev, init, cfg) {
            Ok(t) => t,
            Err(source) => {
                return Err(Error::PicardAborted {
                    trace: Box::new(trace),
                    source: Box::new(source),
                })
            }
        };
        if sweep == 1 {
            trace.h1 = h_functional(&next, [0.0; 3], &cfg.norms).h_total;
        }
        let diff = difference_report(&next, &prev, &cfg.norms);
        let dh = diff.h_total;
        let ratio = trace
            .records
            .last()
            .filter(|r| r.dh > RATIO_FLOOR)
            .map(|r| dh / r.dh);
        trace.records.push(SweepRecord {
            sweep,
            df: diff.flow_part(),
            de: diff.director_part(),
            dh,
            ratio,
        });
        trace.sweeps_used = sweep;
        if dh <= cfg.picard_tol * trace.h1 {
            trace.converged = true;
            return Ok((next, trace));
        }
        prev = next;
    }
    Err(Error::NoConvergence(Box::new(trace)))
}

/// Semi-implicit marching: nonlinear terms from the previous level, linear
/// parts implicit, same solvers as the Picard sweeps.
pub fn solve_marching(init: &StateSnapshot, cfg: &SolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    validate_initial(init)?;
    march(init, cfg)
}

fn march(init: &StateSnapshot, cfg: &SolveConfig) -> Result<Trajectory> {
    let ctx = SweepContext::new(&init.d, cfg)?;
    let dt = cfg.dt();
    let mut snapshots = Vec::with_capacity(cfg.steps + 1);
    snapshots.push(init.clone());
    for k in 1..=cfg.steps {
        let cur: &StateSnapshot = &snapshots[k - 1];
        let fu = momentum_forcing_with(cur, cfg.advection);
        let fd = director_forcing_with(cur, cfg.advection);
        let (u, p) = ctx.stokes.advance(&cur.u, &fu, k, None)?;
        let d = ctx.heat.advance(&cur.d, &fd, None).map_err(|e| e.at_step(k))?;
        let d = if cfg.renormalize_director {
            d.normalized()
        } else {
            d
        };
        let s = StateSnapshot {
            u,
            d,
            p,
            time: init.time + k as f64 * dt,
        };
        check_blowup(&s, k, cfg.blowup_threshold)?;
        snapshots.push(s);
    }
    Ok(Trajectory {
        grid: *init.grid(),
        dt,
        steps: cfg.steps,
        snapshots,
    })
}

/// Result of one window of the long-horizon driver.
pub struct WindowOutcome<'a> {
    pub window: usize,
    pub trajectory: &'a Trajectory,
    /// `None` in time-marching mode.
    pub trace: Option<&'a PicardTrace>,
    /// Cumulative functional from time 0 to the end of this window.
    pub report: NormReport,
}

/// Solves `windows` consecutive windows of length `cfg.horizon`, each
/// restarted from the previous window's final state, handing every window
/// to `observer` as soon as it is done. The cumulative functional measures
/// `d - e`.
pub fn run_windows(
    init: &StateSnapshot,
    e: [f64; 3],
    cfg: &SolveConfig,
    windows: usize,
    mut observer: impl FnMut(WindowOutcome<'_>),
) -> Result<()> {
    cfg.validate()?;
    if windows == 0 {
        return Err(Error::InvalidInput("need at least one window".into()));
    }
    let trace_mismatch = init
        .d
        .boundary_mismatch(&VectorField::constant(*init.grid(), e));
    if trace_mismatch > COMPATIBILITY_TOL {
        return Err(Error::TraceIncompatibility {
            mismatch: trace_mismatch,
        });
    }
    validate_initial(init)?;
    let mut acc = NormAccumulator::new(cfg.norms, cfg.dt(), e);
    acc.push_snapshot(init);
    let mut start = init.clone();
    for window in 0..windows {
        let wrap = |source: Error| Error::WindowFailed {
            window,
            source: Box::new(source),
        };
        // later windows start from computed states, which carry the
        // scheme's own unit-length drift; only the user data is checked
        let (traj, trace) = match cfg.mode {
            SolveMode::PicardGlobal => {
                let (t, tr) = iterate(&start, cfg).map_err(wrap)?;
                (t, Some(tr))
            }
            SolveMode::TimeMarching => (march(&start, cfg).map_err(wrap)?, None),
        };
        for s in &traj.snapshots[1..] {
            acc.push_snapshot(s);
        }
        observer(WindowOutcome {
            window,
            trajectory: &traj,
            trace: trace.as_ref(),
            report: acc.report(),
        });
        start = traj.last().clone();
    }
    Ok(())
}

/// Concatenated output of [`solve_global_smalldata`].
#[derive(Clone, Debug)]
pub struct GlobalRun {
    pub trajectory: Trajectory,
    pub reports: Vec<NormReport>,
    pub traces: Vec<PicardTrace>,
}

/// Long-horizon small-data driver: consecutive windows, full trajectory
/// and the cumulative functional after each window. Asserts nothing.
pub fn solve_global_smalldata(
    init: &StateSnapshot,
    e: [f64; 3],
    cfg: &SolveConfig,
    windows: usize,
) -> Result<GlobalRun> {
    let mut snapshots = vec![init.clone()];
    let mut reports = Vec::with_capacity(windows);
    let mut traces = Vec::new();
    run_windows(init, e, cfg, windows, |w| {
        snapshots.extend(w.trajectory.snapshots[1..].iter().cloned());
        reports.push(w.report);
        if let Some(t) = w.trace {
            traces.push(t.clone());
        }
    })?;
    Ok(GlobalRun {
        trajectory: Trajectory {
            grid: *init.grid(),
            dt: cfg.dt(),
            steps: cfg.steps * windows,
            snapshots,
        },
        reports,
        traces,
    })
}
