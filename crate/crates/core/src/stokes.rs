//! Unsteady Stokes problems with no-slip walls, by Chorin projection.
//!
//! Each step solves an implicit viscous predictor with zero Dirichlet data,
//! a compact Neumann pressure-Poisson problem for the bulk pressure, and a
//! correction `u = u* - dt grad P`. On the collocated lattice the compact
//! pressure leaves an O(h^2) divergence defect (the discrete divergence of
//! the discrete gradient is the wide stencil), so the correction is closed
//! by one more solve with the exact divergence-gradient composition. The
//! returned pressure contains both parts, so `u = u* - dt * gradient(P)`
//! holds exactly at interior nodes and the velocity is discretely
//! solenoidal to solver tolerance.

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, VectorField};
use crate::linalg::{conjugate_gradient, dot, norm2, EllipticSolveOptions};
use crate::ops::{diff_axis_into, divergence, gradient};
use crate::parabolic::HeatStepper;

/// Largest divergence residual accepted on initial velocity data, relative
/// to `1 + max|u|`.
pub const INITIAL_DIVERGENCE_TOL: f64 = 1e-8;
/// Largest divergence residual accepted after a projection step, relative
/// to `1 + max|u|`.
pub const STEP_DIVERGENCE_TOL: f64 = 1e-6;
/// Largest accepted Neumann right-hand-side mean, relative to `max|rhs|`.
pub const NEUMANN_COMPATIBILITY_TOL: f64 = 1e-8;

/// Trapezoid weight of a node: 1/2 per boundary coordinate.
fn node_weight(grid: &GridSpec, p: usize) -> f64 {
    let (i, j, k) = grid.coords_of(p);
    let last = grid.n() - 1;
    [i, j, k]
        .into_iter()
        .map(|m| if m == 0 || m == last { 0.5 } else { 1.0 })
        .product()
}

/// Trapezoid-weighted mean: the solvability functional of the Neumann
/// problem below.
pub fn neumann_mean(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let (mut s, mut w) = (0.0, 0.0);
    for (p, v) in f.values().iter().enumerate() {
        let wt = node_weight(grid, p);
        s += wt * v;
        w += wt;
    }
    s / w
}

/// `-W L_N P`: weighted 7-point Laplacian with mirror ghost nodes on every
/// face. Symmetric positive semidefinite; the kernel is the constants.
fn apply_neumann(grid: &GridSpec, weights: &[f64], x: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let last = n - 1;
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    for k in 0..n {
        for j in 0..n {
            let row = grid.index(0, j, k);
            for i in 0..n {
                let p = row + i;
                let mut acc = 0.0;
                for (axis, m) in [i, j, k].into_iter().enumerate() {
                    let s = grid.stride(axis);
                    acc += if m == 0 {
                        2.0 * (x[p] - x[p + s])
                    } else if m == last {
                        2.0 * (x[p] - x[p - s])
                    } else {
                        2.0 * x[p] - x[p + s] - x[p - s]
                    };
                }
                out[p] = weights[p] * acc * inv_h2;
            }
        }
    }
}

/// Solves `L P = rhs` with homogeneous Neumann data and returns `P` with
/// zero interior mean.
///
/// The rhs must satisfy the discrete solvability condition (its
/// trapezoid-weighted mean vanishes up to `1e-8 * max|rhs|`); otherwise
/// `IncompatibleRhs` reports that mean.
pub fn pressure_poisson(rhs: &ScalarField, opts: &EllipticSolveOptions) -> Result<ScalarField> {
    pressure_poisson_seeded(rhs, opts, None)
}

pub(crate) fn pressure_poisson_seeded(
    rhs: &ScalarField,
    opts: &EllipticSolveOptions,
    guess: Option<&ScalarField>,
) -> Result<ScalarField> {
    opts.validate()?;
    if !rhs.is_finite() {
        return Err(Error::InvalidInput("non-finite pressure right-hand side".into()));
    }
    let grid = *rhs.grid();
    let mean = neumann_mean(rhs);
    if mean.abs() > NEUMANN_COMPATIBILITY_TOL * rhs.max_abs() {
        return Err(Error::IncompatibleRhs { mean });
    }
    let weights: Vec<f64> = (0..grid.len()).map(|p| node_weight(&grid, p)).collect();
    let b: Vec<f64> = rhs
        .values()
        .iter()
        .zip(&weights)
        .map(|(r, w)| -w * (r - mean))
        .collect();
    let mut x = match guess {
        Some(g) => g.values().to_vec(),
        None => vec![0.0; grid.len()],
    };
    let bn = norm2(&b);
    if bn > 0.0 {
        conjugate_gradient(
            |v, out| apply_neumann(&grid, &weights, v, out),
            &b,
            &mut x,
            opts.tol * bn,
            opts.iteration_cap(&grid),
        )?;
    } else {
        x.fill(0.0);
    }
    let mut p = ScalarField::new(grid, x)?;
    p.remove_interior_mean();
    Ok(p)
}

/// Central differences of an interior-supported field, masked to interior
/// nodes. Its negative adjoint is the interior divergence of a field that
/// vanishes on the boundary.
fn masked_gradient_axis(grid: &GridSpec, x: &[f64], axis: usize, out: &mut [f64]) {
    diff_axis_into(grid, x, axis, out);
    for (p, v) in out.iter_mut().enumerate() {
        if grid.is_boundary_index(p) {
            *v = 0.0;
        }
    }
}

/// `-D G` on interior-supported scalars (symmetric positive semidefinite).
fn apply_projection_operator(grid: &GridSpec, x: &[f64], out: &mut [f64]) {
    let mut g = vec![0.0; x.len()];
    let mut dg = vec![0.0; x.len()];
    out.fill(0.0);
    for axis in 0..3 {
        masked_gradient_axis(grid, x, axis, &mut g);
        diff_axis_into(grid, &g, axis, &mut dg);
        for (p, o) in out.iter_mut().enumerate() {
            if !grid.is_boundary_index(p) {
                *o -= dg[p];
            }
        }
    }
}

/// Multiplier `q` (zero on the boundary) such that `v - gradient(q)` is
/// discretely solenoidal at interior nodes, for `v` vanishing on the
/// boundary.
fn solenoidal_multiplier(v: &VectorField, opts: &EllipticSolveOptions) -> Result<ScalarField> {
    let grid = *v.grid();
    let div = divergence(v);
    let b: Vec<f64> = div
        .values()
        .iter()
        .enumerate()
        .map(|(p, d)| if grid.is_boundary_index(p) { 0.0 } else { -d })
        .collect();
    let mut q = vec![0.0; grid.len()];
    let bn = norm2(&b);
    if bn > 0.0 {
        conjugate_gradient(
            |x, out| apply_projection_operator(&grid, x, out),
            &b,
            &mut q,
            opts.tol * bn,
            opts.iteration_cap(&grid),
        )?;
    }
    // For odd n the all-odd sublattice indicator is in the kernel. CG keeps
    // q orthogonal to it; shift that sublattice so its mean matches the rest
    // of the interior, which keeps q free of a spurious checkerboard.
    if grid.n() % 2 == 1 {
        let on_odd = |p: usize| {
            let (i, j, k) = grid.coords_of(p);
            i % 2 == 1 && j % 2 == 1 && k % 2 == 1
        };
        let (mut so, mut no, mut se, mut ne) = (0.0, 0usize, 0.0, 0usize);
        for p in grid.interior_indices() {
            if on_odd(p) {
                so += q[p];
                no += 1;
            } else {
                se += q[p];
                ne += 1;
            }
        }
        if no > 0 && ne > 0 {
            let shift = se / ne as f64 - so / no as f64;
            for p in grid.interior_indices().collect::<Vec<_>>() {
                if on_odd(p) {
                    q[p] += shift;
                }
            }
        }
    }
    ScalarField::new(grid, q)
}

/// Interior max-norm of the discrete divergence.
pub fn interior_divergence(u: &VectorField) -> f64 {
    divergence(u).max_abs_interior()
}

/// Discrete Leray-type projection of a field that vanishes on the boundary:
/// returns `(v - gradient(q), q)` with the first part solenoidal at interior
/// nodes to solver tolerance.
pub fn project_solenoidal(
    v: &VectorField,
    opts: &EllipticSolveOptions,
) -> Result<(VectorField, ScalarField)> {
    let q = solenoidal_multiplier(v, opts)?;
    let g = gradient(&q);
    let mut out = v.sub(&g);
    out.zero_boundary();
    Ok((out, q))
}

/// Time-discrete Stokes problem with no-slip walls.
#[derive(Clone, Debug)]
pub struct StokesProblem {
    pub initial: VectorField,
    /// `forcing[k]` drives the step ending at time `(k + 1) dt`.
    pub forcing: Vec<VectorField>,
    pub steps: usize,
    pub dt: f64,
}

impl StokesProblem {
    pub fn validate(&self) -> Result<()> {
        let grid = self.initial.grid();
        if self.forcing.iter().any(|f| f.grid() != grid) {
            return Err(Error::InvalidInput("Stokes problem mixes grids".into()));
        }
        if self.steps == 0 || self.forcing.len() != self.steps {
            return Err(Error::InvalidInput(format!(
                "Stokes problem has {} forcings for {} steps",
                self.forcing.len(),
                self.steps
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("invalid time step {}", self.dt)));
        }
        let slip = self.initial.boundary_mismatch(&VectorField::zeros(*grid));
        if slip > 0.0 {
            return Err(Error::TraceIncompatibility { mismatch: slip });
        }
        let div = interior_divergence(&self.initial);
        if div > INITIAL_DIVERGENCE_TOL * (1.0 + self.initial.max_abs()) {
            return Err(Error::InvalidInput(format!(
                "initial velocity has divergence residual {div:e}"
            )));
        }
        Ok(())
    }
}

/// Velocity and pressure at every time level; `pressure[0]` is zero.
#[derive(Clone, Debug)]
pub struct StokesTrajectory {
    pub velocity: Vec<VectorField>,
    pub pressure: Vec<ScalarField>,
}

/// One projection step for fixed `dt`.
#[derive(Clone, Debug)]
pub struct StokesStepper {
    viscous: HeatStepper,
    dt: f64,
    opts: EllipticSolveOptions,
}

impl StokesStepper {
    pub fn new(grid: GridSpec, dt: f64, opts: &EllipticSolveOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self {
            viscous: HeatStepper::new(&VectorField::zeros(grid), dt, opts)?,
            dt,
            opts: *opts,
        })
    }

    /// Advances `(u, P)` one step under forcing `f`. `step` labels errors;
    /// `guess` seeds the predictor and pressure solves.
    pub fn advance(
        &self,
        u: &VectorField,
        f: &VectorField,
        step: usize,
        guess: Option<(&VectorField, &ScalarField)>,
    ) -> Result<(VectorField, ScalarField)> {
        let dt = self.dt;
        let tentative = self
            .viscous
            .advance(u, f, guess.map(|g| g.0))
            .map_err(|e| e.at_step(step))?;

        let mut rhs = divergence(&tentative).scale(1.0 / dt);
        let mean = neumann_mean(&rhs);
        for v in rhs.values_mut() {
            *v -= mean;
        }
        let bulk = pressure_poisson_seeded(&rhs, &self.opts, guess.map(|g| g.1))
            .map_err(|e| e.at_step(step))?;
        let corrected = tentative.sub(&gradient(&bulk).scale(dt));
        let mut corrected = corrected;
        corrected.zero_boundary();

        let (velocity, q) =
            project_solenoidal(&corrected, &self.opts).map_err(|e| e.at_step(step))?;
        let mut pressure = bulk.add(&q.scale(1.0 / dt));
        pressure.remove_interior_mean();

        let residual = interior_divergence(&velocity);
        if residual > STEP_DIVERGENCE_TOL * (1.0 + velocity.max_abs()) {
            return Err(Error::DivergenceResidualExceeded { step, residual });
        }
        Ok((velocity, pressure))
    }
}

pub fn stokes_solve(prob: &StokesProblem, opts: &EllipticSolveOptions) -> Result<StokesTrajectory> {
    stokes_solve_seeded(prob, opts, None)
}

pub(crate) fn stokes_solve_seeded(
    prob: &StokesProblem,
    opts: &EllipticSolveOptions,
    guesses: Option<(&[VectorField], &[ScalarField])>,
) -> Result<StokesTrajectory> {
    prob.validate()?;
    let grid = *prob.initial.grid();
    let stepper = StokesStepper::new(grid, prob.dt, opts)?;
    let mut velocity = Vec::with_capacity(prob.steps + 1);
    let mut pressure = Vec::with_capacity(prob.steps + 1);
    velocity.push(prob.initial.clone());
    pressure.push(ScalarField::zeros(grid));
    for (k, f) in prob.forcing.iter().enumerate() {
        let guess = guesses.and_then(|(u, p)| Some((u.get(k + 1)?, p.get(k + 1)?)));
        let (u, p) = stepper.advance(&velocity[k], f, k + 1, guess)?;
        velocity.push(u);
        pressure.push(p);
    }
    Ok(StokesTrajectory { velocity, pressure })
}

/// `sum_p w_p f_p g_p` with trapezoid weights; used by tests of the
/// Neumann operator's symmetry.
#[doc(hidden)]
pub fn weighted_inner(f: &ScalarField, g: &ScalarField) -> f64 {
    let grid = f.grid();
    let w: Vec<f64> = (0..grid.len()).map(|p| node_weight(grid, p)).collect();
    let fw: Vec<f64> = f.values().iter().zip(&w).map(|(a, b)| a * b).collect();
    dot(&fw, g.values())
}
