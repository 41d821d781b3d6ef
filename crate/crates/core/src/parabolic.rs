//! Linear heat problems with time-independent Dirichlet data.
//!
//! The boundary data is lifted once by its discrete harmonic extension
//! `u1`; the remainder `w = u - u1` then has zero boundary values and is
//! marched with implicit Euler, `(I - dt L) w_{k+1} = w_k + dt f_{k+1}`,
//! one conjugate-gradient solve per component and step.

use crate::error::{Error, Result};
use crate::field::{GridSpec, VectorField};
use crate::linalg::{conjugate_gradient, norm2, EllipticSolveOptions};

/// Tolerance for initial data agreeing with the boundary data.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// `out = a x - c L x` at interior nodes (zero Dirichlet closure), zero on
/// the boundary. Boundary entries of `x` are ignored.
pub(crate) fn apply_helmholtz(grid: &GridSpec, a: f64, c: f64, x: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let ch = c / (grid.spacing() * grid.spacing());
    let (sy, sz) = (n, n * n);
    out.fill(0.0);
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            let row = grid.index(0, j, k);
            for i in 1..n - 1 {
                let p = row + i;
                let mut nb = 0.0;
                if i > 1 {
                    nb += x[p - 1];
                }
                if i < n - 2 {
                    nb += x[p + 1];
                }
                if j > 1 {
                    nb += x[p - sy];
                }
                if j < n - 2 {
                    nb += x[p + sy];
                }
                if k > 1 {
                    nb += x[p - sz];
                }
                if k < n - 2 {
                    nb += x[p + sz];
                }
                out[p] = a * x[p] + ch * (6.0 * x[p] - nb);
            }
        }
    }
}

/// Solves `(a I - c L) x = b` with zero Dirichlet data; `x` holds the
/// initial guess on entry. Boundary entries of `b` must be zero.
pub(crate) fn solve_helmholtz(
    grid: &GridSpec,
    a: f64,
    c: f64,
    b: &[f64],
    x: &mut [f64],
    abs_tol: f64,
    max_iters: usize,
) -> Result<usize> {
    for (p, v) in x.iter_mut().enumerate() {
        if grid.is_boundary_index(p) {
            *v = 0.0;
        }
    }
    conjugate_gradient(
        |v, out| apply_helmholtz(grid, a, c, v, out),
        b,
        x,
        abs_tol,
        max_iters,
    )
}

/// Discrete harmonic extension of the boundary values of `boundary`.
///
/// Interior values of `boundary` are ignored. The result matches the
/// boundary data exactly and its scaled interior Laplacian residual
/// `h^2 |L u|` is at most `tol * max|boundary|`.
pub fn harmonic_extension(
    boundary: &VectorField,
    grid: &GridSpec,
    opts: &EllipticSolveOptions,
) -> Result<VectorField> {
    opts.validate()?;
    if boundary.grid() != grid {
        return Err(Error::InvalidInput("boundary data on a different grid".into()));
    }
    let h2 = grid.spacing() * grid.spacing();
    let cap = opts.iteration_cap(grid);
    let mut comps: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        let src = boundary.component(c);
        let mut bnd = vec![0.0; grid.len()];
        let mut scale = 0.0f64;
        for p in 0..grid.len() {
            if grid.is_boundary_index(p) {
                if !src[p].is_finite() {
                    return Err(Error::InvalidInput("non-finite boundary value".into()));
                }
                bnd[p] = src[p];
                scale = scale.max(src[p].abs());
            }
        }
        // rhs = L(boundary-only field) moved across: -L v = L bnd at interior
        let mut rhs = vec![0.0; grid.len()];
        crate::ops::laplacian_into(grid, &bnd, &mut rhs);
        let mut v = vec![0.0; grid.len()];
        if scale > 0.0 {
            solve_helmholtz(grid, 0.0, 1.0, &rhs, &mut v, opts.tol * scale / h2, cap)?;
        }
        for p in 0..grid.len() {
            if grid.is_boundary_index(p) {
                v[p] = bnd[p];
            }
        }
        comps[c] = v;
    }
    VectorField::new(*grid, comps)
}

/// Linear heat problem `du/dt - L u = f` with `u = boundary` on the faces.
#[derive(Clone, Debug)]
pub struct ParabolicProblem {
    pub initial: VectorField,
    /// Only boundary nodes are read.
    pub boundary: VectorField,
    /// `forcing[k]` is applied on the step ending at time `(k + 1) dt`.
    pub forcing: Vec<VectorField>,
    pub steps: usize,
    pub dt: f64,
}

impl ParabolicProblem {
    pub fn validate(&self) -> Result<()> {
        let grid = self.initial.grid();
        if self.boundary.grid() != grid || self.forcing.iter().any(|f| f.grid() != grid) {
            return Err(Error::InvalidInput("heat problem mixes grids".into()));
        }
        if self.steps == 0 {
            return Err(Error::InvalidInput("heat problem needs at least one step".into()));
        }
        if self.forcing.len() != self.steps {
            return Err(Error::InvalidInput(format!(
                "forcing has {} entries for {} steps",
                self.forcing.len(),
                self.steps
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("invalid time step {}", self.dt)));
        }
        let mismatch = self.initial.boundary_mismatch(&self.boundary);
        if mismatch > COMPATIBILITY_TOL {
            return Err(Error::TraceIncompatibility { mismatch });
        }
        Ok(())
    }
}

/// Implicit Euler stepper for one fixed boundary datum and time step.
#[derive(Clone, Debug)]
pub struct HeatStepper {
    grid: GridSpec,
    lifting: VectorField,
    dt: f64,
    opts: EllipticSolveOptions,
}

impl HeatStepper {
    pub fn new(boundary: &VectorField, dt: f64, opts: &EllipticSolveOptions) -> Result<Self> {
        let grid = *boundary.grid();
        let lifting = harmonic_extension(boundary, &grid, opts)?;
        Ok(Self {
            grid,
            lifting,
            dt,
            opts: *opts,
        })
    }

    pub fn lifting(&self) -> &VectorField {
        &self.lifting
    }

    /// Advances `u` by one step under forcing `f`. `guess`, when given, seeds
    /// the iterative solve with a candidate for the new state.
    pub fn advance(
        &self,
        u: &VectorField,
        f: &VectorField,
        guess: Option<&VectorField>,
    ) -> Result<VectorField> {
        let grid = &self.grid;
        let cap = self.opts.iteration_cap(grid);
        let mut comps: [Vec<f64>; 3] = Default::default();
        for c in 0..3 {
            let lift = self.lifting.component(c);
            let uc = u.component(c);
            let fc = f.component(c);
            let mut rhs = vec![0.0; grid.len()];
            for p in 0..grid.len() {
                if !grid.is_boundary_index(p) {
                    rhs[p] = (uc[p] - lift[p]) + self.dt * fc[p];
                }
            }
            let seed = guess.unwrap_or(u).component(c);
            let mut w: Vec<f64> = seed.iter().zip(lift).map(|(s, l)| s - l).collect();
            let tol = self.opts.tol * norm2(&rhs);
            if tol > 0.0 {
                solve_helmholtz(grid, 1.0, self.dt, &rhs, &mut w, tol, cap)?;
            } else {
                w.fill(0.0);
            }
            for p in 0..grid.len() {
                w[p] = if grid.is_boundary_index(p) {
                    lift[p]
                } else {
                    w[p] + lift[p]
                };
            }
            comps[c] = w;
        }
        VectorField::new(*grid, comps)
    }
}

/// Marches a heat problem; element `k` of the result is the state at time
/// `k dt`, element 0 being the initial data itself.
pub fn heat_solve(prob: &ParabolicProblem, opts: &EllipticSolveOptions) -> Result<Vec<VectorField>> {
    heat_solve_seeded(prob, opts, None)
}

/// As [`heat_solve`], seeding each step's solve with `guesses[k]`.
pub(crate) fn heat_solve_seeded(
    prob: &ParabolicProblem,
    opts: &EllipticSolveOptions,
    guesses: Option<&[VectorField]>,
) -> Result<Vec<VectorField>> {
    prob.validate()?;
    opts.validate()?;
    let stepper = HeatStepper::new(&prob.boundary, prob.dt, opts)?;
    let mut out = Vec::with_capacity(prob.steps + 1);
    out.push(prob.initial.clone());
    for (k, f) in prob.forcing.iter().enumerate() {
        let guess = guesses.and_then(|g| g.get(k + 1));
        let next = stepper
            .advance(&out[k], f, guess)
            .map_err(|e| e.at_step(k + 1))?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extension_of_constant() {
        let g = GridSpec::unit(9).unwrap();
        let opts = EllipticSolveOptions::default();
        let b = VectorField::constant(g, [2.0, -1.0, 0.0]);
        let u = harmonic_extension(&b, &g, &opts).unwrap();
        for p in 0..g.len() {
            let v = u.node(p);
            assert!((v[0] - 2.0).abs() <= 1e-10 * 2.0);
            assert!((v[1] + 1.0).abs() <= 1e-10);
            assert_eq!(v[2], 0.0);
        }
    }

    #[test]
    fn extension_of_linear_trace() {
        let g = GridSpec::unit(13).unwrap();
        let exact = VectorField::from_fn(g, |x, y, z| [x, y, z]);
        let mut bnd = exact.clone();
        // interior values must be ignored
        for c in 0..3 {
            for p in g.interior_indices().collect::<Vec<_>>() {
                bnd.component_mut(c)[p] = 7.0;
            }
        }
        let u = harmonic_extension(&bnd, &g, &EllipticSolveOptions::default()).unwrap();
        assert!(u.sub(&exact).max_abs() < 1e-9);
    }

    #[test]
    fn incompatible_initial_data_is_rejected() {
        let g = GridSpec::unit(8).unwrap();
        let prob = ParabolicProblem {
            initial: VectorField::constant(g, [1.0, 0.0, 0.0]),
            boundary: VectorField::constant(g, [0.0, 0.0, 0.0]),
            forcing: vec![VectorField::zeros(g)],
            steps: 1,
            dt: 0.1,
        };
        let err = heat_solve(&prob, &EllipticSolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TraceIncompatibility { .. }));
    }

    #[test]
    fn forcing_length_must_match_steps() {
        let g = GridSpec::unit(8).unwrap();
        let prob = ParabolicProblem {
            initial: VectorField::zeros(g),
            boundary: VectorField::zeros(g),
            forcing: vec![VectorField::zeros(g); 2],
            steps: 3,
            dt: 0.1,
        };
        assert!(matches!(prob.validate(), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn nonconvergence_carries_step() {
        let g = GridSpec::unit(9).unwrap();
        let prob = ParabolicProblem {
            initial: VectorField::zeros(g),
            boundary: VectorField::zeros(g),
            forcing: vec![VectorField::constant(g, [1.0, 1.0, 1.0]); 2],
            steps: 2,
            dt: 1.0,
        };
        let opts = EllipticSolveOptions::new(1e-12, Some(1)).unwrap();
        let err = heat_solve(&prob, &opts).unwrap_err();
        assert!(matches!(
            err,
            Error::StepFailed { step: 1, ref source } if matches!(**source, Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn equilibrium_is_preserved() {
        let g = GridSpec::unit(9).unwrap();
        let c = VectorField::constant(g, [0.3, 0.4, 0.5]);
        let prob = ParabolicProblem {
            initial: c.clone(),
            boundary: c.clone(),
            forcing: vec![VectorField::zeros(g); 4],
            steps: 4,
            dt: 0.01,
        };
        let traj = heat_solve(&prob, &EllipticSolveOptions::default()).unwrap();
        assert_eq!(traj.len(), 5);
        for u in &traj {
            assert!(u.sub(&c).max_abs() < 1e-10);
        }
    }
}
