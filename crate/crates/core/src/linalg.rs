//! Matrix-free conjugate gradients for the lattice elliptic problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::GridSpec;

/// Stopping rule shared by every elliptic solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolveOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap; `None` means `10 * n^2`.
    pub max_iters: Option<usize>,
}

impl Default for EllipticSolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: None,
        }
    }
}

impl EllipticSolveOptions {
    pub fn new(tol: f64, max_iters: Option<usize>) -> Result<Self> {
        let opts = Self { tol, max_iters };
        opts.validate()?;
        Ok(opts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "elliptic tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, grid: &GridSpec) -> usize {
        self.max_iters.unwrap_or(10 * grid.n() * grid.n())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` for a symmetric positive (semi)definite `A` given as
/// `apply(x, out)`, starting from the contents of `x`. Stops once the
/// residual 2-norm drops to `abs_tol`, restarting from zero when the guess
/// has a larger residual than zero does. Returns the iteration count.
///
/// Reductions run sequentially in index order, so results do not depend on
/// thread scheduling.
pub(crate) fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    abs_tol: f64,
    max_iters: usize,
) -> Result<usize> {
    let len = b.len();
    let mut r = vec![0.0; len];
    let mut ap = vec![0.0; len];
    apply(x, &mut ap);
    for i in 0..len {
        r[i] = b[i] - ap[i];
    }
    let mut rr = dot(&r, &r);
    let bb = dot(b, b);
    if rr > bb {
        // a starting guess worse than zero only adds cancellation error
        x.fill(0.0);
        r.copy_from_slice(b);
        rr = bb;
    }
    if !rr.is_finite() {
        return Err(Error::NonConvergence {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    if rr.sqrt() <= abs_tol {
        return Ok(0);
    }
    let mut p = r.clone();
    for iter in 1..=max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Krylov space exhausted (semidefinite operator with consistent rhs)
            // or breakdown.
            let res = rr.sqrt();
            return if res <= abs_tol {
                Ok(iter - 1)
            } else {
                Err(Error::NonConvergence {
                    iterations: iter,
                    residual: res,
                })
            };
        }
        let alpha = rr / pap;
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= abs_tol {
            return Ok(iter);
        }
        if !rr_new.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: f64::NAN,
            });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..len {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual: rr.sqrt(),
    })
}
