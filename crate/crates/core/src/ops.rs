//! Finite-difference operators on the collocated lattice.
//!
//! First derivatives are second-order central at interior nodes and
//! second-order one-sided on the boundary faces. The Laplacian is the
//! 7-point stencil and is only defined at interior nodes; its boundary
//! output is zero.

use crate::field::{GridSpec, ScalarField, VectorField};

/// Fields whose operators act component by component.
pub trait LatticeField: Sized {
    fn grid(&self) -> &GridSpec;
    fn map_components(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self;
}

impl LatticeField for ScalarField {
    fn grid(&self) -> &GridSpec {
        ScalarField::grid(self)
    }

    fn map_components(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        ScalarField::new(*self.grid(), f(self.values())).expect("operator preserves length")
    }
}

impl LatticeField for VectorField {
    fn grid(&self) -> &GridSpec {
        VectorField::grid(self)
    }

    fn map_components(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let comps = std::array::from_fn(|c| f(self.component(c)));
        VectorField::new(*self.grid(), comps).expect("operator preserves length")
    }
}

/// Derivative of `f` along `axis`, written into `out`.
pub(crate) fn diff_axis_into(grid: &GridSpec, f: &[f64], axis: usize, out: &mut [f64]) {
    let n = grid.n();
    let s = grid.stride(axis);
    let inv2h = 0.5 / grid.spacing();
    let last = n - 1;
    for k in 0..n {
        for j in 0..n {
            let row = grid.index(0, j, k);
            for i in 0..n {
                let p = row + i;
                let m = match axis {
                    0 => i,
                    1 => j,
                    _ => k,
                };
                out[p] = if m == 0 {
                    (-3.0 * f[p] + 4.0 * f[p + s] - f[p + 2 * s]) * inv2h
                } else if m == last {
                    (3.0 * f[p] - 4.0 * f[p - s] + f[p - 2 * s]) * inv2h
                } else {
                    (f[p + s] - f[p - s]) * inv2h
                };
            }
        }
    }
}

pub(crate) fn diff_axis(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    diff_axis_into(grid, f, axis, &mut out);
    out
}

/// 7-point Laplacian at interior nodes; boundary entries of `out` are zeroed.
pub(crate) fn laplacian_into(grid: &GridSpec, f: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let (sy, sz) = (n, n * n);
    out.fill(0.0);
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            let row = grid.index(0, j, k);
            for i in 1..n - 1 {
                let p = row + i;
                out[p] = (f[p - 1] + f[p + 1] + f[p - sy] + f[p + sy] + f[p - sz] + f[p + sz]
                    - 6.0 * f[p])
                    * inv_h2;
            }
        }
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let comps = std::array::from_fn(|axis| diff_axis(&grid, f.values(), axis));
    VectorField::new(grid, comps).expect("gradient preserves length")
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = *v.grid();
    let mut acc = diff_axis(&grid, v.component(0), 0);
    let mut tmp = vec![0.0; grid.len()];
    for axis in 1..3 {
        diff_axis_into(&grid, v.component(axis), axis, &mut tmp);
        for (a, t) in acc.iter_mut().zip(&tmp) {
            *a += t;
        }
    }
    ScalarField::new(grid, acc).expect("divergence preserves length")
}

pub fn laplacian<F: LatticeField>(f: &F) -> F {
    let grid = *f.grid();
    f.map_components(|c| {
        let mut out = vec![0.0; c.len()];
        laplacian_into(&grid, c, &mut out);
        out
    })
}

/// `(u . grad) g`, applied to every component of `g`.
pub fn advect<F: LatticeField>(u: &VectorField, g: &F) -> F {
    let grid = *g.grid();
    debug_assert_eq!(&grid, u.grid());
    g.map_components(|c| advect_component(&grid, u, c))
}

pub(crate) fn advect_component(grid: &GridSpec, u: &VectorField, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    let mut d = vec![0.0; g.len()];
    for axis in 0..3 {
        diff_axis_into(grid, g, axis, &mut d);
        for ((o, dv), uv) in out.iter_mut().zip(&d).zip(u.component(axis)) {
            *o += uv * dv;
        }
    }
    out
}

/// Jacobian of a vector field: `jac[i][j] = d_i v_j`.
pub(crate) fn jacobian(v: &VectorField) -> [[Vec<f64>; 3]; 3] {
    let grid = *v.grid();
    std::array::from_fn(|i| std::array::from_fn(|j| diff_axis(&grid, v.component(j), i)))
}

/// Pointwise Frobenius norm squared `sum_ij (d_i d_j)^2` of a Jacobian.
pub(crate) fn frobenius_sq(jac: &[[Vec<f64>; 3]; 3]) -> Vec<f64> {
    let len = jac[0][0].len();
    (0..len)
        .map(|p| {
            jac.iter()
                .flat_map(|row| row.iter())
                .map(|c| c[p] * c[p])
                .sum()
        })
        .collect()
}

/// `|grad d|^2` with the full Frobenius contraction.
pub fn grad_sq(d: &VectorField) -> ScalarField {
    ScalarField::new(*d.grid(), frobenius_sq(&jacobian(d))).expect("length preserved")
}

/// `grad^2 d . grad d`, evaluated as the gradient of `|grad d|^2 / 2`.
pub fn hessian_contract(d: &VectorField) -> VectorField {
    gradient(&grad_sq(d).scale(0.5))
}
