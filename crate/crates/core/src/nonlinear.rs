//! Nonlinear forcings frozen at the previous iterate.
//!
//! Index convention: `(grad d)_{ij} = d_i d_j`, so the elastic stress
//! matrix has entries `d_i d . d_j d` and its divergence expands as
//! `grad(|grad d|^2 / 2) + (lap d) . grad d`.

use crate::field::{StateSnapshot, VectorField};
use crate::ops::{advect, frobenius_sq, hessian_contract, jacobian, laplacian};

/// `div(grad d (.) grad d)` via the expanded identity: i-th component
/// `d_i(|grad d|^2 / 2) + sum_j (lap d_j)(d_i d_j)`.
pub fn elastic_stress(d: &VectorField) -> VectorField {
    let grid = *d.grid();
    let jac = jacobian(d);
    let lap = laplacian(d);
    let mut out = hessian_contract(d).into_components();
    for (i, oi) in out.iter_mut().enumerate() {
        for j in 0..3 {
            let lj = lap.component(j);
            for (p, o) in oi.iter_mut().enumerate() {
                *o += lj[p] * jac[i][j][p];
            }
        }
    }
    VectorField::new(grid, out).expect("length preserved")
}

/// `|grad d|^2 d`, the part of the harmonic-map tension that keeps `d` on
/// the sphere.
pub fn ginzburg_term(d: &VectorField) -> VectorField {
    let grid = *d.grid();
    let g2 = frobenius_sq(&jacobian(d));
    let comps = std::array::from_fn(|c| {
        d.component(c)
            .iter()
            .zip(&g2)
            .map(|(v, s)| v * s)
            .collect()
    });
    VectorField::new(grid, comps).expect("length preserved")
}

/// Momentum forcing `-u.grad u - div(grad d (.) grad d)`.
pub fn momentum_forcing(s: &StateSnapshot) -> VectorField {
    momentum_forcing_with(s, true)
}

/// Director forcing `-u.grad d + |grad d|^2 d`.
pub fn director_forcing(s: &StateSnapshot) -> VectorField {
    director_forcing_with(s, true)
}

pub(crate) fn momentum_forcing_with(s: &StateSnapshot, advection: bool) -> VectorField {
    let stress = elastic_stress(&s.d);
    if advection {
        advect(&s.u, &s.u).add(&stress).scale(-1.0)
    } else {
        stress.scale(-1.0)
    }
}

pub(crate) fn director_forcing_with(s: &StateSnapshot, advection: bool) -> VectorField {
    let g = ginzburg_term(&s.d);
    if advection {
        g.sub(&advect(&s.u, &s.d))
    } else {
        g
    }
}
