//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nematic_core::nonlinear::elastic_stress;
use nematic_core::ops::{divergence, gradient, laplacian};
use nematic_core::stokes::{project_solenoidal, stokes_solve, StokesProblem};
use nematic_core::{EllipticSolveOptions, GridSpec, ScalarField, VectorField};

pub fn grid(n: usize) -> GridSpec {
    GridSpec::unit(n).unwrap()
}

/// Largest |a - b| over interior nodes at depth >= `depth`.
pub fn max_err_depth(grid: &GridSpec, a: &[f64], b: &[f64], depth: usize) -> f64 {
    (0..grid.len())
        .filter(|&p| grid.depth(p) >= depth)
        .map(|p| (a[p] - b[p]).abs())
        .fold(0.0, f64::max)
}

pub fn max_err_interior(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    max_err_depth(grid, a, b, 1)
}

pub fn gradient_error(n: usize) -> f64 {
    let g = grid(n);
    let k = 2.0 * PI;
    let f = ScalarField::from_fn(g, |x, _, _| (k * x).sin());
    let exact = ScalarField::from_fn(g, |x, _, _| k * (k * x).cos());
    max_err_interior(&g, gradient(&f).component(0), exact.values())
}

pub fn laplacian_error(n: usize) -> f64 {
    let g = grid(n);
    let f = ScalarField::from_fn(g, |x, y, z| (PI * x).sin() * (PI * y).sin() * (PI * z).sin());
    let exact = f.scale(-3.0 * PI * PI);
    max_err_interior(&g, laplacian(&f).values(), exact.values())
}

pub fn divergence_error(n: usize) -> f64 {
    let g = grid(n);
    let v = VectorField::from_fn(g, |x, y, z| [(PI * x).sin() * y, (2.0 * PI * y).cos(), z * z * (PI * z).sin()]);
    let exact = ScalarField::from_fn(g, |x, y, z| {
        PI * (PI * x).cos() * y - 2.0 * PI * (2.0 * PI * y).sin()
            + 2.0 * z * (PI * z).sin()
            + z * z * PI * (PI * z).cos()
    });
    max_err_interior(&g, divergence(&v).values(), exact.values())
}

/// `div(grad d (.) grad d)` by assembling `S_ij = d_i d . d_j d` and
/// differentiating it: `(div S)_j = sum_i d_i S_ij`.
pub fn direct_stress(d: &VectorField) -> VectorField {
    let g = *d.grid();
    let grads: Vec<VectorField> = (0..3).map(|c| gradient(&d.component_field(c))).collect();
    let s = |i: usize, j: usize| {
        let v = (0..g.len())
            .map(|p| (0..3).map(|c| grads[c].component(i)[p] * grads[c].component(j)[p]).sum())
            .collect();
        ScalarField::new(g, v).unwrap()
    };
    let comps = std::array::from_fn(|j| {
        let mut acc = vec![0.0; g.len()];
        for i in 0..3 {
            let di = gradient(&s(i, j));
            for (a, v) in acc.iter_mut().zip(di.component(i)) {
                *a += v;
            }
        }
        acc
    });
    VectorField::new(g, comps).unwrap()
}

pub fn twist(g: GridSpec) -> VectorField {
    VectorField::from_fn(g, |x, y, z| {
        let t = 1.5 * (std::f64::consts::PI * x).sin() * (1.0 + 0.3 * y) + 0.2 * z * z;
        [t.cos(), t.sin(), 0.0]
    })
}

pub fn deep_max(g: &GridSpec, f: &VectorField, depth: usize) -> f64 {
    (0..g.len())
        .filter(|&p| g.depth(p) >= depth)
        .map(|p| f.node(p).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(0.0, f64::max)
}

pub fn identity_gap(n: usize) -> f64 {
    let g = grid(n);
    let d = twist(g);
    deep_max(&g, &elastic_stress(&d).sub(&direct_stress(&d)), 2)
}

/// `curl(0, 0, psi)` with `psi = X Y Z`, `X = x^2 (1 - x)^2`: divergence
/// free with zero trace on every face.
pub fn stream_flow(g: GridSpec) -> VectorField {
    let a = |s: f64| s * s * (1.0 - s) * (1.0 - s);
    let da = |s: f64| 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    VectorField::from_fn(g, |x, y, z| [a(x) * da(y) * a(z), -da(x) * a(y) * a(z), 0.0]).scale(64.0)
}

pub fn stream_laplacian(g: GridSpec) -> VectorField {
    let a = |s: f64| s * s * (1.0 - s) * (1.0 - s);
    let da = |s: f64| 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    let dda = |s: f64| 2.0 - 12.0 * s + 12.0 * s * s;
    let ddda = |s: f64| -12.0 + 24.0 * s;
    VectorField::from_fn(g, |x, y, z| {
        [
            dda(x) * da(y) * a(z) + a(x) * ddda(y) * a(z) + a(x) * da(y) * dda(z),
            -(ddda(x) * a(y) * a(z) + da(x) * dda(y) * a(z) + da(x) * a(y) * dda(z)),
            0.0,
        ]
    })
    .scale(64.0)
}


/// Max-norm error at `t_end` of the projection scheme against
/// `u = e^{-t} curl(psi)`, `P = e^{-t} cos(pi x) cos(pi y)`.
pub fn stokes_mms_error(n: usize, steps: usize, t_end: f64) -> f64 {
    let g = grid(n);
    let opts = EllipticSolveOptions::new(1e-12, None).unwrap();
    let shape = stream_flow(g);
    let lap = stream_laplacian(g);
    let grad_p = VectorField::from_fn(g, |x, y, _| {
        [-PI * (PI * x).sin() * (PI * y).cos(), -PI * (PI * x).cos() * (PI * y).sin(), 0.0]
    });
    let dt = t_end / steps as f64;
    let forcing = (1..=steps)
        .map(|k| {
            let e = (-(k as f64) * dt).exp();
            shape.add(&lap).scale(-e).add(&grad_p.scale(e))
        })
        .collect();
    let (initial, _) = project_solenoidal(&shape, &opts).unwrap();
    let traj = stokes_solve(&StokesProblem { initial, forcing, steps, dt }, &opts).unwrap();
    traj.velocity[steps].sub(&shape.scale((-t_end).exp())).max_abs()
}
