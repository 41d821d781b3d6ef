//! Discrete surrogates for the trajectory norms and physical diagnostics.
//!
//! Fractional-domain and Besov norms of the data are replaced by the
//! computable proxy `max|f| + max|grad f| + |f|_{L^q}`; the analysis only
//! consumes those norms through sup-norm embeddings and `L^q` bounds.
//! Spatial `L^q` norms use flat `h^3` weights; time integrals are Riemann
//! sums over the levels `1..=K`, with time derivatives by backward
//! differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm3, GridSpec, ScalarField, StateSnapshot, VectorField};
use crate::ops::{diff_axis, divergence, gradient};
use crate::picard::Trajectory;

/// Time exponent `p` and space exponent `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormConfig {
    pub p: f64,
    pub q: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { p: 4.0, q: 8.0 }
    }
}

impl NormConfig {
    /// Accepts `1 < p, q < inf` with `(1 - 2/p) q > 3`.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let cfg = Self { p, q };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (p, q) = (self.p, self.q);
        if !(p.is_finite() && q.is_finite() && p > 1.0 && q > 1.0) {
            return Err(Error::InvalidInput(format!(
                "norm exponents must satisfy 1 < p, q < inf (got p={p}, q={q})"
            )));
        }
        if (1.0 - 2.0 / p) * q <= 3.0 {
            return Err(Error::InvalidInput(format!(
                "exponents need (1 - 2/p) q > 3 (got p={p}, q={q})"
            )));
        }
        Ok(())
    }
}

/// Fields reducible to a pointwise magnitude.
pub trait Magnitude {
    fn grid(&self) -> &GridSpec;
    /// Component slices; the pointwise magnitude is their Euclidean norm.
    fn parts(&self) -> Vec<&[f64]>;
}

impl Magnitude for ScalarField {
    fn grid(&self) -> &GridSpec {
        ScalarField::grid(self)
    }
    fn parts(&self) -> Vec<&[f64]> {
        vec![self.values()]
    }
}

impl Magnitude for VectorField {
    fn grid(&self) -> &GridSpec {
        VectorField::grid(self)
    }
    fn parts(&self) -> Vec<&[f64]> {
        self.components().iter().map(|c| c.as_slice()).collect()
    }
}

fn squared_magnitudes(parts: &[&[f64]]) -> Vec<f64> {
    let len = parts.first().map_or(0, |c| c.len());
    (0..len)
        .map(|p| parts.iter().map(|c| c[p] * c[p]).sum())
        .collect()
}

fn lq_of_squares(sq: &[f64], h: f64, q: f64) -> f64 {
    let sum: f64 = sq.iter().map(|s| s.powf(0.5 * q)).sum();
    (h * h * h * sum).powf(1.0 / q)
}

fn max_of_squares(sq: &[f64]) -> f64 {
    sq.iter().fold(0.0f64, |m, &s| m.max(s)).sqrt()
}

/// `(h^3 sum |f|^q)^(1/q)`, summed in storage order.
pub fn lq_norm<F: Magnitude>(f: &F, q: f64) -> f64 {
    lq_of_squares(&squared_magnitudes(&f.parts()), f.grid().spacing(), q)
}

/// Squared Frobenius magnitudes of the first and second derivatives of all
/// parts.
fn derivative_squares(grid: &GridSpec, parts: &[&[f64]]) -> (Vec<f64>, Vec<f64>) {
    let len = grid.len();
    let mut first = vec![0.0; len];
    let mut second = vec![0.0; len];
    for c in parts {
        for i in 0..3 {
            let di = diff_axis(grid, c, i);
            for p in 0..len {
                first[p] += di[p] * di[p];
            }
            for j in 0..3 {
                let dij = diff_axis(grid, &di, j);
                for p in 0..len {
                    second[p] += dij[p] * dij[p];
                }
            }
        }
    }
    (first, second)
}

/// `|f|_q + |grad f|_q + |grad^2 f|_q`.
pub fn w2q_norm<F: Magnitude>(f: &F, q: f64) -> f64 {
    let grid = f.grid();
    let parts = f.parts();
    let h = grid.spacing();
    let (first, second) = derivative_squares(grid, &parts);
    lq_of_squares(&squared_magnitudes(&parts), h, q)
        + lq_of_squares(&first, h, q)
        + lq_of_squares(&second, h, q)
}

/// `max|f| + max|grad f| + |f|_q`.
pub fn proxy_trace_norm<F: Magnitude>(f: &F, q: f64) -> f64 {
    let grid = f.grid();
    let parts = f.parts();
    let sq = squared_magnitudes(&parts);
    let mut grad_sq = vec![0.0; grid.len()];
    for c in &parts {
        for i in 0..3 {
            let di = diff_axis(grid, c, i);
            for (g, d) in grad_sq.iter_mut().zip(&di) {
                *g += d * d;
            }
        }
    }
    max_of_squares(&sq) + max_of_squares(&grad_sq) + lq_of_squares(&sq, grid.spacing(), q)
}

/// `(dt sum v_k^p)^(1/p)`.
pub fn lp_time_norm(values: &[f64], p: f64, dt: f64) -> f64 {
    let sum: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (dt * sum).powf(1.0 / p)
}

/// The seven components of the trajectory functional and their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub time: f64,
    pub sup_proxy_u: f64,
    pub sup_proxy_d: f64,
    pub lp_w2q_u: f64,
    pub lp_w2q_d: f64,
    pub lp_dt_u: f64,
    pub lp_dt_d: f64,
    pub lp_grad_p: f64,
    pub h_total: f64,
}

impl NormReport {
    pub const CSV_HEADER: &'static str =
        "time,sup_proxy_u,sup_proxy_d,lp_w2q_u,lp_w2q_d,lp_dt_u,lp_dt_d,lp_grad_p,h_total";

    /// Velocity/pressure part.
    pub fn flow_part(&self) -> f64 {
        self.sup_proxy_u + self.lp_w2q_u + self.lp_dt_u + self.lp_grad_p
    }

    /// Director part.
    pub fn director_part(&self) -> f64 {
        self.sup_proxy_d + self.lp_w2q_d + self.lp_dt_d
    }

    pub fn components(&self) -> [f64; 7] {
        [
            self.sup_proxy_u,
            self.sup_proxy_d,
            self.lp_w2q_u,
            self.lp_w2q_d,
            self.lp_dt_u,
            self.lp_dt_d,
            self.lp_grad_p,
        ]
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!("{:.17e}", self.time);
        for v in self.components().into_iter().chain([self.h_total]) {
            row.push_str(&format!(",{v:.17e}"));
        }
        row
    }
}

/// Streaming evaluation of the trajectory functional. Feed time levels in
/// order; `report` may be called at any point.
#[derive(Clone, Debug)]
pub struct NormAccumulator {
    cfg: NormConfig,
    dt: f64,
    reference: [f64; 3],
    prev: Option<(VectorField, VectorField)>,
    time: f64,
    sup_u: f64,
    sup_d: f64,
    sum_w2q_u: f64,
    sum_w2q_d: f64,
    sum_dt_u: f64,
    sum_dt_d: f64,
    sum_grad_p: f64,
}

impl NormAccumulator {
    /// `reference` is subtracted from every director before measuring.
    pub fn new(cfg: NormConfig, dt: f64, reference: [f64; 3]) -> Self {
        Self {
            cfg,
            dt,
            reference,
            prev: None,
            time: 0.0,
            sup_u: 0.0,
            sup_d: 0.0,
            sum_w2q_u: 0.0,
            sum_w2q_d: 0.0,
            sum_dt_u: 0.0,
            sum_dt_d: 0.0,
            sum_grad_p: 0.0,
        }
    }

    pub fn push_snapshot(&mut self, s: &StateSnapshot) {
        self.push(&s.u, &s.d, &s.p, s.time);
    }

    /// Adds one time level. The pressure of the first level is not used.
    pub fn push(&mut self, u: &VectorField, d: &VectorField, p: &ScalarField, time: f64) {
        let (pe, qe) = (self.cfg.p, self.cfg.q);
        let dd = d.offset(self.reference);
        self.sup_u = self.sup_u.max(proxy_trace_norm(u, qe));
        self.sup_d = self.sup_d.max(proxy_trace_norm(&dd, qe));
        if let Some((pu, pd)) = &self.prev {
            let inv = 1.0 / self.dt;
            self.sum_w2q_u += w2q_norm(u, qe).powf(pe);
            self.sum_w2q_d += w2q_norm(&dd, qe).powf(pe);
            self.sum_dt_u += lq_norm(&u.lin_comb(inv, pu, -inv), qe).powf(pe);
            self.sum_dt_d += lq_norm(&dd.lin_comb(inv, pd, -inv), qe).powf(pe);
            self.sum_grad_p += lq_norm(&gradient(p), qe).powf(pe);
        }
        self.prev = Some((u.clone(), dd));
        self.time = time;
    }

    pub fn report(&self) -> NormReport {
        let (pe, dt) = (self.cfg.p, self.dt);
        let lp = |s: f64| (dt * s).powf(1.0 / pe);
        let mut r = NormReport {
            time: self.time,
            sup_proxy_u: self.sup_u,
            sup_proxy_d: self.sup_d,
            lp_w2q_u: lp(self.sum_w2q_u),
            lp_w2q_d: lp(self.sum_w2q_d),
            lp_dt_u: lp(self.sum_dt_u),
            lp_dt_d: lp(self.sum_dt_d),
            lp_grad_p: lp(self.sum_grad_p),
            h_total: 0.0,
        };
        r.h_total = r.components().iter().sum();
        r
    }
}

/// Trajectory functional with `d` measured relative to `ref_director`.
pub fn h_functional(traj: &Trajectory, ref_director: [f64; 3], cfg: &NormConfig) -> NormReport {
    let mut acc = NormAccumulator::new(*cfg, traj.dt, ref_director);
    for s in &traj.snapshots {
        acc.push_snapshot(s);
    }
    acc.report()
}

/// Data size `proxy(u0) + proxy(d0 - e)`.
pub fn h0(init: &StateSnapshot, ref_director: [f64; 3], cfg: &NormConfig) -> f64 {
    proxy_trace_norm(&init.u, cfg.q) + proxy_trace_norm(&init.d.offset(ref_director), cfg.q)
}

/// Largest `||d| - 1|` over all nodes and time levels.
pub fn unit_drift(traj: &Trajectory) -> f64 {
    traj.snapshots
        .iter()
        .map(|s| snapshot_unit_drift(&s.d))
        .fold(0.0, f64::max)
}

pub fn snapshot_unit_drift(d: &VectorField) -> f64 {
    (0..d.grid().len()).fold(0.0, |m, p| m.max((norm3(d.node(p)) - 1.0).abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub elastic: f64,
    pub total: f64,
}

/// `1/2 |u|^2` and `1/2 |grad d|^2`, integrated with trapezoid weights.
pub fn energy(s: &StateSnapshot) -> Energy {
    let grid = s.grid();
    let h3 = grid.spacing().powi(3);
    let g2 = crate::ops::grad_sq(&s.d);
    let last = grid.n() - 1;
    let (mut kin, mut ela) = (0.0, 0.0);
    for p in 0..grid.len() {
        let (i, j, k) = grid.coords_of(p);
        let w: f64 = [i, j, k]
            .into_iter()
            .map(|m| if m == 0 || m == last { 0.5 } else { 1.0 })
            .product();
        let u = s.u.node(p);
        kin += w * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        ela += w * g2.values()[p];
    }
    let kinetic = 0.5 * h3 * kin;
    let elastic = 0.5 * h3 * ela;
    Energy {
        kinetic,
        elastic,
        total: kinetic + elastic,
    }
}

/// Interior max-norm of the discrete divergence of `u`.
pub fn divergence_residual(s: &StateSnapshot) -> f64 {
    divergence(&s.u).max_abs_interior()
}
