//! Initial data for the three documented scenarios.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm3, GridSpec, ScalarField, StateSnapshot, VectorField};
use crate::linalg::EllipticSolveOptions;
use crate::parabolic::COMPATIBILITY_TOL;
use crate::stokes::project_solenoidal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScenarioKind {
    /// `u0 = 0`, `d0 = e`.
    Equilibrium,
    /// Bump perturbation of `e` plus a small windowed curl flow.
    SmallPerturbation,
    /// Director rotating `k/2` turns along x, flattened near the walls.
    StrongTwist,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Equilibrium,
        ScenarioKind::SmallPerturbation,
        ScenarioKind::StrongTwist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Equilibrium => "equilibrium",
            ScenarioKind::SmallPerturbation => "small_perturbation",
            ScenarioKind::StrongTwist => "strong_twist",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equilibrium" | "a" => Ok(ScenarioKind::Equilibrium),
            "small_perturbation" | "b" => Ok(ScenarioKind::SmallPerturbation),
            "strong_twist" | "c" => Ok(ScenarioKind::StrongTwist),
            other => Err(Error::InvalidScenario(other.to_owned())),
        }
    }
}

impl TryFrom<String> for ScenarioKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScenarioKind> for String {
    fn from(k: ScenarioKind) -> Self {
        k.name().to_owned()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Perturbation size `eps` (small_perturbation).
    pub amplitude: f64,
    /// Twist wavenumber `k` (strong_twist).
    pub wavenumber: f64,
    /// Unit reference director `e`, also the boundary trace of `d`.
    pub reference: [f64; 3],
    /// Recorded in the manifest; every current scenario is deterministic.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::SmallPerturbation,
            amplitude: 0.01,
            wavenumber: 4.0,
            reference: [0.0, 0.0, 1.0],
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "amplitude must be finite and non-negative, got {}",
                self.amplitude
            )));
        }
        if !(self.wavenumber.is_finite() && self.wavenumber > 0.0) {
            return Err(Error::InvalidInput(format!(
                "wavenumber must be positive, got {}",
                self.wavenumber
            )));
        }
        let len = norm3(self.reference);
        if !len.is_finite() || (len - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "reference director must have unit length, got |e| = {len}"
            )));
        }
        Ok(())
    }
}

/// Fixed unit vector orthogonal to `e`: the coordinate axis least aligned
/// with `e`, with its `e` component removed.
pub fn orthogonal_unit(e: [f64; 3]) -> [f64; 3] {
    let axis = (0..3)
        .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
        .unwrap_or(0);
    let mut a = [0.0; 3];
    a[axis] = 1.0;
    let dot = e[axis];
    let v = [a[0] - dot * e[0], a[1] - dot * e[1], a[2] - dot * e[2]];
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// `16 s^2 (1 - s)^2`: peak 1 at the centre, value and slope zero at 0 and 1.
fn bump1(s: f64) -> f64 {
    16.0 * s * s * (1.0 - s) * (1.0 - s)
}

/// `sin^2(pi s)`: peak 1 at the centre, value and slope zero at 0 and 1.
fn window1(s: f64) -> f64 {
    (PI * s).sin().powi(2)
}

fn window1_prime(s: f64) -> f64 {
    PI * (2.0 * PI * s).sin()
}

/// Twist angle `theta = k pi (x/L) W(x, y, z)` and its gradient, with `W`
/// the product window. `theta` and `grad theta` vanish on every face.
pub fn twist_angle(x: f64, y: f64, z: f64, extent: f64, k: f64) -> (f64, [f64; 3]) {
    let (sx, sy, sz) = (x / extent, y / extent, z / extent);
    let (wx, wy, wz) = (window1(sx), window1(sy), window1(sz));
    let w = wx * wy * wz;
    let c = k * PI;
    let theta = c * sx * w;
    let grad = [
        c / extent * (w + sx * window1_prime(sx) * wy * wz),
        c * sx * wx * window1_prime(sy) * wz / extent,
        c * sx * wx * wy * window1_prime(sz) / extent,
    ];
    (theta, grad)
}

/// Unnormalised windowed curl flow `curl(0, 0, psi)` with
/// `psi = g(x) g(y) g(z)`, `g(s) = s^2 (1 - s)^2` in scaled coordinates.
fn curl_flow(grid: GridSpec) -> VectorField {
    let l = grid.extent();
    let g = |s: f64| s * s * (1.0 - s) * (1.0 - s);
    let dg = |s: f64| 2.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    VectorField::from_fn(grid, |x, y, z| {
        let (sx, sy, sz) = (x / l, y / l, z / l);
        [
            g(sx) * dg(sy) * g(sz) / l,
            -dg(sx) * g(sy) * g(sz) / l,
            0.0,
        ]
    })
}

/// Builds the initial state. Every scenario returns a pointwise unit
/// director whose boundary trace is exactly `e`, and a velocity that
/// vanishes on the walls.
pub fn make_scenario(
    grid: GridSpec,
    cfg: &ScenarioConfig,
    opts: &EllipticSolveOptions,
) -> Result<StateSnapshot> {
    cfg.validate()?;
    let e = cfg.reference;
    let a = orthogonal_unit(e);
    let l = grid.extent();
    let (u, d) = match cfg.kind {
        ScenarioKind::Equilibrium => (VectorField::zeros(grid), VectorField::constant(grid, e)),
        ScenarioKind::SmallPerturbation => {
            let eps = cfg.amplitude;
            let d = VectorField::from_fn(grid, |x, y, z| {
                let b = eps * bump1(x / l) * bump1(y / l) * bump1(z / l);
                [e[0] + b * a[0], e[1] + b * a[1], e[2] + b * a[2]]
            })
            .normalized();
            let raw = curl_flow(grid);
            let peak = raw.max_norm();
            let mut v = raw.scale(eps / peak);
            v.zero_boundary();
            let (u, _) = project_solenoidal(&v, opts)?;
            (u, d)
        }
        ScenarioKind::StrongTwist => {
            let k = cfg.wavenumber;
            let d = VectorField::from_fn(grid, |x, y, z| {
                let (t, _) = twist_angle(x, y, z, l, k);
                let (s, c) = t.sin_cos();
                [c * e[0] + s * a[0], c * e[1] + s * a[1], c * e[2] + s * a[2]]
            })
            .normalized();
            (VectorField::zeros(grid), d)
        }
    };
    let mismatch = d.boundary_mismatch(&VectorField::constant(grid, e));
    if mismatch > COMPATIBILITY_TOL {
        return Err(Error::TraceIncompatibility { mismatch });
    }
    StateSnapshot::new(u, d, ScalarField::zeros(grid), 0.0)
}
