//! Grid-sampled scalar and vector fields on a uniform box lattice.
//!
//! Nodes are stored with the x index varying fastest:
//! `index = i + n * (j + n * k)`. Both boundary faces of `[0, L]` are
//! lattice planes, so `h = L / (n - 1)`.

use crate::error::{Error, Result};

/// Uniform lattice on the box `[0, L]^3` with `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    n: usize,
    extent: f64,
    h: f64,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 8;

    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "grid needs at least {} points per axis, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidInput(format!(
                "box extent must be positive and finite, got {extent}"
            )));
        }
        Ok(Self {
            n,
            extent,
            h: extent / (n - 1) as f64,
        })
    }

    /// Unit box with `n` points per axis.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn coords_of(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    /// Physical position of lattice node `(i, j, k)`.
    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [i as f64 * self.h, j as f64 * self.h, k as f64 * self.h]
    }

    /// Memory stride between neighbours along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.n,
            _ => self.n * self.n,
        }
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        let last = self.n - 1;
        i == 0 || j == 0 || k == 0 || i == last || j == last || k == last
    }

    pub fn is_boundary_index(&self, idx: usize) -> bool {
        let (i, j, k) = self.coords_of(idx);
        self.is_boundary(i, j, k)
    }

    /// Distance (in nodes) from the nearest boundary face.
    pub fn depth(&self, idx: usize) -> usize {
        let (i, j, k) = self.coords_of(idx);
        let last = self.n - 1;
        [i, j, k, last - i, last - j, last - k]
            .into_iter()
            .min()
            .unwrap_or(0)
    }

    /// Indices of all interior nodes in storage order.
    pub fn interior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&idx| !self.is_boundary_index(idx))
    }

    pub fn interior_count(&self) -> usize {
        (self.n - 2).pow(3)
    }

    /// Indices of the nodes at least `depth` nodes away from every face.
    pub fn indices_with_depth(&self, depth: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&idx| self.depth(idx) >= depth)
    }
}

/// Real-valued lattice function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "scalar field needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y, z)` at every lattice node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        let n = grid.n();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let [x, y, z] = grid.position(i, j, k);
                    values.push(f(x, y, z));
                }
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.grid
            .interior_indices()
            .fold(0.0, |m, idx| m.max(self.values[idx].abs()))
    }

    /// Arithmetic mean over interior nodes.
    pub fn interior_mean(&self) -> f64 {
        let sum: f64 = self.grid.interior_indices().map(|idx| self.values[idx]).sum();
        sum / self.grid.interior_count() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// `a * self + b * other`
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(1.0, other, 1.0)
    }

    /// Subtracts the interior mean from every node.
    pub fn remove_interior_mean(&mut self) {
        let mean = self.interior_mean();
        for v in &mut self.values {
            *v -= mean;
        }
    }
}

/// R^3-valued lattice function, stored component by component.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: [Vec<f64>; 3],
}

impl VectorField {
    pub fn new(grid: GridSpec, comps: [Vec<f64>; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidInput(format!(
                "vector field components need {} values each",
                grid.len()
            )));
        }
        Ok(Self { grid, comps })
    }

    pub fn from_components(x: ScalarField, y: ScalarField, z: ScalarField) -> Result<Self> {
        if x.grid != y.grid || x.grid != z.grid {
            return Err(Error::InvalidInput(
                "vector components live on different grids".into(),
            ));
        }
        let grid = x.grid;
        Ok(Self {
            grid,
            comps: [x.values, y.values, z.values],
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, [0.0; 3])
    }

    pub fn constant(grid: GridSpec, value: [f64; 3]) -> Self {
        Self {
            grid,
            comps: value.map(|v| vec![v; grid.len()]),
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut comps: [Vec<f64>; 3] = Default::default();
        for c in &mut comps {
            c.reserve(grid.len());
        }
        let n = grid.n();
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let [x, y, z] = grid.position(i, j, k);
                    let v = f(x, y, z);
                    for c in 0..3 {
                        comps[c].push(v[c]);
                    }
                }
            }
        }
        Self { grid, comps }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    #[cfg(test)]
    pub(crate) fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn component_field(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.comps[c].clone(),
        }
    }

    pub fn into_components(self) -> [Vec<f64>; 3] {
        self.comps
    }

    #[inline]
    pub fn node(&self, idx: usize) -> [f64; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        self.node(self.grid.index(i, j, k))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|idx| norm3(self.node(idx)))
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).fold(0.0, |m, idx| m.max(norm3(self.node(idx))))
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flatten()
            .fold(0.0, |m, v: &f64| m.max(v.abs()))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            comps: std::array::from_fn(|c| self.comps[c].iter().map(|v| a * v).collect()),
        }
    }

    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            grid: self.grid,
            comps: std::array::from_fn(|c| {
                self.comps[c]
                    .iter()
                    .zip(&other.comps[c])
                    .map(|(x, y)| a * x + b * y)
                    .collect()
            }),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(1.0, other, -1.0)
    }

    /// Subtracts a constant vector from every node.
    pub fn offset(&self, v: [f64; 3]) -> Self {
        Self {
            grid: self.grid,
            comps: std::array::from_fn(|c| self.comps[c].iter().map(|x| x - v[c]).collect()),
        }
    }

    /// Sets every boundary node to zero.
    pub fn zero_boundary(&mut self) {
        let grid = self.grid;
        for c in &mut self.comps {
            for (idx, v) in c.iter_mut().enumerate() {
                if grid.is_boundary_index(idx) {
                    *v = 0.0;
                }
            }
        }
    }

    /// Pointwise `d <- d / |d|`; nodes with zero magnitude are left alone.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.len() {
            let v = self.node(idx);
            let m = norm3(v);
            if m > 0.0 {
                for c in 0..3 {
                    out.comps[c][idx] = v[c] / m;
                }
            }
        }
        out
    }

    /// Largest pointwise distance between boundary values of two fields.
    pub fn boundary_mismatch(&self, other: &Self) -> f64 {
        (0..self.grid.len())
            .filter(|&idx| self.grid.is_boundary_index(idx))
            .fold(0.0, |m, idx| {
                let a = self.node(idx);
                let b = other.node(idx);
                m.max((0..3).fold(0.0, |mm: f64, c| mm.max((a[c] - b[c]).abs())))
            })
    }
}

#[inline]
pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// The triplet (u, d, P) at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSnapshot {
    pub u: VectorField,
    pub d: VectorField,
    pub p: ScalarField,
    pub time: f64,
}

impl StateSnapshot {
    /// Builds a snapshot, rejecting mixed grids, non-finite values, a
    /// negative time or a pressure whose interior mean is not zero.
    pub fn new(u: VectorField, d: VectorField, p: ScalarField, time: f64) -> Result<Self> {
        if u.grid() != d.grid() || u.grid() != p.grid() {
            return Err(Error::InvalidInput(
                "snapshot fields live on different grids".into(),
            ));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::InvalidInput(format!("invalid snapshot time {time}")));
        }
        if !(u.is_finite() && d.is_finite() && p.is_finite()) {
            return Err(Error::InvalidInput("snapshot contains non-finite values".into()));
        }
        let mean = p.interior_mean();
        if mean.abs() > 1e-12 * p.max_abs() {
            return Err(Error::InvalidInput(format!(
                "pressure interior mean {mean:e} is not zero"
            )));
        }
        Ok(Self { u, d, p, time })
    }

    pub fn grid(&self) -> &GridSpec {
        self.u.grid()
    }

    /// Rest state: no flow, uniform director `e`, zero pressure.
    pub fn equilibrium(grid: GridSpec, e: [f64; 3]) -> Self {
        Self {
            u: VectorField::zeros(grid),
            d: VectorField::constant(grid, e),
            p: ScalarField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.u.max_abs().max(self.d.max_abs()).max(self.p.max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.d.is_finite() && self.p.is_finite()
    }
}
