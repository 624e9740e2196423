//! Node-centered rectangular grids, nodal fields, and initial data.
//!
//! Nodes sit on the boundary of each axis, so an axis of extent `L` with `n`
//! nodes has spacing `L / (n - 1)`. Node `(i, j)` has flat index
//! `j * nx + i` (x varies fastest). Quadrature uses the dual cell of each
//! node: a full cell in the interior and a half cell on each boundary face,
//! which is exactly the weighting under which the mirror-ghost operators
//! telescope.

use serde::{Deserialize, Serialize};

use crate::error::{GridError, SpecError};
use crate::par;

/// Spatial discretization of a 1D interval or 2D rectangle `[0, Lx] x [0, Ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    nodes: [usize; 2],
    extent: [f64; 2],
    spacing: [f64; 2],
}

pub fn build_grid(dim: usize, extents: &[f64], nodes_per_axis: &[usize]) -> Result<Grid, GridError> {
    Grid::new(dim, extents, nodes_per_axis)
}

impl Grid {
    pub fn new(dim: usize, extents: &[f64], nodes_per_axis: &[usize]) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        for got in [extents.len(), nodes_per_axis.len()] {
            if got != dim {
                return Err(GridError::AxisCount { expected: dim, got });
            }
        }
        let mut nodes = [1usize; 2];
        let mut extent = [0.0; 2];
        let mut spacing = [1.0; 2];
        for axis in 0..dim {
            let (l, n) = (extents[axis], nodes_per_axis[axis]);
            if n < 3 {
                return Err(GridError::TooFewNodes { axis, nodes: n });
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(GridError::Extent { axis, extent: l });
            }
            nodes[axis] = n;
            extent[axis] = l;
            spacing[axis] = l / (n - 1) as f64;
        }
        Ok(Grid {
            dim,
            nodes,
            extent,
            spacing,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn extents(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn node_count(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    /// Flat index of the node with per-axis indices `(i, j)`; `j` is ignored in 1D.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nodes[0] + i
    }

    /// Per-axis indices of flat node `k`.
    #[inline]
    pub fn axis_indices(&self, k: usize) -> [usize; 2] {
        [k % self.nodes[0], k / self.nodes[0]]
    }

    /// Stride of the flat index along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.nodes[0]
        }
    }

    pub fn coords(&self, k: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(k);
        [i as f64 * self.spacing[0], j as f64 * self.spacing[1]]
    }

    /// Dual-cell length of node index `i` along `axis` (half at the ends).
    #[inline]
    pub fn cell_length(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing[axis];
        if i == 0 || i + 1 == self.nodes[axis] {
            0.5 * h
        } else {
            h
        }
    }

    pub fn cell_volume(&self, k: usize) -> f64 {
        let idx = self.axis_indices(k);
        (0..self.dim).map(|a| self.cell_length(a, idx[a])).product()
    }

    pub fn cell_volumes(&self) -> Vec<f64> {
        (0..self.node_count()).map(|k| self.cell_volume(k)).collect()
    }

    /// Measure of the domain.
    pub fn measure(&self) -> f64 {
        self.extents().iter().product()
    }

    /// True when `finer` refines `self` by exactly halving every spacing.
    pub fn is_refined_by(&self, finer: &Grid) -> bool {
        self.dim == finer.dim
            && (0..self.dim).all(|a| {
                self.extent[a] == finer.extent[a] && 2 * (self.nodes[a] - 1) == finer.nodes[a] - 1
            })
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.node_count(), "field length must match grid");
        Field { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Field {
            grid,
            values: vec![value; grid.node_count()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Sample `f` at every node coordinate.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 2]) -> f64 + Sync + Send,
    {
        let values = par::map_nodes(grid.node_count(), |k| f(grid.coords(k)));
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    /// Nodewise map into a new field on the same grid.
    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let v = &self.values;
        Field {
            grid: self.grid,
            values: par::map_nodes(v.len(), |k| f(v[k])),
        }
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_map<F>(&self, other: &Field, f: F) -> Field
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        debug_assert_eq!(self.grid, other.grid);
        let (a, b) = (&self.values, &other.values);
        Field {
            grid: self.grid,
            values: par::map_nodes(a.len(), |k| f(a[k], b[k])),
        }
    }

    /// Cell-volume weighted sum, i.e. the discrete integral over the domain.
    pub fn integral(&self) -> f64 {
        weighted_sum(&self.grid, &self.values, |v| v)
    }

    /// Discrete L² norm.
    pub fn l2_norm(&self) -> f64 {
        weighted_sum(&self.grid, &self.values, |v| v * v).sqrt()
    }

    /// Discrete L² inner product.
    pub fn dot(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let mut acc = 0.0;
        for (k, (a, b)) in self.values.iter().zip(&other.values).enumerate() {
            acc += self.grid.cell_volume(k) * a * b;
        }
        acc
    }
}

/// Sequential, fixed-order weighted reduction.
fn weighted_sum(grid: &Grid, values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for (k, &v) in values.iter().enumerate() {
        acc += grid.cell_volume(k) * f(v);
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
}

/// Gaussian-bump initial data: `I0 = min(1, sum_i C_i exp(-|x - c_i|^2 / (2 sigma)))`
/// and `S0 = floor + (1 - floor) (1 - I0)`.
///
/// `sigma` enters the exponent linearly (it plays the role of a variance).
/// With the default `s_floor = 0` this is the complementary pair `S0 = 1 - I0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConditionSpec {
    pub bumps: Vec<Bump>,
    pub sigma: f64,
    #[serde(default)]
    pub s_floor: f64,
}

impl Default for InitialConditionSpec {
    fn default() -> Self {
        let centers = [[2.5, 2.5], [5.0, 7.5], [7.5, 5.0]];
        let amplitudes = [0.1, 0.2, 0.3];
        InitialConditionSpec {
            bumps: amplitudes
                .iter()
                .zip(centers)
                .map(|(&amplitude, c)| Bump {
                    amplitude,
                    center: c.to_vec(),
                })
                .collect(),
            sigma: 0.25,
            s_floor: 0.0,
        }
    }
}

impl InitialConditionSpec {
    pub fn validate(&self, dim: usize) -> Result<(), SpecError> {
        for (index, b) in self.bumps.iter().enumerate() {
            if !(b.amplitude.is_finite() && b.amplitude >= 0.0) {
                return Err(SpecError::Amplitude {
                    index,
                    value: b.amplitude,
                });
            }
            if b.center.len() != dim {
                return Err(SpecError::CenterDim {
                    index,
                    got: b.center.len(),
                    dim,
                });
            }
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(SpecError::Sigma(self.sigma));
        }
        if !(0.0..1.0).contains(&self.s_floor) {
            return Err(SpecError::Floor(self.s_floor));
        }
        Ok(())
    }

    /// Same bumps restricted to the first coordinate, for 1D runs.
    pub fn project_to_1d(&self) -> Self {
        InitialConditionSpec {
            bumps: self
                .bumps
                .iter()
                .map(|b| Bump {
                    amplitude: b.amplitude,
                    center: b.center.iter().take(1).copied().collect(),
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Build `(S0, I0)` on `grid` from `spec`.
pub fn synthesize_initials(grid: &Grid, spec: &InitialConditionSpec) -> Result<(Field, Field), SpecError> {
    spec.validate(grid.dim())?;
    let dim = grid.dim();
    let two_sigma = 2.0 * spec.sigma;
    let infected = Field::from_fn(*grid, |x| {
        let sum: f64 = spec
            .bumps
            .iter()
            .map(|b| {
                let r2: f64 = (0..dim).map(|a| (x[a] - b.center[a]).powi(2)).sum();
                b.amplitude * (-r2 / two_sigma).exp()
            })
            .sum();
        sum.clamp(0.0, 1.0)
    });
    let floor = spec.s_floor;
    let susceptible = infected.map(|i| {
        let s = 1.0 - i;
        if floor == 0.0 {
            s
        } else {
            floor + (1.0 - floor) * s
        }
    });
    Ok((susceptible, infected))
}
