//! Discrete spatial operators on node-centered grids.
//!
//! Homogeneous Neumann conditions are realised by mirror ghosts: the ghost
//! beyond a boundary node takes the value of the first interior node. The
//! taxis divergence is written in flux form over dual cells, with zero flux
//! through faces on the boundary; for the Laplacian the mirror-ghost stencil
//! and that flux form coincide.

use crate::grid::{Field, Grid};
use crate::kinetics;
use crate::par;

/// One component per axis, each holding one value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Nodewise Euclidean magnitude squared.
    pub fn magnitude_sq(&self) -> Field {
        let n = self.grid.node_count();
        let c = &self.components;
        Field::new(self.grid, par::map_nodes(n, |k| c.iter().map(|v| v[k] * v[k]).sum()))
    }

    /// Discrete L² norm of the magnitude.
    pub fn l2_norm(&self) -> f64 {
        self.magnitude_sq().integral().sqrt()
    }

    /// Nodewise dot product integrated over the domain.
    pub fn dot_integral(&self, other: &VectorField) -> f64 {
        let n = self.grid.node_count();
        let mut acc = 0.0;
        for k in 0..n {
            let d: f64 = self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a[k] * b[k])
                .sum();
            acc += self.grid.cell_volume(k) * d;
        }
        acc
    }
}

/// Neighbour indices of node `k` along `axis` with mirror ghosts applied.
#[inline]
fn neighbours(grid: &Grid, k: usize, axis: usize) -> (usize, usize) {
    let i = grid.axis_indices(k)[axis];
    let n = grid.nodes()[axis];
    let st = grid.stride(axis);
    let minus = if i == 0 { k + st } else { k - st };
    let plus = if i + 1 == n { k - st } else { k + st };
    (minus, plus)
}

/// Second-order Laplacian (3-point in 1D, 5-point in 2D) with zero normal derivative.
pub fn neumann_laplacian(field: &Field) -> Field {
    let grid = *field.grid();
    let u = field.values();
    let inv_h2: Vec<f64> = grid.spacing().iter().map(|h| 1.0 / (h * h)).collect();
    let values = par::map_nodes(grid.node_count(), |k| {
        let mut acc = 0.0;
        for (axis, w) in inv_h2.iter().enumerate() {
            let (m, p) = neighbours(&grid, k, axis);
            acc += (u[p] - 2.0 * u[k] + u[m]) * w;
        }
        acc
    });
    Field::new(grid, values)
}

/// Central differences; the normal component vanishes on the boundary.
pub fn central_gradient(field: &Field) -> VectorField {
    let grid = *field.grid();
    let u = field.values();
    let components = grid
        .spacing()
        .iter()
        .enumerate()
        .map(|(axis, &h)| {
            let inv = 0.5 / h;
            par::map_nodes(grid.node_count(), |k| {
                let (m, p) = neighbours(&grid, k, axis);
                (u[p] - u[m]) * inv
            })
        })
        .collect();
    VectorField { grid, components }
}

/// Flux through the face between `left` and `left + stride` along an axis.
///
/// The gradient of `I` is the central face difference. The transported
/// quantity `chi(S) S` comes from the upwind node with respect to the drift
/// velocity `-chi_face dI/dx` of `S`; a zero velocity averages both sides.
#[inline]
fn taxis_face_flux<C: Fn(f64) -> f64>(s: &[f64], i: &[f64], left: usize, right: usize, inv_h: f64, chi: &C) -> f64 {
    let di = (i[right] - i[left]) * inv_h;
    let (chi_l, chi_r) = (chi(s[left]), chi(s[right]));
    let velocity = -0.5 * (chi_l + chi_r) * di;
    let (q_l, q_r) = (chi_l * s[left], chi_r * s[right]);
    let q = if velocity > 0.0 {
        q_l
    } else if velocity < 0.0 {
        q_r
    } else {
        0.5 * (q_l + q_r)
    };
    q * di
}

/// First-order upwind discretization of `div(chi(S) S grad I)` with `chi(S) = K (1 - S)`.
pub fn upwind_taxis_divergence(s: &Field, i: &Field, k: f64) -> Field {
    upwind_taxis_divergence_with(s, i, |v| kinetics::chi(v, k))
}

/// Upwind taxis divergence for an arbitrary sensitivity function.
pub fn upwind_taxis_divergence_with<C>(s: &Field, i: &Field, chi: C) -> Field
where
    C: Fn(f64) -> f64 + Sync + Send,
{
    let grid = *s.grid();
    debug_assert_eq!(grid, *i.grid());
    let (sv, iv) = (s.values(), i.values());
    let values = par::map_nodes(grid.node_count(), |k| {
        let idx = grid.axis_indices(k);
        let mut acc = 0.0;
        for axis in 0..grid.dim() {
            let n = grid.nodes()[axis];
            let st = grid.stride(axis);
            let inv_h = 1.0 / grid.spacing()[axis];
            let ia = idx[axis];
            let right = if ia + 1 < n {
                taxis_face_flux(sv, iv, k, k + st, inv_h, &chi)
            } else {
                0.0
            };
            let left = if ia > 0 {
                taxis_face_flux(sv, iv, k - st, k, inv_h, &chi)
            } else {
                0.0
            };
            acc += (right - left) / grid.cell_length(axis, ia);
        }
        acc
    });
    Field::new(grid, values)
}

/// Largest face drift speed `|chi_face * dI/dx|` over all interior faces.
pub fn max_taxis_speed<C>(s: &Field, i: &Field, chi: C) -> f64
where
    C: Fn(f64) -> f64,
{
    let grid = *s.grid();
    let (sv, iv) = (s.values(), i.values());
    let mut vmax: f64 = 0.0;
    for axis in 0..grid.dim() {
        let st = grid.stride(axis);
        let n = grid.nodes()[axis];
        let inv_h = 1.0 / grid.spacing()[axis];
        for k in 0..grid.node_count() {
            if grid.axis_indices(k)[axis] + 1 < n {
                let r = k + st;
                let v = 0.5 * (chi(sv[k]) + chi(sv[r])) * (iv[r] - iv[k]) * inv_h;
                vmax = vmax.max(v.abs());
            }
        }
    }
    vmax
}
