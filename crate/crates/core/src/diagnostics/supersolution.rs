//! Discrete check of the one-sided variational inequality for `I`:
//!
//! ```text
//! int dI/dt psi  >=  int ( -grad I . grad(psi S) + g(S, I) psi )   for psi >= 0
//! ```

use crate::grid::{Field, Grid};
use crate::kinetics::{reaction_g, ModelParams};
use crate::stencil::central_gradient;
use crate::timestepper::SimState;

/// Finite family of nonnegative nodal test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionFamily {
    members: Vec<Field>,
}

impl TestFunctionFamily {
    /// Panics if any member has a negative or non-finite value.
    pub fn new(members: Vec<Field>) -> Self {
        for (m, f) in members.iter().enumerate() {
            assert!(
                f.values().iter().all(|v| v.is_finite() && *v >= 0.0),
                "test function {m} must be finite and nonnegative"
            );
        }
        TestFunctionFamily { members }
    }

    /// Tensor-product hats on an `m`-per-axis lattice spanning the domain, plus the constant 1.
    ///
    /// Hat `a` along an axis of length `L` peaks at `a L / (m - 1)` and
    /// vanishes one lattice spacing away.
    pub fn hat_lattice(grid: &Grid, per_axis: usize) -> Self {
        assert!(per_axis >= 2, "need at least two hats per axis");
        let dim = grid.dim();
        let widths: Vec<f64> = grid.extents().iter().map(|l| l / (per_axis - 1) as f64).collect();
        let count = per_axis.pow(dim as u32);
        let mut members = Vec::with_capacity(count + 1);
        for c in 0..count {
            let lattice = [c % per_axis, c / per_axis];
            let widths = widths.clone();
            members.push(Field::from_fn(*grid, move |x| {
                (0..dim)
                    .map(|a| {
                        let center = lattice[a] as f64 * widths[a];
                        (1.0 - (x[a] - center).abs() / widths[a]).max(0.0)
                    })
                    .product()
            }));
        }
        members.push(Field::constant(*grid, 1.0));
        TestFunctionFamily { members }
    }

    pub fn constant_only(grid: &Grid) -> Self {
        TestFunctionFamily {
            members: vec![Field::constant(*grid, 1.0)],
        }
    }

    pub fn members(&self) -> &[Field] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Smallest slack over the family, given `dI/dt` and the state the spatial
/// terms are evaluated at.
pub fn slack_with_rate(di_dt: &Field, state: &SimState, params: &ModelParams, family: &TestFunctionFamily) -> f64 {
    let (s, i) = (&state.s, &state.i);
    let grad_i = central_gradient(i);
    let g = s.zip_map(i, |s, i| reaction_g(s, i, params));
    family
        .members()
        .iter()
        .map(|psi| {
            let lhs = di_dt.dot(psi);
            let grad_psi_s = central_gradient(&psi.zip_map(s, |p, s| p * s));
            let rhs = -grad_i.dot_integral(&grad_psi_s) + g.dot(psi);
            lhs - rhs
        })
        .fold(f64::INFINITY, f64::min)
}

/// Minimum slack of the inequality over the family for the step `prev -> state`.
///
/// `dI/dt` is the backward difference; the spatial terms use `prev`, the
/// state the explicit step was taken from.
pub fn supersolution_residual(prev: &SimState, state: &SimState, dt: f64, params: &ModelParams, family: &TestFunctionFamily) -> f64 {
    let di_dt = state.i.zip_map(&prev.i, |a, b| (a - b) / dt);
    slack_with_rate(&di_dt, prev, params, family)
}
