//! Manufactured-solution convergence measurement for the spatial operators.
//!
//! All manufactured fields are products of `cos(m pi x_a / L_a)`, so they
//! satisfy the zero-normal-derivative condition exactly on every axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::DiagnosticsError;
use crate::grid::{Field, Grid};
use crate::stencil::{central_gradient, neumann_laplacian, upwind_taxis_divergence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmsOperator {
    Laplacian,
    Gradient,
    TaxisDivergence,
}

impl MmsOperator {
    pub const ALL: [MmsOperator; 3] = [MmsOperator::Laplacian, MmsOperator::Gradient, MmsOperator::TaxisDivergence];

    pub fn name(self) -> &'static str {
        match self {
            MmsOperator::Laplacian => "laplacian",
            MmsOperator::Gradient => "gradient",
            MmsOperator::TaxisDivergence => "taxis-divergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmsRow {
    pub h: f64,
    /// Max-norm error over all nodes (and components).
    pub error: f64,
    /// `log2(e_coarse / e_fine)` against the previous grid.
    pub observed_order: Option<f64>,
}

/// Taxis sensitivity used for the manufactured taxis problem.
const MMS_K: f64 = 1.0;

/// `prod_a cos(m_a pi x_a / L_a)` with value and first/second derivatives.
struct CosProduct {
    wave: Vec<f64>,
}

impl CosProduct {
    fn new(grid: &Grid, modes: &[f64]) -> Self {
        let wave = grid.extents().iter().zip(modes).map(|(l, m)| m * PI / l).collect();
        CosProduct { wave }
    }

    fn value(&self, x: [f64; 2]) -> f64 {
        self.wave.iter().enumerate().map(|(a, k)| (k * x[a]).cos()).product()
    }

    fn derivative(&self, x: [f64; 2], axis: usize) -> f64 {
        self.wave
            .iter()
            .enumerate()
            .map(|(a, k)| {
                if a == axis {
                    -k * (k * x[a]).sin()
                } else {
                    (k * x[a]).cos()
                }
            })
            .product()
    }

    fn laplacian(&self, x: [f64; 2]) -> f64 {
        -self.wave.iter().map(|k| k * k).sum::<f64>() * self.value(x)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn operator_error(op: MmsOperator, grid: &Grid) -> f64 {
    let dim = grid.dim();
    match op {
        MmsOperator::Laplacian => {
            let f = CosProduct::new(grid, &[1.0, 1.0]);
            let num = neumann_laplacian(&Field::from_fn(*grid, |x| f.value(x)));
            let exact = Field::from_fn(*grid, |x| f.laplacian(x));
            max_abs_diff(num.values(), exact.values())
        }
        MmsOperator::Gradient => {
            let f = CosProduct::new(grid, &[1.0, 1.0]);
            let num = central_gradient(&Field::from_fn(*grid, |x| f.value(x)));
            (0..dim)
                .map(|a| {
                    let exact = Field::from_fn(*grid, |x| f.derivative(x, a));
                    max_abs_diff(num.component(a), exact.values())
                })
                .fold(0.0, f64::max)
        }
        MmsOperator::TaxisDivergence => {
            // S = 0.5 + 0.25 cs, I = 0.4 + 0.3 ci; div(q(S) grad I) = q'(S) grad S . grad I + q(S) lap I
            let cs = CosProduct::new(grid, &[1.0, 1.0]);
            let ci = CosProduct::new(grid, &[2.0, 1.0]);
            let s = |x| 0.5 + 0.25 * cs.value(x);
            let i = |x| 0.4 + 0.3 * ci.value(x);
            let num = upwind_taxis_divergence(&Field::from_fn(*grid, s), &Field::from_fn(*grid, i), MMS_K);
            let exact = Field::from_fn(*grid, |x| {
                let sv = s(x);
                let q = MMS_K * (1.0 - sv) * sv;
                let dq = MMS_K * (1.0 - 2.0 * sv);
                let grad_dot: f64 = (0..dim)
                    .map(|a| 0.25 * cs.derivative(x, a) * 0.3 * ci.derivative(x, a))
                    .sum();
                dq * grad_dot + q * 0.3 * ci.laplacian(x)
            });
            max_abs_diff(num.values(), exact.values())
        }
    }
}

/// Measure max-norm errors of `op` on each grid and the observed orders
/// between consecutive grids. Grids must be successive halvings.
pub fn mms_convergence_study(op: MmsOperator, grids: &[Grid]) -> Result<Vec<MmsRow>, DiagnosticsError> {
    if grids.len() < 3 {
        return Err(DiagnosticsError::TooFewGrids(grids.len()));
    }
    for (n, w) in grids.windows(2).enumerate() {
        if !w[0].is_refined_by(&w[1]) {
            return Err(DiagnosticsError::NotNested(n + 1));
        }
    }
    let mut rows: Vec<MmsRow> = Vec::with_capacity(grids.len());
    for grid in grids {
        let error = operator_error(op, grid);
        let observed_order = rows.last().map(|prev| (prev.error / error).log2());
        rows.push(MmsRow {
            h: grid.min_spacing(),
            error,
            observed_order,
        });
    }
    Ok(rows)
}
