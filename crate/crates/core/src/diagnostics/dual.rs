//! Dual-norm proxy for time derivatives in `(H^1)'`.
//!
//! The Riesz representative `w` of `f` solves `(id - lap_h) w = f` with
//! Neumann conditions; the proxy is the discrete H¹ norm of `w`. The
//! operator is self-adjoint in the dual-cell weighted inner product, so
//! plain CG in that inner product applies.

use crate::error::DiagnosticsError;
use crate::grid::{Field, Grid};
use crate::stencil::neumann_laplacian;

pub const CG_RELATIVE_TOLERANCE: f64 = 1e-8;

/// `sum over faces` of `|face| * ((w_r - w_l) / h)^2`, i.e. `<-lap_h w, w>`.
pub fn gradient_energy(w: &Field) -> f64 {
    let grid: Grid = *w.grid();
    let v = w.values();
    let mut acc = 0.0;
    for axis in 0..grid.dim() {
        let st = grid.stride(axis);
        let n = grid.nodes()[axis];
        let h = grid.spacing()[axis];
        for k in 0..grid.node_count() {
            let idx = grid.axis_indices(k);
            if idx[axis] + 1 == n {
                continue;
            }
            let transverse: f64 = (0..grid.dim())
                .filter(|&a| a != axis)
                .map(|a| grid.cell_length(a, idx[a]))
                .product();
            let d = (v[k + st] - v[k]) / h;
            acc += transverse * h * d * d;
        }
    }
    acc
}

/// Discrete H¹ norm built from the dual-cell L² norm and face differences.
pub fn h1_norm(w: &Field) -> f64 {
    let l2 = w.l2_norm();
    (l2 * l2 + gradient_energy(w)).sqrt()
}

/// Solve `(id - lap_h) w = rhs` by CG to relative residual `tol`.
pub fn helmholtz_solve(rhs: &Field, tol: f64, max_iter: usize) -> Result<Field, DiagnosticsError> {
    let apply = |u: &Field| {
        let lap = neumann_laplacian(u);
        u.zip_map(&lap, |a, b| a - b)
    };
    let b_norm = rhs.dot(rhs).sqrt();
    let mut x = Field::zeros(*rhs.grid());
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * b_norm {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / p.dot(&ap);
        x = x.zip_map(&p, |a, b| a + alpha * b);
        r = r.zip_map(&ap, |a, b| a - alpha * b);
        let rr_new = r.dot(&r);
        let beta = rr_new / rr;
        p = r.zip_map(&p, |a, b| a + beta * b);
        rr = rr_new;
    }
    let residual = rr.sqrt() / b_norm;
    if residual <= tol {
        Ok(x)
    } else {
        Err(DiagnosticsError::NotConverged {
            iterations: max_iter,
            residual,
        })
    }
}

/// Discrete `(H^1)'` norm of `dsdt` via its Riesz representative.
pub fn dual_norm_proxy(dsdt: &Field) -> Result<f64, DiagnosticsError> {
    let max_iter = 20 * dsdt.len().max(50);
    let w = helmholtz_solve(dsdt, CG_RELATIVE_TOLERANCE, max_iter)?;
    Ok(h1_norm(&w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    fn grid() -> Grid {
        build_grid(2, &[10.0, 10.0], &[33, 33]).unwrap()
    }

    #[test]
    fn zero_field() {
        assert_eq!(dual_norm_proxy(&Field::zeros(grid())).unwrap(), 0.0);
    }

    #[test]
    fn constant_field() {
        let g = grid();
        let c = 0.7;
        let proxy = dual_norm_proxy(&Field::constant(g, c)).unwrap();
        assert!((proxy - c * g.measure().sqrt()).abs() < 1e-8 * proxy);
    }

    #[test]
    fn symmetric_under_negation() {
        let g = grid();
        let f = Field::from_fn(g, |x| (0.4 * x[0]).sin() * (0.9 * x[1]).cos() + 0.1);
        let a = dual_norm_proxy(&f).unwrap();
        let b = dual_norm_proxy(&f.map(|v| -v)).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn energy_matches_operator_form() {
        let g = build_grid(2, &[10.0, 6.0], &[21, 13]).unwrap();
        let w = Field::from_fn(g, |x| (0.3 * x[0]).cos() + x[1] * x[0] * 0.05);
        let lap = neumann_laplacian(&w);
        let op = -lap.dot(&w);
        assert!((gradient_energy(&w) - op).abs() < 1e-10 * op.abs());
    }

    #[test]
    fn cosine_mode_closed_form() {
        // (id - lap_h) cos(k x) = (1 + 4 sin^2(k h / 2) / h^2) cos(k x) on nodes
        let g = build_grid(1, &[10.0], &[41]).unwrap();
        let k = std::f64::consts::PI / 10.0;
        let f = Field::from_fn(g, |x| (k * x[0]).cos());
        let h = g.spacing()[0];
        let lam = 1.0 + 4.0 * (0.5 * k * h).sin().powi(2) / (h * h);
        let w = helmholtz_solve(&f, 1e-12, 1000).unwrap();
        for (a, b) in w.values().iter().zip(f.values()) {
            assert!((a - b / lam).abs() < 1e-10);
        }
        let proxy = dual_norm_proxy(&f).unwrap();
        // <f, w> = ||f||^2 / lam
        let expected = (f.dot(&f) / lam).sqrt();
        assert!((proxy - expected).abs() < 1e-7 * expected);
    }

    #[test]
    fn reports_stall() {
        let g = grid();
        let f = Field::from_fn(g, |x| (x[0] * 1.3).sin() * (x[1] * 0.7).cos());
        assert!(matches!(
            helmholtz_solve(&f, 1e-14, 1),
            Err(DiagnosticsError::NotConverged { iterations: 1, .. })
        ));
    }
}
