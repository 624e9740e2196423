//! Pointwise reaction terms, tactic sensitivity, and the removed compartment.

use serde::{Deserialize, Serialize};

use crate::error::SpecError;
use crate::grid::Field;

/// How the tactic sensitivity depends on `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChiModel {
    /// `chi(S) = K (1 - S)`: sensitivity vanishes at the packing density.
    #[default]
    Crowding,
    /// `chi(S) = K` everywhere.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelParams {
    /// Taxis sensitivity coefficient.
    pub k: f64,
    pub lambda_s: f64,
    pub lambda_i: f64,
    /// Logistic growth rate of susceptibles.
    pub mu_s: f64,
    /// Removal rate of infected.
    pub mu_i: f64,
    /// Regularization added to the infected diffusion coefficient; 0 gives
    /// the degenerate system.
    pub eps_reg: f64,
    #[serde(default)]
    pub chi_model: ChiModel,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            k: 15.0,
            lambda_s: 0.5,
            lambda_i: 0.5,
            mu_s: 0.01,
            mu_i: 0.05,
            eps_reg: 0.0,
            chi_model: ChiModel::Crowding,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), SpecError> {
        let named = [
            ("k", self.k),
            ("lambda_s", self.lambda_s),
            ("lambda_i", self.lambda_i),
            ("mu_s", self.mu_s),
            ("mu_i", self.mu_i),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value >= 0.0) {
                return Err(SpecError::Param { name, value });
            }
        }
        if !(0.0..=1.0).contains(&self.eps_reg) {
            return Err(SpecError::Eps(self.eps_reg));
        }
        Ok(())
    }

    /// Upper bound on the reaction stiffness, `lambda_S + lambda_I + mu_S + mu_I`.
    pub fn reaction_rate_bound(&self) -> f64 {
        self.lambda_s + self.lambda_i + self.mu_s + self.mu_i
    }

    #[inline]
    pub fn chi(&self, s: f64) -> f64 {
        match self.chi_model {
            ChiModel::Crowding => chi(s, self.k),
            ChiModel::Constant => self.k,
        }
    }
}

/// Crowding sensitivity `K (1 - S)`.
#[inline]
pub fn chi(s: f64, k: f64) -> f64 {
    k * (1.0 - s)
}

/// `S I / (S + I)`, extended by zero when either argument vanishes.
#[inline]
fn contact(s: f64, i: f64) -> f64 {
    if s == 0.0 || i == 0.0 {
        0.0
    } else {
        s * i / (s + i)
    }
}

/// Susceptible kinetics: infection loss plus logistic growth.
#[inline]
pub fn reaction_f(s: f64, i: f64, p: &ModelParams) -> f64 {
    -p.lambda_s * contact(s, i) + p.mu_s * s * (1.0 - s)
}

/// Infected kinetics: infection gain minus linear removal.
#[inline]
pub fn reaction_g(s: f64, i: f64, p: &ModelParams) -> f64 {
    p.lambda_i * contact(s, i) - p.mu_i * i
}

/// One forward-Euler step of `dR/dt = mu_I I`.
pub fn removed_update(r: &Field, i: &Field, mu_i: f64, dt: f64) -> Field {
    r.zip_map(i, |r, i| r + dt * mu_i * i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use proptest::prelude::*;

    fn table1() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(1.0, 15.0), 0.0);
        assert_eq!(chi(0.0, 15.0), 15.0);
        assert_eq!(chi(0.5, 15.0), 7.5);
        let mut p = table1();
        p.chi_model = ChiModel::Constant;
        assert_eq!(p.chi(0.9), 15.0);
    }

    #[test]
    fn f_examples() {
        let p = table1();
        assert_eq!(reaction_f(0.0, 0.7, &p), 0.0);
        assert_eq!(reaction_f(1.0, 0.0, &p), 0.0);
        assert!((reaction_f(0.5, 0.5, &p) - (-0.1225)).abs() < 1e-15);
    }

    #[test]
    fn g_examples() {
        let p = table1();
        assert!((reaction_g(0.0, 1.0, &p) - (-0.05)).abs() < 1e-15);
        assert_eq!(reaction_g(1.0, 0.0, &p), 0.0);
        assert!((reaction_g(0.5, 0.5, &p) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn f_and_g_at_origin_are_finite() {
        let p = table1();
        assert_eq!(reaction_f(0.0, 0.0, &p), 0.0);
        assert_eq!(reaction_g(0.0, 0.0, &p), 0.0);
    }

    #[test]
    fn removed_examples() {
        let g = build_grid(1, &[1.0], &[5]).unwrap();
        let r0 = Field::constant(g, 0.3);
        assert_eq!(removed_update(&r0, &Field::zeros(g), 0.05, 0.1), r0);
        let r = removed_update(&Field::zeros(g), &Field::constant(g, 1.0), 0.05, 0.1);
        assert!(r.values().iter().all(|&v| (v - 0.005).abs() < 1e-15));
        let i = Field::from_fn(g, |x| x[0] * 3.0);
        assert_eq!(removed_update(&r0, &i, 0.0, 0.1), r0);
    }

    #[test]
    fn params_validation() {
        assert!(table1().validate().is_ok());
        let mut p = table1();
        p.lambda_s = -1.0;
        assert_eq!(
            p.validate(),
            Err(SpecError::Param {
                name: "lambda_s",
                value: -1.0
            })
        );
        let mut p = table1();
        p.eps_reg = 1.5;
        assert_eq!(p.validate(), Err(SpecError::Eps(1.5)));
    }

    #[test]
    fn f_bounded_on_lattice() {
        let p = table1();
        for a in 0..=50 {
            let s = a as f64 / 50.0;
            for b in 0..=50 {
                let i = 2.0 * b as f64 / 50.0;
                assert!(reaction_f(s, i, &p).abs() <= (p.lambda_s + p.mu_s) * s + 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn invariant_axes(s in 0.0..1.0f64, i in 0.0..10.0f64) {
            let p = table1();
            prop_assert_eq!(reaction_g(s, 0.0, &p), 0.0);
            prop_assert_eq!(reaction_f(0.0, i, &p), 0.0);
        }

        #[test]
        fn chi_decreasing(a in 0.0..1.0f64, b in 0.0..1.0f64, k in 0.0..50.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(chi(lo, k) >= chi(hi, k));
        }

        #[test]
        fn removal_monotone(r in proptest::collection::vec(0.0..1.0f64, 5),
                            i in proptest::collection::vec(0.0..1.0f64, 5),
                            dt in 1e-6..1.0f64) {
            let g = build_grid(1, &[1.0], &[5]).unwrap();
            let r = Field::new(g, r);
            let out = removed_update(&r, &Field::new(g, i), 0.05, dt);
            for (a, b) in out.values().iter().zip(r.values()) {
                prop_assert!(a >= b);
            }
        }
    }
}
