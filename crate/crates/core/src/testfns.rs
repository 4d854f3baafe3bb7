//! Analytic benchmark functions for the sensitivity estimators.
//!
//! These have closed-form variance decompositions, so they double as
//! oracles for the estimator test suites and as cheap stand-ins for the
//! simulator when exercising the convergence machinery end to end.

use crate::dist::Distribution1D;
use crate::error::Result;
use crate::sensitivity::ModelEvaluator;
use std::f64::consts::PI;

/// Ishigami function `y = sin(x1) + a sin^2(x2) + b x3^4 sin(x1)` with
/// uniform inputs on (-pi, pi).
#[derive(Debug, Clone, Copy)]
pub struct Ishigami {
    pub a: f64,
    pub b: f64,
}

impl Default for Ishigami {
    fn default() -> Self {
        Ishigami { a: 7.0, b: 0.1 }
    }
}

impl Ishigami {
    pub fn input_set(&self) -> Vec<(String, Distribution1D)> {
        (1..=3)
            .map(|i| {
                (
                    format!("X{i}"),
                    Distribution1D::Uniform { lo: -PI, hi: PI },
                )
            })
            .collect()
    }

    /// Closed-form first-order and total Sobol' indices.
    pub fn analytic_indices(&self) -> ([f64; 3], [f64; 3]) {
        let (a, b) = (self.a, self.b);
        let pi4 = PI.powi(4);
        let pi8 = PI.powi(8);
        let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
        let v2 = a * a / 8.0;
        let v13 = 8.0 * b * b * pi8 / 225.0;
        let v = v1 + v2 + v13;
        (
            [v1 / v, v2 / v, 0.0],
            [(v1 + v13) / v, v2 / v, v13 / v],
        )
    }
}

impl ModelEvaluator for Ishigami {
    fn dimension(&self) -> usize {
        3
    }

    fn output_names(&self) -> Vec<String> {
        vec!["Y".into()]
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = x[0].sin() + self.a * x[1].sin().powi(2) + self.b * x[2].powi(4) * x[0].sin();
        Ok(vec![y])
    }
}

/// `y = x1 + ... + x_active` over `dimension` standard-normal inputs; the
/// remaining inputs are ignored (dummy-variable null).
#[derive(Debug, Clone, Copy)]
pub struct AdditiveGaussian {
    pub dimension: usize,
    pub active: usize,
}

impl AdditiveGaussian {
    pub fn new(dimension: usize, active: usize) -> Self {
        assert!(active <= dimension);
        AdditiveGaussian { dimension, active }
    }

    pub fn input_set(&self) -> Vec<(String, Distribution1D)> {
        (1..=self.dimension)
            .map(|i| {
                (
                    format!("X{i}"),
                    Distribution1D::Normal { mean: 0.0, sd: 1.0 },
                )
            })
            .collect()
    }
}

impl ModelEvaluator for AdditiveGaussian {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn output_names(&self) -> Vec<String> {
        vec!["Y".into()]
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![x[..self.active].iter().sum()])
    }
}

/// Identity map on the first input, replicated across `outputs` columns.
#[derive(Debug, Clone, Copy)]
pub struct PassThrough {
    pub dimension: usize,
    pub outputs: usize,
}

impl ModelEvaluator for PassThrough {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn output_names(&self) -> Vec<String> {
        (0..self.outputs).map(|i| format!("Y{i}")).collect()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![x[0]; self.outputs])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ishigami_analytic_indices_match_literature() {
        let (s, st) = Ishigami::default().analytic_indices();
        assert_abs_diff_eq!(s[0], 0.3139, epsilon = 5e-4);
        assert_abs_diff_eq!(s[1], 0.4424, epsilon = 5e-4);
        assert_abs_diff_eq!(s[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st[0], 0.5576, epsilon = 5e-4);
        assert_abs_diff_eq!(st[1], 0.4424, epsilon = 5e-4);
        assert_abs_diff_eq!(st[2], 0.2437, epsilon = 5e-4);
    }

    #[test]
    fn ishigami_evaluates() {
        let f = Ishigami::default();
        let y = f.evaluate(&[PI / 2.0, 0.0, 0.0]).unwrap()[0];
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-12);
    }
}
