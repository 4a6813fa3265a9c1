//! Scalar Liouville problem `psi'' = (N/2) e^{-psi/N}` with closed-form
//! solution `2N ln cosh(t/2)`. Used to validate the collocation engine.

use crate::bvp::{BoundaryOperator, BvpProblem};
use crate::params::ln_cosh;

#[derive(Debug, Clone, Copy)]
pub struct LiouvilleProblem {
    pub n: f64,
    pub half_width: f64,
}

impl LiouvilleProblem {
    pub fn new(n: f64, half_width: f64) -> Self {
        Self { n, half_width }
    }

    pub fn exact(&self, t: f64) -> f64 {
        2.0 * self.n * ln_cosh(t / 2.0)
    }

    fn slope(&self) -> f64 {
        self.n * (self.half_width / 2.0).tanh()
    }
}

impl BvpProblem for LiouvilleProblem {
    fn dim(&self) -> usize {
        1
    }

    fn residual(&self, _: usize, _: f64, y: &[f64], _: &[f64], ypp: &[f64], out: &mut [f64]) {
        out[0] = ypp[0] - 0.5 * self.n * (-y[0] / self.n).exp();
    }

    fn jacobian(
        &self,
        _: usize,
        _: f64,
        y: &[f64],
        _: &[f64],
        _: &[f64],
        dy: &mut [f64],
        dyp: &mut [f64],
        dypp: &mut [f64],
    ) {
        dy[0] = 0.5 * (-y[0] / self.n).exp();
        dyp[0] = 0.0;
        dypp[0] = 1.0;
    }

    fn left_boundary(&self) -> BoundaryOperator {
        BoundaryOperator::new(1, vec![0.0], vec![1.0], vec![-self.slope()])
    }

    fn right_boundary(&self) -> BoundaryOperator {
        BoundaryOperator::new(1, vec![0.0], vec![1.0], vec![self.slope()])
    }
}
