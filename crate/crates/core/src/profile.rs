//! Nodal representations of the symmetric matrix field `q`.
//!
//! The solvers work in the chart `(a, psi, r) = (ln q11, -ln det q, x / q11)`,
//! which keeps positive-definiteness automatic and avoids the cancellation in
//! `det q = q11 q22 - x^2` far out in the tails. [`SymmetricMatrixProfile`]
//! holds the matrix entries themselves.

use serde::Serialize;

use crate::error::{Error, Result};

/// Nodal values of `q11`, `x = q12`, `q22` and their first derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricMatrixProfile {
    pub q11: Vec<f64>,
    pub x: Vec<f64>,
    pub q22: Vec<f64>,
    pub q11p: Vec<f64>,
    pub xp: Vec<f64>,
    pub q22p: Vec<f64>,
}

impl SymmetricMatrixProfile {
    /// Builds a profile and checks positive-definiteness at every node.
    pub fn new(
        q11: Vec<f64>,
        x: Vec<f64>,
        q22: Vec<f64>,
        q11p: Vec<f64>,
        xp: Vec<f64>,
        q22p: Vec<f64>,
    ) -> Result<Self> {
        let m = q11.len();
        if [x.len(), q22.len(), q11p.len(), xp.len(), q22p.len()]
            .iter()
            .any(|&k| k != m)
        {
            return Err(Error::Inadmissible("profile columns differ in length".into()));
        }
        let p = Self {
            q11,
            x,
            q22,
            q11p,
            xp,
            q22p,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.q11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q11.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.len() {
            let (a, x, c) = (self.q11[i], self.x[i], self.q22[i]);
            if !(a > 0.0 && c > 0.0 && a.is_finite() && c.is_finite() && x.is_finite()) {
                return Err(Error::Inadmissible(format!(
                    "node {i}: q11 = {a}, q22 = {c} must be positive"
                )));
            }
            // In the tails det q is far below the rounding level of q11 * q22,
            // so only a clearly indefinite matrix is rejected here; the chart
            // variable psi carries det q exactly.
            if x * x > a * c * (1.0 + 1e-10) {
                return Err(Error::Inadmissible(format!(
                    "node {i}: det q = {} is not positive",
                    a * c - x * x
                )));
            }
        }
        Ok(())
    }

    pub fn det(&self, i: usize) -> f64 {
        self.q11[i] * self.q22[i] - self.x[i] * self.x[i]
    }

    /// `psi = -ln det q`, computed as `-ln q11 - ln(q22 - x^2/q11)`.
    pub fn psi(&self, i: usize) -> f64 {
        let a = self.q11[i];
        -a.ln() - (self.q22[i] - self.x[i] * self.x[i] / a).ln()
    }

    pub fn matrix(&self, i: usize) -> [[f64; 2]; 2] {
        [[self.q11[i], self.x[i]], [self.x[i], self.q22[i]]]
    }

    pub fn derivative_matrix(&self, i: usize) -> [[f64; 2]; 2] {
        [[self.q11p[i], self.xp[i]], [self.xp[i], self.q22p[i]]]
    }

    pub fn eigenvalues(&self, i: usize) -> (f64, f64) {
        let (a, x, c) = (self.q11[i], self.x[i], self.q22[i]);
        let mean = 0.5 * (a + c);
        let rad = (0.25 * (a - c) * (a - c) + x * x).sqrt();
        // smaller root via the product to keep relative accuracy
        let big = mean + rad;
        (self.det(i).max(0.0) / big, big)
    }
}

/// Nodal chart variables with first and second derivatives. `psi` is the
/// unshifted `-ln det q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartProfile {
    pub a: Vec<f64>,
    pub psi: Vec<f64>,
    pub r: Vec<f64>,
    pub ap: Vec<f64>,
    pub psip: Vec<f64>,
    pub rp: Vec<f64>,
    pub app: Vec<f64>,
    pub psipp: Vec<f64>,
    pub rpp: Vec<f64>,
}

impl ChartProfile {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn q11(&self, i: usize) -> f64 {
        self.a[i].exp()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.r[i] * self.a[i].exp()
    }

    pub fn q22(&self, i: usize) -> f64 {
        (-self.psi[i] - self.a[i]).exp() + self.r[i] * self.r[i] * self.a[i].exp()
    }

    pub fn to_matrix_profile(&self) -> SymmetricMatrixProfile {
        let m = self.len();
        let mut p = SymmetricMatrixProfile {
            q11: vec![0.0; m],
            x: vec![0.0; m],
            q22: vec![0.0; m],
            q11p: vec![0.0; m],
            xp: vec![0.0; m],
            q22p: vec![0.0; m],
        };
        for i in 0..m {
            let (a, psi, r) = (self.a[i], self.psi[i], self.r[i]);
            let (ap, psip, rp) = (self.ap[i], self.psip[i], self.rp[i]);
            let ea = a.exp();
            let em = (-psi - a).exp();
            p.q11[i] = ea;
            p.x[i] = r * ea;
            p.q22[i] = em + r * r * ea;
            p.q11p[i] = ap * ea;
            p.xp[i] = (rp + r * ap) * ea;
            p.q22p[i] = -(psip + ap) * em + (2.0 * r * rp + r * r * ap) * ea;
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_indefinite_profiles() {
        let ok = SymmetricMatrixProfile::new(
            vec![1.0],
            vec![0.5],
            vec![1.0],
            vec![0.0],
            vec![0.0],
            vec![0.0],
        );
        assert!(ok.is_ok());
        let bad = SymmetricMatrixProfile::new(
            vec![1.0],
            vec![1.5],
            vec![1.0],
            vec![0.0],
            vec![0.0],
            vec![0.0],
        );
        assert!(bad.is_err());
        let neg = SymmetricMatrixProfile::new(
            vec![-1.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
            vec![0.0],
            vec![0.0],
        );
        assert!(neg.is_err());
    }

    #[test]
    fn chart_round_trip() {
        let c = ChartProfile {
            a: vec![-0.3],
            psi: vec![0.7],
            r: vec![-0.2],
            ap: vec![0.1],
            psip: vec![-0.4],
            rp: vec![0.25],
            app: vec![0.0],
            psipp: vec![0.0],
            rpp: vec![0.0],
        };
        let p = c.to_matrix_profile();
        assert_relative_eq!(p.psi(0), 0.7, max_relative = 1e-14);
        assert_relative_eq!(p.x[0] / p.q11[0], -0.2, max_relative = 1e-14);
        let (l1, l2) = p.eigenvalues(0);
        assert!(l1 > 0.0 && l2 > l1);
        assert_relative_eq!(l1 * l2, p.det(0), max_relative = 1e-12);
        // derivative of -ln det q from the entries
        let det = p.det(0);
        let ddet = p.q11p[0] * p.q22[0] + p.q11[0] * p.q22p[0] - 2.0 * p.x[0] * p.xp[0];
        assert_relative_eq!(-ddet / det, -0.4, max_relative = 1e-12);
    }
}
