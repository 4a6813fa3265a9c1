//! Uniform symmetric grid on `[-T, T]` with quadrature, finite-difference
//! stencils and piecewise-cubic interpolation.

use serde::Serialize;

use crate::error::{Error, Result};

/// Accuracy order of the finite-difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Order {
    Second,
    Fourth,
}

impl Order {
    /// Largest node offset between a collocation row and the unknowns it
    /// touches, when the end-node rows hold first-derivative conditions.
    pub fn reach(self) -> usize {
        match self {
            Order::Second => 2,
            Order::Fourth => 4,
        }
    }

    /// Minimum number of nodes the stencils need.
    pub fn min_nodes(self) -> usize {
        match self {
            Order::Second => 5,
            Order::Fourth => 11,
        }
    }
}

/// Finite-difference weights for one node: `start` is the first node index,
/// the weight vectors are multiplied with consecutive nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl Stencil {
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&values[self.start..])
            .map(|(w, v)| w * v)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    half_width: f64,
    nodes: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl Mesh {
    /// `count` equispaced nodes on `[-half_width, half_width]`; `count` must be
    /// odd so that `t = 0` is a node.
    pub fn uniform(half_width: f64, count: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Mesh(format!("T = {half_width} must be > 0")));
        }
        if count < Order::Fourth.min_nodes() || count.is_multiple_of(2) {
            return Err(Error::Mesh(format!(
                "node count {count} must be odd and at least {}",
                Order::Fourth.min_nodes()
            )));
        }
        let c = (count - 1) / 2;
        let h = half_width / c as f64;
        let nodes: Vec<f64> = (0..count)
            .map(|i| {
                // exact mirror symmetry: t_{c+k} = -t_{c-k}
                let k = i as i64 - c as i64;
                if k == c as i64 {
                    half_width
                } else if -k == c as i64 {
                    -half_width
                } else {
                    k as f64 * h
                }
            })
            .collect();
        let mut weights = vec![h; count];
        weights[0] = h / 2.0;
        weights[count - 1] = h / 2.0;
        Ok(Self {
            half_width,
            nodes,
            weights,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.len() - 1) as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn t(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn center(&self) -> usize {
        (self.len() - 1) / 2
    }

    /// Index of the node closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let i = ((t + self.half_width) / self.spacing()).round();
        (i.max(0.0) as usize).min(self.len() - 1)
    }

    /// Same interval with `2(M-1)+1` nodes.
    pub fn refined(&self) -> Self {
        Self::uniform(self.half_width, 2 * self.len() - 1).expect("refinement of a valid mesh")
    }

    /// Trapezoid quadrature over the whole mesh (compensated summation).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        compensated_sum(self.weights.iter().zip(values).map(|(w, v)| w * v))
    }

    /// Fourth-order cumulative integral `I_i = int_{t_from}^{t_i} f dt`
    /// (negative orientation for `i < from`). Each cell uses the cubic through
    /// four neighbouring nodes.
    pub fn cumulative_from(&self, values: &[f64], from: usize) -> Vec<f64> {
        let m = self.len();
        debug_assert_eq!(values.len(), m);
        let h = self.spacing();
        let cell = |i: usize| -> f64 {
            // integral over [t_i, t_{i+1}]
            let f = values;
            if i == 0 {
                h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
            } else if i + 2 >= m {
                h / 24.0 * (9.0 * f[m - 1] + 19.0 * f[m - 2] - 5.0 * f[m - 3] + f[m - 4])
            } else {
                h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
            }
        };
        let mut out = vec![0.0; m];
        for i in from..m - 1 {
            out[i + 1] = out[i] + cell(i);
        }
        for i in (0..from).rev() {
            out[i] = out[i + 1] - cell(i);
        }
        out
    }

    /// First-derivative stencil at node `i`.
    pub fn d1_stencil(&self, i: usize, order: Order) -> Stencil {
        let m = self.len();
        let h = self.spacing();
        let (start, w): (usize, Vec<f64>) = match order {
            Order::Second => {
                if i == 0 {
                    (0, vec![-3.0, 4.0, -1.0])
                } else if i == m - 1 {
                    (m - 3, vec![1.0, -4.0, 3.0])
                } else {
                    (i - 1, vec![-1.0, 0.0, 1.0])
                }
            }
            Order::Fourth => {
                if i == 0 {
                    (0, vec![-25.0, 48.0, -36.0, 16.0, -3.0])
                } else if i == 1 {
                    (0, vec![-3.0, -10.0, 18.0, -6.0, 1.0])
                } else if i == m - 2 {
                    (m - 5, vec![-1.0, 6.0, -18.0, 10.0, 3.0])
                } else if i == m - 1 {
                    (m - 5, vec![3.0, -16.0, 36.0, -48.0, 25.0])
                } else {
                    (i - 2, vec![1.0, -8.0, 0.0, 8.0, -1.0])
                }
            }
        };
        let scale = match order {
            Order::Second => 1.0 / (2.0 * h),
            Order::Fourth => 1.0 / (12.0 * h),
        };
        Stencil {
            start,
            weights: w.into_iter().map(|c| c * scale).collect(),
        }
    }

    /// Second-derivative stencil at node `i`.
    pub fn d2_stencil(&self, i: usize, order: Order) -> Stencil {
        let m = self.len();
        let h = self.spacing();
        let (start, w): (usize, Vec<f64>) = match order {
            Order::Second => {
                if i == 0 {
                    (0, vec![2.0, -5.0, 4.0, -1.0])
                } else if i == m - 1 {
                    (m - 4, vec![-1.0, 4.0, -5.0, 2.0])
                } else {
                    (i - 1, vec![1.0, -2.0, 1.0])
                }
            }
            Order::Fourth => {
                if i == 0 {
                    (0, vec![45.0, -154.0, 214.0, -156.0, 61.0, -10.0])
                } else if i == 1 {
                    (0, vec![10.0, -15.0, -4.0, 14.0, -6.0, 1.0])
                } else if i == m - 2 {
                    (m - 6, vec![1.0, -6.0, 14.0, -4.0, -15.0, 10.0])
                } else if i == m - 1 {
                    (m - 6, vec![-10.0, 61.0, -156.0, 214.0, -154.0, 45.0])
                } else {
                    (i - 2, vec![-1.0, 16.0, -30.0, 16.0, -1.0])
                }
            }
        };
        let scale = match order {
            Order::Second => 1.0 / (h * h),
            Order::Fourth => 1.0 / (12.0 * h * h),
        };
        Stencil {
            start,
            weights: w.into_iter().map(|c| c * scale).collect(),
        }
    }

    pub fn derivative(&self, values: &[f64], order: Order) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.d1_stencil(i, order).apply(values))
            .collect()
    }

    pub fn second_derivative(&self, values: &[f64], order: Order) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.d2_stencil(i, order).apply(values))
            .collect()
    }

    /// Piecewise-cubic (four-point Lagrange) interpolation of nodal values.
    pub fn interpolate(&self, values: &[f64], t: f64) -> Result<f64> {
        let tol = 1e-12 * self.half_width;
        if !(t.abs() <= self.half_width + tol) {
            return Err(Error::Extrapolation {
                t,
                half_width: self.half_width,
            });
        }
        let m = self.len();
        let h = self.spacing();
        let x = (t + self.half_width) / h;
        let cell = (x.floor() as usize).min(m - 2);
        let start = cell.saturating_sub(1).min(m - 4);
        let u = x - start as f64;
        // Lagrange basis on nodes 0,1,2,3 (in units of h)
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        let v = &values[start..start + 4];
        Ok(l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3])
    }
}

/// Neumaier's compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}
