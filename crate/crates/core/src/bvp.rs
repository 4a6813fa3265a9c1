//! Finite-difference collocation for second-order ODE systems on a
//! truncated interval, with damped Newton and natural-parameter continuation.
//!
//! The unknown vector is node-major: component `k` at node `i` sits at index
//! `i * d + k`. The end nodes carry the boundary conditions instead of the
//! differential equation, so the Jacobian is banded with half-bandwidth
//! `d * (reach + 1) - 1`.

use serde::Serialize;

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Order, Stencil};

/// Affine condition `A y + B y' = g` at one end of the interval. `a` and `b`
/// are `d x d`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryOperator {
    pub dim: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub g: Vec<f64>,
}

impl BoundaryOperator {
    pub fn new(dim: usize, a: Vec<f64>, b: Vec<f64>, g: Vec<f64>) -> Self {
        assert_eq!(a.len(), dim * dim);
        assert_eq!(b.len(), dim * dim);
        assert_eq!(g.len(), dim);
        Self { dim, a, b, g }
    }

    /// `y'_k = rate_k * y_k` for each component.
    pub fn robin(rates: &[f64]) -> Self {
        let d = rates.len();
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d * d];
        for (k, &r) in rates.iter().enumerate() {
            a[k * d + k] = -r;
            b[k * d + k] = 1.0;
        }
        Self::new(d, a, b, vec![0.0; d])
    }

    /// `y_k = value_k`.
    pub fn dirichlet(values: &[f64]) -> Self {
        let d = values.len();
        let mut a = vec![0.0; d * d];
        for k in 0..d {
            a[k * d + k] = 1.0;
        }
        Self::new(d, a, vec![0.0; d * d], values.to_vec())
    }

    pub fn residual(&self, y: &[f64], yp: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| self.a[r * d + c] * y[c] + self.b[r * d + c] * yp[c])
                    .sum::<f64>()
                    - self.g[r]
            })
            .collect()
    }

    /// Rank of the `d x 2d` matrix `[A | B]`.
    pub fn rank(&self) -> usize {
        let d = self.dim;
        let mut m: Vec<Vec<f64>> = (0..d)
            .map(|r| {
                let mut row = self.a[r * d..(r + 1) * d].to_vec();
                row.extend_from_slice(&self.b[r * d..(r + 1) * d]);
                row
            })
            .collect();
        let scale = m
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut rank = 0;
        for col in 0..2 * d {
            if rank == d {
                break;
            }
            let (piv, best) = (rank..d)
                .map(|r| (r, m[r][col].abs()))
                .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= 1e-12 * scale {
                continue;
            }
            m.swap(rank, piv);
            for r in 0..d {
                if r != rank {
                    let f = m[r][col] / m[rank][col];
                    for c in col..2 * d {
                        m[r][c] -= f * m[rank][c];
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// A second-order system `F(t, y, y', y'') = 0` with boundary operators.
/// The node index is passed along so implementations can use precomputed
/// nodal coefficients.
pub trait BvpProblem {
    fn dim(&self) -> usize;

    fn residual(&self, node: usize, t: f64, y: &[f64], yp: &[f64], ypp: &[f64], out: &mut [f64]);

    /// Row-major `d x d` blocks of the partial derivatives with respect to
    /// `y`, `y'` and `y''`. Entries are overwritten.
    #[allow(clippy::too_many_arguments)]
    fn jacobian(
        &self,
        node: usize,
        t: f64,
        y: &[f64],
        yp: &[f64],
        ypp: &[f64],
        dy: &mut [f64],
        dyp: &mut [f64],
        dypp: &mut [f64],
    );

    fn left_boundary(&self) -> BoundaryOperator;

    fn right_boundary(&self) -> BoundaryOperator;

    /// Whether the nodal state lies in the admissible region.
    fn admissible(&self, _node: usize, _t: f64, _y: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveControls {
    pub tol_newton: f64,
    pub max_iter: usize,
    /// Smallest Newton step fraction tried before giving up.
    pub damping_floor: f64,
    /// Number of mesh doublings used by convergence studies.
    pub refinement_levels: usize,
    pub order: Order,
}

impl Default for SolveControls {
    fn default() -> Self {
        Self {
            tol_newton: 1e-10,
            max_iter: 60,
            damping_floor: 1.0 / 1024.0,
            refinement_levels: 1,
            order: Order::Fourth,
        }
    }
}

impl SolveControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_newton > 0.0) {
            return Err(Error::Config(format!(
                "tol_newton = {} must be > 0",
                self.tol_newton
            )));
        }
        if !(self.damping_floor > 0.0 && self.damping_floor <= 1.0) {
            return Err(Error::Config(format!(
                "damping floor {} must lie in (0, 1]",
                self.damping_floor
            )));
        }
        Ok(())
    }
}

/// Nodal values of `y`, `y'` and `y''` reconstructed from the unknown vector.
#[derive(Debug, Clone)]
pub struct NodalDerivatives {
    pub dim: usize,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    pub ypp: Vec<f64>,
}

impl NodalDerivatives {
    pub fn at(&self, i: usize) -> (&[f64], &[f64], &[f64]) {
        let d = self.dim;
        let r = i * d..(i + 1) * d;
        (&self.y[r.clone()], &self.yp[r.clone()], &self.ypp[r])
    }
}

/// The algebraic system obtained by collocating a [`BvpProblem`] on a mesh.
pub struct Discretized<'a, P: ?Sized> {
    problem: &'a P,
    mesh: &'a Mesh,
    order: Order,
    d1: Vec<Stencil>,
    d2: Vec<Stencil>,
}

/// Collocates `problem` on `mesh`.
pub fn discretize<'a, P: BvpProblem + ?Sized>(
    problem: &'a P,
    mesh: &'a Mesh,
    order: Order,
) -> Discretized<'a, P> {
    let m = mesh.len();
    Discretized {
        problem,
        mesh,
        order,
        d1: (0..m).map(|i| mesh.d1_stencil(i, order)).collect(),
        d2: (0..m).map(|i| mesh.d2_stencil(i, order)).collect(),
    }
}

impl<P: BvpProblem + ?Sized> Discretized<'_, P> {
    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn len(&self) -> usize {
        self.mesh.len() * self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn bandwidth(&self) -> usize {
        self.dim() * (self.order.reach() + 1) - 1
    }

    pub fn derivatives(&self, y: &[f64]) -> NodalDerivatives {
        let d = self.dim();
        let m = self.mesh.len();
        let mut yp = vec![0.0; m * d];
        let mut ypp = vec![0.0; m * d];
        for i in 0..m {
            for k in 0..d {
                yp[i * d + k] = apply_strided(&self.d1[i], y, d, k);
                ypp[i * d + k] = apply_strided(&self.d2[i], y, d, k);
            }
        }
        NodalDerivatives {
            dim: d,
            y: y.to_vec(),
            yp,
            ypp,
        }
    }

    pub fn admissible(&self, y: &[f64]) -> bool {
        let d = self.dim();
        y.iter().all(|v| v.is_finite())
            && (0..self.mesh.len())
                .all(|i| self.problem.admissible(i, self.mesh.t(i), &y[i * d..(i + 1) * d]))
    }

    pub fn residual(&self, y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let m = self.mesh.len();
        let nd = self.derivatives(y);
        let mut out = vec![0.0; m * d];
        let left = self.problem.left_boundary();
        let right = self.problem.right_boundary();
        for i in 0..m {
            let (yi, ypi, yppi) = nd.at(i);
            let slot = &mut out[i * d..(i + 1) * d];
            if i == 0 {
                slot.copy_from_slice(&left.residual(yi, ypi));
            } else if i == m - 1 {
                slot.copy_from_slice(&right.residual(yi, ypi));
            } else {
                self.problem
                    .residual(i, self.mesh.t(i), yi, ypi, yppi, slot);
            }
        }
        out
    }

    pub fn jacobian(&self, y: &[f64]) -> BandMatrix {
        let d = self.dim();
        let m = self.mesh.len();
        let bw = self.bandwidth();
        let nd = self.derivatives(y);
        let mut jac = BandMatrix::zeros(m * d, bw, bw);
        let mut dy = vec![0.0; d * d];
        let mut dyp = vec![0.0; d * d];
        let mut dypp = vec![0.0; d * d];
        let left = self.problem.left_boundary();
        let right = self.problem.right_boundary();
        for i in 0..m {
            if i == 0 || i == m - 1 {
                let op = if i == 0 { &left } else { &right };
                dy.copy_from_slice(&op.a);
                dyp.copy_from_slice(&op.b);
                dypp.fill(0.0);
            } else {
                let (yi, ypi, yppi) = nd.at(i);
                self.problem.jacobian(
                    i,
                    self.mesh.t(i),
                    yi,
                    ypi,
                    yppi,
                    &mut dy,
                    &mut dyp,
                    &mut dypp,
                );
            }
            for r in 0..d {
                let row = i * d + r;
                for c in 0..d {
                    let v = dy[r * d + c];
                    if v != 0.0 {
                        jac.add(row, i * d + c, v);
                    }
                    let vp = dyp[r * d + c];
                    if vp != 0.0 {
                        let st = &self.d1[i];
                        for (j, w) in st.weights.iter().enumerate() {
                            jac.add(row, (st.start + j) * d + c, vp * w);
                        }
                    }
                    let vpp = dypp[r * d + c];
                    if vpp != 0.0 {
                        let st = &self.d2[i];
                        for (j, w) in st.weights.iter().enumerate() {
                            jac.add(row, (st.start + j) * d + c, vpp * w);
                        }
                    }
                }
            }
        }
        jac
    }
}

fn apply_strided(st: &Stencil, y: &[f64], d: usize, k: usize) -> f64 {
    st.weights
        .iter()
        .enumerate()
        .map(|(j, w)| w * y[(st.start + j) * d + k])
        .sum()
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    /// Sup-norm residual before each iteration, then the final one.
    pub history: Vec<f64>,
}

/// Damped Newton iteration. A step is halved until the trial state is
/// admissible and the sup-norm residual decreases (or already meets the
/// tolerance).
pub fn damped_newton<P: BvpProblem + ?Sized>(
    system: &Discretized<'_, P>,
    y_init: Vec<f64>,
    controls: &SolveControls,
) -> Result<(Vec<f64>, NewtonReport)> {
    controls.validate()?;
    if y_init.len() != system.len() {
        return Err(Error::Inadmissible(format!(
            "initial vector has length {}, expected {}",
            y_init.len(),
            system.len()
        )));
    }
    if !system.admissible(&y_init) {
        return Err(Error::Inadmissible(
            "initial guess is outside the admissible region".into(),
        ));
    }
    let mut y = y_init;
    let mut f = system.residual(&y);
    let mut r = sup_norm(&f);
    let mut history = vec![r];
    for iter in 0..controls.max_iter {
        if r <= controls.tol_newton {
            return Ok((
                y,
                NewtonReport {
                    iterations: iter,
                    residual: r,
                    history,
                },
            ));
        }
        if !r.is_finite() {
            break;
        }
        let lu = system.jacobian(&y).lu()?;
        let delta = lu.solve(&f);
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(&delta).map(|(a, b)| a - step * b).collect();
            if system.admissible(&trial) {
                let f_trial = system.residual(&trial);
                let r_trial = sup_norm(&f_trial);
                if r_trial < r || r_trial <= controls.tol_newton {
                    y = trial;
                    f = f_trial;
                    r = r_trial;
                    break;
                }
            }
            step *= 0.5;
            if step < controls.damping_floor {
                return Err(Error::NonConvergence {
                    residual: r,
                    history,
                });
            }
        }
        history.push(r);
    }
    if r <= controls.tol_newton {
        let iterations = history.len() - 1;
        return Ok((
            y,
            NewtonReport {
                iterations,
                residual: r,
                history,
            },
        ));
    }
    Err(Error::NonConvergence {
        residual: r,
        history,
    })
}

/// Step-size policy for [`continue_parameter`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationControls {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub growth: f64,
}

impl Default for ContinuationControls {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_step: 0.25,
            min_step: 1e-6,
            growth: 1.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub y: Vec<f64>,
    pub report: NewtonReport,
    /// Every accepted `(theta, solution)` pair, starting with `theta_from`.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub rejected_steps: usize,
}

/// Natural-parameter continuation from `theta_from` to `theta_to`.
///
/// `family(theta)` builds the problem at `theta`. The predictor extrapolates
/// linearly through the last two accepted solutions. On Newton failure the
/// step halves; on success it grows by `growth` up to `max_step`. `accept` is
/// called on every converged step; an error from it aborts the continuation.
pub fn continue_parameter<P, F, A>(
    family: F,
    mesh: &Mesh,
    theta_from: f64,
    theta_to: f64,
    y_start: Vec<f64>,
    controls: &SolveControls,
    steps: &ContinuationControls,
    mut accept: A,
) -> Result<ContinuationResult>
where
    P: BvpProblem,
    F: Fn(f64) -> Result<P>,
    A: FnMut(f64, &[f64]) -> Result<()>,
{
    let direction = if theta_to >= theta_from { 1.0 } else { -1.0 };
    let mut snapshots = vec![(theta_from, y_start.clone())];
    let mut theta = theta_from;
    let mut y = y_start;
    let mut report = NewtonReport {
        iterations: 0,
        residual: f64::NAN,
        history: Vec::new(),
    };
    let mut h = steps.initial_step.min(steps.max_step);
    let mut rejected = 0;
    if theta_from == theta_to {
        let problem = family(theta_to)?;
        let system = discretize(&problem, mesh, controls.order);
        let (sol, rep) = damped_newton(&system, y, controls)?;
        return Ok(ContinuationResult {
            y: sol,
            report: rep,
            snapshots,
            rejected_steps: 0,
        });
    }
    while direction * (theta_to - theta) > 0.0 {
        let remaining = (theta_to - theta).abs();
        let (next, step) = if h >= remaining {
            (theta_to, remaining)
        } else {
            (theta + direction * h, h)
        };
        let guess = predict(&snapshots, next).unwrap_or_else(|| y.clone());
        let problem = family(next)?;
        let system = discretize(&problem, mesh, controls.order);
        let guess = if system.admissible(&guess) { guess } else { y.clone() };
        match damped_newton(&system, guess, controls) {
            Ok((sol, rep)) => {
                accept(next, &sol)?;
                theta = next;
                y = sol;
                report = rep;
                snapshots.push((theta, y.clone()));
                h = (step * steps.growth).min(steps.max_step);
            }
            Err(err @ (Error::NonConvergence { .. } | Error::Singular(_) | Error::Inadmissible(_))) => {
                rejected += 1;
                h = step * 0.5;
                if h < steps.min_step {
                    return Err(Error::ContinuationStuck {
                        last_good: theta,
                        target: theta_to,
                        reason: err.to_string(),
                    });
                }
            }
            Err(other) => return Err(other),
        }
    }
    Ok(ContinuationResult {
        y,
        report,
        snapshots,
        rejected_steps: rejected,
    })
}

fn predict(snapshots: &[(f64, Vec<f64>)], theta: f64) -> Option<Vec<f64>> {
    let n = snapshots.len();
    if n < 2 {
        return None;
    }
    let (t0, y0) = &snapshots[n - 2];
    let (t1, y1) = &snapshots[n - 1];
    let w = (theta - t1) / (t1 - t0);
    Some(y1.iter().zip(y0).map(|(a, b)| a + w * (a - b)).collect())
}
