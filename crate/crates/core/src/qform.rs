//! The reduced system written directly in the matrix entries
//! `y = (q11, x, q22)`:
//!
//! ```text
//! R = q'' - q' q^-1 q' - Lambda q (E q - tau I),   E = diag(1, 0),
//! Lambda = lambda_s exp(-2 alpha q11 - psi / N),    psi = -ln det q.
//! ```
//!
//! This form is used for evaluation and cross-checks; the solvers work in the
//! chart of [`crate::profile::ChartProfile`].

use serde::Serialize;

use crate::background::BackgroundFields;
use crate::bvp::{BoundaryOperator, BvpProblem};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Components of `R` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldResidual {
    pub r11: f64,
    pub r22: f64,
    /// `(R12 + R21) / 2`.
    pub r12: f64,
    /// `R12 - R21`. Both `q' q^-1 q'` and `q (E q - tau I)` are symmetric for
    /// symmetric `q`, so this vanishes identically.
    pub skew: f64,
}

impl FieldResidual {
    /// Residual in unknown order `(q11, x, q22)`.
    pub fn as_array(&self) -> [f64; 3] {
        [self.r11, self.r12, self.r22]
    }
}

/// `Lambda` and its gradient with respect to `(q11, x, q22)`.
fn coefficient(q: [f64; 3], lambda_s: f64, params: &ModelParams) -> (f64, [f64; 3]) {
    let (q11, x, q22) = (q[0], q[1], q[2]);
    let n = params.nf();
    let det = q11 * q22 - x * x;
    let lam = lambda_s * (-2.0 * params.alpha() * q11 + det.ln() / n).exp();
    let grad = [
        lam * (-2.0 * params.alpha() + q22 / (n * det)),
        lam * (-2.0 * x / (n * det)),
        lam * (q11 / (n * det)),
    ];
    (lam, grad)
}

/// `q' q^-1 q'` as `(11, 12, 22)`.
fn quadratic(q: [f64; 3], qp: [f64; 3]) -> ([f64; 3], f64) {
    let (q11, x, q22) = (q[0], q[1], q[2]);
    let (p, y, m) = (qp[0], qp[1], qp[2]);
    let det = q11 * q22 - x * x;
    (
        [
            (q22 * p * p - 2.0 * x * p * y + q11 * y * y) / det,
            (q22 * p * y - x * p * m - x * y * y + q11 * y * m) / det,
            (q22 * y * y - 2.0 * x * y * m + q11 * m * m) / det,
        ],
        det,
    )
}

/// `q''` solved from `R = 0` for a given value of `Lambda`.
pub(crate) fn field_second_derivative(q: [f64; 3], qp: [f64; 3], lam: f64, tau: f64) -> [f64; 3] {
    let (pq, _) = quadratic(q, qp);
    let (q11, x, q22) = (q[0], q[1], q[2]);
    [
        pq[0] + lam * q11 * (q11 - tau),
        pq[1] + lam * x * (q11 - tau),
        pq[2] + lam * (x * x - tau * q22),
    ]
}

/// Evaluates `R` at one point.
pub fn residual_field(
    q: [f64; 3],
    qp: [f64; 3],
    qpp: [f64; 3],
    lambda_s: f64,
    params: &ModelParams,
) -> Result<FieldResidual> {
    let (q11, x, q22) = (q[0], q[1], q[2]);
    let det = q11 * q22 - x * x;
    if !(q11 > 0.0 && q22 > 0.0 && det > 0.0) {
        return Err(Error::Inadmissible(format!(
            "q = ({q11}, {x}, {q22}) is not positive definite"
        )));
    }
    let tau = params.tau();
    let (lam, _) = coefficient(q, lambda_s, params);
    let (pq, _) = quadratic(q, qp);
    // q (E q - tau I) = [[q11 (q11 - tau), x (q11 - tau)], [x (q11 - tau), x^2 - tau q22]]
    let s11 = lam * q11 * (q11 - tau);
    let s12 = lam * x * (q11 - tau);
    let s21 = lam * x * (q11 - tau);
    let s22 = lam * (x * x - tau * q22);
    let r12 = qpp[1] - pq[1] - s12;
    let r21 = qpp[1] - pq[1] - s21;
    Ok(FieldResidual {
        r11: qpp[0] - pq[0] - s11,
        r22: qpp[2] - pq[2] - s22,
        r12: 0.5 * (r12 + r21),
        skew: r12 - r21,
    })
}

/// Jacobian blocks of [`residual_field`] with respect to `q`, `q'` and `q''`,
/// each 3x3 row-major with rows and columns in the order `(11, 12, 22)`.
pub fn jacobian_blocks(
    q: [f64; 3],
    qp: [f64; 3],
    lambda_s: f64,
    params: &ModelParams,
) -> ([f64; 9], [f64; 9], [f64; 9]) {
    let (q11, x, q22) = (q[0], q[1], q[2]);
    let (p, y, m) = (qp[0], qp[1], qp[2]);
    let tau = params.tau();
    let (pq, det) = quadratic(q, qp);
    let (lam, lg) = coefficient(q, lambda_s, params);

    // d(q' q^-1 q') / dq, using d det = (q22, -2x, q11)
    let dp_dq = [
        (y * y - pq[0] * q22) / det,
        (-2.0 * p * y + 2.0 * x * pq[0]) / det,
        (p * p - pq[0] * q11) / det,
        (y * m - pq[1] * q22) / det,
        (-p * m - y * y + 2.0 * x * pq[1]) / det,
        (p * y - pq[1] * q11) / det,
        (m * m - pq[2] * q22) / det,
        (-2.0 * y * m + 2.0 * x * pq[2]) / det,
        (y * y - pq[2] * q11) / det,
    ];
    let dp_dqp = [
        (2.0 * q22 * p - 2.0 * x * y) / det,
        (-2.0 * x * p + 2.0 * q11 * y) / det,
        0.0,
        (q22 * y - x * m) / det,
        (q22 * p - 2.0 * x * y + q11 * m) / det,
        (-x * p + q11 * y) / det,
        0.0,
        (2.0 * q22 * y - 2.0 * x * m) / det,
        (-2.0 * x * y + 2.0 * q11 * m) / det,
    ];
    // source terms S = Lambda * (s11, s12, s22)
    let base = [q11 * (q11 - tau), x * (q11 - tau), x * x - tau * q22];
    let dbase = [
        [2.0 * q11 - tau, 0.0, 0.0],
        [x, q11 - tau, 0.0],
        [0.0, 2.0 * x, -tau],
    ];
    let mut dq = [0.0; 9];
    let mut dqp = [0.0; 9];
    let mut dqpp = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            let ds = lg[c] * base[r] + lam * dbase[r][c];
            dq[r * 3 + c] = -dp_dq[r * 3 + c] - ds;
            dqp[r * 3 + c] = -dp_dqp[r * 3 + c];
        }
        dqpp[r * 3 + r] = 1.0;
    }
    (dq, dqp, dqpp)
}

/// Robin conditions on `u = q11 - 2x + q22`, `v = q11 + 2x + q22` and
/// `d = q11 - q22`, acting on `(q11, x, q22)`:
/// `u' = l u`, `v' = (N-l) v`, `d' = (N-l) d` at `-T` and
/// `u' = -(N-l) u`, `v' = -l v`, `d' = -(N-l) d` at `+T`.
pub fn boundary_operators(params: &ModelParams) -> (BoundaryOperator, BoundaryOperator) {
    let (l, k) = (params.lf(), params.nf() - params.lf());
    let rows = [[1.0, -2.0, 1.0], [1.0, 2.0, 1.0], [1.0, 0.0, -1.0]];
    let build = |rates: [f64; 3]| {
        let mut a = vec![0.0; 9];
        let mut b = vec![0.0; 9];
        for (r, (row, rate)) in rows.iter().zip(rates).enumerate() {
            for c in 0..3 {
                a[r * 3 + c] = -rate * row[c];
                b[r * 3 + c] = row[c];
            }
        }
        BoundaryOperator::new(3, a, b, vec![0.0; 3])
    };
    (build([l, k, k]), build([-k, -l, -k]))
}

/// `lambda_s(t)` from the background fields, interpolated between nodes:
/// `V0 lambda^s / (2 * 4^(1/N)) * det g0^(-1/N) * exp(2 alpha (1-s) q0_11 + s u0)`.
pub fn lambda_s_coefficient(t: f64, params: &ModelParams, bg: &BackgroundFields) -> Result<f64> {
    let mesh = &bg.mesh;
    let n = params.nf();
    let s = params.s();
    let q0 = mesh.interpolate(&bg.q0.q11, t)?;
    let ln_det = mesh.interpolate(&bg.ln_detg0, t)?;
    let u0 = mesh.interpolate(&bg.u0, t)?;
    let ln = (params.v0() / 2.0).ln() - 4f64.ln() / n - ln_det / n
        + s * params.lambda().ln()
        + 2.0 * params.alpha() * (1.0 - s) * q0
        + s * u0;
    Ok(ln.exp())
}

/// The matrix-form system as a [`BvpProblem`] with nodal `lambda_s`.
#[derive(Debug, Clone)]
pub struct QFormProblem {
    pub params: ModelParams,
    pub lambda_s: Vec<f64>,
}

impl QFormProblem {
    pub fn new(params: ModelParams, lambda_s: Vec<f64>) -> Self {
        Self { params, lambda_s }
    }
}

impl BvpProblem for QFormProblem {
    fn dim(&self) -> usize {
        3
    }

    fn residual(&self, i: usize, _t: f64, y: &[f64], yp: &[f64], ypp: &[f64], out: &mut [f64]) {
        let q = [y[0], y[1], y[2]];
        let qp = [yp[0], yp[1], yp[2]];
        let qpp = [ypp[0], ypp[1], ypp[2]];
        match residual_field(q, qp, qpp, self.lambda_s[i], &self.params) {
            Ok(r) => out.copy_from_slice(&r.as_array()),
            Err(_) => out.fill(f64::NAN),
        }
    }

    fn jacobian(
        &self,
        i: usize,
        _t: f64,
        y: &[f64],
        yp: &[f64],
        _ypp: &[f64],
        dy: &mut [f64],
        dyp: &mut [f64],
        dypp: &mut [f64],
    ) {
        let (a, b, c) = jacobian_blocks(
            [y[0], y[1], y[2]],
            [yp[0], yp[1], yp[2]],
            self.lambda_s[i],
            &self.params,
        );
        dy.copy_from_slice(&a);
        dyp.copy_from_slice(&b);
        dypp.copy_from_slice(&c);
    }

    fn left_boundary(&self) -> BoundaryOperator {
        boundary_operators(&self.params).0
    }

    fn right_boundary(&self) -> BoundaryOperator {
        boundary_operators(&self.params).1
    }

    fn admissible(&self, _node: usize, _t: f64, y: &[f64]) -> bool {
        y[0] > 0.0 && y[2] > 0.0 && y[0] * y[2] > y[1] * y[1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate_params, RawParams};
    use proptest::prelude::*;

    fn params() -> ModelParams {
        validate_params(&RawParams::new(3, 1, 1.0, 7.0)).unwrap()
    }

    /// Random positive-definite state with derivatives.
    fn state() -> impl Strategy<Value = ([f64; 3], [f64; 3], [f64; 3])> {
        (
            0.1f64..1.0,
            -0.9f64..0.9,
            0.1f64..1.0,
            prop::array::uniform3(-1.0f64..1.0),
            prop::array::uniform3(-1.0f64..1.0),
        )
            .prop_map(|(q11, c, q22, qp, qpp)| {
                let x = c * (q11 * q22).sqrt();
                ([q11, x, q22], qp, qpp)
            })
    }

    fn richardson(f: impl Fn(f64) -> [f64; 3], h: f64) -> [f64; 3] {
        let d = |h: f64| {
            let (p, m) = (f(h), f(-h));
            [0, 1, 2].map(|k| (p[k] - m[k]) / (2.0 * h))
        };
        let (d1, d2) = (d(h), d(h / 2.0));
        [0, 1, 2].map(|k| (4.0 * d2[k] - d1[k]) / 3.0)
    }

    proptest! {
        #[test]
        fn blocks_match_finite_differences((q, qp, qpp) in state(), lam in 0.2f64..3.0) {
            let p = params();
            let (dq, dqp, dqpp) = jacobian_blocks(q, qp, lam, &p);
            let eval = |q: [f64; 3], qp: [f64; 3], qpp: [f64; 3]| {
                residual_field(q, qp, qpp, lam, &p).unwrap().as_array()
            };
            for c in 0..3 {
                let bump = |v: [f64; 3], h: f64| {
                    let mut w = v;
                    w[c] += h;
                    w
                };
                let fd_q = richardson(|h| eval(bump(q, h), qp, qpp), 1e-6);
                let fd_qp = richardson(|h| eval(q, bump(qp, h), qpp), 1e-6);
                let fd_qpp = richardson(|h| eval(q, qp, bump(qpp, h)), 1e-6);
                for r in 0..3 {
                    for (an, fd) in [(dq, fd_q), (dqp, fd_qp), (dqpp, fd_qpp)] {
                        let err = (an[r * 3 + c] - fd[r]).abs() / (1.0 + fd[r].abs());
                        prop_assert!(err < 1e-6, "row {r} col {c}: {} vs {}", an[r * 3 + c], fd[r]);
                    }
                }
            }
        }

        #[test]
        fn trace_reproduces_the_psi_equation((q, qp, qpp) in state(), lam in 0.2f64..3.0) {
            // tr(q^-1 R) = -psi'' - Lambda (q11 - 2 tau)
            let p = params();
            let r = residual_field(q, qp, qpp, lam, &p).unwrap();
            let (q11, x, q22) = (q[0], q[1], q[2]);
            let det = q11 * q22 - x * x;
            let tr = (q22 * r.r11 - 2.0 * x * r.r12 + q11 * r.r22) / det;
            let ddet = qp[0] * q22 + q11 * qp[2] - 2.0 * x * qp[1];
            let dddet = qpp[0] * q22 + 2.0 * qp[0] * qp[2] + q11 * qpp[2]
                - 2.0 * qp[1] * qp[1] - 2.0 * x * qpp[1];
            let psipp = -dddet / det + (ddet / det).powi(2);
            let (lam_t, _) = coefficient(q, lam, &p);
            let expected = psipp - lam_t * (2.0 * p.tau() - q11);
            prop_assert!((tr + expected).abs() < 1e-12 * (1.0 + psipp.abs() + expected.abs()) * 1e2,
                "{tr} vs {}", -expected);
            prop_assert_eq!(r.skew, 0.0);
        }

        #[test]
        fn residual_is_not_homogeneous((q, qp, qpp) in state()) {
            let p = params();
            let r1 = residual_field(q, qp, qpp, 1.0, &p).unwrap().as_array();
            let scale = |v: [f64; 3]| v.map(|e| 2.0 * e);
            let r2 = residual_field(scale(q), scale(qp), scale(qpp), 1.0, &p).unwrap().as_array();
            prop_assert!((0..3).any(|k| (r2[k] - 2.0 * r1[k]).abs() > 1e-9));
        }
    }

    #[test]
    fn boundary_operators_have_full_rank() {
        let p = params();
        let (left, right) = boundary_operators(&p);
        assert_eq!(left.rank(), 3);
        assert_eq!(right.rank(), 3);
    }

    #[test]
    fn rejects_indefinite_state() {
        let p = params();
        let err = residual_field([1.0, 2.0, 1.0], [0.0; 3], [0.0; 3], 1.0, &p);
        assert!(matches!(err, Err(Error::Inadmissible(_))));
    }
}
