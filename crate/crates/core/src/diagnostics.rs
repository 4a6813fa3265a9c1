//! Invariants and identity residuals of a solution at `s = 1`.
//!
//! Every check here is a pure evaluation of a computed profile. Integrals
//! over the line are trapezoid sums on `[-T, T]` (spectrally accurate for
//! the exponentially decaying integrands), integrals over half-lines and
//! running integrals use the fourth-order cumulative rule of the mesh.

use std::collections::BTreeMap;

use ode_solvers::{Dop853, SVector, System};
use serde::Serialize;

use crate::background::BackgroundFields;
use crate::banded::{smallest_symmetric_eigenvalue, symmetric_inertia, BandMatrix};
use crate::bvp::discretize;
use crate::chart::{ChartProblem, Reference};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Order};
use crate::params::{fs_weight, RawParams};
use crate::qform::field_second_derivative;
use crate::system::GravSolution;

/// Entries of `K = q^-1(0) q'(0) = [[a, b], [c, -a]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Abc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `a, b, c` evaluated from the nodal matrix at `t = 0` and from integrals of
/// the solution over half-lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbcComparison {
    pub matrix: Abc,
    pub integral: Abc,
    /// `K22 + K11`, zero when `psi'(0) = 0`.
    pub trace: f64,
    /// Largest of the three differences, relative to `max(1, |value|)`.
    pub discrepancy: f64,
}

fn coeff_times(sol: &GravSolution, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..sol.mesh.len()).map(|i| sol.coeff[i] * f(i)).collect()
}

/// Integral over `[0, T]` with the fourth-order cumulative rule.
fn right_half(mesh: &Mesh, f: &[f64]) -> f64 {
    let c = mesh.center();
    mesh.cumulative_from(f, c)[mesh.len() - 1]
}

/// Integral over `[-T, 0]`.
fn left_half(mesh: &Mesh, f: &[f64]) -> f64 {
    -mesh.cumulative_from(f, mesh.center())[0]
}

/// `q^-1 q'` at node `i`, row-major.
fn log_derivative(sol: &GravSolution, i: usize) -> [f64; 4] {
    let q = sol.q.matrix(i);
    let qp = sol.q.derivative_matrix(i);
    let det = (-sol.psi[i]).exp();
    let inv = [[q[1][1] / det, -q[0][1] / det], [-q[1][0] / det, q[0][0] / det]];
    let mut k = [0.0; 4];
    for r in 0..2 {
        for c in 0..2 {
            k[r * 2 + c] = inv[r][0] * qp[0][c] + inv[r][1] * qp[1][c];
        }
    }
    k
}

/// Extracts `a, b, c` two ways. The integral forms follow from integrating
/// the first-order form of the equation from `0` to `+-infinity` and using
/// the limits of `q^-1 q'` fixed by the boundary behaviour.
pub fn extract_abc(sol: &GravSolution) -> Result<AbcComparison> {
    let mesh = &sol.mesh;
    let ic = mesh.center();
    if mesh.t(ic) != 0.0 {
        return Err(Error::Mesh("t = 0 is not a node".into()));
    }
    let p = &sol.params;
    let (n, l, tau) = (p.nf(), p.lf(), p.tau());
    let k = log_derivative(sol, ic);
    let matrix = Abc {
        a: k[0],
        b: k[1],
        c: k[2],
    };

    let lq = coeff_times(sol, |i| sol.q.q11[i]);
    let lx = coeff_times(sol, |i| sol.q.x[i]);
    let int_lq = mesh.integrate(&lq);
    let int_lam = mesh.integrate(&sol.coeff);
    let a = -0.25 * (right_half(mesh, &lq) - left_half(mesh, &lq));
    let x_right = right_half(mesh, &lx);
    let b_plus_c = n - 2.0 * l - x_right;
    let b_minus_c = 0.5 * int_lq - x_right;
    let integral = Abc {
        a,
        b: 0.5 * (b_plus_c + b_minus_c),
        c: n - l - 0.5 * tau * int_lam,
    };
    let rel = |u: f64, v: f64| (u - v).abs() / u.abs().max(1.0);
    let discrepancy = rel(matrix.a, integral.a)
        .max(rel(matrix.b, integral.b))
        .max(rel(matrix.c, integral.c));
    Ok(AbcComparison {
        matrix,
        integral,
        trace: k[0] + k[3],
        discrepancy,
    })
}

/// `V_out = int 2 Lambda dt`. Fails when the value leaves the closed
/// admissible interval by more than `1e-6`.
pub fn compute_volume(sol: &GravSolution) -> Result<f64> {
    let v = 2.0 * sol.mesh.integrate(&sol.coeff);
    let (lo, hi) = sol.params.admissible_interval();
    if !(v >= lo - 1e-6 && v <= hi + 1e-6) {
        return Err(Error::InconsistentSolution(format!(
            "volume {v} lies outside [{lo}, {hi}]"
        )));
    }
    Ok(v)
}

/// Measured slopes of `ln q11` on the two end windows of width 5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRates {
    pub left: f64,
    pub right: f64,
    pub left_window: (f64, f64),
    pub right_window: (f64, f64),
}

impl DecayRates {
    pub fn left_ok(&self) -> bool {
        self.left >= self.left_window.0 && self.left <= self.left_window.1
    }

    pub fn right_ok(&self) -> bool {
        self.right >= self.right_window.0 && self.right <= self.right_window.1
    }
}

pub fn decay_rates(sol: &GravSolution) -> DecayRates {
    let mesh = &sol.mesh;
    let p = &sol.params;
    let (n, l) = (p.nf(), p.lf());
    let eps = 0.05 * n;
    let big_t = mesh.half_width();
    let a = &sol.chart.a;
    let m = mesh.len();
    let il = mesh.nearest(-big_t + 5.0);
    let ir = mesh.nearest(big_t - 5.0);
    DecayRates {
        left: (a[il] - a[0]) / (mesh.t(il) - mesh.t(0)),
        right: (a[m - 1] - a[ir]) / (mesh.t(m - 1) - mesh.t(ir)),
        left_window: (l - eps, n / 2.0 + eps),
        right_window: (-n / 2.0 - eps, -l + eps),
    }
}

/// Residuals of the identities satisfied by every solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `|int Lambda x| / int Lambda |x|`.
    pub zero_x_integral: f64,
    /// `|int Lambda (2 tau - q11) - 2N| / 2N`.
    pub normalization: f64,
    /// `|int Lambda (2 tau - q11) - (psi'(T) - psi'(-T))| / 2N`.
    pub normalization_slopes: f64,
    /// Largest relative residual of the first integral at the probe nodes.
    pub first_integral: f64,
    /// Largest relative residual of the `x`-relation over all nodes.
    pub x_relation: f64,
    /// Largest pointwise residual of the Bochner-type identity for `ln q11`.
    pub bochner: f64,
    /// `|2 int_0^inf Lambda (2 tau - q11) psi' - N^2| / N^2`.
    pub pinning: f64,
    /// `|c - (N - l - tau V_out / 4)|`.
    pub c_volume: f64,
}

/// Probe nodes `-T/2, -T/4, 0, T/4, T/2`.
pub fn probe_nodes(mesh: &Mesh) -> [usize; 5] {
    let t = mesh.half_width();
    [-0.5, -0.25, 0.0, 0.25, 0.5].map(|f| mesh.nearest(f * t))
}

fn identity_residuals(sol: &GravSolution, k: &Abc, v_out: f64) -> IdentityResiduals {
    let mesh = &sol.mesh;
    let p = &sol.params;
    let (n, l, tau) = (p.nf(), p.lf(), p.tau());
    let m = mesh.len();
    let ic = mesh.center();
    let chart = &sol.chart;

    let lx = coeff_times(sol, |i| sol.q.x[i]);
    let lx_abs = coeff_times(sol, |i| sol.q.x[i].abs());
    let zero_x_integral = mesh.integrate(&lx).abs() / mesh.integrate(&lx_abs).max(f64::MIN_POSITIVE);

    let deg = mesh.integrate(&coeff_times(sol, |i| 2.0 * tau - sol.q.q11[i]));
    let normalization = (deg - 2.0 * n).abs() / (2.0 * n);
    let normalization_slopes = (deg - (sol.psip[m - 1] - sol.psip[0])).abs() / (2.0 * n);

    // first integral: q' - q K - q int_0^t Lambda M = 0
    let run = |f: Vec<f64>| mesh.cumulative_from(&f, ic);
    let i11 = run(coeff_times(sol, |i| sol.q.q11[i] - tau));
    let i12 = run(coeff_times(sol, |i| sol.q.x[i]));
    let i22 = run(coeff_times(sol, |_| -tau));
    let kk = [[k.a, k.b], [k.c, -k.a]];
    let mut first_integral: f64 = 0.0;
    for &i in &probe_nodes(mesh) {
        let q = sol.q.matrix(i);
        let qp = sol.q.derivative_matrix(i);
        let int = [[i11[i], i12[i]], [0.0, i22[i]]];
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let qk = q[r][0] * kk[0][c] + q[r][1] * kk[1][c];
                let qi = q[r][0] * int[0][c] + q[r][1] * int[1][c];
                worst = worst.max((qp[r][c] - qk - qi).abs());
                scale = scale.max(qp[r][c].abs()).max(qk.abs()).max(qi.abs());
            }
        }
        first_integral = first_integral.max(worst / scale.max(f64::MIN_POSITIVE));
    }

    // x-relation: x q11(0) = x(0) q11 + q11 q11(0) c int_0^t det q / q11^2
    let ratio: Vec<f64> = (0..m).map(|i| (-chart.psi[i] - 2.0 * chart.a[i]).exp()).collect();
    let cum = run(ratio);
    let (q0, x0) = (sol.q.q11[ic], sol.q.x[ic]);
    let mut x_relation: f64 = 0.0;
    for i in 0..m {
        let lhs = sol.q.x[i] * q0;
        let t1 = x0 * sol.q.q11[i];
        let t2 = sol.q.q11[i] * q0 * k.c * cum[i];
        let scale = lhs.abs().max(t1.abs()).max(t2.abs()).max(f64::MIN_POSITIVE);
        x_relation = x_relation.max((lhs - t1 - t2).abs() / scale);
    }

    // (ln q11)'' = Lambda (q11 - tau) + c^2 e^{-psi} / q11^2
    let mut bochner: f64 = 0.0;
    for i in 1..m - 1 {
        let rhs = sol.coeff[i] * (sol.q.q11[i] - tau) + k.c * k.c * (-chart.psi[i] - 2.0 * chart.a[i]).exp();
        bochner = bochner.max((chart.app[i] - rhs).abs());
    }

    let pin = right_half(mesh, &coeff_times(sol, |i| (2.0 * tau - sol.q.q11[i]) * sol.psip[i]));
    let pinning = (2.0 * pin - n * n).abs() / (n * n);
    let c_volume = (k.c - (n - l - tau * v_out / 4.0)).abs();

    IdentityResiduals {
        zero_x_integral,
        normalization,
        normalization_slopes,
        first_integral,
        x_relation,
        bochner,
        pinning,
        c_volume,
    }
}

/// Full evaluation of a solution.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub params: RawParams,
    pub alpha: f64,
    pub mesh_half_width: f64,
    pub mesh_nodes: usize,
    pub spacing: f64,
    pub residual_norm: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub abc: AbcComparison,
    pub v_out: f64,
    pub x0: f64,
    pub q11_0: f64,
    pub q11_max: f64,
    /// `int e^{-psi} / q11^2 dt`.
    pub finiteness_integral: f64,
    /// Bound on the neglected tails of `int Lambda` beyond `+-T`.
    pub tail_bound: f64,
    /// Limits of `(ln q11 + psi/2)'` measured at the two ends.
    pub log_convexity_limits: (f64, f64),
    pub residuals: BTreeMap<String, f64>,
    pub decay_rates: DecayRates,
    /// Properties every valid solution must have.
    pub checks: BTreeMap<String, bool>,
    /// Sign claims about `x(0)`; reported, not part of [`Self::consistent`].
    pub claims: BTreeMap<String, bool>,
}

impl DiagnosticsReport {
    /// True when every entry of `checks` holds.
    pub fn consistent(&self) -> bool {
        self.checks.values().all(|&v| v)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|(_, &v)| !v)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

/// Tolerances applied by [`identity_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteTolerances {
    pub residual: f64,
    pub zero_x_integral: f64,
    pub normalization: f64,
    pub first_integral: f64,
    pub x_relation: f64,
    /// Multiplier of `h^2` for the Bochner residual.
    pub bochner_h2: f64,
    pub pinning: f64,
    pub abc: f64,
    pub c_volume: f64,
}

impl Default for SuiteTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            zero_x_integral: 1e-6,
            normalization: 1e-6,
            first_integral: 1e-6,
            x_relation: 1e-6,
            bochner_h2: 10.0,
            pinning: 1e-4,
            abc: 1e-4,
            c_volume: 1e-4,
        }
    }
}

/// Evaluates every identity and bound on `sol`.
pub fn identity_suite(sol: &GravSolution, tol: &SuiteTolerances) -> Result<DiagnosticsReport> {
    let mesh = &sol.mesh;
    let p = &sol.params;
    let (n, l, tau) = (p.nf(), p.lf(), p.tau());
    let m = mesh.len();
    let ic = mesh.center();
    let h = mesh.spacing();
    let chart = &sol.chart;

    let abc = extract_abc(sol)?;
    let k = abc.matrix;
    let v_out = 2.0 * mesh.integrate(&sol.coeff);
    let res = identity_residuals(sol, &k, v_out);
    let rates = decay_rates(sol);

    let finiteness: Vec<f64> = (0..m).map(|i| (-chart.psi[i] - 2.0 * chart.a[i]).exp()).collect();
    let finiteness_integral = mesh.integrate(&finiteness);
    // Lambda decays like e^{-|t|} in both tails
    let tail_bound = sol.coeff[0] + sol.coeff[m - 1];
    let lc = |i: usize| chart.ap[i] + 0.5 * chart.psip[i];
    let q11_max = sol.q.q11.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut residuals = BTreeMap::new();
    residuals.insert("zero_x_integral".to_string(), res.zero_x_integral);
    residuals.insert("normalization".to_string(), res.normalization);
    residuals.insert("normalization_slopes".to_string(), res.normalization_slopes);
    residuals.insert("first_integral".to_string(), res.first_integral);
    residuals.insert("x_relation".to_string(), res.x_relation);
    residuals.insert("bochner".to_string(), res.bochner);
    residuals.insert("pinning".to_string(), res.pinning);
    residuals.insert("c_volume".to_string(), res.c_volume);
    residuals.insert("abc_agreement".to_string(), abc.discrepancy);

    let positive = (0..m).all(|i| sol.q.q11[i] > 0.0 && sol.q.q22[i] > 0.0 && chart.psi[i].is_finite());
    let increasing = (0..m - 1).all(|i| chart.r[i + 1] - chart.r[i] > -1e-10);
    // Far out both second derivatives are of order e^{-T}, below the rounding
    // level of a difference quotient, so positivity is tested against that
    // level.
    let floor = |v: &[f64]| 16.0 * f64::EPSILON * v.iter().fold(1.0f64, |a, b| a.max(b.abs())) / (h * h);
    let psi_floor = floor(&chart.psi);
    let lc_floor = psi_floor + floor(&chart.a);
    let psi_convex = (1..m - 1).all(|i| chart.psipp[i] > -psi_floor);
    let log_convex = (1..m - 1).all(|i| chart.app[i] + 0.5 * chart.psipp[i] > -lc_floor);
    let mut checks = BTreeMap::new();
    let mut put = |name: &str, v: bool| {
        checks.insert(name.to_string(), v);
    };
    put("residual", sol.residual_norm <= tol.residual);
    put("positivity", positive);
    put("coefficient_positive", sol.coeff.iter().all(|&c| c > 0.0));
    put("q11_bound", q11_max <= tau + 1e-8);
    put("psi_convex", psi_convex);
    put("log_convexity", log_convex);
    put("x_over_q11_increasing", increasing);
    put("zero_x_integral", res.zero_x_integral < tol.zero_x_integral);
    put(
        "normalization",
        res.normalization < tol.normalization && res.normalization_slopes < tol.normalization,
    );
    put("first_integral", res.first_integral < tol.first_integral);
    put("x_relation", res.x_relation < tol.x_relation);
    put("bochner", res.bochner < tol.bochner_h2 * h * h);
    put("pinning", res.pinning < tol.pinning);
    put("abc_agreement", abc.discrepancy < tol.abc);
    put("c_volume", res.c_volume < tol.c_volume);
    put("c_positive", k.c > 0.0);
    put("b_positive", k.b > 0.0);
    put("c_plus_a_bounds", n - l > k.c + k.a && k.c + k.a > -l);
    put("c_minus_a_bounds", n - l > k.c - k.a && k.c - k.a > -l);
    let (lo, hi) = p.admissible_interval();
    put("volume_admissible", v_out > lo && v_out < hi);
    put("decay_left", rates.left_ok());
    put("decay_right", rates.right_ok());

    // x(0) counts as negative only beyond the rounding level of x
    let x_scale = sol.q.x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut claims = BTreeMap::new();
    claims.insert("x0_negative".to_string(), sol.q.x[ic] < -1e-8 * x_scale);

    Ok(DiagnosticsReport {
        params: p.raw(),
        alpha: p.alpha(),
        mesh_half_width: mesh.half_width(),
        mesh_nodes: m,
        spacing: h,
        residual_norm: sol.residual_norm,
        a: k.a,
        b: k.b,
        c: k.c,
        abc,
        v_out,
        x0: sol.q.x[ic],
        q11_0: sol.q.q11[ic],
        q11_max,
        finiteness_integral,
        tail_bound,
        log_convexity_limits: (lc(0), lc(m - 1)),
        residuals,
        decay_rates: rates,
        checks,
        claims,
    })
}

/// Right-hand side of `q'' = q' q^-1 q' + Lambda q (E q - tau I)` as a
/// first-order system in `(q11, x, q22, q11', x', q22', t)`. Time is carried
/// as a state component because the DOP853 tableau shipped with `ode_solvers`
/// evaluates its last stage at the wrong abscissa.
struct MatrixOde<F: Fn(f64, [f64; 3]) -> f64> {
    coefficient: F,
    tau: f64,
}

type State = SVector<f64, 7>;

impl<F: Fn(f64, [f64; 3]) -> f64> System<f64, State> for MatrixOde<F> {
    fn system(&self, _t: f64, y: &State, dy: &mut State) {
        let q = [y[0], y[1], y[2]];
        let qp = [y[3], y[4], y[5]];
        let lam = (self.coefficient)(y[6], q);
        let qpp = field_second_derivative(q, qp, lam, self.tau);
        for k in 0..3 {
            dy[k] = qp[k];
            dy[3 + k] = qpp[k];
        }
        dy[6] = 1.0;
    }
}

fn shoot<F: Fn(f64, [f64; 3]) -> f64 + Copy>(
    mesh: &Mesh,
    tau: f64,
    coefficient: F,
    start: [f64; 6],
    nodal: impl Fn(usize) -> [f64; 3],
    interval: (f64, f64),
) -> f64 {
    let ic = mesh.center();
    let h = mesh.spacing();
    let mut worst: f64 = 0.0;
    for (end, dir) in [(interval.0, -1.0), (interval.1, 1.0)] {
        if end * dir <= 0.0 {
            continue;
        }
        let steps = (end.abs() / h).round() as usize;
        let end = dir * steps as f64 * h;
        let ode = MatrixOde { coefficient, tau };
        let mut y0 = State::zeros();
        y0.fixed_rows_mut::<6>(0).copy_from_slice(&start);
        let mut stepper = Dop853::new(ode, 0.0, end, dir * h, y0, 1e-13, 1e-13);
        if stepper.integrate().is_err() {
            return f64::INFINITY;
        }
        for (k, y) in stepper.y_out().iter().enumerate().take(steps + 1) {
            let i = if dir > 0.0 { ic + k } else { ic - k };
            let want = nodal(i);
            for c in 0..3 {
                let d = (y[c] - want[c]).abs();
                if !d.is_finite() {
                    return f64::INFINITY;
                }
                worst = worst.max(d);
            }
        }
    }
    worst
}

/// Integrates the matrix equation as an initial value problem from `t = 0`
/// with the solution's `q(0), q'(0)` and returns the largest deviation from
/// the nodal entries over `interval`. Blow-up is reported as infinity.
pub fn shooting_crosscheck(sol: &GravSolution, interval: (f64, f64)) -> Result<f64> {
    let p = sol.params;
    check_interval(&sol.mesh, interval)?;
    let ic = sol.center();
    let lambda_s = sol.lambda_s[ic];
    let (alpha, n) = (p.alpha(), p.nf());
    let coefficient = move |_t: f64, q: [f64; 3]| {
        let det = q[0] * q[2] - q[1] * q[1];
        lambda_s * (-2.0 * alpha * q[0] + det.ln() / n).exp()
    };
    let q = &sol.q;
    let start = [q.q11[ic], q.x[ic], q.q22[ic], q.q11p[ic], q.xp[ic], q.q22p[ic]];
    Ok(shoot(
        &sol.mesh,
        p.tau(),
        coefficient,
        start,
        |i| [q.q11[i], q.x[i], q.q22[i]],
        interval,
    ))
}

/// The same cross-check for the background, with `Lambda = (V0/2) w(t)`.
pub fn background_shooting_crosscheck(bg: &BackgroundFields, interval: (f64, f64)) -> Result<f64> {
    check_interval(&bg.mesh, interval)?;
    let half = bg.params.v0() / 2.0;
    let coefficient = move |t: f64, _q: [f64; 3]| half * fs_weight(t);
    let ic = bg.mesh.center();
    let q = &bg.q0;
    let start = [q.q11[ic], q.x[ic], q.q22[ic], q.q11p[ic], q.xp[ic], q.q22p[ic]];
    Ok(shoot(
        &bg.mesh,
        bg.params.tau(),
        coefficient,
        start,
        |i| [q.q11[i], q.x[i], q.q22[i]],
        interval,
    ))
}

fn check_interval(mesh: &Mesh, interval: (f64, f64)) -> Result<()> {
    let (a, b) = interval;
    if !(a <= 0.0 && b >= 0.0 && a >= -10.0 && b <= 10.0 && a.abs().max(b) < mesh.half_width()) {
        return Err(Error::Domain(format!(
            "probe interval [{a}, {b}] must contain 0 and lie inside [-10, 10]"
        )));
    }
    Ok(())
}

/// Spectral data of the symmetrized linearization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpennessWitness {
    /// Smallest eigenvalue of `-(J + J^T)/2` restricted to interior nodes.
    pub smallest_eigenvalue: f64,
    /// Number of negative eigenvalues of that matrix.
    pub negative_count: usize,
    pub dimension: usize,
}

impl OpennessWitness {
    pub fn positive(&self) -> bool {
        self.smallest_eigenvalue > 0.0
    }
}

/// Symmetrized Jacobian of the discrete system solved by Newton (chart
/// variables, unpinned, `s = 1`), sign-flipped so that `-d^2/dt^2` counts as
/// positive, with perturbations vanishing at the two end nodes.
pub fn openness_witness(sol: &GravSolution) -> Result<OpennessWitness> {
    let mesh = &sol.mesh;
    let params = sol.params.with_lambda(1.0)?;
    let reference = Reference::new(&params, mesh);
    let ell: Vec<f64> = sol.lambda_s.iter().map(|v| v.ln()).collect();
    let problem = ChartProblem::gravitating(params, mesh, &reference, ell);
    let z = problem.offsets(&sol.chart.a, &sol.chart.psi, &sol.chart.r);
    let system = discretize(&problem, mesh, Order::Fourth);
    let jac = system.jacobian(&z);
    let d = 3;
    let n = jac.dim() - 2 * d;
    let band = jac.lower().max(jac.upper());
    let mut sym = BandMatrix::zeros(n, band, band);
    for i in 0..n {
        for j in i.saturating_sub(band)..(i + band + 1).min(n) {
            let (gi, gj) = (i + d, j + d);
            let u = if jac.in_band(gi, gj) { jac.get(gi, gj) } else { 0.0 };
            let v = if jac.in_band(gj, gi) { jac.get(gj, gi) } else { 0.0 };
            sym.set(i, j, -0.5 * (u + v));
        }
    }
    let smallest = smallest_symmetric_eigenvalue(&sym, 1e-14);
    let (negative_count, _, _) = symmetric_inertia(&sym, 0.0);
    Ok(OpennessWitness {
        smallest_eigenvalue: smallest,
        negative_count,
        dimension: n,
    })
}
