//! The `s = 0` vortex on the background `V0 * omega_FS` and the derived
//! fields `det g0` and `u0`.

use serde::Serialize;

use crate::bvp::{damped_newton, discretize, SolveControls};
use crate::chart::{ChartProblem, Reference};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::params::{fs_weight, softplus, ModelParams};
use crate::profile::{ChartProfile, SymmetricMatrixProfile};

/// Solved background with the fields entering the coefficient `lambda_s`.
#[derive(Debug, Clone, Serialize)]
pub struct BackgroundFields {
    pub params: ModelParams,
    pub mesh: Mesh,
    pub q0: SymmetricMatrixProfile,
    pub psi0: Vec<f64>,
    pub detg0: Vec<f64>,
    /// `ln det g0`; kept separately because `det g0` is formed from it.
    pub ln_detg0: Vec<f64>,
    pub u0: Vec<f64>,
    pub u0prime: Vec<f64>,
    /// Additive constant fixing the weighted mean of `u0` to zero.
    pub u0_offset: f64,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    #[serde(skip)]
    pub(crate) chart: ChartProfile,
}

impl BackgroundFields {
    /// `Lambda(t)` at node `i` for the background equation: `(V0/2) w(t)`.
    pub fn coefficient(&self, i: usize) -> f64 {
        0.5 * self.params.v0() * fs_weight(self.mesh.t(i))
    }

    /// Degree identity `int (V0/2)(2 tau - q11) w dt`, equal to `2N` on a
    /// solution.
    pub fn degree_integral(&self) -> f64 {
        let tau = self.params.tau();
        let f: Vec<f64> = (0..self.mesh.len())
            .map(|i| self.coefficient(i) * (2.0 * tau - self.q0.q11[i]))
            .collect();
        self.mesh.integrate(&f)
    }

    /// `psi0'` at the two ends of the mesh.
    pub fn end_slopes(&self) -> (f64, f64) {
        let m = self.mesh.len();
        (self.chart.psip[0], self.chart.psip[m - 1])
    }

    pub fn psi0_second_derivative(&self) -> &[f64] {
        &self.chart.psipp
    }

    /// `ln(lambda_s / lambda^s)` at every node. Uses `u0 = (1/N) ln det g0 + C`,
    /// so the value at `s = 1` is exactly constant.
    pub fn ln_coefficient_base(&self, s: f64) -> Vec<f64> {
        let p = &self.params;
        let n = p.nf();
        let base = (p.v0() / 2.0).ln() - 4f64.ln() / n;
        (0..self.mesh.len())
            .map(|i| {
                let ell = self.ln_detg0[i] / n;
                base + (1.0 - s) * (2.0 * p.alpha() * self.q0.q11[i] - ell) + s * self.u0_offset
            })
            .collect()
    }
}

/// Model-metric profile `q = P^dag H_m P` with a split diagonal, in chart form:
/// `q11 = (k1 e^{lt} + k2 e^{(N-l)t}) / (1+e^t)^N`,
/// `x = (k2 e^{(N-l)t} - k1 e^{lt}) / (1+e^t)^N`, with `k1 = 1.1 k`,
/// `k2 = 0.9 k` and `k` chosen so that `max q11 = tau/2`.
pub fn background_initial_guess_chart(params: &ModelParams, mesh: &Mesh) -> ChartProfile {
    let (n, l) = (params.nf(), params.lf());
    let g = params.rate_gap();
    let (c1, c2) = (1.1f64, 0.9f64);
    let ln_g = |t: f64| {
        let (u, v) = (c1.ln() + l * t, c2.ln() + (n - l) * t);
        let m = u.max(v);
        m + ((u - m).exp() + (v - m).exp()).ln() - n * softplus(t)
    };
    let max_ln = mesh.nodes().iter().map(|&t| ln_g(t)).fold(f64::NEG_INFINITY, f64::max);
    let ln_k = (params.tau() / 2.0).ln() - max_ln;
    let m = mesh.len();
    let mut c = ChartProfile {
        a: vec![0.0; m],
        psi: vec![0.0; m],
        r: vec![0.0; m],
        ap: vec![0.0; m],
        psip: vec![0.0; m],
        rp: vec![0.0; m],
        app: vec![0.0; m],
        psipp: vec![0.0; m],
        rpp: vec![0.0; m],
    };
    let shift = (c2 / c1).ln();
    for (i, &t) in mesh.nodes().iter().enumerate() {
        let sig = 1.0 / (1.0 + (-t).exp());
        c.a[i] = ln_k + ln_g(t);
        // share of the e^{(N-l)t} term in q11
        let wv = 1.0 / (1.0 + ((c1 / c2).ln() - g * t).exp());
        c.ap[i] = l + (n - 2.0 * l) * wv - n * sig;
        c.psi[i] = -(4.0f64.ln() + 2.0 * ln_k + (c1 * c2).ln()) - n * t + 2.0 * n * softplus(t);
        c.psip[i] = -n + 2.0 * n * sig;
        c.psipp[i] = 2.0 * n * fs_weight(t);
        let u = 0.5 * (g * t + shift);
        let th = u.tanh();
        c.r[i] = th;
        c.rp[i] = 0.5 * g * (1.0 - th * th);
        c.rpp[i] = -0.5 * g * g * th * (1.0 - th * th);
        c.app[i] = (n - 2.0 * l).powi(2) * wv * (1.0 - wv) - n * fs_weight(t);
    }
    c
}

/// The guess as a matrix profile (see [`background_initial_guess_chart`]).
pub fn background_initial_guess(params: &ModelParams, mesh: &Mesh) -> SymmetricMatrixProfile {
    background_initial_guess_chart(params, mesh).to_matrix_profile()
}

/// Solves the background equation `(q^-1 q')' = (V0/2)(E q - tau I) w(t)`.
pub fn solve_background(
    params: &ModelParams,
    mesh: &Mesh,
    controls: &SolveControls,
) -> Result<BackgroundFields> {
    if mesh.half_width() < 20.0 {
        return Err(Error::Mesh(format!(
            "background solve needs T >= 20 (got {})",
            mesh.half_width()
        )));
    }
    let p0 = params.with_s(0.0)?;
    let reference = Reference::new(&p0, mesh);
    let problem = ChartProblem::background(p0, mesh, &reference);
    let guess = background_initial_guess_chart(&p0, mesh);
    let z0 = problem.offsets(&guess.a, &guess.psi, &guess.r);
    let system = discretize(&problem, mesh, controls.order);
    let (z, report) = damped_newton(&system, z0, controls)?;
    let chart = problem.chart_profile(&z);
    let q0 = chart.to_matrix_profile();
    q0.validate()?;
    let tau = params.tau();
    if let Some(i) = (0..mesh.len()).find(|&i| q0.q11[i] > tau * (1.0 + 1e-6)) {
        return Err(Error::Background(format!(
            "q11 = {} exceeds tau = {tau} at t = {}",
            q0.q11[i],
            mesh.t(i)
        )));
    }
    let n = params.nf();
    let ln_detg0: Vec<f64> = mesh
        .nodes()
        .iter()
        .zip(&chart.psi)
        .map(|(&t, &psi)| -psi + 2.0 * n * softplus(t) - n * t - 4f64.ln())
        .collect();
    let detg0 = ln_detg0.iter().map(|v| v.exp()).collect();
    let ell: Vec<f64> = ln_detg0.iter().map(|v| v / n).collect();
    let weights: Vec<f64> = mesh.nodes().iter().map(|&t| fs_weight(t)).collect();
    let num: Vec<f64> = ell.iter().zip(&weights).map(|(e, w)| e * w).collect();
    let u0_offset = -mesh.integrate(&num) / mesh.integrate(&weights);
    let u0 = ell.iter().map(|e| e + u0_offset).collect();
    let u0prime = mesh
        .nodes()
        .iter()
        .zip(&chart.psip)
        .map(|(&t, &psip)| -psip / n + (t / 2.0).tanh())
        .collect();
    Ok(BackgroundFields {
        params: p0,
        mesh: mesh.clone(),
        q0,
        psi0: chart.psi.clone(),
        detg0,
        ln_detg0,
        u0,
        u0prime,
        u0_offset,
        residual_norm: report.residual,
        newton_iterations: report.iterations,
        chart,
    })
}

/// `u0` by double trapezoid quadrature of
/// `u0'' = [2 - (V0/N)(tau - q11/2)] w(t)` with `u0'(-T) = 0` and zero
/// `w`-weighted mean. Fails when `|u0'(T)|` exceeds `100 * tol_bc`, which
/// signals that `q11` does not satisfy the degree identity.
pub fn compute_u0(
    params: &ModelParams,
    q11: &[f64],
    mesh: &Mesh,
    tol_bc: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = params.nf();
    let (tau, v0) = (params.tau(), params.v0());
    let f: Vec<f64> = mesh
        .nodes()
        .iter()
        .zip(q11)
        .map(|(&t, &q)| (2.0 - (v0 / n) * (tau - q / 2.0)) * fs_weight(t))
        .collect();
    let up = trapezoid_cumulative(mesh, &f);
    let end = up[up.len() - 1];
    if end.abs() > 100.0 * tol_bc {
        return Err(Error::Background(format!(
            "u0'(T) = {end:.6e} does not vanish; the profile violates the degree identity"
        )));
    }
    let mut u = trapezoid_cumulative(mesh, &up);
    let w: Vec<f64> = mesh.nodes().iter().map(|&t| fs_weight(t)).collect();
    let uw: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a * b).collect();
    let mean = mesh.integrate(&uw) / mesh.integrate(&w);
    for v in &mut u {
        *v -= mean;
    }
    Ok((u, up))
}

fn trapezoid_cumulative(mesh: &Mesh, f: &[f64]) -> Vec<f64> {
    let h = mesh.spacing();
    let mut out = vec![0.0; f.len()];
    for i in 1..f.len() {
        out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    }
    out
}
