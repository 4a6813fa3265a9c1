//! Metric on the sphere and the bundle metric `H` rebuilt from a solution.
//!
//! With the frame `P = [[phi1, -phi1], [phi2, phi2]]`, `phi1 = z^l`,
//! `phi2 = z^(N-l)`, the bundle metric is `H = (P^dag)^-1 q P^-1`. Every entry
//! is a radial function times a fixed phase, so only the radial parts are
//! stored and the phase of `H12` is reported as an integer winding.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Order;
use crate::params::ln_cosh;
use crate::system::GravSolution;

/// `H` at one value of `t`. The full entry is `H12 = h12 e^{i k theta}`
/// with `k = h12_winding`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HermitianSample {
    pub t: f64,
    pub h11: f64,
    pub h22: f64,
    pub h12: f64,
    pub h12_winding: i64,
    /// `ln det H`.
    pub ln_det: f64,
    n: u32,
    l: u32,
}

impl HermitianSample {
    pub fn det(&self) -> f64 {
        self.ln_det.exp()
    }

    /// `det H (1 + e^t)^(2N)`, which stays bounded when `H` extends smoothly
    /// over the point at infinity.
    pub fn det_extended(&self) -> f64 {
        let n = f64::from(self.n);
        (self.ln_det + 2.0 * n * (ln_cosh(self.t / 2.0) + 2f64.ln()) + n * self.t).exp()
    }

    /// `|phi|_H^2 = |z|^{2l} H11 + |z|^{2(N-l)} H22 + 2 |z|^N h12`.
    pub fn norm_phi_sq(&self) -> f64 {
        let (n, l) = (f64::from(self.n), f64::from(self.l));
        (l * self.t).exp() * self.h11
            + ((n - l) * self.t).exp() * self.h22
            + 2.0 * (0.5 * n * self.t).exp() * self.h12
    }
}

/// Reconstructs `H(t)` by cubic interpolation of the chart variables.
pub fn reconstruct_h(sol: &GravSolution, t: f64) -> Result<HermitianSample> {
    let mesh = &sol.mesh;
    let big_t = mesh.half_width();
    if !(t.abs() < big_t) {
        return Err(Error::Domain(format!("t = {t} must lie in the open interval (-{big_t}, {big_t})")));
    }
    let chart = sol.chart();
    let a = mesh.interpolate(&chart.a, t)?;
    let psi = mesh.interpolate(&chart.psi, t)?;
    let r = mesh.interpolate(&chart.r, t)?;
    Ok(sample(sol, t, a, psi, r))
}

/// `H` at mesh node `i`, without interpolation.
pub fn reconstruct_h_at_node(sol: &GravSolution, i: usize) -> Result<HermitianSample> {
    let m = sol.mesh.len();
    if i == 0 || i + 1 >= m {
        return Err(Error::Domain(format!("node {i} is not interior to a {m}-node mesh")));
    }
    let c = sol.chart();
    Ok(sample(sol, sol.mesh.t(i), c.a[i], c.psi[i], c.r[i]))
}

fn sample(sol: &GravSolution, t: f64, a: f64, psi: f64, r: f64) -> HermitianSample {
    let (n, l) = (sol.params.n(), sol.params.l());
    let (nf, lf) = (f64::from(n), f64::from(l));
    let ea = a.exp();
    let em = (-psi - a).exp();
    let u = ea * (1.0 - r) * (1.0 - r) + em;
    let v = ea * (1.0 + r) * (1.0 + r) + em;
    let d = ea * (1.0 - r * r) - em;
    HermitianSample {
        t,
        h11: 0.25 * u * (-lf * t).exp(),
        h22: 0.25 * v * (-(nf - lf) * t).exp(),
        h12: 0.25 * d * (-0.5 * nf * t).exp(),
        h12_winding: 2 * i64::from(l) - i64::from(n),
        ln_det: -psi - 4f64.ln() - nf * t,
        n,
        l,
    }
}

/// Conformal factor of the metric and its Gauss curvature, on the mesh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureProfiles {
    /// Area density in `(t, theta)`: the area element is `f dt dtheta`.
    pub f: Vec<f64>,
    /// Curvature from the right-hand side of the metric equation.
    pub k_equation: Vec<f64>,
    /// Curvature `-(ln f)''/f` by finite differences. `None` within two
    /// nodes of either end, and in the tails where rounding in the stencil,
    /// amplified by `1/f`, would exceed `h^2`.
    pub k_metric: Vec<Option<f64>>,
}

impl CurvatureProfiles {
    /// Largest `|k_equation - k_metric|` where both exist.
    pub fn discrepancy(&self) -> f64 {
        self.k_equation
            .iter()
            .zip(&self.k_metric)
            .filter_map(|(a, b)| b.map(|b| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn conformal_factor_and_curvature(sol: &GravSolution) -> CurvatureProfiles {
    let mesh = &sol.mesh;
    let p = &sol.params;
    let (alpha, tau) = (p.alpha(), p.tau());
    let m = mesh.len();
    let f: Vec<f64> = sol.coeff.iter().map(|c| 2.0 * c).collect();
    let c = sol.chart();
    // q11'' = q11 (a'' + a'^2) with a'' taken from the equation; the matrix
    // form would need det q, which cancels to nothing in the tails.
    let k_equation = (0..m)
        .map(|i| {
            let q11 = c.a[i].exp();
            let app = sol.coeff[i] * (q11 - tau) + (2.0 * c.a[i] + c.psi[i]).exp() * c.rp[i] * c.rp[i];
            let q11pp = q11 * (app + c.ap[i] * c.ap[i]);
            alpha * (2.0 * q11pp / f[i] + tau * (2.0 * tau - q11))
        })
        .collect();
    let ln_f: Vec<f64> = f.iter().map(|v| v.ln()).collect();
    let d2 = mesh.second_derivative(&ln_f, Order::Fourth);
    let h2 = mesh.spacing().powi(2);
    let noise = 16.0 * f64::EPSILON * ln_f.iter().fold(0.0f64, |m, v| m.max(v.abs())) / h2;
    let k_metric = (0..m)
        .map(|i| (i >= 2 && i + 2 < m && noise / f[i] <= h2).then(|| -d2[i] / f[i]))
        .collect();
    CurvatureProfiles {
        f,
        k_equation,
        k_metric,
    }
}

/// `int K dA` over the sphere, using the curvature from the equation.
pub fn gauss_bonnet(sol: &GravSolution, curv: &CurvatureProfiles) -> f64 {
    let kf: Vec<f64> = curv.k_equation.iter().zip(&curv.f).map(|(k, f)| k * f).collect();
    2.0 * PI * sol.mesh.integrate(&kf)
}

/// One row of the exported profile table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub q11: f64,
    pub x: f64,
    pub q22: f64,
    pub psi: f64,
    pub f: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub normphi2: f64,
}

/// Geometry at every interior node; the two end nodes are dropped because
/// `H` is only defined on the open interval.
pub fn profile_rows(sol: &GravSolution) -> Result<Vec<ProfileRow>> {
    let curv = conformal_factor_and_curvature(sol);
    let m = sol.mesh.len();
    (1..m - 1)
        .map(|i| {
            let h = reconstruct_h_at_node(sol, i)?;
            Ok(ProfileRow {
                t: h.t,
                q11: sol.q.q11[i],
                x: sol.q.x[i],
                q22: sol.q.q22[i],
                psi: sol.psi[i],
                f: curv.f[i],
                k: curv.k_equation[i],
                normphi2: h.norm_phi_sq(),
            })
        })
        .collect()
}
