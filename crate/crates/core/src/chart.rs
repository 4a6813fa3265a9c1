//! The reduced system in chart variables, as a [`BvpProblem`].
//!
//! Unknowns are offsets `z = (a, psi, r) - reference` from a smooth reference
//! profile with the correct asymptotic slopes, so the nodal unknowns stay of
//! order one. With `L` the coefficient `Lambda(t)` the equations read
//!
//! ```text
//! a''   = L (e^a - tau) + e^{2a + psi} r'^2
//! psi'' = L (2 tau - e^a)
//! r''   = -(2 a' + psi') r'
//! ```
//!
//! For the gravitating system `L = exp(ell(t) - 2 alpha e^a - psi~ / N)` where
//! `psi~ = psi - shift` absorbs the factor `lambda^s`; for the background
//! `L = (V0/2) w(t)` is fixed.
//!
//! At `s = 1` the equations are autonomous and the truncated problem is
//! translation invariant up to exponentially small boundary effects. The
//! pinned variant adds an unfolding unknown `mu` (stored at every node, with
//! `mu'' = 0` and `mu' = 0` at the ends) multiplying a forcing term, and
//! replaces its equation at `t = 0` with the phase condition `psi'(0) = 0`.

use crate::bvp::{BoundaryOperator, BvpProblem};
use crate::mesh::Mesh;
use crate::params::{fs_weight, ln_cosh, ModelParams};
use crate::profile::ChartProfile;

pub(crate) const A: usize = 0;
pub(crate) const PSI: usize = 1;
pub(crate) const R: usize = 2;
pub(crate) const MU: usize = 3;

/// Upper bound on `|a|` and `|psi - reference|` for admissible states.
const STATE_LIMIT: f64 = 500.0;

/// Smooth reference profile: `a = -2l ln cosh(t/2)`, `psi = 2N ln cosh(t/2)`,
/// `r = tanh((N - 2l) t / 2)`, with exact derivatives.
#[derive(Debug, Clone)]
pub(crate) struct Reference {
    pub a: Vec<f64>,
    pub ap: Vec<f64>,
    pub app: Vec<f64>,
    pub psi: Vec<f64>,
    pub psip: Vec<f64>,
    pub psipp: Vec<f64>,
    pub r: Vec<f64>,
    pub rp: Vec<f64>,
    pub rpp: Vec<f64>,
}

impl Reference {
    pub fn new(params: &ModelParams, mesh: &Mesh) -> Self {
        let (n, l, g) = (params.nf(), params.lf(), params.rate_gap());
        let m = mesh.len();
        let mut rf = Reference {
            a: vec![0.0; m],
            ap: vec![0.0; m],
            app: vec![0.0; m],
            psi: vec![0.0; m],
            psip: vec![0.0; m],
            psipp: vec![0.0; m],
            r: vec![0.0; m],
            rp: vec![0.0; m],
            rpp: vec![0.0; m],
        };
        for (i, &t) in mesh.nodes().iter().enumerate() {
            let lc = ln_cosh(t / 2.0);
            let th = (t / 2.0).tanh();
            let sech2 = 1.0 - th * th;
            rf.a[i] = -2.0 * l * lc;
            rf.ap[i] = -l * th;
            rf.app[i] = -0.5 * l * sech2;
            rf.psi[i] = 2.0 * n * lc;
            rf.psip[i] = n * th;
            rf.psipp[i] = 0.5 * n * sech2;
            let u = g * t / 2.0;
            let tu = u.tanh();
            let s2 = 1.0 - tu * tu;
            rf.r[i] = tu;
            rf.rp[i] = 0.5 * g * s2;
            rf.rpp[i] = -0.5 * g * g * tu * s2;
        }
        rf
    }

    /// `1 + r` and `1 - r` of the reference without cancellation.
    fn r_gaps(&self, params: &ModelParams, t: f64) -> (f64, f64) {
        let u = params.rate_gap() * t;
        // 1 + tanh(u/2) = 2 / (1 + e^{-u}), 1 - tanh(u/2) = 2 / (1 + e^{u})
        (2.0 / (1.0 + (-u).exp()), 2.0 / (1.0 + u.exp()))
    }
}

/// How the coefficient `Lambda(t)` depends on the state.
#[derive(Debug, Clone)]
pub(crate) enum Coefficient {
    /// `Lambda = weight(t)`, independent of the state.
    Fixed { weight: Vec<f64> },
    /// `Lambda = exp(ell(t) - 2 alpha e^a - psi~ / N)`.
    Gravitating { ell: Vec<f64>, shift: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct Pin {
    pub center: usize,
    pub weight: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct ChartProblem<'a> {
    pub params: ModelParams,
    pub mesh: &'a Mesh,
    pub reference: &'a Reference,
    pub coeff: Coefficient,
    pub pin: Option<Pin>,
}

/// Nodal state rebuilt from offsets: `(a, psi~, r)` and derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NodeState {
    pub a: f64,
    pub ap: f64,
    pub app: f64,
    pub psi: f64,
    pub psip: f64,
    pub psipp: f64,
    pub rp: f64,
    pub rpp: f64,
}

impl<'a> ChartProblem<'a> {
    pub fn background(params: ModelParams, mesh: &'a Mesh, reference: &'a Reference) -> Self {
        let half = params.v0() / 2.0;
        let weight = mesh.nodes().iter().map(|&t| half * fs_weight(t)).collect();
        Self {
            params,
            mesh,
            reference,
            coeff: Coefficient::Fixed { weight },
            pin: None,
        }
    }

    pub fn gravitating(
        params: ModelParams,
        mesh: &'a Mesh,
        reference: &'a Reference,
        ell: Vec<f64>,
    ) -> Self {
        let shift = params.s() * params.nf() * params.lambda().ln();
        Self {
            params,
            mesh,
            reference,
            coeff: Coefficient::Gravitating { ell, shift },
            pin: None,
        }
    }

    /// Adds the unfolding unknown. The forcing `mu * g(t)` enters the `psi`
    /// equation with the odd profile `g = -w'`; an even profile lies in the
    /// range of the linearization and leaves the bordered system singular.
    pub fn pinned(mut self) -> Self {
        let weight = self
            .mesh
            .nodes()
            .iter()
            .map(|&t| fs_weight(t) * (t / 2.0).tanh())
            .collect();
        self.pin = Some(Pin {
            center: self.mesh.center(),
            weight,
        });
        self
    }

    /// Difference `psi - psi~`.
    pub fn shift(&self) -> f64 {
        match &self.coeff {
            Coefficient::Fixed { .. } => 0.0,
            Coefficient::Gravitating { shift, .. } => *shift,
        }
    }

    pub fn state(&self, i: usize, z: &[f64], zp: &[f64], zpp: &[f64]) -> NodeState {
        let rf = self.reference;
        NodeState {
            a: rf.a[i] + z[A],
            ap: rf.ap[i] + zp[A],
            app: rf.app[i] + zpp[A],
            psi: rf.psi[i] + z[PSI],
            psip: rf.psip[i] + zp[PSI],
            psipp: rf.psipp[i] + zpp[PSI],
            rp: rf.rp[i] + zp[R],
            rpp: rf.rpp[i] + zpp[R],
        }
    }

    /// `(Lambda, dLambda/da, dLambda/dpsi)` at node `i`.
    pub fn lambda(&self, i: usize, a: f64, psi_tilde: f64) -> (f64, f64, f64) {
        match &self.coeff {
            Coefficient::Fixed { weight } => (weight[i], 0.0, 0.0),
            Coefficient::Gravitating { ell, .. } => {
                let ea = a.exp();
                let lam = (ell[i] - 2.0 * self.params.alpha() * ea - psi_tilde / self.params.nf()).exp();
                (
                    lam,
                    -2.0 * self.params.alpha() * ea * lam,
                    -lam / self.params.nf(),
                )
            }
        }
    }

    /// Chart profile (with unshifted `psi`) from an offset vector.
    pub fn chart_profile(&self, z: &[f64]) -> ChartProfile {
        let d = self.dim();
        let m = self.mesh.len();
        let order = crate::mesh::Order::Fourth;
        let shift = self.shift();
        let comp = |k: usize| -> Vec<f64> { (0..m).map(|i| z[i * d + k]).collect() };
        let (za, zpsi, zr) = (comp(A), comp(PSI), comp(R));
        let rf = self.reference;
        let add = |base: &[f64], off: &[f64], c: f64| -> Vec<f64> {
            base.iter().zip(off).map(|(b, o)| b + o + c).collect()
        };
        ChartProfile {
            a: add(&rf.a, &za, 0.0),
            psi: add(&rf.psi, &zpsi, shift),
            r: add(&rf.r, &zr, 0.0),
            ap: add(&rf.ap, &self.mesh.derivative(&za, order), 0.0),
            psip: add(&rf.psip, &self.mesh.derivative(&zpsi, order), 0.0),
            rp: add(&rf.rp, &self.mesh.derivative(&zr, order), 0.0),
            app: add(&rf.app, &self.mesh.second_derivative(&za, order), 0.0),
            psipp: add(&rf.psipp, &self.mesh.second_derivative(&zpsi, order), 0.0),
            rpp: add(&rf.rpp, &self.mesh.second_derivative(&zr, order), 0.0),
        }
    }

    /// Offset vector (without the unfolding component) from chart values.
    pub fn offsets(&self, a: &[f64], psi: &[f64], r: &[f64]) -> Vec<f64> {
        let m = self.mesh.len();
        let shift = self.shift();
        let rf = self.reference;
        let mut z = vec![0.0; 3 * m];
        for i in 0..m {
            z[3 * i + A] = a[i] - rf.a[i];
            z[3 * i + PSI] = psi[i] - shift - rf.psi[i];
            z[3 * i + R] = r[i] - rf.r[i];
        }
        z
    }

    fn boundary(&self, left: bool) -> BoundaryOperator {
        let d = self.dim();
        let (n, l, g) = (self.params.nf(), self.params.lf(), self.params.rate_gap());
        let i = if left { 0 } else { self.mesh.len() - 1 };
        let t = self.mesh.t(i);
        let rf = self.reference;
        let sign = if left { 1.0 } else { -1.0 };
        let (plus, minus) = rf.r_gaps(&self.params, t);
        let mut a = vec![0.0; d * d];
        let mut b = vec![0.0; d * d];
        let mut rhs = vec![0.0; d];
        // a' = +-l
        b[A * d + A] = 1.0;
        rhs[A] = sign * l - rf.ap[i];
        // psi' = -+N
        b[PSI * d + PSI] = 1.0;
        rhs[PSI] = -sign * n - rf.psip[i];
        // left: r' = g (1 + r); right: r' = g (1 - r)
        b[R * d + R] = 1.0;
        a[R * d + R] = -sign * g;
        rhs[R] = if left { g * plus } else { g * minus } - rf.rp[i];
        if d > MU {
            b[MU * d + MU] = 1.0;
        }
        BoundaryOperator::new(d, a, b, rhs)
    }
}

impl BvpProblem for ChartProblem<'_> {
    fn dim(&self) -> usize {
        if self.pin.is_some() {
            4
        } else {
            3
        }
    }

    fn residual(&self, i: usize, _t: f64, z: &[f64], zp: &[f64], zpp: &[f64], out: &mut [f64]) {
        let s = self.state(i, z, zp, zpp);
        let tau = self.params.tau();
        let (lam, _, _) = self.lambda(i, s.a, s.psi);
        let ea = s.a.exp();
        let psi_full = s.psi + self.shift();
        let e = (s.rp * (s.a + 0.5 * psi_full).exp()).powi(2);
        out[A] = s.app - lam * (ea - tau) - e;
        out[PSI] = s.psipp - lam * (2.0 * tau - ea);
        out[R] = s.rpp + (2.0 * s.ap + s.psip) * s.rp;
        if let Some(pin) = &self.pin {
            out[PSI] += z[MU] * pin.weight[i];
            out[MU] = if i == pin.center { s.psip } else { zpp[MU] };
        }
    }

    fn jacobian(
        &self,
        i: usize,
        _t: f64,
        z: &[f64],
        zp: &[f64],
        zpp: &[f64],
        dy: &mut [f64],
        dyp: &mut [f64],
        dypp: &mut [f64],
    ) {
        let d = self.dim();
        dy.fill(0.0);
        dyp.fill(0.0);
        dypp.fill(0.0);
        let s = self.state(i, z, zp, zpp);
        let tau = self.params.tau();
        let (lam, lam_a, lam_psi) = self.lambda(i, s.a, s.psi);
        let ea = s.a.exp();
        let psi_full = s.psi + self.shift();
        let big_e = (2.0 * s.a + psi_full).exp();
        let e = (s.rp * (s.a + 0.5 * psi_full).exp()).powi(2);
        // a equation
        dypp[A * d + A] = 1.0;
        dy[A * d + A] = -lam_a * (ea - tau) - lam * ea - 2.0 * e;
        dy[A * d + PSI] = -lam_psi * (ea - tau) - e;
        dyp[A * d + R] = -2.0 * big_e * s.rp;
        // psi equation
        dypp[PSI * d + PSI] = 1.0;
        dy[PSI * d + A] = -lam_a * (2.0 * tau - ea) + lam * ea;
        dy[PSI * d + PSI] = -lam_psi * (2.0 * tau - ea);
        // r equation
        dypp[R * d + R] = 1.0;
        dyp[R * d + R] = 2.0 * s.ap + s.psip;
        dyp[R * d + A] = 2.0 * s.rp;
        dyp[R * d + PSI] = s.rp;
        if let Some(pin) = &self.pin {
            dy[PSI * d + MU] = pin.weight[i];
            if i == pin.center {
                dyp[MU * d + PSI] = 1.0;
            } else {
                dypp[MU * d + MU] = 1.0;
            }
        }
    }

    fn left_boundary(&self) -> BoundaryOperator {
        self.boundary(true)
    }

    fn right_boundary(&self) -> BoundaryOperator {
        self.boundary(false)
    }

    fn admissible(&self, i: usize, _t: f64, z: &[f64]) -> bool {
        let a = self.reference.a[i] + z[A];
        z.iter().all(|v| v.is_finite())
            && a.abs() < STATE_LIMIT
            && z[PSI].abs() < STATE_LIMIT
            && self.lambda(i, a, self.reference.psi[i] + z[PSI]).0.is_finite()
    }
}

/// Appends the unfolding component (zero) to a three-component vector.
pub(crate) fn with_unfolding(z: &[f64]) -> Vec<f64> {
    z.chunks(3)
        .flat_map(|c| [c[0], c[1], c[2], 0.0])
        .collect()
}

/// Drops the unfolding component; returns the vector and the value of `mu`
/// at the centre node.
pub(crate) fn without_unfolding(z: &[f64], center: usize) -> (Vec<f64>, f64) {
    let mu = z[center * 4 + MU];
    (z.chunks(4).flat_map(|c| [c[0], c[1], c[2]]).collect(), mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvp::discretize;
    use crate::mesh::Order;
    use crate::params::{validate_params, RawParams};
    use approx::assert_relative_eq;

    fn setup() -> (ModelParams, Mesh) {
        let p = validate_params(&RawParams::new(3, 1, 1.0, 7.0)).unwrap();
        (p, Mesh::uniform(10.0, 101).unwrap())
    }

    fn check_jacobian(problem: &ChartProblem<'_>, z: &[f64]) {
        let sys = discretize(problem, problem.mesh, Order::Fourth);
        let jac = sys.jacobian(z);
        let n = z.len();
        for j in (0..n).step_by(7) {
            let h = 1e-6 * (1.0 + z[j].abs());
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[j] += h;
            zm[j] -= h;
            let fp = sys.residual(&zp);
            let fm = sys.residual(&zm);
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                let an = jac.get(i, j);
                assert!(
                    (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                    "entry ({i},{j}): fd {fd} analytic {an}"
                );
            }
        }
    }

    fn wiggle(n: usize, d: usize) -> Vec<f64> {
        (0..n)
            .map(|k| 0.1 * ((k as f64) * 0.37).sin() + if k % d == 1 { 0.3 } else { 0.0 })
            .collect()
    }

    #[test]
    fn background_jacobian_matches_differences() {
        let (p, mesh) = setup();
        let rf = Reference::new(&p, &mesh);
        let prob = ChartProblem::background(p, &mesh, &rf);
        check_jacobian(&prob, &wiggle(3 * mesh.len(), 3));
    }

    #[test]
    fn gravitating_and_pinned_jacobians_match_differences() {
        let (p, mesh) = setup();
        let p = p.with_lambda(2.0).unwrap().with_s(0.6).unwrap();
        let rf = Reference::new(&p, &mesh);
        let ell: Vec<f64> = mesh.nodes().iter().map(|t| 0.2 * t.cos()).collect();
        let prob = ChartProblem::gravitating(p, &mesh, &rf, ell);
        check_jacobian(&prob, &wiggle(3 * mesh.len(), 3));
        check_jacobian(&prob.clone().pinned(), &wiggle(4 * mesh.len(), 4));
    }

    #[test]
    fn reference_satisfies_its_own_boundary_slopes() {
        let (p, _) = setup();
        let mesh = Mesh::uniform(40.0, 2001).unwrap();
        let rf = Reference::new(&p, &mesh);
        let prob = ChartProblem::background(p, &mesh, &rf);
        let sys = discretize(&prob, &mesh, Order::Fourth);
        let r = sys.residual(&vec![0.0; 3 * mesh.len()]);
        // boundary rows: reference slopes differ from the exact rates by O(e^{-T})
        for k in 0..3 {
            assert!(r[k].abs() < 1e-12, "left row {k}: {}", r[k]);
            assert!(r[r.len() - 3 + k].abs() < 1e-12, "right row {k}");
        }
        assert_relative_eq!(rf.psip[2000], 3.0, max_relative = 1e-15);
    }
}
