//! The gravitating system: continuation in `s` from the background to the
//! coupled problem, and in `lambda` at `s = 1`.

use serde::Serialize;

use crate::background::BackgroundFields;
use crate::bvp::{
    continue_parameter, damped_newton, discretize, sup_norm, ContinuationControls, NewtonReport,
    SolveControls,
};
use crate::chart::{with_unfolding, without_unfolding, ChartProblem, Reference};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::params::ModelParams;
use crate::profile::{ChartProfile, SymmetricMatrixProfile};

/// Solution of the gravitating system at `s = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct GravSolution {
    pub params: ModelParams,
    pub mesh: Mesh,
    pub q: SymmetricMatrixProfile,
    pub psi: Vec<f64>,
    pub psip: Vec<f64>,
    pub residual_norm: f64,
    /// `Lambda(t) = lambda_s(t) exp(-2 alpha q11 - psi/N)`.
    pub coeff: Vec<f64>,
    /// `lambda_s(t)` itself (constant at `s = 1`).
    pub lambda_s: Vec<f64>,
    /// Value of the unfolding parameter at convergence (zero in exact
    /// arithmetic on the untruncated line).
    pub unfolding: f64,
    #[serde(skip)]
    pub(crate) chart: ChartProfile,
}

impl GravSolution {
    /// Rebuilds a solution at `s = 1` from nodal values, e.g. read back from
    /// a profile file. `lambda_s` is the constant coefficient. Derivatives
    /// are recomputed on the mesh and the discrete residual is re-evaluated.
    pub fn from_nodal(
        params: &ModelParams,
        mesh: &Mesh,
        q11: &[f64],
        x: &[f64],
        psi: &[f64],
        lambda_s: f64,
    ) -> Result<Self> {
        let m = mesh.len();
        if q11.len() != m || x.len() != m || psi.len() != m {
            return Err(Error::Mesh(format!("profile has {} rows, mesh has {m} nodes", q11.len())));
        }
        if let Some(i) = (0..m).find(|&i| !(q11[i] > 0.0) || !psi[i].is_finite()) {
            return Err(Error::Inadmissible(format!(
                "q11 = {} at t = {} is not positive",
                q11[i],
                mesh.t(i)
            )));
        }
        if !(lambda_s > 0.0) {
            return Err(Error::Inadmissible(format!("lambda_s = {lambda_s} is not positive")));
        }
        let params = params.with_s(1.0)?;
        let a: Vec<f64> = q11.iter().map(|v| v.ln()).collect();
        let r: Vec<f64> = x.iter().zip(q11).map(|(x, q)| x / q).collect();
        let reference = Reference::new(&params, mesh);
        // Coefficient written with no lambda shift: ell = ln lambda_s.
        let unshifted = params.with_lambda(1.0)?;
        let ell = vec![lambda_s.ln(); m];
        let problem = ChartProblem::gravitating(unshifted, mesh, &reference, ell.clone());
        let z = problem.offsets(&a, psi, &r);
        let system = discretize(&problem, mesh, crate::mesh::Order::Fourth);
        let residual = sup_norm(&system.residual(&z));
        let chart = problem.chart_profile(&z);
        let mut sol = assemble_solution(unshifted, mesh, &ell, chart, residual, 0.0);
        sol.params = params;
        // keep the stored values bit for bit rather than their chart round trip
        sol.q.q11 = q11.to_vec();
        sol.q.x = x.to_vec();
        sol.psi = psi.to_vec();
        Ok(sol)
    }

    pub fn chart(&self) -> &ChartProfile {
        &self.chart
    }

    pub fn center(&self) -> usize {
        self.mesh.center()
    }

    pub fn lambda(&self) -> f64 {
        self.params.lambda()
    }

    /// Sup-norm distance between the matrix entries of two solutions on the
    /// same mesh.
    pub fn distance(&self, other: &GravSolution) -> f64 {
        profile_distance(&self.q, &other.q)
    }
}

/// Sup-norm distance between the entries `(q11, x, q22)` of two profiles.
pub fn profile_distance(p: &SymmetricMatrixProfile, q: &SymmetricMatrixProfile) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..p.len().min(q.len()) {
        worst = worst
            .max((p.q11[i] - q.q11[i]).abs())
            .max((p.x[i] - q.x[i]).abs())
            .max((p.q22[i] - q.q22[i]).abs());
    }
    worst
}

/// Record of the `s`-path.
#[derive(Debug, Clone, Serialize)]
pub struct PathRecord {
    pub accepted: Vec<f64>,
    pub rejected_steps: usize,
    /// Largest `q11` over all accepted steps.
    pub max_q11: f64,
    /// Residual after the final solve at `s = 1`.
    pub final_residual: f64,
}

/// Node-wise `(lambda_s, Lambda)` for a chart profile.
fn coefficients(
    params: &ModelParams,
    ell: &[f64],
    chart: &ChartProfile,
) -> (Vec<f64>, Vec<f64>) {
    let n = params.nf();
    let lam_pow = params.s() * params.lambda().ln();
    let lambda_s: Vec<f64> = ell.iter().map(|e| (e + lam_pow).exp()).collect();
    let coeff = (0..chart.len())
        .map(|i| {
            (ell[i] + lam_pow - 2.0 * params.alpha() * chart.a[i].exp() - chart.psi[i] / n).exp()
        })
        .collect();
    (lambda_s, coeff)
}

pub(crate) fn assemble_solution(
    params: ModelParams,
    mesh: &Mesh,
    ell: &[f64],
    chart: ChartProfile,
    residual_norm: f64,
    unfolding: f64,
) -> GravSolution {
    let (lambda_s, coeff) = coefficients(&params, ell, &chart);
    GravSolution {
        params,
        mesh: mesh.clone(),
        q: chart.to_matrix_profile(),
        psi: chart.psi.clone(),
        psip: chart.psip.clone(),
        residual_norm,
        coeff,
        lambda_s,
        unfolding,
        chart,
    }
}

/// Root of `psi'` (the minimum of the convex `psi`), by linear interpolation
/// between the bracketing nodes.
pub(crate) fn psi_minimum(mesh: &Mesh, psip: &[f64]) -> f64 {
    for i in 0..psip.len() - 1 {
        if psip[i] <= 0.0 && psip[i + 1] > 0.0 {
            let w = -psip[i] / (psip[i + 1] - psip[i]);
            return mesh.t(i) + w * mesh.spacing();
        }
    }
    0.0
}

/// Profile `t -> chart(t + t0)`, extended beyond the mesh with the
/// asymptotic slopes.
pub(crate) fn translate_chart(
    params: &ModelParams,
    mesh: &Mesh,
    chart: &ChartProfile,
    t0: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (n, l, g) = (params.nf(), params.lf(), params.rate_gap());
    let big_t = mesh.half_width();
    let m = mesh.len();
    let mut out = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for (i, &t) in mesh.nodes().iter().enumerate() {
        let u = t + t0;
        let (a, psi, r) = if u < -big_t {
            let d = u + big_t;
            (
                chart.a[0] + l * d,
                chart.psi[0] - n * d,
                -1.0 + (1.0 + chart.r[0]) * (g * d).exp(),
            )
        } else if u > big_t {
            let d = u - big_t;
            (
                chart.a[m - 1] - l * d,
                chart.psi[m - 1] + n * d,
                1.0 - (1.0 - chart.r[m - 1]) * (-g * d).exp(),
            )
        } else {
            let u = u.clamp(-big_t, big_t);
            (
                mesh.interpolate(&chart.a, u).expect("inside mesh"),
                mesh.interpolate(&chart.psi, u).expect("inside mesh"),
                mesh.interpolate(&chart.r, u).expect("inside mesh"),
            )
        };
        out.0[i] = a;
        out.1[i] = psi;
        out.2[i] = r;
    }
    out
}

/// Drives the `s`-path and the final pinned solve at `s = 1`.
///
/// At `s = 1` the equations no longer depend on `t` explicitly, so the
/// solution is fixed only up to translation on the untruncated line. The path
/// is therefore followed to `s_end < 1` and the last step is taken with the
/// translation pinned by `psi'(0) = 0`.
pub struct GravitatingSolver<'a> {
    pub params: ModelParams,
    pub bg: &'a BackgroundFields,
    pub controls: SolveControls,
    pub steps: ContinuationControls,
    reference: Reference,
}

impl<'a> GravitatingSolver<'a> {
    pub fn new(params: &ModelParams, bg: &'a BackgroundFields, controls: SolveControls) -> Result<Self> {
        if bg.params.n() != params.n()
            || bg.params.l() != params.l()
            || bg.params.tau() != params.tau()
            || bg.params.v0() != params.v0()
        {
            return Err(Error::InvalidParams(
                "background was solved for different parameters".into(),
            ));
        }
        controls.validate()?;
        Ok(Self {
            params: *params,
            bg,
            controls,
            steps: ContinuationControls {
                initial_step: 0.1,
                max_step: 0.25,
                min_step: 1e-5,
                growth: 1.5,
            },
            reference: Reference::new(params, &bg.mesh),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.bg.mesh
    }

    fn problem_at(&self, s: f64, lambda: f64) -> Result<ChartProblem<'_>> {
        let p = self.params.with_lambda(lambda)?.with_s(s)?;
        Ok(ChartProblem::gravitating(
            p,
            self.mesh(),
            &self.reference,
            self.bg.ln_coefficient_base(s),
        ))
    }

    fn path_bound(&self, s: f64, z: &[f64], max_q11: &mut f64) -> Result<()> {
        let tau = self.params.tau();
        let worst = z
            .chunks(3)
            .zip(&self.reference.a)
            .map(|(c, a)| (a + c[0]).exp())
            .fold(0.0, f64::max);
        *max_q11 = max_q11.max(worst);
        if worst > tau * (1.0 + 1e-6) {
            return Err(Error::PathBound {
                s,
                q11_max: worst,
                tau,
            });
        }
        Ok(())
    }

    /// Continuation in `s` from `seed` (a chart profile, solved at `s = 0` or
    /// merely close to it) to `s_end < 1`, unpinned.
    fn s_path_from(&self, seed: &ChartProfile, s_end: f64) -> Result<(Vec<f64>, PathRecord)> {
        let lambda = self.params.lambda();
        let start = self.problem_at(0.0, lambda)?;
        let mut z0 = start.offsets(&seed.a, &seed.psi, &seed.r);
        // make sure the path starts from a solution at s = 0
        let system = discretize(&start, self.mesh(), self.controls.order);
        if sup_norm(&system.residual(&z0)) > self.controls.tol_newton {
            z0 = damped_newton(&system, z0, &self.controls)?.0;
        }
        let mut max_q11 = 0.0;
        self.path_bound(0.0, &z0, &mut max_q11)?;
        let res = continue_parameter(
            |s| self.problem_at(s, lambda),
            self.mesh(),
            0.0,
            s_end,
            z0,
            &self.controls,
            &self.steps,
            |s, z| self.path_bound(s, z, &mut max_q11),
        )?;
        let record = PathRecord {
            accepted: res.snapshots.iter().map(|(s, _)| *s).collect(),
            rejected_steps: res.rejected_steps,
            max_q11,
            final_residual: res.report.residual,
        };
        Ok((res.y, record))
    }

    /// Pinned solve at `s = 1` from an unpinned offset vector at some `s`:
    /// the profile is translated so that the minimum of `psi` sits at `t = 0`.
    fn pinned_solve(
        &self,
        lambda: f64,
        seed_problem: &ChartProblem<'_>,
        z_seed: &[f64],
    ) -> Result<(GravSolution, NewtonReport)> {
        let chart = seed_problem.chart_profile(z_seed);
        let t0 = psi_minimum(self.mesh(), &chart.psip);
        let (a, psi, r) = translate_chart(&seed_problem.params, self.mesh(), &chart, t0);
        self.pinned_from_chart(lambda, &a, &psi, &r)
    }

    fn pinned_from_chart(
        &self,
        lambda: f64,
        a: &[f64],
        psi: &[f64],
        r: &[f64],
    ) -> Result<(GravSolution, NewtonReport)> {
        let problem = self.problem_at(1.0, lambda)?.pinned();
        let z0 = with_unfolding(&problem.offsets(a, psi, r));
        let system = discretize(&problem, self.mesh(), self.controls.order);
        let (z, report) = damped_newton(&system, z0, &self.controls)?;
        Ok((self.finish(lambda, &z, report.residual)?, report))
    }

    fn finish(&self, lambda: f64, z: &[f64], residual: f64) -> Result<GravSolution> {
        let (z3, mu) = without_unfolding(z, self.mesh().center());
        let plain = self.problem_at(1.0, lambda)?;
        let chart = plain.chart_profile(&z3);
        let ell = self.bg.ln_coefficient_base(1.0);
        Ok(assemble_solution(plain.params, self.mesh(), &ell, chart, residual, mu))
    }

    /// Full solve from the background.
    pub fn solve(&self) -> Result<(GravSolution, PathRecord)> {
        self.solve_from(&self.bg.chart)
    }

    /// Full solve from an arbitrary seed near the `s = 0` solution: `s`-path
    /// to `0.9`, then the pinned solve at `s = 1`. If the final step fails the
    /// path is pushed closer to `1` before retrying.
    pub fn solve_from(&self, seed: &ChartProfile) -> Result<(GravSolution, PathRecord)> {
        let lambda = self.params.lambda();
        let mut last_err = None;
        for s_end in [0.9, 0.99] {
            let (z, mut record) = self.s_path_from(seed, s_end)?;
            let seed_problem = self.problem_at(s_end, lambda)?;
            match self.pinned_solve(lambda, &seed_problem, &z) {
                Ok((sol, report)) => {
                    let max_q11 = sol.q.q11.iter().cloned().fold(0.0, f64::max);
                    record.max_q11 = record.max_q11.max(max_q11);
                    if max_q11 > self.params.tau() * (1.0 + 1e-6) {
                        return Err(Error::PathBound {
                            s: 1.0,
                            q11_max: max_q11,
                            tau: self.params.tau(),
                        });
                    }
                    record.accepted.push(1.0);
                    record.final_residual = report.residual;
                    return Ok((sol, record));
                }
                Err(e @ (Error::NonConvergence { .. } | Error::Singular(_) | Error::Inadmissible(_))) => {
                    last_err = Some(e)
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::ContinuationStuck {
            last_good: 0.99,
            target: 1.0,
            reason: last_err.map(|e| e.to_string()).unwrap_or_default(),
        })
    }

    /// Continuation in `ln lambda` at `s = 1` from a solution.
    pub fn continue_lambda(&self, from: &GravSolution, lambda_to: f64) -> Result<GravSolution> {
        let lambda_from = from.params.lambda();
        let start = self.problem_at(1.0, lambda_from)?.pinned();
        let z0 = with_unfolding(&start.offsets(&from.chart.a, &from.chart.psi, &from.chart.r));
        let steps = ContinuationControls {
            initial_step: 0.25,
            max_step: 1.0,
            min_step: 1e-4,
            growth: 1.5,
        };
        let res = continue_parameter(
            |theta| Ok(self.problem_at(1.0, theta.exp())?.pinned()),
            self.mesh(),
            lambda_from.ln(),
            lambda_to.ln(),
            z0,
            &self.controls,
            &steps,
            |_, _| Ok(()),
        )?;
        self.finish(lambda_to, &res.y, res.report.residual)
    }

    /// Follows the path backwards from a solution at `s = 1` down to `s = 0`
    /// and returns the profile reached there.
    pub fn reverse_path(&self, sol: &GravSolution) -> Result<SymmetricMatrixProfile> {
        let lambda = sol.params.lambda();
        let top = self.problem_at(1.0, lambda)?;
        let z1 = top.offsets(&sol.chart.a, &sol.chart.psi, &sol.chart.r);
        let mut max_q11 = 0.0;
        let res = continue_parameter(
            |s| self.problem_at(s, lambda),
            self.mesh(),
            1.0,
            0.0,
            z1,
            &self.controls,
            &self.steps,
            |s, z| self.path_bound(s, z, &mut max_q11),
        )?;
        let bottom = self.problem_at(0.0, lambda)?;
        Ok(bottom.chart_profile(&res.y).to_matrix_profile())
    }
}

/// Solves the gravitating system at `s = 1` for `params.lambda()`, starting
/// the continuation from the background.
pub fn solve_gravitating(
    params: &ModelParams,
    bg: &BackgroundFields,
    mesh: &Mesh,
    controls: &SolveControls,
) -> Result<(GravSolution, PathRecord)> {
    if mesh != &bg.mesh {
        return Err(Error::Mesh("background was solved on a different mesh".into()));
    }
    GravitatingSolver::new(params, bg, *controls)?.solve()
}
