//! Acceptance run on the reference instance `N = 3, l = 1, tau = 1, V0 = 7`,
//! `T = 40`, 2001 nodes. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 3, 6 and 8 fail on this instance. The solution is symmetric under
//! `t -> -t, x -> -x`, so `x(0) = 0` instead of being negative (3, and 6
//! through it), and the symmetrized Jacobian has negative eigenvalues (8).
//! The test asserts that exactly these criteria fail, so any regression in
//! another criterion, or a change in the known failures, is caught.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use gravortex::background::{background_initial_guess_chart, solve_background};
use gravortex::bvp::{damped_newton, discretize, SolveControls};
use gravortex::diagnostics::{
    compute_volume, extract_abc, identity_suite, openness_witness, shooting_crosscheck,
    DiagnosticsReport, SuiteTolerances,
};
use gravortex::geometry::{conformal_factor_and_curvature, gauss_bonnet};
use gravortex::liouville::LiouvilleProblem;
use gravortex::mesh::{Mesh, Order};
use gravortex::qform::{jacobian_blocks, residual_field};
use gravortex::system::{profile_distance, solve_gravitating, GravSolution, GravitatingSolver};
use gravortex::volume::{find_lambda_for_volume, VolumeSearch};

const KNOWN_FAILURES: [u32; 3] = [3, 6, 8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let bg = &common::reference().bg;
    let degree = bg.degree_integral();
    let (l, r) = bg.end_slopes();
    let pass = (degree - 6.0).abs() < 1e-6 && (l + 3.0).abs() < 1e-4 && (r - 3.0).abs() < 1e-4;
    outcome(
        pass,
        format!("degree integral {degree:.12}, psi0'(-T) = {l:.8}, psi0'(T) = {r:.8}"),
    )
}

fn criterion_2() -> Outcome {
    let path = &common::reference().path;
    let reached = path.accepted.last() == Some(&1.0);
    let pass = reached && path.final_residual < 1e-10 && path.max_q11 <= 1.0 + 1e-8;
    outcome(
        pass,
        format!(
            "accepted s = {:?}, residual {:.3e}, max q11 {:.10}",
            path.accepted, path.final_residual, path.max_q11
        ),
    )
}

/// Parts of criterion 3 that hold, and whether `x(0) < 0` holds.
fn suite_parts(sol: &GravSolution, rep: &DiagnosticsReport) -> (bool, bool, String) {
    let h = sol.mesh.spacing();
    let res = |k: &str| rep.residuals[k];
    let zero_x = res("zero_x_integral") < 1e-6;
    let norm = res("normalization") < 1e-6;
    let bochner = res("bochner") < 10.0 * h * h;
    let first = res("first_integral") < 1e-6;
    let increasing = rep.checks["x_over_q11_increasing"];
    let x0_negative = rep.x0 < 0.0 && rep.claims["x0_negative"];
    let detail = format!(
        "zero-x {:.2e} {}, normalization {:.2e} {}, Bochner {:.2e} (< {:.1e}) {}, first integral {:.2e} {}, x/q11 increasing {}, x(0) = {:.2e} negative {}",
        res("zero_x_integral"), zero_x,
        res("normalization"), norm,
        res("bochner"), 10.0 * h * h, bochner,
        res("first_integral"), first,
        increasing,
        rep.x0, x0_negative
    );
    (zero_x && norm && bochner && first && increasing, x0_negative, detail)
}

fn criterion_3() -> Outcome {
    let sol = &common::reference().sol;
    let rep = identity_suite(sol, &SuiteTolerances::default()).unwrap();
    let (rest, x0_negative, detail) = suite_parts(sol, &rep);
    outcome(rest && x0_negative, detail)
}

fn criterion_4() -> Outcome {
    let sol = &common::reference().sol;
    let abc = extract_abc(sol).unwrap();
    let (a, b, c) = (abc.matrix.a, abc.matrix.b, abc.matrix.c);
    let v = compute_volume(sol).unwrap();
    let bounds = [c + a, c - a].iter().all(|&s| s > -1.0 && s < 2.0);
    let pass = abc.discrepancy < 1e-4 && bounds && c > 0.0 && b > 0.0 && (c - (2.0 - v / 4.0)).abs() < 1e-4;
    outcome(
        pass,
        format!(
            "a = {a:.2e}, b = {b:.10}, c = {c:.10}, forms differ {:.2e}, c - (2 - V/4) = {:.2e}",
            abc.discrepancy,
            c - (2.0 - v / 4.0)
        ),
    )
}

fn direct(lambda: f64) -> GravSolution {
    let r = common::reference();
    let p = common::params(7.0, lambda);
    solve_gravitating(&p, &r.bg, &r.bg.mesh, &SolveControls::default()).unwrap().0
}

fn criterion_5() -> Outcome {
    let small = direct(1e-3);
    let large = direct(1e3);
    let v_small = compute_volume(&small).unwrap();
    let v_large = compute_volume(&large).unwrap();
    let q0_one = common::reference().sol.q.q11[1000];
    let q0_large = large.q.q11[large.center()];
    let pass = (7.84..8.0).contains(&v_small) && v_large > 6.0 && v_large <= 6.12 && q0_large < 0.1 * q0_one;
    outcome(
        pass,
        format!(
            "V(1e-3) = {v_small:.10}, V(1e3) = {v_large:.10}, q11(0) ratio {:.3e}",
            q0_large / q0_one
        ),
    )
}

fn criterion_6() -> Outcome {
    let r = common::reference();
    let found = find_lambda_for_volume(
        &r.sol.params,
        &r.bg,
        7.0,
        &SolveControls::default(),
        &VolumeSearch::default(),
    )
    .unwrap();
    let rep = identity_suite(&found.solution, &SuiteTolerances::default()).unwrap();
    let (rest, x0_negative, detail) = suite_parts(&found.solution, &rep);
    let hit = (found.volume - 7.0).abs() < 1e-4;
    outcome(
        hit && rest && x0_negative,
        format!(
            "lambda* = {:.10}, |V - 7| = {:.2e}; criterion 3 on it: {detail}",
            found.lambda,
            (found.volume - 7.0).abs()
        ),
    )
}

fn criterion_7() -> Outcome {
    let r = common::reference();
    let solver = GravitatingSolver::new(&r.sol.params, &r.bg, SolveControls::default()).unwrap();
    let seed = background_initial_guess_chart(&r.bg.params, &r.bg.mesh);
    let (other, _) = solver.solve_from(&seed).unwrap();
    let seeds = r.sol.distance(&other);
    let back = solver.reverse_path(&r.sol).unwrap();
    let reverse = profile_distance(&back, &r.bg.q0);
    outcome(
        seeds < 1e-6 && reverse < 1e-8,
        format!("two seeds differ {seeds:.2e}, reversed path misses the seed by {reverse:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let w = openness_witness(&common::reference().sol).unwrap();
    outcome(
        w.positive(),
        format!(
            "smallest eigenvalue {:.6}, {} negative of {}",
            w.smallest_eigenvalue, w.negative_count, w.dimension
        ),
    )
}

/// Largest condition number of `q` at which the raw `q` form is compared.
/// Beyond it `det q` is dominated by cancellation and finite differences of
/// the residual are rounding noise.
const MAX_CONDITION: f64 = 1e3;

fn max_jacobian_error(sol: &GravSolution) -> (f64, usize) {
    let p = sol.params;
    let q = &sol.q;
    let d2 = |v: &[f64]| sol.mesh.second_derivative(v, Order::Fourth);
    let (a2, b2, c2) = (d2(&q.q11), d2(&q.x), d2(&q.q22));
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in (25..sol.mesh.len() - 25).step_by(25) {
        let y = [q.q11[i], q.x[i], q.q22[i]];
        let det = y[0] * y[2] - y[1] * y[1];
        if (y[0] + y[2]).powi(2) / det > MAX_CONDITION {
            continue;
        }
        checked += 1;
        let yp = [q.q11p[i], q.xp[i], q.q22p[i]];
        let ypp = [a2[i], b2[i], c2[i]];
        let lam = sol.lambda_s[i];
        let (dq, dqp, dqpp) = jacobian_blocks(y, yp, lam, &p);
        let eval = |y: [f64; 3], yp: [f64; 3], ypp: [f64; 3]| {
            residual_field(y, yp, ypp, lam, &p).unwrap().as_array()
        };
        for c in 0..3 {
            let h = 1e-3 * det / (y[0] + y[2]);
            let bump = |v: [f64; 3], s: f64| {
                let mut w = v;
                w[c] += s;
                w
            };
            // fourth-order central differences
            let fd = |f: &dyn Fn(f64) -> [f64; 3]| {
                let (p1, m1, p2, m2) = (f(h), f(-h), f(2.0 * h), f(-2.0 * h));
                [0, 1, 2].map(|k| (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * h))
            };
            let blocks = [
                (dq, fd(&|s| eval(bump(y, s), yp, ypp))),
                (dqp, fd(&|s| eval(y, bump(yp, s), ypp))),
                (dqpp, fd(&|s| eval(y, yp, bump(ypp, s)))),
            ];
            for (an, num) in blocks {
                for r in 0..3 {
                    let scale = an[r * 3..r * 3 + 3].iter().fold(1e-3f64, |m, v| m.max(v.abs()));
                    let e = (an[r * 3 + c] - num[r]).abs() / scale;
                    worst = worst.max(e);
                }
            }
        }
    }
    (worst, checked)
}

fn criterion_9() -> Outcome {
    let problem = LiouvilleProblem::new(3.0, 10.0);
    let mesh = Mesh::uniform(10.0, 401).unwrap();
    let system = discretize(&problem, &mesh, Order::Fourth);
    let guess: Vec<f64> = mesh.nodes().iter().map(|t| 1.0 + 1.4 * t.abs()).collect();
    let (y, _) = damped_newton(&system, guess, &SolveControls::default()).unwrap();
    let liouville = mesh
        .nodes()
        .iter()
        .zip(&y)
        .map(|(&t, v)| (v - problem.exact(t)).abs())
        .fold(0.0, f64::max);
    let sol = &common::reference().sol;
    let shooting = shooting_crosscheck(sol, (-5.0, 5.0)).unwrap();
    let (jac, nodes) = max_jacobian_error(sol);
    outcome(
        liouville < 1e-6 && shooting < 1e-5 && jac < 1e-6,
        format!("Liouville error {liouville:.2e}, shooting deviation {shooting:.2e}, Jacobian vs differences {jac:.2e} at {nodes} nodes"),
    )
}

/// Residuals below this are rounding noise and cannot shrink further.
const NOISE_FLOOR: f64 = 1e-11;

fn criterion_10() -> Outcome {
    let coarse = &common::reference().sol;
    let fine_mesh = Mesh::uniform(common::HALF_WIDTH, 2 * common::NODES - 1).unwrap();
    let controls = SolveControls::default();
    let bg = solve_background(&common::params(7.0, 1.0), &fine_mesh, &controls).unwrap();
    let (fine, _) = solve_gravitating(&common::params(7.0, 1.0), &bg, &fine_mesh, &controls).unwrap();
    let tol = SuiteTolerances::default();
    let mut rc = identity_suite(coarse, &tol).unwrap().residuals;
    let mut rf = identity_suite(&fine, &tol).unwrap().residuals;
    let gb = |s: &GravSolution| (gauss_bonnet(s, &conformal_factor_and_curvature(s)) / (4.0 * PI) - 1.0).abs();
    rc.insert("gauss_bonnet".into(), gb(coarse));
    rf.insert("gauss_bonnet".into(), gb(&fine));
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, &c) in &rc {
        let f = rf[k];
        if c < NOISE_FLOOR && f < NOISE_FLOOR {
            parts.push(format!("{k} at rounding level ({c:.1e}, {f:.1e})"));
            continue;
        }
        let ratio = c / f;
        ok &= ratio >= 3.5;
        parts.push(format!("{k} x{ratio:.1}"));
    }
    let gb_ok = rc["gauss_bonnet"] < 1e-4;
    outcome(
        ok && gb_ok,
        format!("Gauss-Bonnet relative error {:.2e}; halving ratios: {}", rc["gauss_bonnet"], parts.join(", ")),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let mut failed = BTreeSet::new();
    for (k, run) in criteria {
        let o = run();
        println!("criterion {k:>2}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.insert(k);
        }
    }
    let known: BTreeSet<u32> = KNOWN_FAILURES.into_iter().collect();
    assert_eq!(failed, known, "failing criteria differ from the known set");
}
