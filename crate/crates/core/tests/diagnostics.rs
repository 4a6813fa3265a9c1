mod common;

use gravortex::diagnostics::{
    compute_volume, decay_rates, extract_abc, identity_suite, openness_witness, probe_nodes,
    shooting_crosscheck, SuiteTolerances,
};
use gravortex::Error;

#[test]
fn reference_passes_every_check() {
    let sol = &common::reference().sol;
    let rep = identity_suite(sol, &SuiteTolerances::default()).unwrap();
    assert!(rep.consistent(), "failed: {:?}", rep.failed_checks());
    assert_eq!(rep.mesh_nodes, 2001);
}

#[test]
fn x_vanishes_at_the_centre() {
    // t -> -t, x -> -x maps solutions to solutions, so the unique solution
    // has x(0) = 0 rather than a definite sign.
    let sol = &common::reference().sol;
    let rep = identity_suite(sol, &SuiteTolerances::default()).unwrap();
    let xmax = sol.q.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(rep.x0.abs() < 1e-10 * xmax, "x(0) = {}", rep.x0);
    assert_eq!(rep.claims.get("x0_negative"), Some(&false));
}

#[test]
fn abc_forms_agree_and_satisfy_the_bounds() {
    let sol = &common::reference().sol;
    let abc = extract_abc(sol).unwrap();
    assert!(abc.discrepancy < 1e-4);
    let (a, b, c) = (abc.matrix.a, abc.matrix.b, abc.matrix.c);
    assert!(c > 0.0 && b > 0.0);
    for v in [c + a, c - a] {
        assert!(v > -1.0 && v < 2.0);
    }
    let v = compute_volume(sol).unwrap();
    assert!((c - (2.0 - v / 4.0)).abs() < 1e-4);
    assert!(abc.trace.abs() < 1e-8, "trace {}", abc.trace);
}

#[test]
fn decay_rates_match_the_smooth_extension() {
    let rates = decay_rates(&common::reference().sol);
    assert!(rates.left_ok() && rates.right_ok(), "{rates:?}");
    assert!((rates.left - 1.0).abs() < 1e-3 && (rates.right + 1.0).abs() < 1e-3);
}

#[test]
fn probes_span_tails_and_core() {
    let mesh = common::mesh();
    let p = probe_nodes(&mesh);
    let t: Vec<f64> = p.iter().map(|&i| mesh.t(i)).collect();
    assert_eq!(t, vec![-20.0, -10.0, 0.0, 10.0, 20.0]);
}

#[test]
fn shooting_tracks_the_solution() {
    let sol = &common::reference().sol;
    let d = shooting_crosscheck(sol, (-5.0, 5.0)).unwrap();
    assert!(d < 1e-5, "{d}");
    assert!(matches!(shooting_crosscheck(sol, (1.0, 5.0)), Err(Error::Domain(_))));
    assert!(matches!(shooting_crosscheck(sol, (-12.0, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn perturbed_solution_fails_the_residual_check() {
    let sol = common::reference().sol.clone();
    let mut q11 = sol.q.q11.clone();
    q11[1000] *= 1.001;
    let c = sol.lambda_s[1000];
    let bad = gravortex::system::GravSolution::from_nodal(&sol.params, &sol.mesh, &q11, &sol.q.x, &sol.psi, c).unwrap();
    let rep = identity_suite(&bad, &SuiteTolerances::default()).unwrap();
    assert_eq!(rep.checks.get("residual"), Some(&false));
    assert!(!rep.consistent());
}

#[test]
fn symmetrized_jacobian_is_indefinite() {
    let w = openness_witness(&common::reference().sol).unwrap();
    assert_eq!(w.dimension, 3 * 1999);
    assert!(w.smallest_eigenvalue < 0.0 && w.negative_count > 0, "{w:?}");
}
