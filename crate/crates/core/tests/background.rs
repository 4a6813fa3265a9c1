mod common;

use gravortex::background::{compute_u0, solve_background};
use gravortex::bvp::SolveControls;
use gravortex::diagnostics::background_shooting_crosscheck;
use gravortex::mesh::Mesh;
use gravortex::params::{fs_weight, softplus};
use gravortex::qform::lambda_s_coefficient;
use gravortex::Error;

#[test]
fn degree_identity_and_end_slopes() {
    let bg = &common::reference().bg;
    assert!((bg.degree_integral() - 6.0).abs() < 1e-6, "{}", bg.degree_integral());
    let (l, r) = bg.end_slopes();
    assert!((l + 3.0).abs() < 1e-6 && (r - 3.0).abs() < 1e-6, "{l} {r}");
    assert!(bg.residual_norm < 1e-10);
}

#[test]
fn q11_stays_below_tau() {
    let bg = &common::reference().bg;
    assert!(bg.q0.q11.iter().all(|&v| v > 0.0 && v <= 1.0));
}

#[test]
fn detg0_matches_its_defining_formula() {
    let bg = &common::reference().bg;
    for (i, &t) in bg.mesh.nodes().iter().enumerate().step_by(50) {
        // det g0 = det q0 (1 + e^t)^{2N} / (4 e^{Nt})
        let expect = -bg.psi0[i] + 6.0 * softplus(t) - 3.0 * t - 4f64.ln();
        assert!((bg.detg0[i].ln() - expect).abs() < 1e-12, "t = {t}");
    }
}

#[test]
fn u0_has_zero_weighted_mean_and_matches_quadrature() {
    let bg = &common::reference().bg;
    let mesh = &bg.mesh;
    let w: Vec<f64> = mesh.nodes().iter().map(|&t| fs_weight(t)).collect();
    let uw: Vec<f64> = bg.u0.iter().zip(&w).map(|(u, w)| u * w).collect();
    assert!(mesh.integrate(&uw).abs() < 1e-10);
    let (u0, u0p) = compute_u0(&bg.params, &bg.q0.q11, mesh, 1e-6).unwrap();
    let du = bg.u0.iter().zip(&u0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let dp = bg.u0prime.iter().zip(&u0p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(du < 1e-5 && dp < 1e-5, "{du} {dp}");
}

#[test]
fn coefficient_is_constant_at_s_one() {
    let r = common::reference();
    let p = r.sol.params;
    let at = |t: f64| lambda_s_coefficient(t, &p, &r.bg).unwrap();
    let c0 = at(0.0);
    for t in [-30.0, -7.3, 2.0, 19.9] {
        assert!((at(t) - c0).abs() < 1e-10 * c0, "t = {t}");
    }
    assert!((r.sol.lambda_s[0] - c0).abs() < 1e-10 * c0);
}

#[test]
fn shooting_reproduces_the_background() {
    let bg = &common::reference().bg;
    let dev = background_shooting_crosscheck(bg, (-5.0, 5.0)).unwrap();
    assert!(dev < 1e-5, "{dev}");
}

#[test]
fn short_meshes_are_rejected() {
    let mesh = Mesh::uniform(10.0, 401).unwrap();
    let err = solve_background(&common::params(7.0, 1.0), &mesh, &SolveControls::default());
    assert!(matches!(err, Err(Error::Mesh(_))));
}

#[test]
fn other_volumes_in_the_window_solve() {
    let mesh = common::mesh();
    for v0 in [6.2, 7.8] {
        let bg = common::background_on(v0, &mesh);
        assert!((bg.degree_integral() - 6.0).abs() < 1e-6, "V0 = {v0}");
    }
}
