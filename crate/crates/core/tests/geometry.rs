mod common;

use std::f64::consts::PI;

use gravortex::diagnostics::compute_volume;
use gravortex::geometry::{
    conformal_factor_and_curvature, gauss_bonnet, profile_rows, reconstruct_h, reconstruct_h_at_node,
};
use gravortex::Error;

#[test]
fn h_is_positive_and_reproduces_q11() {
    let sol = &common::reference().sol;
    for i in 1..sol.mesh.len() - 1 {
        let h = reconstruct_h_at_node(sol, i).unwrap();
        assert!(h.h11 > 0.0 && h.h22 > 0.0);
        assert!(h.det() > 0.0);
        assert!((h.norm_phi_sq() - sol.q.q11[i]).abs() < 1e-10, "node {i}");
        assert!(h.norm_phi_sq() <= 1.0);
    }
}

#[test]
fn det_h_extends_smoothly_over_the_poles() {
    let sol = &common::reference().sol;
    let vals: Vec<f64> = (1..sol.mesh.len() - 1)
        .map(|i| reconstruct_h_at_node(sol, i).unwrap().det_extended())
        .collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo > 1.0 && hi < 100.0, "[{lo}, {hi}]");
}

#[test]
fn det_h_matches_det_q() {
    let sol = &common::reference().sol;
    for t in [-3.3, 0.0, 1.7] {
        let h = reconstruct_h(sol, t).unwrap();
        let i = sol.mesh.nearest(t);
        if (sol.mesh.t(i) - t).abs() < 1e-12 {
            let det_q = sol.q.det(i);
            assert!((h.det() - det_q / (4.0 * (3.0 * t).exp())).abs() < 1e-12 * h.det());
        }
        // H11 H22 - |H12|^2
        let direct = h.h11 * h.h22 - h.h12 * h.h12;
        assert!((direct - h.det()).abs() < 1e-9 * h.det(), "t = {t}");
        assert_eq!(h.h12_winding, -1);
    }
}

#[test]
fn reconstruction_outside_the_mesh_is_an_error() {
    let sol = &common::reference().sol;
    assert!(matches!(reconstruct_h(sol, 40.0), Err(Error::Domain(_))));
    assert!(matches!(reconstruct_h(sol, -41.0), Err(Error::Domain(_))));
    assert!(reconstruct_h(sol, 39.99).is_ok());
}

#[test]
fn area_curvature_and_gauss_bonnet() {
    let sol = &common::reference().sol;
    let curv = conformal_factor_and_curvature(sol);
    assert!(curv.f.iter().all(|&f| f > 0.0));
    let area = sol.mesh.integrate(&curv.f);
    assert!((area - compute_volume(sol).unwrap()).abs() < 1e-8);
    let gb = gauss_bonnet(sol, &curv);
    assert!((gb / (4.0 * PI) - 1.0).abs() < 1e-4, "{gb}");
    let h = sol.mesh.spacing();
    assert!(curv.discrepancy() < 10.0 * h * h, "{}", curv.discrepancy());
    let m = sol.mesh.len();
    assert!(curv.k_metric[0].is_none() && curv.k_metric[1].is_none() && curv.k_metric[m - 2].is_none());
    assert!(curv.k_metric[m / 2].is_some());
}

#[test]
fn profile_rows_cover_the_interior() {
    let sol = &common::reference().sol;
    let rows = profile_rows(sol).unwrap();
    assert_eq!(rows.len(), sol.mesh.len() - 2);
    assert_eq!(rows[0].t, sol.mesh.t(1));
    assert!(rows.iter().all(|r| (r.normphi2 - r.q11).abs() < 1e-10));
}
