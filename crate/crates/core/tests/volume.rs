mod common;

use gravortex::bvp::SolveControls;
use gravortex::diagnostics::{identity_suite, SuiteTolerances};
use gravortex::volume::{find_lambda_for_volume, log_grid, sweep_lambda, VolumeSearch};
use gravortex::Error;

#[test]
fn grid_is_log_spaced_with_exact_ends() {
    let g = log_grid(1e-3, 1e3, 7).unwrap();
    assert_eq!(g.first(), Some(&1e-3));
    assert_eq!(g.last(), Some(&1e3));
    assert!((g[3] - 1.0).abs() < 1e-12);
    assert!(log_grid(1.0, 1.0, 3).is_err());
    assert!(log_grid(1e-3, 1e3, 1).is_err());
}

#[test]
fn sweep_stays_in_the_window_and_approaches_its_ends() {
    let r = common::reference();
    let grid = log_grid(1e-3, 1e3, 9).unwrap();
    let table = sweep_lambda(&r.sol.params, &r.bg, &grid, &SolveControls::default()).unwrap();
    assert_eq!(table.rows.len(), 9);
    for (row, &l) in table.rows.iter().zip(&grid) {
        assert_eq!(row.lambda, l);
        assert!(row.volume > 6.0 && row.volume < 8.0, "{row:?}");
        assert!(row.c > 0.0 && row.c_volume_residual < 1e-4 && row.suite_ok, "{row:?}");
    }
    let first = &table.rows[0];
    let last = &table.rows[8];
    assert!(first.volume >= 7.84 && last.volume <= 6.12);
    let mid = &table.rows[4];
    assert!(last.q11_center < 0.1 * mid.q11_center);
    assert!(table.rows.windows(2).all(|w| w[0].volume > w[1].volume));
    assert!(table.increasing_toward_zero());
}

#[test]
fn sweep_is_independent_of_the_thread_count() {
    let r = common::reference();
    let grid = log_grid(0.5, 2.0, 3).unwrap();
    let run = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| sweep_lambda(&r.sol.params, &r.bg, &grid, &SolveControls::default()).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn finds_lambda_for_volume_seven() {
    let r = common::reference();
    let found =
        find_lambda_for_volume(&r.sol.params, &r.bg, 7.0, &SolveControls::default(), &VolumeSearch::default())
            .unwrap();
    assert!((found.volume - 7.0).abs() < 1e-4);
    let rep = identity_suite(&found.solution, &SuiteTolerances::default()).unwrap();
    assert!((rep.c - 0.25).abs() < 1e-4, "c = {}", rep.c);
    assert!(rep.consistent());
    // V(1) > 7, so the crossing lies above lambda = 1
    assert!(found.lambda > 1.0);
}

#[test]
fn boundary_targets_are_rejected() {
    let r = common::reference();
    for target in [6.0, 8.0, 5.0, f64::NAN] {
        let res = find_lambda_for_volume(&r.sol.params, &r.bg, target, &SolveControls::default(), &VolumeSearch::default());
        assert!(matches!(res, Err(Error::Domain(_))), "target {target}");
    }
}

#[test]
fn narrow_search_window_reports_failure() {
    let r = common::reference();
    let search = VolumeSearch {
        lambda_min: 1.0,
        lambda_max: 1.0,
        ..VolumeSearch::default()
    };
    let res = find_lambda_for_volume(&r.sol.params, &r.bg, 6.5, &SolveControls::default(), &search);
    assert!(matches!(res, Err(Error::SearchFailure(_))));
}
