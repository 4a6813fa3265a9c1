//! Finds the coupling lambda that realizes a prescribed volume.

use gravortex::background::solve_background;
use gravortex::bvp::SolveControls;
use gravortex::diagnostics::{identity_suite, SuiteTolerances};
use gravortex::mesh::Mesh;
use gravortex::params::{validate_params, RawParams};
use gravortex::volume::{find_lambda_for_volume, VolumeSearch};

fn main() -> gravortex::Result<()> {
    let target = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7.0);
    let params = validate_params(&RawParams::new(3, 1, 1.0, 7.0))?;
    let mesh = Mesh::uniform(40.0, 2001)?;
    let controls = SolveControls::default();
    let bg = solve_background(&params, &mesh, &controls)?;
    let found = find_lambda_for_volume(&params, &bg, target, &controls, &VolumeSearch::default())?;
    let report = identity_suite(&found.solution, &SuiteTolerances::default())?;
    println!("lambda* = {:.12} after {} solves", found.lambda, found.evaluations);
    println!("V       = {:.12}", found.volume);
    println!("c       = {:.12} (N - l - tau V / 4 = {:.12})", report.c, 2.0 - found.volume / 4.0);
    println!("checks  {}", if report.consistent() { "all pass" } else { "some fail" });
    Ok(())
}
