//! Runs the identity suite, the shooting cross-check and the openness
//! witness on one solution.

use gravortex::background::solve_background;
use gravortex::bvp::SolveControls;
use gravortex::diagnostics::{identity_suite, openness_witness, shooting_crosscheck, SuiteTolerances};
use gravortex::mesh::Mesh;
use gravortex::params::{validate_params, RawParams};
use gravortex::system::solve_gravitating;

fn main() -> gravortex::Result<()> {
    let params = validate_params(&RawParams::new(3, 1, 1.0, 7.0))?;
    let mesh = Mesh::uniform(40.0, 2001)?;
    let controls = SolveControls::default();
    let bg = solve_background(&params, &mesh, &controls)?;
    let (sol, _) = solve_gravitating(&params, &bg, &mesh, &controls)?;

    let report = identity_suite(&sol, &SuiteTolerances::default())?;
    println!("a = {:.3e}, b = {:.12}, c = {:.12}, V = {:.12}", report.a, report.b, report.c, report.v_out);
    for (name, value) in &report.residuals {
        println!("  residual {name:<22} {value:.3e}");
    }
    for (name, ok) in &report.checks {
        println!("  check    {name:<22} {ok}");
    }
    for (name, ok) in &report.claims {
        println!("  claim    {name:<22} {ok}");
    }
    println!("shooting deviation on [-5, 5]: {:.3e}", shooting_crosscheck(&sol, (-5.0, 5.0))?);
    let w = openness_witness(&sol)?;
    println!(
        "symmetrized Jacobian: smallest eigenvalue {:.6}, {} negative of {}",
        w.smallest_eigenvalue, w.negative_count, w.dimension
    );
    Ok(())
}
