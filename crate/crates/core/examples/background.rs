//! Solves the background problem and prints the degree identity.

use gravortex::background::solve_background;
use gravortex::bvp::SolveControls;
use gravortex::mesh::Mesh;
use gravortex::params::{validate_params, RawParams};

fn main() -> gravortex::Result<()> {
    let params = validate_params(&RawParams::new(3, 1, 1.0, 7.0))?;
    let mesh = Mesh::uniform(40.0, 2001)?;
    let bg = solve_background(&params, &mesh, &SolveControls::default())?;
    let (left, right) = bg.end_slopes();
    println!("Newton residual     {:.3e} after {} iterations", bg.residual_norm, bg.newton_iterations);
    println!("degree integral     {:.12} (expected {})", bg.degree_integral(), 2 * params.n());
    println!("psi0'(-T), psi0'(T) {left:.8}, {right:.8}");
    let ic = mesh.center();
    println!("q0 at t = 0         q11 = {:.10}, q22 = {:.10}", bg.q0.q11[ic], bg.q0.q22[ic]);
    Ok(())
}
