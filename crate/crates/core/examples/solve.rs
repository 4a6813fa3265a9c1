//! Follows the s-path from the background and solves at s = 1, lambda = 1.

use gravortex::background::solve_background;
use gravortex::bvp::SolveControls;
use gravortex::diagnostics::compute_volume;
use gravortex::mesh::Mesh;
use gravortex::params::{validate_params, RawParams};
use gravortex::system::solve_gravitating;

fn main() -> gravortex::Result<()> {
    let lambda = std::env::args().nth(1).map_or(Ok(1.0), |s| s.parse::<f64>()).unwrap_or(1.0);
    let params = validate_params(&RawParams::new(3, 1, 1.0, 7.0).with_lambda(lambda))?;
    let mesh = Mesh::uniform(40.0, 2001)?;
    let controls = SolveControls::default();
    let bg = solve_background(&params, &mesh, &controls)?;
    let (sol, path) = solve_gravitating(&params, &bg, &mesh, &controls)?;
    println!("accepted s values {:?}", path.accepted);
    println!("max q11 on path   {:.10}", path.max_q11);
    println!("final residual    {:.3e}", sol.residual_norm);
    println!("volume V          {:.12}", compute_volume(&sol)?);
    println!("q11(0)            {:.12}", sol.q.q11[sol.center()]);
    Ok(())
}
