//! Solves the scalar Liouville problem with the collocation engine and
//! compares with its closed form.

use gravortex::bvp::{damped_newton, discretize, SolveControls};
use gravortex::liouville::LiouvilleProblem;
use gravortex::mesh::{Mesh, Order};

fn main() -> gravortex::Result<()> {
    let problem = LiouvilleProblem::new(3.0, 10.0);
    for nodes in [101, 201, 401, 801] {
        let mesh = Mesh::uniform(10.0, nodes)?;
        let system = discretize(&problem, &mesh, Order::Fourth);
        let guess: Vec<f64> = mesh.nodes().iter().map(|t| 1.0 + 1.4 * t.abs()).collect();
        let (y, report) = damped_newton(&system, guess, &SolveControls::default())?;
        let err = mesh
            .nodes()
            .iter()
            .zip(&y)
            .map(|(&t, v)| (v - problem.exact(t)).abs())
            .fold(0.0, f64::max);
        println!("{nodes:>5} nodes: {} Newton steps, max error {err:.3e}", report.iterations);
    }
    Ok(())
}
