//! Rebuilds the bundle metric and the metric on the sphere from a solution,
//! and writes the profile table to a temporary directory.

use std::f64::consts::PI;

use gravortex::background::solve_background;
use gravortex::bvp::SolveControls;
use gravortex::geometry::{conformal_factor_and_curvature, gauss_bonnet, reconstruct_h};
use gravortex::io::{write_solution, SolutionTable};
use gravortex::mesh::Mesh;
use gravortex::params::{validate_params, RawParams};
use gravortex::system::solve_gravitating;

fn main() -> gravortex::Result<()> {
    let params = validate_params(&RawParams::new(3, 1, 1.0, 7.0))?;
    let mesh = Mesh::uniform(40.0, 2001)?;
    let controls = SolveControls::default();
    let bg = solve_background(&params, &mesh, &controls)?;
    let (sol, _) = solve_gravitating(&params, &bg, &mesh, &controls)?;

    for t in [-4.0, 0.0, 0.5, 4.0] {
        let h = reconstruct_h(&sol, t)?;
        println!(
            "t = {t:>4}: H11 = {:.6e}, H22 = {:.6e}, H12 = {:.6e} e^({} i theta), |phi|^2 = {:.10}",
            h.h11, h.h22, h.h12, h.h12_winding, h.norm_phi_sq()
        );
    }
    let curv = conformal_factor_and_curvature(&sol);
    println!("Gauss-Bonnet / 4 pi      {:.12}", gauss_bonnet(&sol, &curv) / (4.0 * PI));
    println!("curvature routes differ  {:.3e}", curv.discrepancy());

    let dir = std::env::temp_dir().join("gravortex-geometry-example");
    std::fs::create_dir_all(&dir).map_err(|e| gravortex::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("sol.csv");
    write_solution(&path, &sol)?;
    let back = SolutionTable::read(&path)?.to_solution(&params, &path)?;
    println!("re-read solution residual {:.3e} ({})", back.residual_norm, path.display());
    Ok(())
}
