//! Tabulates V(lambda) over six decades.

use gravortex::background::solve_background;
use gravortex::bvp::SolveControls;
use gravortex::mesh::Mesh;
use gravortex::params::{validate_params, RawParams};
use gravortex::volume::{log_grid, sweep_lambda};

fn main() -> gravortex::Result<()> {
    let params = validate_params(&RawParams::new(3, 1, 1.0, 7.0))?;
    let (lo, hi) = params.admissible_interval();
    let mesh = Mesh::uniform(40.0, 2001)?;
    let controls = SolveControls::default();
    let bg = solve_background(&params, &mesh, &controls)?;
    let table = sweep_lambda(&params, &bg, &log_grid(1e-3, 1e3, 13)?, &controls)?;
    println!("admissible volumes ({lo}, {hi})");
    println!("{:>12} {:>16} {:>14} {:>12} suite", "lambda", "V", "c", "q11(0)");
    for r in &table.rows {
        println!(
            "{:>12.4e} {:>16.12} {:>14.10} {:>12.4e} {}",
            r.lambda, r.volume, r.c, r.q11_center, r.suite_ok
        );
    }
    Ok(())
}
