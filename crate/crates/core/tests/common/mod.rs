#![allow(dead_code)]

use std::sync::OnceLock;

use gravortex::background::{solve_background, BackgroundFields};
use gravortex::bvp::SolveControls;
use gravortex::mesh::Mesh;
use gravortex::params::{validate_params, ModelParams, RawParams};
use gravortex::system::{solve_gravitating, GravSolution, PathRecord};

pub const HALF_WIDTH: f64 = 40.0;
pub const NODES: usize = 2001;

pub fn params(v0: f64, lambda: f64) -> ModelParams {
    validate_params(&RawParams::new(3, 1, 1.0, v0).with_lambda(lambda)).unwrap()
}

pub fn mesh() -> Mesh {
    Mesh::uniform(HALF_WIDTH, NODES).unwrap()
}

pub fn background_on(v0: f64, mesh: &Mesh) -> BackgroundFields {
    solve_background(&params(v0, 1.0), mesh, &SolveControls::default()).unwrap()
}

pub struct Reference {
    pub bg: BackgroundFields,
    pub sol: GravSolution,
    pub path: PathRecord,
}

/// `N = 3, l = 1, tau = 1, V0 = 7, lambda = 1` on the standard mesh, solved
/// once per test binary.
pub fn reference() -> &'static Reference {
    static CELL: OnceLock<Reference> = OnceLock::new();
    CELL.get_or_init(|| {
        let mesh = mesh();
        let bg = background_on(7.0, &mesh);
        let (sol, path) =
            solve_gravitating(&params(7.0, 1.0), &bg, &mesh, &SolveControls::default()).unwrap();
        Reference { bg, sol, path }
    })
}
