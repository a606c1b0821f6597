//! Observability constant of a half-torus strip on the standard torus, by
//! Lanczos and by block inverse iteration, with a dense cross-check.

use std::f64::consts::PI;

use tslab::krylov::EigenMethod;
use tslab::observability::{
    dense_smallest_eigenvalue, observability_constant, Gramian, ObservationConfig, ObservationSetup, SolverOptions,
};
use tslab::torus::{Torus, TorusGeometry};
use tslab::weights::{build_weight, WeightSpec};

fn main() -> tslab::Result<()> {
    let torus = Torus::new(TorusGeometry::standard(32)?)?;
    let w = build_weight(&WeightSpec::Strip { x0: 0.0, x1: PI }, &torus)?;
    for horizon in [0.5, 1.0, 2.0] {
        let setup = ObservationSetup::new(&w, ObservationConfig::new(horizon, 50.0))?;
        let lz = observability_constant(&setup, &SolverOptions::default())?;
        let ip = observability_constant(&setup, &SolverOptions::default().with_method(EigenMethod::InversePower))?;
        let dense = dense_smallest_eigenvalue(&Gramian::new(&setup)?.assemble_dense());
        println!(
            "T = {horizon:3.1}  dim = {:3}  Nt = {:4}  lambda_min: lanczos {:.10}  inverse {:.10}  dense {:.10}  K = {:.4}",
            lz.dim, lz.setup.nodes, lz.lambda_min, ip.lambda_min, dense, lz.constant
        );
    }
    Ok(())
}
