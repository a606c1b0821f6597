//! Ingham's constant B(T) for the eigenvalues of the standard torus, and
//! the observability lower bound it certifies for a strip.

use std::f64::consts::{PI, TAU};

use tslab::inequalities::{ingham_chart, observability_from_ingham, sums_of_two_squares};
use tslab::observability::{observability_constant, ObservationConfig, ObservationSetup, SolverOptions};
use tslab::torus::{Torus, TorusGeometry};
use tslab::weights::{build_weight, WeightSpec};

fn main() -> tslab::Result<()> {
    let freqs: Vec<f64> = sums_of_two_squares(100).into_iter().map(|l| l as f64).collect();
    let horizons: Vec<f64> = (0..=12).map(|k| 0.5 * TAU + 0.125 * TAU * k as f64).collect();
    for p in ingham_chart(&freqs, &horizons)? {
        println!("T = {:6.3}  B = {:.6e}", p.horizon, p.b);
    }

    let torus = Torus::new(TorusGeometry::standard(32)?)?;
    let w = build_weight(&WeightSpec::Strip { x0: 0.0, x1: PI }, &torus)?;
    let setup = ObservationSetup::new(&w, ObservationConfig::new(7.0, 25.0))?;
    let direct = observability_constant(&setup, &SolverOptions::default())?;
    let bound = observability_from_ingham(&w, setup.quadrature(), 25.0)?;
    println!(
        "strip, T = 7: Ingham bound {:?} (B = {:.4}, min eigenspace constant {:.4}) <= direct {:.6}",
        bound.bound, bound.b_discrete, bound.min_eigenspace, direct.lambda_min
    );
    Ok(())
}
