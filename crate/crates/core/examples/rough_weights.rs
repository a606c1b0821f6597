//! Observability constants for rough observation sets: a fat Cantor product
//! (positive measure, no interior at grid resolution) and an unbounded power
//! singularity, swept over doubling frequency cutoffs at fixed time.

use std::f64::consts::TAU;
use std::time::Instant;

use tslab::observability::{sweep_cutoffs, ObservationConfig, SolverOptions};
use tslab::torus::{Torus, TorusGeometry};
use tslab::weights::{build_weight, CapRule, WeightSpec};

fn main() -> tslab::Result<()> {
    let torus = Torus::new(TorusGeometry::square(64, 1.0)?)?;
    let cutoffs: Vec<f64> = (1..=6).map(|k| (1u32 << k) as f64 * TAU * TAU).collect();
    let specs = [
        WeightSpec::FatCantor { depth: 3, ratio: 0.25 },
        WeightSpec::PowerSingularity {
            x0: 0.5,
            y0: 0.5,
            beta: 0.4,
            cap: CapRule::NeighborAverage,
        },
    ];
    for spec in &specs {
        let w = build_weight(spec, &torus)?;
        let start = Instant::now();
        let rows = sweep_cutoffs(&w, &ObservationConfig::new(1.0, cutoffs[0]), &cutoffs, &SolverOptions::default())?;
        println!("{}  ({:.1?})", spec.label(), start.elapsed());
        println!("{:>10} {:>5} {:>12} {:>10} {:>6}", "cutoff", "dim", "lambda_min", "K", "iters");
        for r in &rows {
            println!("{:10.1} {:5} {:12.6e} {:10.4} {:6}", r.lambda_max, r.dim, r.lambda_min, r.constant, r.iters);
        }
        let tail: Vec<f64> = rows.iter().rev().take(4).map(|r| r.constant).collect();
        let spread = tail.iter().copied().fold(0.0, f64::max) / tail.iter().copied().fold(f64::INFINITY, f64::min);
        println!("max/min of the last four K values: {spread:.4}\n");
    }
    Ok(())
}
