//! Null control of a random band-limited state with a disk-shaped control
//! region on the unit torus, checked by forward simulation and by an
//! independent finer time grid.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tslab::hum::{control_setup, synthesize_control, verify_refined, ControlOptions};
use tslab::torus::{random_state, FieldRole, SpatialField, Torus, TorusGeometry, C64};

fn main() -> tslab::Result<()> {
    let torus = Torus::new(TorusGeometry::square(64, 1.0)?)?;
    let a = SpatialField::from_fn(torus.clone(), FieldRole::Weight, |x, y| {
        let d = (x - 0.5).powi(2) + (y - 0.5).powi(2);
        C64::new(if d < 0.0625 { 1.0 } else { 0.0 }, 0.0)
    })?;
    let lambda_max = 64.0 * TAU * TAU;
    let u0 = random_state(&torus, Some(lambda_max), &mut ChaCha8Rng::seed_from_u64(42));
    let opts = ControlOptions::default();

    let mut prev: Option<f64> = None;
    for scale in [1usize, 2] {
        let start = Instant::now();
        let base = control_setup(&a, 1.0, lambda_max)?;
        let nodes = scale * base.required_nodes();
        let setup = tslab::observability::ObservationSetup::new(
            &a,
            base.config().clone().with_nodes(nodes),
        )?;
        let sol = synthesize_control(&u0, &setup, &opts)?;
        let fine = verify_refined(&setup, &sol, 4)?;
        println!(
            "Nt = {nodes:5}  dim = {}  cg = {:4} its  residual = {:.2e} (full grid {:.2e})  4x-finer = {:.2e}  [{:.1?}]",
            setup.subspace().dim(),
            sol.cg_iterations,
            sol.residual_truncated,
            sol.residual_full,
            fine.residual_truncated,
            start.elapsed()
        );
        if let Some(p) = prev {
            println!("observed order {:.3}", (p / fine.residual_truncated).log2());
        }
        prev = Some(fine.residual_truncated);
    }
    Ok(())
}
