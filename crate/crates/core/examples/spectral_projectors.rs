//! The free propagator, the smooth spectral cutoff and the dyadic
//! partition on a rectangular torus.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tslab::torus::{random_state, CutoffProfile, DyadicSpec, Torus, TorusGeometry};

fn main() -> tslab::Result<()> {
    let torus = Torus::new(TorusGeometry::new_2d(64, 48, TAU, 1.5 * TAU)?)?;
    let u = random_state(&torus, Some(400.0), &mut ChaCha8Rng::seed_from_u64(9));
    let v = u.propagate(0.7).propagate(-0.7);
    println!("|u| = {:.12}  |e^(itD) u| = {:.12}  round trip error {:.1e}", u.norm(), u.propagate(0.7).norm(), v.sub(&u)?.norm());

    let chi = CutoffProfile::default();
    for h in [0.2, 0.1, 0.05] {
        let p = u.project_spectral(h, 0.5, &chi)?;
        println!("h = {h:4.2}  |Pi_h u| / |u| = {:.4}", p.norm() / u.norm());
    }

    let spec = DyadicSpec::new(2.0, 9)?;
    let mut total = 0.0;
    for k in 0..=spec.max_level {
        let e = u.dyadic_project(&spec, k)?.norm_sq();
        total += e;
        println!("level {k}: energy {:.6}", e);
    }
    println!("sum {:.12} vs |u|^2 {:.12}", total, u.norm_sq());
    Ok(())
}
