//! Time-averaged densities and rational-direction bookkeeping for a random
//! state and for a packet travelling along one axis.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tslab::diagnostics::{direction_mass, flow_average_defect, time_averaged_density, PROXY_NOTE};
use tslab::torus::{random_state, FourierField, Torus, TorusGeometry, C64};

fn main() -> tslab::Result<()> {
    let torus = Torus::new(TorusGeometry::standard(32)?)?;
    let u = random_state(&torus, Some(100.0), &mut ChaCha8Rng::seed_from_u64(3));
    let d = time_averaged_density(&u, 2.0, None)?;
    println!("{PROXY_NOTE}");
    println!("mass {:.12} vs tau |u0|^2 {:.12}  ({} nodes)", d.mass(), 2.0 * u.norm_sq(), d.nodes);

    let h = direction_mass(&u, 3)?;
    let mut top = h.directions.clone();
    top.sort_by(|a, b| b.fraction.total_cmp(&a.fraction));
    for m in top.iter().take(6) {
        println!("direction ({:2}, {:2})  fraction {:.4}", m.p, m.q, m.fraction);
    }
    for r in &h.residual {
        println!("mass beyond height {}: {:.4}", r.m, r.mass);
    }

    let mut packet = FourierField::zeros(torus.clone());
    for n in [1, 2, 4, 5] {
        packet.coeffs_mut()[torus.geometry().index_of_mode(0, n).unwrap()] = C64::new(1.0, 0.0);
    }
    for (p, q) in [(1, 0), (0, 1), (1, 1)] {
        for tau in [2.0, 40.0] {
            let f = flow_average_defect(&packet, tau, p, q)?;
            println!("packet  flow ({p}, {q})  tau {tau:4.1}  defect {:.4}", f.defect);
        }
    }
    Ok(())
}
