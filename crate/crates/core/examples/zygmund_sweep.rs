//! L4/L2 ratios of random combinations of exponentials on lattice circles.

use tslab::inequalities::{lattice_circle, zygmund_sweep};

fn main() {
    for lambda in [25, 65, 325, 1105] {
        let c = lattice_circle(lambda);
        println!("|{{x^2 + y^2 = {lambda}}}| = {}", c.len());
    }
    let rows = zygmund_sweep(2000, 8, 50, 7);
    let worst = rows.iter().max_by(|a, b| a.max_ratio.total_cmp(&b.max_ratio)).unwrap();
    println!(
        "{} circles with at least 8 points; largest ratio {:.4} at lambda = {} (sqrt 5 = {:.4})",
        rows.len(),
        worst.max_ratio,
        worst.lambda,
        5f64.sqrt()
    );
    for r in rows.iter().filter(|r| r.circle_count >= 24) {
        println!("lambda {:5}  points {:3}  max ratio {:.4}", r.lambda, r.circle_count, r.max_ratio);
    }
}
