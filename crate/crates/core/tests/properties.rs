use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tslab::damped::damped_evolve;
use tslab::hum::{apply_r, apply_s, control_setup, ControlSamples};
use tslab::inequalities::{ingham_gram, lattice_circle, zygmund_ratio};
use tslab::observability::{gramian_apply, ObservationConfig, ObservationSetup};
use tslab::scenario::{Scenario, ScenarioKind};
use tslab::torus::{random_grid_field, random_state, FieldRole, Torus, TorusGeometry, C64};
use tslab::weights::{build_weight, WeightSpec};

fn unit_torus(n: usize) -> Arc<Torus> {
    Torus::new(TorusGeometry::square(n, 1.0).unwrap()).unwrap()
}

fn weight_strategy() -> impl Strategy<Value = WeightSpec> {
    prop_oneof![
        (0.05f64..2.0).prop_map(|value| WeightSpec::Uniform { value }),
        (0.0f64..0.5, 0.1f64..0.5).prop_map(|(x0, w)| WeightSpec::Strip { x0, x1: x0 + w }),
        (0.0f64..1.0, 0.0f64..1.0, 0.1f64..0.45).prop_map(|(cx, cy, r)| WeightSpec::Disk { cx, cy, r }),
        (1usize..6).prop_map(|k| WeightSpec::Checkerboard { k }),
        (1u32..4, 0.1f64..0.5).prop_map(|(depth, ratio)| WeightSpec::FatCantor { depth, ratio }),
        (0.0f64..1.0, 0.0f64..1.0, 0.05f64..0.45).prop_map(|(x0, y0, beta)| WeightSpec::PowerSingularity {
            x0,
            y0,
            beta,
            cap: Default::default(),
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_are_real_nonnegative_and_observe(spec in weight_strategy()) {
        let t = unit_torus(16);
        let w = build_weight(&spec, &t).unwrap();
        prop_assert!(w.values().iter().all(|v| v.im == 0.0 && v.re >= 0.0 && v.re.is_finite()));
        prop_assert!(w.lp_norm(4.0) > 0.0);
    }

    #[test]
    fn gramian_is_hermitian_and_positive(spec in weight_strategy(), horizon in 0.2f64..2.0, seed in any::<u64>()) {
        let t = unit_torus(16);
        let w = build_weight(&spec, &t).unwrap();
        let setup = ObservationSetup::new(&w, ObservationConfig::new(horizon, 200.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_state(&t, Some(200.0), &mut rng);
        let v = random_state(&t, Some(200.0), &mut rng);
        let gu = gramian_apply(&setup, &u).unwrap();
        let gv = gramian_apply(&setup, &v).unwrap();
        let lhs = gu.inner(&v).unwrap();
        let rhs = u.inner(&gv).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * gu.norm() * v.norm() + 1e-300);
        let q = gu.inner(&u).unwrap();
        prop_assert!(q.re >= -1e-13 * gu.norm() * u.norm());
        prop_assert!(q.im.abs() <= 1e-12 * gu.norm() * u.norm());
    }

    #[test]
    fn duality_holds_for_any_pair(r in 0.1f64..0.45, horizon in 0.1f64..1.0, seed in any::<u64>()) {
        let t = unit_torus(16);
        let a = build_weight(&WeightSpec::Disk { cx: 0.5, cy: 0.5, r }, &t).unwrap();
        let setup = control_setup(&a, horizon, 150.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v0 = random_state(&t, Some(150.0), &mut rng);
        let f = ControlSamples::new(
            setup.quadrature().clone(),
            (0..setup.quadrature().len()).map(|_| random_grid_field(&t, &mut rng)).collect(),
        ).unwrap();
        let gap = f.inner(&apply_s(&setup, &v0).unwrap()).unwrap()
            + C64::new(0.0, 1.0) * apply_r(&setup, &f).unwrap().inner(&v0).unwrap();
        prop_assert!(gap.norm() <= 1e-11 * f.norm() * v0.norm());
    }

    #[test]
    fn damping_never_increases_the_norm(spec in weight_strategy(), delta in 0.005f64..0.1, seed in any::<u64>()) {
        let t = unit_torus(16);
        let a = build_weight(&spec, &t).unwrap();
        let u0 = random_state(&t, Some(300.0), &mut ChaCha8Rng::seed_from_u64(seed)).to_spatial(FieldRole::State);
        let r = damped_evolve(&u0, &a, 1.0, delta, "p").unwrap();
        prop_assert_eq!(r.monotonicity_violations, 0);
        prop_assert!((r.times.last().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zygmund_ratio_is_at_least_one(k in 0usize..6, seed in any::<u64>()) {
        let lambda = [5u64, 25, 65, 85, 125, 325][k];
        let n = lattice_circle(lambda).len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = tslab::krylov::random_vector(n, &mut rng);
        let r = zygmund_ratio(lambda, &c).unwrap();
        // Hölder gives ‖p‖₄ >= ‖p‖₂ on a probability space
        prop_assert!(r >= 1.0 - 1e-12 && r <= 5f64.sqrt());
    }

    #[test]
    fn ingham_constant_is_bounded_by_horizon(horizon in 0.5f64..20.0, n in 2usize..8) {
        let freqs: Vec<f64> = (0..n).map(|k| (k * k) as f64).collect();
        let b = ingham_gram(&freqs, horizon).unwrap();
        // the diagonal of the Gram matrix is T
        prop_assert!(b.b <= horizon + 1e-10 && b.largest >= horizon - 1e-10);
    }

    #[test]
    fn scenario_round_trip(spec in weight_strategy(), horizon in 0.1f64..5.0, seed in 0..=i64::MAX as u64, k in 0usize..7) {
        let mut s = Scenario::new(ScenarioKind::ALL[k]);
        s.seed = Some(seed);
        s.weight = spec;
        s.numerics.horizon = horizon;
        let text = s.to_toml().unwrap();
        prop_assert_eq!(Scenario::from_toml(&text, &[]).unwrap(), s);
    }
}
