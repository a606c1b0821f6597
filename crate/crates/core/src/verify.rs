//! The acceptance suite: one named check per property, each with a pinned
//! tolerance. Used by `tslab verify` and by the `acceptance` test target.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::damped::{damped_evolve, damped_evolve_with};
use crate::diagnostics::{direction_average, direction_mass, time_averaged_density};
use crate::error::Result;
use crate::hum::{apply_r, apply_s, control_setup, synthesize_control, verify_refined, ControlOptions, ControlSamples};
use crate::inequalities::{
    ingham_gram, lattice_circle, observability_from_ingham, sums_of_two_squares, zygmund_ratio, zygmund_sweep,
};
use crate::observability::{
    dense_smallest_eigenvalue, observability_constant, sweep_cutoffs, Gramian, ObservationConfig, ObservationSetup,
    SolverOptions,
};
use crate::torus::{
    random_grid_field, random_state, DyadicSpec, FieldRole, FourierField, SpatialField, Torus, TorusGeometry, C64,
};
use crate::weights::{build_weight, CapRule, WeightSpec};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} {} [{:.2} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// A check returns whether it passed and a one-line account of the numbers.
pub type CheckFn = fn() -> Result<(bool, String)>;

/// Every check in suite order.
pub const CHECKS: [(&str, CheckFn); 10] = [
    ("spectral_core", spectral_core),
    ("gramian_identity", gramian_identity),
    ("dense_oracle", dense_oracle),
    ("rough_weight_boundedness", rough_weight_boundedness),
    ("hum_null_control", hum_null_control),
    ("hum_duality", hum_duality),
    ("damping", damping),
    ("zygmund", zygmund),
    ("ingham", ingham),
    ("diagnostics", diagnostics),
];

/// Runs one check; an error inside the check counts as a failure.
pub fn run_check(name: &'static str, f: CheckFn) -> Check {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the checks whose names contain `filter` (all when `None`), calling
/// `report` as each one finishes.
pub fn run_suite(filter: Option<&str>, mut report: impl FnMut(&Check)) -> Vec<Check> {
    CHECKS
        .iter()
        .filter(|(name, _)| filter.is_none_or(|f| name.contains(f)))
        .map(|&(name, f)| {
            let c = run_check(name, f);
            report(&c);
            c
        })
        .collect()
}

fn unit_torus(n: usize) -> Result<Arc<Torus>> {
    Torus::new(TorusGeometry::square(n, 1.0)?)
}

fn lam(k: f64) -> f64 {
    k * TAU * TAU
}

fn disk(t: &Arc<Torus>, r: f64) -> Result<SpatialField> {
    build_weight(&WeightSpec::Disk { cx: 0.5, cy: 0.5, r }, t)
}

fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Unitarity, group law, Parseval and the dyadic partition over 100 random
/// fields on a rectangular torus.
pub fn spectral_core() -> Result<(bool, String)> {
    let torus = Torus::new(TorusGeometry::new_2d(32, 24, TAU, 1.5 * TAU)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = DyadicSpec::new(2.0, 10)?;
    let (mut unit, mut group, mut parseval, mut round, mut partition): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..100 {
        let u = random_state(&torus, None, &mut rng);
        let n = u.norm();
        let (s, t) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        unit = unit.max((u.propagate(t).norm() - n).abs() / n);
        let two = u.propagate(s).propagate(t);
        group = group.max(two.sub(&u.propagate(s + t))?.norm() / n);

        let z = random_grid_field(&torus, &mut rng).with_role(FieldRole::State);
        let c = z.to_fourier();
        let lhs = z.norm_sq();
        parseval = parseval.max((lhs - c.norm_sq()).abs() / lhs);
        round = round.max(max_abs_diff(c.to_spatial(FieldRole::State).values(), z.values()) / z.max_abs());

        let levels: f64 = (0..=spec.max_level)
            .map(|k| u.dyadic_project(&spec, k).map(|p| p.norm_sq()))
            .sum::<Result<f64>>()?;
        partition = partition.max((levels - u.norm_sq()).abs() / u.norm_sq());
    }
    let pointwise = (0..=2000)
        .map(|i| spec.covered_limit() * i as f64 / 2000.0)
        .map(|r| (spec.partition_sum(r) - 1.0).abs())
        .fold(0.0, f64::max);
    let ok = unit <= 1e-13 && group <= 1e-13 && parseval <= 1e-12 && round <= 1e-13 && partition <= 1e-10 && pointwise <= 1e-12;
    Ok((
        ok,
        format!(
            "unitarity {unit:.1e}<=1e-13 group {group:.1e}<=1e-13 parseval {parseval:.1e}<=1e-12 \
             round-trip {round:.1e}<=1e-13 energy partition {partition:.1e}<=1e-10 pointwise {pointwise:.1e}<=1e-12"
        ),
    ))
}

/// `W ≡ 1`, `T = 1`: the Gramian is the identity, so `K = 1`.
pub fn gramian_identity() -> Result<(bool, String)> {
    let start = Instant::now();
    let t = unit_torus(64)?;
    let w = build_weight(&WeightSpec::Uniform { value: 1.0 }, &t)?;
    let setup = ObservationSetup::new(&w, ObservationConfig::new(1.0, lam(16.0)))?;
    let r = observability_constant(&setup, &SolverOptions::default())?;
    let err = (r.constant - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    Ok((
        err <= 1e-10 && secs < 1.0,
        format!("|K-1| = {err:.1e} <= 1e-10 at dim {}, {secs:.3} s < 1 s", r.dim),
    ))
}

/// Matrix-free Lanczos against a dense eigendecomposition for three rough
/// weights at dimension <= 120.
pub fn dense_oracle() -> Result<(bool, String)> {
    let start = Instant::now();
    let t = unit_torus(32)?;
    let specs = [
        WeightSpec::Strip { x0: 0.0, x1: 0.5 },
        WeightSpec::Disk { cx: 0.5, cy: 0.5, r: 0.3 },
        WeightSpec::FatCantor { depth: 3, ratio: 0.25 },
    ];
    let opts = SolverOptions::default();
    let mut worst: f64 = 0.0;
    let mut dims = Vec::new();
    for spec in &specs {
        let w = build_weight(spec, &t)?;
        let setup = ObservationSetup::new(&w, ObservationConfig::new(1.0, lam(36.0)))?;
        let r = observability_constant(&setup, &opts)?;
        let dense = dense_smallest_eigenvalue(&Gramian::new(&setup)?.assemble_dense());
        worst = worst.max((dense - r.lambda_min).abs() / dense.abs());
        dims.push(r.dim);
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-8 && dims.iter().all(|&d| d <= 120) && secs < 60.0;
    Ok((
        ok,
        format!("strip/disk/fat_cantor relative gap {worst:.1e} <= 1e-8, dims {dims:?} <= 120, {secs:.1} s < 60 s"),
    ))
}

/// `K(Λmax)` stays bounded for a fat Cantor product and a power singularity
/// over six doublings at `T = 1`.
pub fn rough_weight_boundedness() -> Result<(bool, String)> {
    let t = unit_torus(64)?;
    let cutoffs: Vec<f64> = (1..=6).map(|k| lam((1u32 << k) as f64)).collect();
    let specs = [
        WeightSpec::FatCantor { depth: 3, ratio: 0.25 },
        WeightSpec::PowerSingularity {
            x0: 0.5,
            y0: 0.5,
            beta: 0.4,
            cap: CapRule::NeighborAverage,
        },
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for spec in &specs {
        let w = build_weight(spec, &t)?;
        let rows = sweep_cutoffs(&w, &ObservationConfig::new(1.0, cutoffs[0]), &cutoffs, &SolverOptions::default())?;
        let tail: Vec<f64> = rows.iter().rev().take(4).map(|r| r.constant).collect();
        let spread = tail.iter().copied().fold(0.0, f64::max) / tail.iter().copied().fold(f64::INFINITY, f64::min);
        ok &= spread <= 2.0 && spread.is_finite();
        parts.push(format!("{} max/min {spread:.4}", spec.label()));
    }
    Ok((ok, format!("{} <= 2 over {} doublings", parts.join(", "), cutoffs.len() - 1)))
}

/// Null control with a disk, 64² grid, `dim ≈ 200`, `T = 1`, CG tol 1e-8;
/// verified on a 4× finer time grid at `Nt` and `2Nt`.
pub fn hum_null_control() -> Result<(bool, String)> {
    let start = Instant::now();
    let t = unit_torus(64)?;
    let a = disk(&t, 0.25)?;
    let lambda_max = lam(64.0);
    let u0 = random_state(&t, Some(lambda_max), &mut ChaCha8Rng::seed_from_u64(42));
    let base = control_setup(&a, 1.0, lambda_max)?;
    let opts = ControlOptions::default();
    let mut residual = 0.0;
    let mut fine = Vec::new();
    for scale in [1, 2] {
        let setup = ObservationSetup::new(&a, base.config().clone().with_nodes(scale * base.required_nodes()))?;
        let sol = synthesize_control(&u0, &setup, &opts)?;
        if scale == 1 {
            residual = sol.residual_truncated;
        }
        fine.push(verify_refined(&setup, &sol, 4)?.residual_truncated);
    }
    let order = (fine[0] / fine[1]).log2();
    let secs = start.elapsed().as_secs_f64();
    let ok = residual <= 1e-6 && fine[0] <= 1e-3 && order >= 1.9 && secs < 120.0;
    Ok((
        ok,
        format!(
            "dim {} residual {residual:.1e} <= 1e-6, 4x-finer {:.1e} <= 1e-3, order {order:.2} >= 1.9, {secs:.1} s < 120 s",
            base.subspace().dim(),
            fine[0]
        ),
    ))
}

/// `|⟨f, S v₀⟩ + i⟨R f, v₀⟩| <= 1e-11 ‖f‖‖v₀‖` over 100 random pairs.
pub fn hum_duality() -> Result<(bool, String)> {
    let t = unit_torus(32)?;
    let a = disk(&t, 0.3)?;
    let setup = control_setup(&a, 0.5, lam(16.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let v0 = random_state(&t, Some(lam(16.0)), &mut rng);
        let f = ControlSamples::new(
            setup.quadrature().clone(),
            (0..setup.quadrature().len()).map(|_| random_grid_field(&t, &mut rng)).collect(),
        )?;
        let gap = f.inner(&apply_s(&setup, &v0)?)? + C64::new(0.0, 1.0) * apply_r(&setup, &f)?.inner(&v0)?;
        worst = worst.max(gap.norm() / (f.norm() * v0.norm()));
    }
    Ok((worst <= 1e-11, format!("max relative gap {worst:.1e} <= 1e-11 over 100 pairs")))
}

/// Constant-rate fit, monotone decay for an indicator, second-order energy
/// identity and the closed-form eigenfunction solution.
pub fn damping() -> Result<(bool, String)> {
    let t = Torus::new(TorusGeometry::standard(32)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_state(&t, Some(60.0), &mut rng).to_spatial(FieldRole::State);
    let alpha = 0.35;
    let constant = SpatialField::constant(t.clone(), C64::new(alpha, 0.0), FieldRole::Weight);
    let rate_err = (damped_evolve(&u, &constant, 5.0, 0.01, "constant")?.fit.rate - alpha).abs();

    let strip = build_weight(&WeightSpec::Strip { x0: 0.0, x1: PI }, &t)?;
    let violations = damped_evolve(&u, &strip, 10.0, 0.01, "strip")?.monotonicity_violations;

    let e: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&d| damped_evolve(&u, &strip, 1.0, d, "strip").map(|r| r.global_energy_residual))
        .collect::<Result<_>>()?;
    let order = e.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);

    let u0 = FourierField::single_mode(t.clone(), 2, -3, C64::new(0.3, -0.4))?;
    let mut eig: f64 = 0.0;
    damped_evolve_with(&u0.to_spatial(FieldRole::State), &constant, 3.0, 0.05, "constant", |_, tk, v| {
        let exact = u0.propagate(tk).scale(C64::new((-alpha * tk).exp(), 0.0)).to_spatial(FieldRole::State);
        eig = eig.max(max_abs_diff(v, exact.values()));
    })?;
    let ok = rate_err <= 1e-6 && violations == 0 && order >= 1.9 && eig <= 1e-10;
    Ok((
        ok,
        format!(
            "|c-alpha| {rate_err:.1e} <= 1e-6, violations {violations} = 0, energy order {order:.2} >= 1.9, \
             eigenfunction {eig:.1e} <= 1e-10"
        ),
    ))
}

/// Two equal coefficients give `√6/2`; the sweep over `λ <= 2000` stays
/// under `√5`.
pub fn zygmund() -> Result<(bool, String)> {
    let start = Instant::now();
    let circle = lattice_circle(25);
    let mut c = vec![C64::new(0.0, 0.0); circle.len()];
    c[0] = C64::new(1.0, 0.0);
    c[3] = C64::new(1.0, 0.0);
    let two = (zygmund_ratio(25, &c)? - 6f64.sqrt() / 2.0).abs();
    let rows = zygmund_sweep(2000, 8, 50, 0x2a);
    let worst = rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let ok = two <= 1e-10 && worst <= 5f64.sqrt() && !rows.is_empty() && secs < 120.0;
    Ok((
        ok,
        format!(
            "|ratio - sqrt6/2| {two:.1e} <= 1e-10, max ratio {worst:.4} <= sqrt5 over {} circles, {secs:.1} s < 120 s",
            rows.len()
        ),
    ))
}

/// Closed-form `B(2π)`, positivity past `2π`, and the Ingham lower bound
/// against the Gramian for three weights.
pub fn ingham() -> Result<(bool, String)> {
    let closed = (ingham_gram(&[0.0, 1.0], TAU)?.b - TAU).abs();
    let freqs: Vec<f64> = sums_of_two_squares(100).into_iter().map(|l| l as f64).collect();
    let b = ingham_gram(&freqs, TAU + 0.5)?.b;

    let t = Torus::new(TorusGeometry::standard(32)?)?;
    let specs = [
        WeightSpec::Strip { x0: 0.0, x1: PI },
        WeightSpec::Uniform { value: 1.0 },
        WeightSpec::FatCantor { depth: 3, ratio: 0.25 },
    ];
    let mut margin = f64::INFINITY;
    let mut certified = 0;
    for spec in &specs {
        let w = build_weight(spec, &t)?;
        let setup = ObservationSetup::new(&w, ObservationConfig::new(7.0, 25.0))?;
        let direct = observability_constant(&setup, &SolverOptions::default())?;
        let bound = observability_from_ingham(&w, setup.quadrature(), 25.0)?;
        if let Some(lb) = bound.bound {
            certified += 1;
            margin = margin.min(direct.lambda_min + 1e-8 - lb);
        }
    }
    let ok = closed <= 1e-10 && b > 0.0 && margin >= 0.0;
    Ok((
        ok,
        format!(
            "|B(2pi)-2pi| {closed:.1e} <= 1e-10, B(2pi+1/2) = {b:.3e} > 0 on {} frequencies, \
             bound <= direct + 1e-8 with margin {margin:.3e} ({certified}/3 certified)",
            freqs.len()
        ),
    ))
}

/// Mass identity, invariance of the direction histogram under the flow, and
/// idempotence of the averaging projector.
pub fn diagnostics() -> Result<(bool, String)> {
    let t = Torus::new(TorusGeometry::standard(32)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mass: f64 = 0.0;
    let mut invariance: f64 = 0.0;
    let mut idem: f64 = 0.0;
    for _ in 0..10 {
        let u = random_state(&t, Some(100.0), &mut rng);
        let tau = rng.random_range(0.2..2.0);
        let d = time_averaged_density(&u, tau, None)?;
        mass = mass.max((d.mass() - tau * u.norm_sq()).abs());

        let h = direction_mass(&u, 8)?;
        let moved = direction_mass(&u.propagate(rng.random_range(-5.0..5.0)), 8)?;
        for (a, b) in h.directions.iter().zip(&moved.directions) {
            invariance = invariance.max((a.fraction - b.fraction).abs());
        }
        invariance = invariance.max((h.zero_mode - moved.zero_mode).abs());

        let field = d.to_field();
        for (p, q) in [(1, 0), (0, 1), (1, 1), (2, -1)] {
            let once = direction_average(&field, p, q)?;
            let twice = direction_average(&once, p, q)?;
            idem = idem.max(max_abs_diff(once.values(), twice.values()) / field.max_abs());
        }
    }
    let ok = mass <= 1e-10 && invariance <= 1e-14 && idem <= 1e-12;
    Ok((
        ok,
        format!("mass {mass:.1e} <= 1e-10, direction invariance {invariance:.1e} <= 1e-14, idempotence {idem:.1e} <= 1e-12"),
    ))
}
