//! Finite-frequency proxies for the phase-space limits of free waves:
//! time-integrated densities, the distribution of Fourier mass over rational
//! directions, and the defect of a density from its average along a closed
//! geodesic direction.
//!
//! Direction convention: an integer pair `(p, q)` names the translation
//! `(pA, qB)` of the torus `ℝ/Aℤ × ℝ/Bℤ`. A mode `(m, n)` is invariant under
//! that flow iff `mp + nq = 0`, which makes the integer pairing exact on
//! anisotropic tori as well.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observability::{required_nodes, state_bandwidth, time_integrated_density, TimeQuadrature};
use crate::torus::{random_state, FourierField, SpatialField, Torus, TorusGeometry, C64};

/// Label written into every report produced by this module.
pub const PROXY_NOTE: &str =
    "proxy: finite-frequency functional, no convergence to a defect measure is asserted";

pub const DIRECTION_CONVENTION: &str =
    "integer pair (p,q) denotes the translation (p*A, q*B); mode (m,n) is flow-invariant iff m*p + n*q = 0";

/// `U^τ(z) = ∫₀^τ |e^{itΔ}u₀(z)|² dt` on the grid.
#[derive(Clone, Debug)]
pub struct TimeAveragedDensity {
    pub torus: Arc<Torus>,
    pub values: Vec<f64>,
    pub horizon: f64,
    pub nodes: usize,
}

impl TimeAveragedDensity {
    pub fn geometry(&self) -> &TorusGeometry {
        self.torus.geometry()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.geometry().cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.geometry().cell_area()).sqrt()
    }

    pub fn to_field(&self) -> SpatialField {
        SpatialField::weight(self.torus.clone(), self.values.clone()).expect("length matches geometry")
    }
}

/// Node count for `|u|²`, whose time frequencies `λⱼ - λₖ` fill a band twice
/// the spread of the state.
pub fn density_nodes_doubled(u0: &FourierField, horizon: f64) -> usize {
    required_nodes(horizon, 2.0 * state_bandwidth(u0))
}

/// Midpoint quadrature of `|e^{itΔ}u₀|²`; `nodes = None` applies the sampling rule.
pub fn time_averaged_density(u0: &FourierField, horizon: f64, nodes: Option<usize>) -> Result<TimeAveragedDensity> {
    let nodes = nodes.unwrap_or_else(|| density_nodes_doubled(u0, horizon));
    let q = TimeQuadrature::midpoint(horizon, nodes)?;
    let mut values = time_integrated_density(u0, &q);
    // rounding can leave tiny negative values after the inverse FFT
    values.iter_mut().for_each(|v| *v = v.max(0.0));
    Ok(TimeAveragedDensity {
        torus: u0.torus().clone(),
        values,
        horizon,
        nodes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionMass {
    pub p: i64,
    pub q: i64,
    pub fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualClass {
    pub m: i64,
    /// Fraction of mass on directions with `max(|p|, |q|) > m`.
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionHistogram {
    /// Primitive directions in the half-plane `p > 0` or `p = 0, q > 0`.
    pub directions: Vec<DirectionMass>,
    pub zero_mode: f64,
    pub residual: Vec<ResidualClass>,
    pub note: String,
    pub convention: String,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Primitive representative of the line through `(m, n)`, in the canonical
/// half-plane.
pub fn primitive_direction(m: i64, n: i64) -> Option<(i64, i64)> {
    if (m, n) == (0, 0) {
        return None;
    }
    let g = gcd(m, n);
    let (p, q) = (m / g, n / g);
    Some(if p < 0 || (p == 0 && q < 0) { (-p, -q) } else { (p, q) })
}

pub fn direction_mass(u: &FourierField, m_max: i64) -> Result<DirectionHistogram> {
    let total: f64 = u.coeffs().iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return Err(Error::ZeroField);
    }
    let g = u.geometry();
    let mut bins: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    let mut zero = 0.0;
    for (i, c) in u.coeffs().iter().enumerate() {
        let w = c.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let (m, n) = g.mode(i);
        match primitive_direction(m, n) {
            Some(d) => *bins.entry(d).or_insert(0.0) += w,
            None => zero += w,
        }
    }
    let directions: Vec<DirectionMass> = bins
        .iter()
        .map(|(&(p, q), &w)| DirectionMass {
            p,
            q,
            fraction: w / total,
        })
        .collect();
    let residual = (1..=m_max.max(1))
        .map(|m| ResidualClass {
            m,
            mass: directions
                .iter()
                .filter(|d| d.p.abs().max(d.q.abs()) > m)
                .map(|d| d.fraction)
                .sum(),
        })
        .collect();
    Ok(DirectionHistogram {
        directions,
        zero_mode: zero / total,
        residual,
        note: PROXY_NOTE.into(),
        convention: DIRECTION_CONVENTION.into(),
    })
}

/// Fourier mask of the orthogonal projector onto functions invariant under
/// the flow in direction `(p, q)`.
pub fn direction_mask(geometry: &TorusGeometry, p: i64, q: i64) -> Result<Vec<bool>> {
    if (p, q) == (0, 0) {
        return Err(Error::InvalidParameter("direction (0, 0) does not define a flow".into()));
    }
    Ok((0..geometry.len())
        .map(|i| {
            let (m, n) = geometry.mode(i);
            m * p + n * q == 0
        })
        .collect())
}

/// Average of a grid field along the flow in direction `(p, q)`.
pub fn direction_average(field: &SpatialField, p: i64, q: i64) -> Result<SpatialField> {
    let mask = direction_mask(field.geometry(), p, q)?;
    let mut f = field.to_fourier();
    for (c, keep) in f.coeffs_mut().iter_mut().zip(mask) {
        if !keep {
            *c = C64::new(0.0, 0.0);
        }
    }
    Ok(f.to_spatial(field.role()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowDefect {
    pub p: i64,
    pub q: i64,
    pub horizon: f64,
    pub nodes: usize,
    /// `‖U^τ - avg U^τ‖ / ‖U^τ‖`.
    pub defect: f64,
}

pub fn flow_average_defect(u0: &FourierField, horizon: f64, p: i64, q: i64) -> Result<FlowDefect> {
    if (p, q) == (0, 0) {
        return Err(Error::InvalidParameter("direction (0, 0) does not define a flow".into()));
    }
    if gcd(p, q) != 1 {
        return Err(Error::InvalidParameter(format!("direction ({p}, {q}) is not primitive")));
    }
    let density = time_averaged_density(u0, horizon, None)?;
    let field = density.to_field();
    let avg = direction_average(&field, p, q)?;
    let diff: f64 = field.values().iter().zip(avg.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let whole: f64 = field.values().iter().map(|a| a.norm_sqr()).sum();
    Ok(FlowDefect {
        p,
        q,
        horizon,
        nodes: density.nodes,
        defect: if whole > 0.0 { (diff / whole).sqrt() } else { 0.0 },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityStability {
    pub lambda_max: f64,
    pub horizon: f64,
    /// Largest `‖U^τ‖_{L²} / ‖u₀‖²` over the trials.
    pub max_ratio: f64,
}

/// `‖U^τ‖_{L²} / ‖u₀‖²` for random states as the band grows at fixed `τ`.
pub fn density_stability_sweep<R: Rng + ?Sized>(
    torus: &Arc<Torus>,
    cutoffs: &[f64],
    horizon: f64,
    trials: usize,
    rng: &mut R,
) -> Result<Vec<DensityStability>> {
    cutoffs
        .iter()
        .map(|&l| {
            let mut max_ratio: f64 = 0.0;
            for _ in 0..trials {
                let u = random_state(torus, Some(l), rng);
                let d = time_averaged_density(&u, horizon, None)?;
                max_ratio = max_ratio.max(d.l2_norm() / u.norm_sq());
            }
            Ok(DensityStability {
                lambda_max: l,
                horizon,
                max_ratio,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::FieldRole;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus(n: usize) -> Arc<Torus> {
        Torus::new(TorusGeometry::standard(n).unwrap()).unwrap()
    }

    #[test]
    fn single_mode_density_is_flat() {
        let t = torus(16);
        let c = C64::new(0.3, 0.4);
        let u = FourierField::single_mode(t, 3, -2, c).unwrap();
        let d = time_averaged_density(&u, 1.5, None).unwrap();
        assert!(d.values.iter().all(|v| (v - 1.5 * c.norm_sqr()).abs() < 1e-14));
        assert!(flow_average_defect(&u, 1.5, 1, 0).unwrap().defect < 1e-14);
    }

    #[test]
    fn density_mass_identity() {
        let t = torus(32);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let u = random_state(&t, Some(100.0), &mut rng);
            let d = time_averaged_density(&u, 0.9, None).unwrap();
            assert!((d.mass() - 0.9 * u.norm_sq()).abs() < 1e-10);
        }
    }

    #[test]
    fn hand_counted_histogram() {
        let t = torus(16);
        let mut u = FourierField::zeros(t.clone());
        for (m, n) in [(1, 0), (1, 1), (2, 1)] {
            u.coeffs_mut()[t.geometry().index_of_mode(m, n).unwrap()] = C64::new(0.0, 1.0);
        }
        let h = direction_mass(&u, 3).unwrap();
        assert_eq!(h.directions.len(), 3);
        assert!((h.residual[0].mass - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.residual[1].mass, 0.0);

        let plane = FourierField::single_mode(t.clone(), 0, 3, C64::new(1.0, 0.0)).unwrap();
        let h = direction_mass(&plane, 2).unwrap();
        assert_eq!(h.directions, vec![DirectionMass { p: 0, q: 1, fraction: 1.0 }]);
        assert_eq!(h.residual[0].mass, 0.0);
        assert_eq!(primitive_direction(-4, 6), Some((2, -3)));
        assert!(direction_mass(&FourierField::zeros(t), 2).is_err());
    }

    #[test]
    fn histogram_fractions_and_invariance() {
        let t = torus(32);
        let u = random_state(&t, None, &mut ChaCha8Rng::seed_from_u64(2));
        let h = direction_mass(&u, 8).unwrap();
        let s: f64 = h.directions.iter().map(|d| d.fraction).sum::<f64>() + h.zero_mode;
        assert!((s - 1.0).abs() < 1e-12);
        assert!(h.residual.windows(2).all(|w| w[1].mass <= w[0].mass));
        let moved = direction_mass(&u.propagate(3.7), 8).unwrap();
        for (a, b) in h.directions.iter().zip(&moved.directions) {
            assert_eq!((a.p, a.q), (b.p, b.q));
            assert!((a.fraction - b.fraction).abs() <= 1e-15);
        }
    }

    #[test]
    fn averaging_is_an_orthogonal_projection() {
        let t = torus(16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = crate::torus::random_grid_field(&t, &mut rng).with_role(FieldRole::State);
        let g = crate::torus::random_grid_field(&t, &mut rng).with_role(FieldRole::State);
        for (p, q) in [(1, 0), (1, 1), (2, -1)] {
            let pf = direction_average(&f, p, q).unwrap();
            let ppf = direction_average(&pf, p, q).unwrap();
            let d = pf.values().iter().zip(ppf.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(d < 1e-12);
            let pg = direction_average(&g, p, q).unwrap();
            let lhs = pf.inner(&g).unwrap();
            let rhs = f.inner(&pg).unwrap();
            assert!((lhs - rhs).norm() < 1e-12 * f.norm() * g.norm());
        }
        assert!(direction_average(&f, 0, 0).is_err());
    }

    #[test]
    fn parallel_packet_has_small_defect_and_mixture_does_not() {
        let t = torus(32);
        let mut u = FourierField::zeros(t.clone());
        for n in [1, 2, 4, 5] {
            u.coeffs_mut()[t.geometry().index_of_mode(0, n).unwrap()] = C64::new(1.0, 0.0);
        }
        // frequencies along (0,1): U depends on y only, so the x-flow leaves it
        // fixed, while the y-flow sees the cross terms that time averaging damps
        assert!(flow_average_defect(&u, 2.0, 1, 0).unwrap().defect < 1e-12);
        let short = flow_average_defect(&u, 2.0, 0, 1).unwrap().defect;
        let long = flow_average_defect(&u, 40.0, 0, 1).unwrap().defect;
        assert!(long < 0.2 * short, "{short} {long}");
        let mut mix = u.clone();
        for m in [1, 3] {
            mix.coeffs_mut()[t.geometry().index_of_mode(m, 0).unwrap()] = C64::new(1.0, 0.0);
        }
        for (p, q) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
            assert!(flow_average_defect(&mix, 2.0, p, q).unwrap().defect > 0.05);
        }
    }
}
