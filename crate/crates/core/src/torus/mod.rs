//! Torus geometry, spectral transforms and the operators built from them:
//! the free propagator `e^{itΔ}`, multiplication by weights, and spectral
//! cutoff projectors.

mod cutoff;
mod fft;
mod field;
mod geometry;
pub mod io;

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

pub use cutoff::{smooth_step, CutoffProfile, DyadicSpec};
pub use fft::Fft2;
pub use field::{multiply, FieldRole, FourierField, SpatialField, C64};
pub use geometry::{rational_approximation, TorusGeometry};

use crate::error::Result;

/// A torus geometry together with its eigenvalue table and FFT plans.
///
/// Shared behind an [`Arc`] by every field that lives on it.
pub struct Torus {
    geometry: TorusGeometry,
    eigenvalues: Vec<f64>,
    fft: Fft2,
}

impl std::fmt::Debug for Torus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("Torus").field(&self.geometry).finish()
    }
}

impl Torus {
    pub fn new(geometry: TorusGeometry) -> Result<Arc<Self>> {
        geometry.validate()?;
        let eigenvalues = (0..geometry.len())
            .map(|i| {
                let (m, n) = geometry.mode(i);
                geometry.eigenvalue(m, n)
            })
            .collect();
        Ok(Arc::new(Self {
            geometry,
            eigenvalues,
            fft: Fft2::new(geometry.nx, geometry.ny),
        }))
    }

    pub fn geometry(&self) -> &TorusGeometry {
        &self.geometry
    }

    /// `λ` for every flat mode index.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Flat indices of all non-Nyquist modes with `λ <= lambda_max`, sorted by
    /// eigenvalue then index.
    pub fn modes_below(&self, lambda_max: f64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.geometry.len())
            .filter(|&i| !self.geometry.is_nyquist(i) && self.eigenvalues[i] <= lambda_max)
            .collect();
        idx.sort_by(|&a, &b| self.eigenvalues[a].total_cmp(&self.eigenvalues[b]).then(a.cmp(&b)));
        idx
    }

    /// Largest eigenvalue over non-Nyquist modes.
    pub fn max_resolved_eigenvalue(&self) -> f64 {
        (0..self.geometry.len())
            .filter(|&i| !self.geometry.is_nyquist(i))
            .map(|i| self.eigenvalues[i])
            .fold(0.0, f64::max)
    }
}

pub fn to_fourier(u: &SpatialField) -> FourierField {
    u.to_fourier()
}

pub fn from_fourier(c: &FourierField) -> SpatialField {
    c.to_spatial(FieldRole::State)
}

pub fn propagate(u: &FourierField, t: f64) -> FourierField {
    u.propagate(t)
}

pub fn project_spectral(u: &FourierField, h: f64, rho: f64, chi: &CutoffProfile) -> Result<FourierField> {
    u.project_spectral(h, rho, chi)
}

pub fn dyadic_project(u: &FourierField, spec: &DyadicSpec, k: usize) -> Result<FourierField> {
    u.dyadic_project(spec, k)
}

/// Complex Gaussian coefficients on the non-Nyquist modes with
/// `λ <= lambda_max` (all modes when `None`), normalized to unit `L²` norm.
pub fn random_state<R: Rng + ?Sized>(torus: &Arc<Torus>, lambda_max: Option<f64>, rng: &mut R) -> FourierField {
    let limit = lambda_max.unwrap_or(f64::INFINITY);
    let mut f = FourierField::zeros(torus.clone());
    for i in torus.modes_below(limit) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        f.coeffs_mut()[i] = C64::new(re, im);
    }
    let n = f.norm();
    if n > 0.0 {
        f = f.scale(C64::new(1.0 / n, 0.0));
    }
    f
}

/// Independent complex Gaussian grid values (not band-limited).
pub fn random_grid_field<R: Rng + ?Sized>(torus: &Arc<Torus>, rng: &mut R) -> SpatialField {
    let values = (0..torus.geometry().len())
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    SpatialField::state(torus.clone(), values).expect("length matches geometry")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn torus(n: usize) -> Arc<Torus> {
        Torus::new(TorusGeometry::standard(n).unwrap()).unwrap()
    }

    #[test]
    fn constant_field_is_dc_mode() {
        let t = torus(8);
        let u = SpatialField::constant(t, C64::new(1.0, 0.0), FieldRole::State);
        let c = u.to_fourier();
        assert!((c.coefficient(0, 0).unwrap() - 1.0).norm() < 1e-15);
        let rest: f64 = c.coeffs().iter().skip(1).map(|z| z.norm()).sum();
        assert!(rest < 1e-14);
    }

    #[test]
    fn plane_wave_is_single_mode() {
        let g = TorusGeometry::new_2d(8, 4, 3.0, 2.0).unwrap();
        let t = Torus::new(g).unwrap();
        let u = SpatialField::from_fn(t, FieldRole::State, |x, _| C64::from_polar(1.0, TAU * x / 3.0)).unwrap();
        let c = u.to_fourier();
        for i in 0..g.len() {
            let expect = if g.mode(i) == (1, 0) { 1.0 } else { 0.0 };
            assert!((c.coeffs()[i] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn parseval_against_direct_sum() {
        let g = TorusGeometry::new_2d(16, 8, 2.0, 0.7).unwrap();
        let t = Torus::new(g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_grid_field(&t, &mut rng);
        let direct: f64 = u.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * 1.4 / 128.0;
        let c = u.to_fourier();
        let spectral = 1.4 * c.coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((direct - spectral).abs() <= 1e-12 * direct);
    }

    #[test]
    fn unit_mode_phase_at_pi() {
        let t = torus(8);
        let c0 = C64::new(0.3, -0.7);
        let u = FourierField::single_mode(t, 1, 0, c0).unwrap();
        let v = propagate(&u, PI);
        assert!((v.coefficient(1, 0).unwrap() + c0).norm() < 1e-15);
        assert_eq!(propagate(&u, 0.0).coeffs(), u.coeffs());
    }

    #[test]
    fn spectral_projector_plateau_and_support() {
        let t = torus(16);
        let chi = CutoffProfile::default();
        // mode (3,4): λ = 25, h = 1/5 puts it at the plateau center
        let u = FourierField::single_mode(t.clone(), 3, 4, C64::new(1.0, 0.0)).unwrap();
        let p = project_spectral(&u, 0.2, 0.1, &chi).unwrap();
        assert_eq!(p.coefficient(3, 4).unwrap(), C64::new(1.0, 0.0));
        // h²λ = 1 + 2ρ: h² = 1.2 / 25 with ρ = 0.1
        let h = (1.2f64 / 25.0).sqrt();
        let p = project_spectral(&u, h, 0.1, &chi).unwrap();
        assert!(p.coefficient(3, 4).unwrap().norm() < 1e-15);
        assert!(project_spectral(&u, 0.0, 0.1, &chi).is_err());
        assert!(project_spectral(&u, 0.1, -1.0, &chi).is_err());
    }

    #[test]
    fn dyadic_levels() {
        let t = torus(32);
        let spec = DyadicSpec::new(2.0, 9).unwrap();
        let dc = FourierField::single_mode(t.clone(), 0, 0, C64::new(1.0, 0.0)).unwrap();
        assert!((dyadic_project(&dc, &spec, 0).unwrap().norm_sq() - dc.norm_sq()).abs() < 1e-15);
        for k in 1..=9 {
            assert_eq!(dyadic_project(&dc, &spec, k).unwrap().norm_sq(), 0.0);
        }
        // λ = 16 = 2⁴ sits at the center of level 4
        let u = FourierField::single_mode(t.clone(), 4, 0, C64::new(1.0, 0.0)).unwrap();
        for k in 0..=9 {
            let e = dyadic_project(&u, &spec, k).unwrap().norm_sq();
            if k == 4 {
                assert!((e - u.norm_sq()).abs() < 1e-14);
            } else {
                assert_eq!(e, 0.0);
            }
        }
        let high = FourierField::single_mode(t, 15, 15, C64::new(1.0, 0.0)).unwrap();
        let short = DyadicSpec::new(2.0, 8).unwrap();
        match dyadic_project(&high, &short, 1) {
            Err(crate::Error::UncoveredSpectrum { modes, .. }) => assert_eq!(modes, vec![(15, 15)]),
            other => panic!("expected uncovered-spectrum error, got {other:?}"),
        }
        assert!(dyadic_project(&u, &spec, 10).is_err());
    }

    #[test]
    fn multiply_identity_and_half_indicator() {
        let t = torus(16);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_grid_field(&t, &mut rng);
        let one = SpatialField::constant(t.clone(), C64::new(1.0, 0.0), FieldRole::Weight);
        assert_eq!(multiply(&one, &u).unwrap().values(), u.values());

        let half = SpatialField::from_fn(t.clone(), FieldRole::Weight, |x, _| {
            C64::new(if x < PI { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        let ones = SpatialField::constant(t.clone(), C64::new(1.0, 0.0), FieldRole::State);
        let wu = multiply(&half, &ones).unwrap();
        assert!((wu.norm_sq() - 0.5 * ones.norm_sq()).abs() < 1e-12);

        let other = torus(8);
        let v = SpatialField::constant(other, C64::new(1.0, 0.0), FieldRole::State);
        assert!(matches!(multiply(&half, &v), Err(crate::Error::GeometryMismatch)));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let t = torus(8);
        let err = SpatialField::state(t, vec![C64::new(0.0, 0.0); 10]).unwrap_err();
        assert!(matches!(err, crate::Error::DimensionMismatch { expected: 64, got: 10 }));
    }

    #[test]
    fn random_states_avoid_nyquist_modes() {
        let t = torus(8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_state(&t, None, &mut rng);
        for (i, c) in u.coeffs().iter().enumerate() {
            if t.geometry().is_nyquist(i) {
                assert_eq!(*c, C64::new(0.0, 0.0));
            }
        }
        assert!((u.norm() - 1.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn round_trip_parseval(seed in any::<u64>()) {
            let g = TorusGeometry::new_2d(16, 8, 1.3, 2.1).unwrap();
            let tor = Torus::new(g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_grid_field(&tor, &mut rng);
            let c = u.to_fourier();
            prop_assert!((u.norm_sq() - c.norm_sq()).abs() <= 1e-12 * u.norm_sq());
            let back = from_fourier(&c);
            let err: f64 = back.values().iter().zip(u.values()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let scale: f64 = u.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-13 * scale);
        }

        // phase rounding grows like ε·|t|·λ_max, so times stay O(1) on a
        // torus with λ_max = 128
        #[test]
        fn unitarity_and_group_law(seed in any::<u64>(), s in -1.0f64..1.0, t in -1.0f64..1.0) {
            let tor = torus(16);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_grid_field(&tor, &mut rng).to_fourier();
            let p = propagate(&c, t);
            prop_assert!((p.norm() - c.norm()).abs() <= 1e-13 * c.norm());
            let two = propagate(&propagate(&c, s), t);
            let one = propagate(&c, s + t);
            let diff = two.sub(&one).unwrap().norm();
            prop_assert!(diff <= 1e-13 * c.norm());
            let back = propagate(&p, -t).sub(&c).unwrap().norm();
            prop_assert!(back <= 1e-15 * c.norm() * 10.0);
        }

        #[test]
        fn projectors_contract_and_commute(seed in any::<u64>(), h in 0.02f64..1.0, rho in 0.05f64..2.0, t in -3.0f64..3.0) {
            let tor = torus(16);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_state(&tor, None, &mut rng);
            let chi = CutoffProfile::default();
            let p = project_spectral(&u, h, rho, &chi).unwrap();
            prop_assert!(p.norm() <= u.norm() * (1.0 + 1e-15));
            let a = propagate(&p, t);
            let b = project_spectral(&propagate(&u, t), h, rho, &chi).unwrap();
            prop_assert!(a.sub(&b).unwrap().norm() <= 1e-15 * u.norm());
        }

        #[test]
        fn dyadic_energy_partition(seed in any::<u64>()) {
            let tor = torus(16);
            let spec = DyadicSpec::new(2.0, 7).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_state(&tor, Some(spec.covered_limit()), &mut rng);
            let total: f64 = (0..=spec.max_level).map(|k| dyadic_project(&u, &spec, k).unwrap().norm_sq()).sum();
            prop_assert!((total - u.norm_sq()).abs() <= 1e-10 * u.norm_sq());
        }

        #[test]
        fn real_weight_is_self_adjoint(seed in any::<u64>()) {
            let tor = torus(8);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.3).collect();
            let w = SpatialField::weight(tor.clone(), w).unwrap();
            let u = random_grid_field(&tor, &mut rng);
            let v = random_grid_field(&tor, &mut rng);
            let lhs = multiply(&w, &u).unwrap().inner(&v).unwrap();
            let rhs = u.inner(&multiply(&w, &v).unwrap()).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-14 * (1.0 + lhs.norm()));
            let q = multiply(&w, &u).unwrap().inner(&u).unwrap();
            prop_assert!(q.im.abs() <= 1e-13 * (1.0 + q.re.abs()));
        }
    }
}
