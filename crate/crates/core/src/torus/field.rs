use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cutoff::{CutoffProfile, DyadicSpec};
use super::{Torus, TorusGeometry};
use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    State,
    Weight,
}

/// Complex field sampled on the torus grid.
#[derive(Clone, Debug)]
pub struct SpatialField {
    torus: Arc<Torus>,
    values: Vec<C64>,
    role: FieldRole,
}

impl SpatialField {
    pub fn new(torus: Arc<Torus>, values: Vec<C64>, role: FieldRole) -> Result<Self> {
        let expected = torus.geometry().len();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidParameter("field contains non-finite values".into()));
        }
        Ok(Self {
            torus,
            values,
            role,
        })
    }

    pub fn state(torus: Arc<Torus>, values: Vec<C64>) -> Result<Self> {
        Self::new(torus, values, FieldRole::State)
    }

    /// Real weight field (an observation weight `W` or a damping `a`).
    pub fn weight(torus: Arc<Torus>, values: Vec<f64>) -> Result<Self> {
        Self::new(
            torus,
            values.into_iter().map(|v| C64::new(v, 0.0)).collect(),
            FieldRole::Weight,
        )
    }

    pub fn from_fn(torus: Arc<Torus>, role: FieldRole, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let g = *torus.geometry();
        let values = (0..g.len())
            .map(|i| {
                let (x, y) = g.point(i);
                f(x, y)
            })
            .collect();
        Self::new(torus, values, role)
    }

    pub fn constant(torus: Arc<Torus>, value: C64, role: FieldRole) -> Self {
        let n = torus.geometry().len();
        Self {
            torus,
            values: vec![value; n],
            role,
        }
    }

    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    pub fn geometry(&self) -> &TorusGeometry {
        self.torus.geometry()
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Self {
        self.role = role;
        self
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Real parts, provided every imaginary part is negligible.
    pub fn real_values(&self) -> Result<Vec<f64>> {
        let scale = self.max_abs().max(1.0);
        if let Some((i, v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| v.im.abs() > 1e-14 * scale)
        {
            return Err(Error::InvalidParameter(format!(
                "weight must be real; imaginary part {:.3e} at index {i}",
                v.im
            )));
        }
        Ok(self.values.iter().map(|v| v.re).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn norm_sq(&self) -> f64 {
        self.geometry().cell_area() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `L^p` norm of the modulus against Lebesgue measure.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm().powf(p)).sum();
        (self.geometry().cell_area() * s).powf(1.0 / p)
    }

    /// `⟨self, other⟩ = ∫ self · conj(other)`.
    pub fn inner(&self, other: &SpatialField) -> Result<C64> {
        self.check_same(other.torus())?;
        let s: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.geometry().cell_area())
    }

    pub fn to_fourier(&self) -> FourierField {
        let mut coeffs = self.values.clone();
        self.torus.fft().forward(&mut coeffs);
        FourierField {
            torus: self.torus.clone(),
            coeffs,
        }
    }

    pub(crate) fn check_same(&self, other: &Torus) -> Result<()> {
        if self.geometry() != other.geometry() {
            return Err(Error::GeometryMismatch);
        }
        Ok(())
    }
}

/// Pointwise product `w · u`; the result keeps the role of `u`.
pub fn multiply(w: &SpatialField, u: &SpatialField) -> Result<SpatialField> {
    u.check_same(w.torus())?;
    let values = w.values.iter().zip(&u.values).map(|(a, b)| a * b).collect();
    Ok(SpatialField {
        torus: u.torus.clone(),
        values,
        role: u.role,
    })
}

/// Fourier-series coefficients `c_{mn}` of a grid field, so that
/// `u(z) = Σ c_{mn} e^{i2π(mx/A + ny/B)}`.
#[derive(Clone, Debug)]
pub struct FourierField {
    torus: Arc<Torus>,
    coeffs: Vec<C64>,
}

impl FourierField {
    pub fn new(torus: Arc<Torus>, coeffs: Vec<C64>) -> Result<Self> {
        let expected = torus.geometry().len();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { torus, coeffs })
    }

    pub fn zeros(torus: Arc<Torus>) -> Self {
        let n = torus.geometry().len();
        Self {
            torus,
            coeffs: vec![ZERO; n],
        }
    }

    pub fn single_mode(torus: Arc<Torus>, m: i64, n: i64, c: C64) -> Result<Self> {
        let i = torus.geometry().index_of_mode(m, n).ok_or_else(|| {
            Error::InvalidParameter(format!("mode ({m}, {n}) is outside the grid band"))
        })?;
        let mut f = Self::zeros(torus);
        f.coeffs[i] = c;
        Ok(f)
    }

    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    pub fn geometry(&self) -> &TorusGeometry {
        self.torus.geometry()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn coefficient(&self, m: i64, n: i64) -> Option<C64> {
        self.geometry().index_of_mode(m, n).map(|i| self.coeffs[i])
    }

    /// `‖u‖²_{L²} = |T|·Σ|c|²`.
    pub fn norm_sq(&self) -> f64 {
        self.geometry().measure() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn inner(&self, other: &FourierField) -> Result<C64> {
        if self.geometry() != other.geometry() {
            return Err(Error::GeometryMismatch);
        }
        let s: C64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.geometry().measure())
    }

    pub fn to_spatial(&self, role: FieldRole) -> SpatialField {
        let mut values = self.coeffs.clone();
        self.torus.fft().inverse(&mut values);
        SpatialField {
            torus: self.torus.clone(),
            values,
            role,
        }
    }

    /// Free Schrödinger flow `e^{itΔ}`: `c_{mn} ↦ e^{-itλ_{mn}} c_{mn}`.
    pub fn propagate(&self, t: f64) -> FourierField {
        let mut out = self.clone();
        out.propagate_in_place(t);
        out
    }

    pub fn propagate_in_place(&mut self, t: f64) {
        if t == 0.0 {
            return;
        }
        for (c, &lam) in self.coeffs.iter_mut().zip(self.torus.eigenvalues()) {
            *c *= C64::from_polar(1.0, -t * lam);
        }
    }

    /// Spectral shell projector `χ((-h²Δ - 1)/ρ)`.
    pub fn project_spectral(&self, h: f64, rho: f64, chi: &CutoffProfile) -> Result<FourierField> {
        if !(h > 0.0) || !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "semiclassical parameters must be positive (h = {h}, rho = {rho})"
            )));
        }
        let mut out = self.clone();
        for (c, &lam) in out.coeffs.iter_mut().zip(self.torus.eigenvalues()) {
            *c *= chi.eval((h * h * lam - 1.0) / rho);
        }
        Ok(out)
    }

    /// Dyadic piece `φ_k(-Δ) u`. Fails if `u` has mass above the range on which
    /// the partition is complete.
    pub fn dyadic_project(&self, spec: &DyadicSpec, k: usize) -> Result<FourierField> {
        if k > spec.max_level {
            return Err(Error::InvalidParameter(format!(
                "dyadic level {k} exceeds max level {}",
                spec.max_level
            )));
        }
        let limit = spec.covered_limit();
        let g = *self.geometry();
        let uncovered: Vec<(i64, i64)> = self
            .coeffs
            .iter()
            .zip(self.torus.eigenvalues())
            .enumerate()
            .filter(|(_, (c, &lam))| c.norm_sqr() > 0.0 && lam > limit)
            .map(|(i, _)| g.mode(i))
            .collect();
        if !uncovered.is_empty() {
            return Err(Error::UncoveredSpectrum {
                limit,
                modes: uncovered,
            });
        }
        let mut out = self.clone();
        for (c, &lam) in out.coeffs.iter_mut().zip(self.torus.eigenvalues()) {
            *c *= spec.level(k, lam);
        }
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> FourierField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add(&self, other: &FourierField) -> Result<FourierField> {
        if self.geometry() != other.geometry() {
            return Err(Error::GeometryMismatch);
        }
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &FourierField) -> Result<FourierField> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }
}
