use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{FourierField, SpatialField, Torus, TorusGeometry, C64};

/// Oversampling factor of the time grid against the fastest oscillation.
pub const OVERSAMPLING: f64 = 4.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    #[default]
    Midpoint,
    Trapezoid,
}

/// Nodes and positive weights on `[0, T]` with `Σ w = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeQuadrature {
    pub rule: QuadratureRule,
    pub horizon: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TimeQuadrature {
    pub fn new(rule: QuadratureRule, horizon: f64, count: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        match rule {
            QuadratureRule::Midpoint => {
                if count == 0 {
                    return Err(Error::InvalidParameter("midpoint rule needs at least one node".into()));
                }
                let h = horizon / count as f64;
                Ok(Self {
                    rule,
                    horizon,
                    nodes: (0..count).map(|j| (j as f64 + 0.5) * h).collect(),
                    weights: vec![h; count],
                })
            }
            QuadratureRule::Trapezoid => {
                if count < 2 {
                    return Err(Error::InvalidParameter("trapezoid rule needs at least two nodes".into()));
                }
                let h = horizon / (count - 1) as f64;
                let mut weights = vec![h; count];
                weights[0] = 0.5 * h;
                weights[count - 1] = 0.5 * h;
                Ok(Self {
                    rule,
                    horizon,
                    nodes: (0..count).map(|j| j as f64 * h).collect(),
                    weights,
                })
            }
        }
    }

    pub fn midpoint(horizon: f64, count: usize) -> Result<Self> {
        Self::new(QuadratureRule::Midpoint, horizon, count)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Node count demanded by the sampling rule `Nt >= ceil(4·T·Ω/(2π))` for a
/// signal whose time frequencies spread over a band of width `Ω`.
pub fn required_nodes(horizon: f64, bandwidth: f64) -> usize {
    ((OVERSAMPLING * horizon * bandwidth / TAU).ceil() as usize).max(1)
}

/// The working space `{modes : λ <= Λmax}` minus the Nyquist rows.
#[derive(Clone, Debug)]
pub struct Subspace {
    torus: Arc<Torus>,
    indices: Vec<usize>,
    lambda_max: f64,
}

impl Subspace {
    pub fn new(torus: Arc<Torus>, lambda_max: f64) -> Result<Self> {
        let indices = torus.modes_below(lambda_max);
        if indices.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "frequency cutoff {lambda_max} leaves an empty subspace"
            )));
        }
        Ok(Self {
            torus,
            indices,
            lambda_max,
        })
    }

    pub fn torus(&self) -> &Arc<Torus> {
        &self.torus
    }

    pub fn geometry(&self) -> &TorusGeometry {
        self.torus.geometry()
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Flat grid indices of the retained modes, sorted by eigenvalue.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.indices.iter().map(|&i| self.torus.eigenvalues()[i])
    }

    /// Spread `max λ - min λ` of the retained eigenvalues.
    pub fn bandwidth(&self) -> f64 {
        let (lo, hi) = self
            .eigenvalues()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l), hi.max(l)));
        hi - lo
    }

    /// Coefficients on the retained modes; fails if `u` carries mass elsewhere.
    pub fn restrict(&self, u: &FourierField) -> Result<Vec<C64>> {
        if u.geometry() != self.geometry() {
            return Err(Error::GeometryMismatch);
        }
        let total: f64 = u.coeffs().iter().map(|c| c.norm_sqr()).sum();
        let mut inside = vec![false; u.coeffs().len()];
        for &i in &self.indices {
            inside[i] = true;
        }
        if let Some((i, _)) = u
            .coeffs()
            .iter()
            .enumerate()
            .find(|(i, c)| !inside[*i] && c.norm_sqr() > 1e-24 * total)
        {
            return Err(Error::OutsideSubspace {
                mode: self.geometry().mode(i),
            });
        }
        Ok(self.project(u))
    }

    /// Orthogonal projection onto the retained modes.
    pub fn project(&self, u: &FourierField) -> Vec<C64> {
        self.indices.iter().map(|&i| u.coeffs()[i]).collect()
    }

    pub fn embed(&self, x: &[C64]) -> FourierField {
        let mut f = FourierField::zeros(self.torus.clone());
        for (&i, &c) in self.indices.iter().zip(x) {
            f.coeffs_mut()[i] = c;
        }
        f
    }

    pub fn contains(&self, m: i64, n: i64) -> bool {
        self.geometry()
            .index_of_mode(m, n)
            .is_some_and(|i| self.indices.contains(&i))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationConfig {
    pub horizon: f64,
    pub lambda_max: f64,
    /// Explicit node count; the sampling rule picks one when `None`.
    pub nodes: Option<usize>,
    pub rule: QuadratureRule,
    /// Accept node counts below the sampling rule (recorded in reports).
    pub allow_undersampling: bool,
}

impl ObservationConfig {
    pub fn new(horizon: f64, lambda_max: f64) -> Self {
        Self {
            horizon,
            lambda_max,
            nodes: None,
            rule: QuadratureRule::Midpoint,
            allow_undersampling: false,
        }
    }

    pub fn with_nodes(mut self, nodes: usize) -> Self {
        self.nodes = Some(nodes);
        self
    }

    pub fn with_rule(mut self, rule: QuadratureRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn allow_undersampling(mut self) -> Self {
        self.allow_undersampling = true;
        self
    }
}

/// Everything that defines the observability Gramian
/// `G_T = ∫₀ᵀ e^{-itΔ} M_{W²} e^{itΔ} dt` on the truncated subspace.
#[derive(Clone, Debug)]
pub struct ObservationSetup {
    weight: SpatialField,
    weight_sq: Vec<f64>,
    config: ObservationConfig,
    subspace: Subspace,
    quadrature: TimeQuadrature,
    required_nodes: usize,
}

impl ObservationSetup {
    pub fn new(weight: &SpatialField, config: ObservationConfig) -> Result<Self> {
        let w = weight.real_values()?;
        let l4 = weight.lp_norm(4.0);
        if !(l4 > 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "observation weight has vanishing L4 norm ({l4:.3e})"
            )));
        }
        let subspace = Subspace::new(weight.torus().clone(), config.lambda_max)?;
        let required = required_nodes(config.horizon, config.lambda_max);
        let nodes = config.nodes.unwrap_or(required);
        if nodes < required && !config.allow_undersampling {
            return Err(Error::InvalidParameter(format!(
                "{nodes} time nodes violate the sampling rule (need >= {required} for T = {}, cutoff {})",
                config.horizon, config.lambda_max
            )));
        }
        let quadrature = TimeQuadrature::new(config.rule, config.horizon, nodes)?;
        Ok(Self {
            weight: weight.clone(),
            weight_sq: w.iter().map(|v| v * v).collect(),
            config,
            subspace,
            quadrature,
            required_nodes: required,
        })
    }

    pub fn weight(&self) -> &SpatialField {
        &self.weight
    }

    /// `W²` on the grid.
    pub fn weight_sq(&self) -> &[f64] {
        &self.weight_sq
    }

    pub fn config(&self) -> &ObservationConfig {
        &self.config
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn quadrature(&self) -> &TimeQuadrature {
        &self.quadrature
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon
    }

    pub fn required_nodes(&self) -> usize {
        self.required_nodes
    }

    pub fn sampling_overridden(&self) -> bool {
        self.quadrature.len() < self.required_nodes
    }
}
