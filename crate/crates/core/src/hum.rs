//! Null control of `i u_t = -Δu + a(z) 1_{(0,T)} f` by the Hilbert Uniqueness
//! Method.
//!
//! With `S v₀ = a e^{itΔ} v₀` and `R f = i Σⱼ wⱼ e^{-itⱼΔ}(a fⱼ)` on a shared
//! time quadrature, the control Gramian `Λ = -iR∘S` coincides with the
//! observability Gramian for `W = a`. Solving `Λ w = u₀` and taking
//! `v₀ = -i w`, `f = S v₀` drives `u(T)` to zero on the truncated subspace up
//! to the CG tolerance.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov;
use crate::observability::{pairwise_sum, Gramian, ObservationConfig, ObservationSetup, SetupEcho, TimeQuadrature};
use crate::torus::{FieldRole, FourierField, SpatialField, Torus, C64};

const NODE_BLOCK: usize = 8;

/// Time samples of a field on `(0,T) × T²`, one grid field per quadrature node.
#[derive(Clone, Debug)]
pub struct ControlSamples {
    quadrature: TimeQuadrature,
    samples: Vec<SpatialField>,
}

impl ControlSamples {
    pub fn new(quadrature: TimeQuadrature, samples: Vec<SpatialField>) -> Result<Self> {
        if samples.len() != quadrature.len() {
            return Err(Error::DimensionMismatch {
                expected: quadrature.len(),
                got: samples.len(),
            });
        }
        if let Some(first) = samples.first() {
            for s in &samples[1..] {
                s.check_same(first.torus())?;
            }
        }
        Ok(Self { quadrature, samples })
    }

    pub fn zeros(torus: &Arc<Torus>, quadrature: &TimeQuadrature) -> Self {
        let zero = SpatialField::constant(torus.clone(), C64::new(0.0, 0.0), FieldRole::State);
        Self {
            samples: vec![zero; quadrature.len()],
            quadrature: quadrature.clone(),
        }
    }

    pub fn quadrature(&self) -> &TimeQuadrature {
        &self.quadrature
    }

    pub fn samples(&self) -> &[SpatialField] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Discrete `L²((0,T)×T²)` inner product `Σⱼ wⱼ ⟨fⱼ, gⱼ⟩`.
    pub fn inner(&self, other: &ControlSamples) -> Result<C64> {
        self.check_grid(other)?;
        let mut acc = C64::new(0.0, 0.0);
        for ((a, b), w) in self.samples.iter().zip(&other.samples).zip(&self.quadrature.weights) {
            acc += a.inner(b)? * *w;
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.quadrature.weights)
            .map(|(s, w)| w * s.norm_sq())
            .sum::<f64>()
            .sqrt()
    }

    /// Pointwise product with a weight at every node.
    pub fn multiply(&self, a: &SpatialField) -> Result<ControlSamples> {
        let samples = self
            .samples
            .iter()
            .map(|s| crate::torus::multiply(a, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            quadrature: self.quadrature.clone(),
            samples,
        })
    }

    fn check_grid(&self, other: &ControlSamples) -> Result<()> {
        if self.quadrature.nodes != other.quadrature.nodes || self.quadrature.weights != other.quadrature.weights {
            return Err(Error::InvalidParameter("control samples live on different time grids".into()));
        }
        if let (Some(a), Some(b)) = (self.samples.first(), other.samples.first()) {
            a.check_same(b.torus())?;
        }
        Ok(())
    }
}

fn check_on(setup: &ObservationSetup, u: &FourierField) -> Result<()> {
    if u.geometry() != setup.subspace().geometry() {
        return Err(Error::GeometryMismatch);
    }
    Ok(())
}

fn check_samples(setup: &ObservationSetup, f: &ControlSamples) -> Result<()> {
    let q = setup.quadrature();
    if f.quadrature.nodes != q.nodes || f.quadrature.weights != q.weights {
        return Err(Error::InvalidParameter(format!(
            "control samples use {} nodes, the setup expects {}",
            f.len(),
            q.len()
        )));
    }
    if let Some(s) = f.samples.first() {
        if s.geometry() != setup.subspace().geometry() {
            return Err(Error::GeometryMismatch);
        }
    }
    Ok(())
}

/// `S v₀`: sample `j` is `a · e^{itⱼΔ} v₀`.
pub fn apply_s(setup: &ObservationSetup, v0: &FourierField) -> Result<ControlSamples> {
    check_on(setup, v0)?;
    let a = setup.weight();
    let samples = setup
        .quadrature()
        .nodes
        .par_iter()
        .map(|&t| crate::torus::multiply(a, &v0.propagate(t).to_spatial(FieldRole::State)))
        .collect::<Result<Vec<_>>>()?;
    ControlSamples::new(setup.quadrature().clone(), samples)
}

/// `Σⱼ wⱼ e^{-itⱼΔ} sⱼ` in Fourier coefficients, reduced in a fixed order.
fn duhamel_sum(torus: &Arc<Torus>, quadrature: &TimeQuadrature, source: impl Fn(usize) -> Result<Vec<C64>> + Sync) -> Result<Vec<C64>> {
    let nodes = quadrature.len();
    let lams = torus.eigenvalues();
    let partials = (0..nodes.div_ceil(NODE_BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![C64::new(0.0, 0.0); lams.len()];
            for j in b * NODE_BLOCK..((b + 1) * NODE_BLOCK).min(nodes) {
                let mut buf = source(j)?;
                torus.fft().forward(&mut buf);
                let (t, w) = (quadrature.nodes[j], quadrature.weights[j]);
                for ((a, c), &l) in acc.iter_mut().zip(&buf).zip(lams) {
                    *a += c * C64::from_polar(w, t * l);
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(partials))
}

/// `R f = i Σⱼ wⱼ e^{-itⱼΔ}(a fⱼ)`, the value at `t = 0` of the solution of
/// the backward problem with zero final state.
pub fn apply_r(setup: &ObservationSetup, f: &ControlSamples) -> Result<FourierField> {
    check_samples(setup, f)?;
    let torus = setup.subspace().torus();
    let a = setup.weight().values();
    let sum = duhamel_sum(torus, setup.quadrature(), |j| {
        Ok(f.samples[j].values().iter().zip(a).map(|(v, w)| v * w).collect())
    })?;
    Ok(FourierField::new(torus.clone(), sum)?.scale(C64::new(0.0, 1.0)))
}

/// `u(T) = e^{iTΔ}u₀ - i Σⱼ wⱼ e^{i(T-tⱼ)Δ} sⱼ` for a source sampled on the
/// quadrature nodes (the physical source `a·f`, not `f`).
pub fn forward_with_source(u0: &FourierField, source: &ControlSamples) -> Result<FourierField> {
    if let Some(s) = source.samples.first() {
        s.check_same(u0.torus())?;
    }
    let q = source.quadrature();
    let sum = duhamel_sum(u0.torus(), q, |j| Ok(source.samples[j].values().to_vec()))?;
    let mut out = u0.clone();
    for (c, s) in out.coeffs_mut().iter_mut().zip(sum) {
        *c -= C64::new(0.0, 1.0) * s;
    }
    out.propagate_in_place(q.horizon);
    Ok(out)
}

/// Representation of the stored control: `plain` keeps `f = a e^{itΔ}v₀`,
/// `a_times_g` keeps `g = e^{itΔ}v₀` with `f = a·g`. The physical source is
/// `a·f = a²g` either way.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlForm {
    #[default]
    Plain,
    ATimesG,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub form: ControlForm,
}

impl Default for ControlOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 5000,
            form: ControlForm::Plain,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ControlSolution {
    pub u0: FourierField,
    /// HUM datum `v₀ = -i Λ⁻¹u₀`.
    pub v0: FourierField,
    pub form: ControlForm,
    /// `f` or `g` at the quadrature nodes, depending on `form`.
    pub control: ControlSamples,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    /// `‖P u(T)‖ / ‖u₀‖` on the truncated subspace.
    pub residual_truncated: f64,
    /// `‖u(T)‖ / ‖u₀‖` on the full grid (includes leakage of `a·f` above the cutoff).
    pub residual_full: f64,
}

impl ControlSolution {
    /// Control `f` at the nodes.
    pub fn control_f(&self, setup: &ObservationSetup) -> Result<ControlSamples> {
        match self.form {
            ControlForm::Plain => Ok(self.control.clone()),
            ControlForm::ATimesG => self.control.multiply(setup.weight()),
        }
    }

    /// Physical source `a·f` at the nodes.
    pub fn source(&self, setup: &ObservationSetup) -> Result<ControlSamples> {
        self.control_f(setup)?.multiply(setup.weight())
    }

    /// `‖f‖_{L²((0,T)×T²)}`.
    pub fn cost(&self, setup: &ObservationSetup) -> Result<f64> {
        Ok(self.control_f(setup)?.norm())
    }
}

/// `‖P u‖ / scale` and `‖u‖ / scale`.
fn residuals(setup: &ObservationSetup, u: &FourierField, scale: f64) -> (f64, f64) {
    let g = u.geometry().measure();
    let truncated = setup.subspace().project(u).iter().map(|c| c.norm_sqr()).sum::<f64>() * g;
    (truncated.sqrt() / scale, u.norm() / scale)
}

/// HUM control steering `u₀` to rest at time `T`. The control weight `a` is
/// `setup.weight()`; the setup's quadrature is shared by `S`, `R`, `Λ` and
/// the forward check.
pub fn synthesize_control(u0: &FourierField, setup: &ObservationSetup, options: &ControlOptions) -> Result<ControlSolution> {
    check_on(setup, u0)?;
    let sub = setup.subspace();
    let b = sub.restrict(u0)?;
    let gram = Gramian::new(setup)?;
    let cg = krylov::conjugate_gradient(|x| gram.apply_coeffs(x), &b, options.tolerance, options.max_iterations)?;
    let w = sub.embed(&cg.solution);
    let v0 = w.scale(C64::new(0.0, -1.0));
    let f = apply_s(setup, &v0)?;
    let source = f.multiply(setup.weight())?;
    let u_t = forward_with_source(u0, &source)?;
    let (residual_truncated, residual_full) = residuals(setup, &u_t, u0.norm());
    let control = match options.form {
        ControlForm::Plain => f,
        ControlForm::ATimesG => {
            let g = setup
                .quadrature()
                .nodes
                .par_iter()
                .map(|&t| v0.propagate(t).to_spatial(FieldRole::State))
                .collect();
            ControlSamples::new(setup.quadrature().clone(), g)?
        }
    };
    Ok(ControlSolution {
        u0: u0.clone(),
        v0,
        form: options.form,
        control,
        cg_iterations: cg.iterations,
        cg_residual: cg.residual,
        residual_truncated,
        residual_full,
    })
}

/// Final-state residuals of the continuous-in-time control
/// `f(t) = a e^{itΔ}v₀` integrated with an independent midpoint rule of
/// `factor·Nt` nodes. Samples are streamed, never stored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinedCheck {
    pub nodes: usize,
    pub residual_truncated: f64,
    pub residual_full: f64,
}

pub fn verify_refined(setup: &ObservationSetup, solution: &ControlSolution, factor: usize) -> Result<RefinedCheck> {
    let nodes = factor.max(1) * setup.quadrature().len();
    let q = TimeQuadrature::midpoint(setup.horizon(), nodes)?;
    let torus = setup.subspace().torus();
    let a2 = setup.weight_sq();
    let v0 = &solution.v0;
    let sum = duhamel_sum(torus, &q, |j| {
        let g = v0.propagate(q.nodes[j]).to_spatial(FieldRole::State);
        Ok(g.values().iter().zip(a2).map(|(v, w)| v * w).collect())
    })?;
    let mut u = solution.u0.clone();
    for (c, s) in u.coeffs_mut().iter_mut().zip(sum) {
        *c -= C64::new(0.0, 1.0) * s;
    }
    u.propagate_in_place(q.horizon);
    let (residual_truncated, residual_full) = residuals(setup, &u, solution.u0.norm());
    Ok(RefinedCheck {
        nodes,
        residual_truncated,
        residual_full,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub u_norm: f64,
    pub f_norm: f64,
}

/// `‖u(t)‖` and `‖f(t)‖` at `t = 0`, every node, and `t = T`. Inside the cell
/// of node `j` the source contributes in proportion to the elapsed fraction
/// of the cell.
pub fn control_trace(setup: &ObservationSetup, solution: &ControlSolution) -> Result<Vec<TracePoint>> {
    let q = setup.quadrature();
    let f = solution.control_f(setup)?;
    let a = setup.weight();
    let continuous_f = |t: f64| -> Result<f64> {
        Ok(crate::torus::multiply(a, &solution.v0.propagate(t).to_spatial(FieldRole::State))?.norm())
    };
    let mut out = Vec::with_capacity(q.len() + 2);
    out.push(TracePoint {
        t: 0.0,
        u_norm: solution.u0.norm(),
        f_norm: continuous_f(0.0)?,
    });
    let mut acc = solution.u0.clone();
    let mut start = 0.0;
    for (j, (t, w)) in q.iter().enumerate() {
        let mut s = crate::torus::multiply(a, &f.samples()[j])?.to_fourier();
        s.propagate_in_place(-t);
        let frac = ((t - start) / w).clamp(0.0, 1.0);
        let mut here = acc.clone();
        for (c, v) in here.coeffs_mut().iter_mut().zip(s.coeffs()) {
            *c -= C64::new(0.0, frac * w) * v;
        }
        for (c, v) in acc.coeffs_mut().iter_mut().zip(s.coeffs()) {
            *c -= C64::new(0.0, w) * v;
        }
        start += w;
        out.push(TracePoint {
            t,
            u_norm: here.propagate(t).norm(),
            f_norm: f.samples()[j].norm(),
        });
    }
    out.push(TracePoint {
        t: q.horizon,
        u_norm: acc.propagate(q.horizon).norm(),
        f_norm: continuous_f(q.horizon)?,
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlReport {
    pub setup: SetupEcho,
    pub form: ControlForm,
    pub tolerance: f64,
    pub cg_iterations: usize,
    pub cg_residual: f64,
    pub residual_truncated: f64,
    pub residual_full: f64,
    pub u0_norm: f64,
    pub v0_norm: f64,
    pub control_cost: f64,
    pub refined: Option<RefinedCheck>,
}

impl ControlReport {
    pub fn new(
        setup: &ObservationSetup,
        options: &ControlOptions,
        solution: &ControlSolution,
        refined: Option<RefinedCheck>,
    ) -> Result<Self> {
        Ok(Self {
            setup: SetupEcho::of(setup),
            form: solution.form,
            tolerance: options.tolerance,
            cg_iterations: solution.cg_iterations,
            cg_residual: solution.cg_residual,
            residual_truncated: solution.residual_truncated,
            residual_full: solution.residual_full,
            u0_norm: solution.u0.norm(),
            v0_norm: solution.v0.norm(),
            control_cost: solution.cost(setup)?,
            refined,
        })
    }
}

/// Observation setup for control problems: `a` plays the role of `W`.
pub fn control_setup(a: &SpatialField, horizon: f64, lambda_max: f64) -> Result<ObservationSetup> {
    ObservationSetup::new(a, ObservationConfig::new(horizon, lambda_max))
}
