//! The damped equation `(i∂ₜ + Δ + ia)u = 0`, `a >= 0`, by Strang splitting
//! `e^{-aδ/2} ∘ e^{iδΔ} ∘ e^{-aδ/2}`. Each factor is a contraction, so the
//! discrete norm is nonincreasing step by step.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{SpatialField, Torus, C64};

/// Entries of `a` below this are treated as rounding noise and clamped to 0.
const NEGATIVE_SLACK: f64 = 1e-12;

/// Precomputed half-step damping factors and free-step phases for a fixed `δ`.
#[derive(Clone, Debug)]
pub struct Damper {
    torus: Arc<Torus>,
    damping: Vec<f64>,
    half: Vec<f64>,
    phases: Vec<C64>,
    delta: f64,
}

impl Damper {
    pub fn new(a: &SpatialField, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {delta}")));
        }
        let damping = checked_damping(a)?;
        let half = damping.iter().map(|&v| (-0.5 * delta * v).exp()).collect();
        let phases = a
            .torus()
            .eigenvalues()
            .iter()
            .map(|&l| C64::from_polar(1.0, -delta * l))
            .collect();
        Ok(Self {
            torus: a.torus().clone(),
            damping,
            half,
            phases,
            delta,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    pub fn step_in_place(&self, values: &mut [C64]) {
        for (v, h) in values.iter_mut().zip(&self.half) {
            *v *= h;
        }
        let fft = self.torus.fft();
        fft.forward(values);
        for (v, p) in values.iter_mut().zip(&self.phases) {
            *v *= p;
        }
        fft.inverse(values);
        for (v, h) in values.iter_mut().zip(&self.half) {
            *v *= h;
        }
    }

    /// `∫ a |u|²` on the grid.
    pub fn dissipation(&self, values: &[C64]) -> f64 {
        self.damping
            .iter()
            .zip(values)
            .map(|(a, v)| a * v.norm_sqr())
            .sum::<f64>()
            * self.torus.geometry().cell_area()
    }
}

fn checked_damping(a: &SpatialField) -> Result<Vec<f64>> {
    let mut vals = a.real_values()?;
    for (index, v) in vals.iter_mut().enumerate() {
        if *v < -NEGATIVE_SLACK {
            return Err(Error::NegativeDamping { index, value: *v });
        }
        *v = v.max(0.0);
    }
    Ok(vals)
}

/// One Strang step of length `delta`.
pub fn damped_step(u: &SpatialField, a: &SpatialField, delta: f64) -> Result<SpatialField> {
    u.check_same(a.torus())?;
    let damper = Damper::new(a, delta)?;
    let mut values = u.values().to_vec();
    damper.step_in_place(&mut values);
    SpatialField::new(u.torus().clone(), values, u.role())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingEcho {
    pub label: String,
    pub mean: f64,
    pub sup: f64,
    pub l2_norm: f64,
}

/// Least-squares fit of `log‖u(t)‖ = log C - c t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub delta: f64,
    pub steps: usize,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// Per step: `‖u_{k+1}‖² - ‖u_k‖² + δ(∫a|u_k|² + ∫a|u_{k+1}|²)`; zero at `t = 0`.
    pub energy_residuals: Vec<f64>,
    /// `|Σ_k energy_residuals[k]|`, the energy identity checked over `[0, T]`.
    pub global_energy_residual: f64,
    /// Steps where the norm increased.
    pub monotonicity_violations: usize,
    pub fit: DecayFit,
    pub damping: DampingEcho,
}

/// Fraction of the horizon skipped before fitting the decay rate.
pub const FIT_START_FRACTION: f64 = 0.2;

/// Evolves `u0` to `tmax` with steps of (at most) `delta`; the step is shrunk
/// so that an integer number of steps lands exactly on `tmax`.
pub fn damped_evolve(u0: &SpatialField, a: &SpatialField, tmax: f64, delta: f64, label: &str) -> Result<DecayReport> {
    damped_evolve_with(u0, a, tmax, delta, label, |_, _, _| {})
}

/// As [`damped_evolve`], calling `observe(k, t, values)` after every step
/// (and once at `t = 0`).
pub fn damped_evolve_with(
    u0: &SpatialField,
    a: &SpatialField,
    tmax: f64,
    delta: f64,
    label: &str,
    mut observe: impl FnMut(usize, f64, &[C64]),
) -> Result<DecayReport> {
    u0.check_same(a.torus())?;
    if !(tmax > 0.0 && tmax.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {tmax}")));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {delta}")));
    }
    let steps = ((tmax / delta) - 1e-9).ceil().max(1.0) as usize;
    let damper = Damper::new(a, tmax / steps as f64)?;
    let delta = damper.delta();
    let cell = u0.geometry().cell_area();
    let norm_sq = |v: &[C64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>() * cell;

    let mut u = u0.values().to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    let mut residuals = Vec::with_capacity(steps + 1);
    let mut violations = 0;
    let mut n_prev = norm_sq(&u);
    let mut d_prev = damper.dissipation(&u);
    times.push(0.0);
    norms.push(n_prev.sqrt());
    residuals.push(0.0);
    observe(0, 0.0, &u);
    for k in 1..=steps {
        damper.step_in_place(&mut u);
        let n = norm_sq(&u);
        let d = damper.dissipation(&u);
        let t = k as f64 * delta;
        if n > n_prev {
            violations += 1;
        }
        residuals.push(n - n_prev + delta * (d_prev + d));
        times.push(t);
        norms.push(n.sqrt());
        observe(k, t, &u);
        n_prev = n;
        d_prev = d;
    }
    let fit = fit_decay(&times, &norms, FIT_START_FRACTION * tmax);
    let global = residuals.iter().sum::<f64>().abs();
    let damp = damper.damping();
    Ok(DecayReport {
        delta,
        steps,
        horizon: steps as f64 * delta,
        times,
        norms,
        energy_residuals: residuals,
        global_energy_residual: global,
        monotonicity_violations: violations,
        fit,
        damping: DampingEcho {
            label: label.to_string(),
            mean: damp.iter().sum::<f64>() / damp.len() as f64,
            sup: damp.iter().copied().fold(0.0, f64::max),
            l2_norm: (damp.iter().map(|v| v * v).sum::<f64>() * cell).sqrt(),
        },
    })
}

/// Fits `log norm = log C - c t` on samples with `t >= start`.
pub fn fit_decay(times: &[f64], norms: &[f64], start: f64) -> DecayFit {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(t, n)| **t >= start - 1e-12 && **n > 0.0)
        .map(|(t, n)| (*t, n.ln()))
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (sxx, sxy, syy) = pts.iter().fold((0.0, 0.0, 0.0), |(a, b, c), (x, y)| {
        let (dx, dy) = (x - mx, y - my);
        (a + dx * dx, b + dx * dy, c + dy * dy)
    });
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    DecayFit {
        rate: -slope,
        prefactor: intercept.exp(),
        r_squared,
        window_start: pts.first().map_or(start, |p| p.0),
        window_end: pts.last().map_or(start, |p| p.0),
        points: pts.len(),
    }
}
