use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::setup::{required_nodes, TimeQuadrature};
use crate::error::Result;
use crate::torus::{random_state, FieldRole, FourierField, Torus};

/// `U(z) = Σⱼ wⱼ |e^{itⱼΔ}u₀(z)|²`, the time-integrated density on the grid.
pub fn time_integrated_density(u0: &FourierField, quadrature: &TimeQuadrature) -> Vec<f64> {
    let n = u0.geometry().len();
    let mut density = vec![0.0; n];
    let mut state = u0.clone();
    let mut t_prev = 0.0;
    for (t, w) in quadrature.iter() {
        state.propagate_in_place(t - t_prev);
        t_prev = t;
        let grid = state.to_spatial(FieldRole::State);
        for (d, v) in density.iter_mut().zip(grid.values()) {
            *d += w * v.norm_sqr();
        }
    }
    density
}

/// Spread of the eigenvalues carried by `u` (zero for a single eigenspace).
pub fn state_bandwidth(u: &FourierField) -> f64 {
    let lams = u.torus().eigenvalues();
    let (lo, hi) = u
        .coeffs()
        .iter()
        .zip(lams)
        .filter(|(c, _)| c.norm_sqr() > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &l)| (lo.min(l), hi.max(l)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Node count the sampling rule asks for when integrating `|e^{itΔ}u|²`.
pub fn density_nodes(u: &FourierField, horizon: f64) -> usize {
    required_nodes(horizon, state_bandwidth(u))
}

/// `‖e^{itΔ}u₀‖_{L⁴(T²; L²(0,T))}` with a midpoint rule of `nodes` points.
pub fn mixed_norm_l4l2(u0: &FourierField, horizon: f64, nodes: usize) -> Result<f64> {
    let q = TimeQuadrature::midpoint(horizon, nodes)?;
    let density = time_integrated_density(u0, &q);
    let cell = u0.geometry().cell_area();
    let s: f64 = density.iter().map(|d| d * d).sum::<f64>() * cell;
    Ok(s.powf(0.25))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrichartzSweep {
    pub lambda_max: f64,
    pub horizon: f64,
    pub trials: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// Ratio `‖e^{itΔ}u₀‖_{L⁴L²} / ‖u₀‖_{L²}` over random states band-limited to
/// `λ <= lambda_max`.
pub fn strichartz_sweep<R: Rng + ?Sized>(
    torus: &Arc<Torus>,
    lambda_max: f64,
    horizon: f64,
    trials: usize,
    rng: &mut R,
) -> Result<StrichartzSweep> {
    let mut max_ratio: f64 = 0.0;
    let mut sum = 0.0;
    for _ in 0..trials {
        let u = random_state(torus, Some(lambda_max), rng);
        let nodes = density_nodes(&u, horizon);
        let r = mixed_norm_l4l2(&u, horizon, nodes)? / u.norm();
        max_ratio = max_ratio.max(r);
        sum += r;
    }
    Ok(StrichartzSweep {
        lambda_max,
        horizon,
        trials,
        max_ratio,
        mean_ratio: sum / trials.max(1) as f64,
    })
}
