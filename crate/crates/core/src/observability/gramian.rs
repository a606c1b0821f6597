use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::setup::{ObservationConfig, ObservationSetup, QuadratureRule, Subspace, TimeQuadrature};
use crate::error::{Error, Result};
use crate::krylov::{self, EigenMethod};
use crate::torus::{FourierField, SpatialField, TorusGeometry, C64};

/// Nodes handled by one worker before its partial sum joins the reduction.
const NODE_BLOCK: usize = 8;

/// Eigensolver residual target relative to the requested accuracy.
const RESIDUAL_MARGIN: f64 = 1e-2;

/// `P Σⱼ wⱼ e^{-itⱼΔ} M_m e^{itⱼΔ} P` for a real multiplier `m` and the
/// projector `P` onto a truncated subspace.
///
/// Acts on coefficient vectors of the subspace. Each term is a conjugated
/// nonnegative multiplier when `m >= 0`, so the sum is Hermitian and
/// positive semidefinite.
#[derive(Clone, Debug)]
pub struct ConjugatedMultiplier {
    subspace: Subspace,
    multiplier: Vec<f64>,
    weights: Vec<f64>,
    /// `e^{-itⱼλₖ}`, node-major.
    phases: Vec<C64>,
}

impl ConjugatedMultiplier {
    pub fn new(subspace: Subspace, multiplier: Vec<f64>, quadrature: &TimeQuadrature) -> Result<Self> {
        let n = subspace.geometry().len();
        if multiplier.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: multiplier.len(),
            });
        }
        let lambdas: Vec<f64> = subspace.eigenvalues().collect();
        let phases = quadrature
            .nodes
            .iter()
            .flat_map(|&t| lambdas.iter().map(move |&l| C64::from_polar(1.0, -t * l)))
            .collect();
        Ok(Self {
            subspace,
            multiplier,
            weights: quadrature.weights.clone(),
            phases,
        })
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim(), "vector does not match subspace dimension");
        let nodes = self.weights.len();
        let blocks = nodes.div_ceil(NODE_BLOCK);
        let partials: Vec<Vec<C64>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![C64::new(0.0, 0.0); self.dim()];
                let mut buf = vec![C64::new(0.0, 0.0); self.multiplier.len()];
                for j in b * NODE_BLOCK..((b + 1) * NODE_BLOCK).min(nodes) {
                    self.accumulate_node(j, x, &mut buf, &mut acc);
                }
                acc
            })
            .collect();
        pairwise_sum(partials)
    }

    fn accumulate_node(&self, j: usize, x: &[C64], buf: &mut [C64], acc: &mut [C64]) {
        let dim = self.dim();
        let phases = &self.phases[j * dim..(j + 1) * dim];
        let idx = self.subspace.indices();
        let fft = self.subspace.torus().fft();
        buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for ((&i, &c), &p) in idx.iter().zip(x).zip(phases) {
            buf[i] = c * p;
        }
        fft.inverse(buf);
        for (v, &m) in buf.iter_mut().zip(&self.multiplier) {
            *v *= m;
        }
        fft.forward(buf);
        let w = self.weights[j];
        for ((a, &i), &p) in acc.iter_mut().zip(idx).zip(phases) {
            *a += buf[i] * p.conj() * w;
        }
    }
}

/// Fixed-shape pairwise reduction; the result does not depend on how the
/// partials were scheduled.
pub fn pairwise_sum(mut parts: Vec<Vec<C64>>) -> Vec<C64> {
    if parts.is_empty() {
        return Vec::new();
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}

/// Matrix-free observability Gramian built from an [`ObservationSetup`].
#[derive(Clone, Debug)]
pub struct Gramian {
    setup: ObservationSetup,
    op: ConjugatedMultiplier,
}

impl Gramian {
    pub fn new(setup: &ObservationSetup) -> Result<Self> {
        let op = ConjugatedMultiplier::new(setup.subspace().clone(), setup.weight_sq().to_vec(), setup.quadrature())?;
        Ok(Self {
            setup: setup.clone(),
            op,
        })
    }

    pub fn setup(&self) -> &ObservationSetup {
        &self.setup
    }

    pub fn operator(&self) -> &ConjugatedMultiplier {
        &self.op
    }

    pub fn apply_coeffs(&self, x: &[C64]) -> Vec<C64> {
        self.op.apply(x)
    }

    pub fn apply(&self, u: &FourierField) -> Result<FourierField> {
        let x = self.setup.subspace().restrict(u)?;
        Ok(self.setup.subspace().embed(&self.op.apply(&x)))
    }

    /// Column-by-column assembly (for small subspaces).
    pub fn assemble_dense(&self) -> DMatrix<C64> {
        let dim = self.op.dim();
        let mut g = DMatrix::<C64>::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            e[k] = C64::new(1.0, 0.0);
            let col = self.op.apply(&e);
            e[k] = C64::new(0.0, 0.0);
            for (r, v) in col.into_iter().enumerate() {
                g[(r, k)] = v;
            }
        }
        g
    }
}

/// `G_T u`, re-projected onto the truncated subspace.
pub fn gramian_apply(setup: &ObservationSetup, u: &FourierField) -> Result<FourierField> {
    Gramian::new(setup)?.apply(u)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub method: EigenMethod,
    /// Relative accuracy target for `λ_min`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: EigenMethod::Lanczos,
            tolerance: 1e-8,
            max_iterations: 2000,
            seed: 0x5eed,
        }
    }
}

impl SolverOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_method(mut self, method: EigenMethod) -> Self {
        self.method = method;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetupEcho {
    pub geometry: TorusGeometry,
    pub horizon: f64,
    pub lambda_max: f64,
    pub nodes: usize,
    pub required_nodes: usize,
    pub rule: QuadratureRule,
    pub sampling_overridden: bool,
    pub weight_l4_norm: f64,
    pub weight_sup_norm: f64,
    pub rational_aspect: Option<(i64, i64)>,
}

impl SetupEcho {
    pub fn of(setup: &ObservationSetup) -> Self {
        let g = *setup.subspace().geometry();
        Self {
            geometry: g,
            horizon: setup.horizon(),
            lambda_max: setup.config().lambda_max,
            nodes: setup.quadrature().len(),
            required_nodes: setup.required_nodes(),
            rule: setup.config().rule,
            sampling_overridden: setup.sampling_overridden(),
            weight_l4_norm: setup.weight().lp_norm(4.0),
            weight_sup_norm: setup.weight().max_abs(),
            rational_aspect: g.rational_aspect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramianReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Observability constant `K = 1/λ_min`.
    pub constant: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub residual: f64,
    pub dim: usize,
    pub method: EigenMethod,
    pub seed: u64,
    pub setup: SetupEcho,
}

/// Smallest and largest eigenvalue of `G_T` on the truncated subspace.
pub fn observability_constant(setup: &ObservationSetup, options: &SolverOptions) -> Result<GramianReport> {
    let gram = Gramian::new(setup)?;
    let dim = gram.operator().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let start = krylov::random_vector(dim, &mut rng);
    let apply = |x: &[C64]| gram.apply_coeffs(x);
    // A residual of tol·θ only puts θ within tol of *some* eigenvalue; when
    // the bottom of the spectrum holds a cluster narrower than tol, that can
    // be the wrong one. The margin resolves such clusters.
    let residual_tol = options.tolerance * RESIDUAL_MARGIN;
    let lz = krylov::lanczos_extremes(apply, start.clone(), residual_tol, options.max_iterations)?;
    let (lambda_min, residual, iterations, inner) = match options.method {
        EigenMethod::Lanczos => (lz.smallest, lz.residual, lz.iterations, 0),
        EigenMethod::InversePower => {
            let ip = krylov::inverse_power_smallest(apply, start, residual_tol, options.max_iterations)?;
            (ip.smallest, ip.residual, ip.outer_iterations, ip.inner_iterations)
        }
    };
    Ok(GramianReport {
        lambda_min,
        lambda_max: lz.largest,
        constant: if lambda_min > 0.0 { 1.0 / lambda_min } else { f64::INFINITY },
        iterations,
        inner_iterations: inner,
        residual,
        dim,
        method: options.method,
        seed: options.seed,
        setup: SetupEcho::of(setup),
    })
}

/// One row of a `K(Λmax)` sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda_max: f64,
    pub dim: usize,
    pub lambda_min: f64,
    #[serde(rename = "K")]
    pub constant: f64,
    pub iters: usize,
}

/// Observability constant for each cutoff, with node counts chosen by the
/// sampling rule unless `base` pins them.
pub fn sweep_cutoffs(
    weight: &SpatialField,
    base: &ObservationConfig,
    cutoffs: &[f64],
    options: &SolverOptions,
) -> Result<Vec<SweepRow>> {
    cutoffs
        .iter()
        .map(|&lambda_max| {
            let config = ObservationConfig {
                lambda_max,
                ..base.clone()
            };
            let setup = ObservationSetup::new(weight, config)?;
            let r = observability_constant(&setup, options)?;
            Ok(SweepRow {
                lambda_max,
                dim: r.dim,
                lambda_min: r.lambda_min,
                constant: r.constant,
                iters: r.iterations,
            })
        })
        .collect()
}

/// Smallest eigenvalue of a dense Hermitian matrix.
pub fn dense_smallest_eigenvalue(m: &DMatrix<C64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{random_state, FieldRole, Torus};
    use std::f64::consts::PI;

    fn weight_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> SpatialField {
        let torus = Torus::new(TorusGeometry::standard(n).unwrap()).unwrap();
        SpatialField::from_fn(torus, FieldRole::Weight, |x, y| C64::new(f(x, y), 0.0)).unwrap()
    }

    #[test]
    fn pairwise_sum_matches_serial() {
        let parts: Vec<Vec<C64>> = (0..7).map(|i| vec![C64::new(i as f64, 1.0); 3]).collect();
        assert_eq!(pairwise_sum(parts), vec![C64::new(21.0, 7.0); 3]);
    }

    #[test]
    fn uniform_weight_gives_scaled_identity() {
        let w = weight_fn(16, |_, _| 1.0);
        let setup = ObservationSetup::new(&w, ObservationConfig::new(1.7, 10.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_state(w.torus(), Some(10.0), &mut rng);
        let g = gramian_apply(&setup, &u).unwrap();
        let diff = g.sub(&u.scale(C64::new(1.7, 0.0))).unwrap().norm();
        assert!(diff < 1e-13);
    }

    #[test]
    fn single_mode_diagonal_is_mean_of_weight_squared() {
        let w = weight_fn(32, |x, y| 1.0 + 0.5 * (x + 2.0 * y).cos() + if x < PI { 0.7 } else { 0.0 });
        let mean_sq: f64 = w.values().iter().map(|v| v.re * v.re).sum::<f64>() / w.values().len() as f64;
        let setup = ObservationSetup::new(&w, ObservationConfig::new(2.0, 9.0)).unwrap();
        let e = FourierField::single_mode(w.torus().clone(), 2, -1, C64::new(1.0, 0.0)).unwrap();
        let ge = gramian_apply(&setup, &e).unwrap();
        let q = ge.inner(&e).unwrap() / e.norm_sq();
        assert!((q.re - 2.0 * mean_sq).abs() < 1e-12);
        assert!(q.im.abs() < 1e-12);
    }

    #[test]
    fn outside_support_is_rejected() {
        let w = weight_fn(16, |_, _| 1.0);
        let setup = ObservationSetup::new(&w, ObservationConfig::new(1.0, 4.0)).unwrap();
        let e = FourierField::single_mode(w.torus().clone(), 3, 0, C64::new(1.0, 0.0)).unwrap();
        assert!(matches!(gramian_apply(&setup, &e), Err(Error::OutsideSubspace { .. })));
    }

    #[test]
    fn uniform_weight_constant_is_inverse_horizon() {
        let w = weight_fn(16, |_, _| 1.0);
        let setup = ObservationSetup::new(&w, ObservationConfig::new(1.0, 20.0)).unwrap();
        let r = observability_constant(&setup, &SolverOptions::default()).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-10);
        assert!((r.lambda_max - 1.0).abs() < 1e-10);
    }

    #[test]
    fn strip_weight_bounded_by_diagonal() {
        let w = weight_fn(32, |x, _| if x < PI { 1.0 } else { 0.0 });
        let t = 1.0;
        let setup = ObservationSetup::new(&w, ObservationConfig::new(t, 8.0)).unwrap();
        let r = observability_constant(&setup, &SolverOptions::default()).unwrap();
        assert!(r.lambda_min <= t / 2.0 + 1e-12);
        assert!(r.lambda_min > 0.0);
        let dense = Gramian::new(&setup).unwrap().assemble_dense();
        assert!((dense_smallest_eigenvalue(&dense) - r.lambda_min).abs() <= 1e-8 * r.lambda_min);
    }

    #[test]
    fn lanczos_and_inverse_iteration_agree() {
        let w = weight_fn(32, |x, y| if (x - 2.0).powi(2) + (y - 3.0).powi(2) < 2.0 { 1.0 } else { 0.2 });
        let setup = ObservationSetup::new(&w, ObservationConfig::new(0.8, 10.0)).unwrap();
        let a = observability_constant(&setup, &SolverOptions::default()).unwrap();
        let b = observability_constant(&setup, &SolverOptions::default().with_method(EigenMethod::InversePower)).unwrap();
        assert!((a.lambda_min - b.lambda_min).abs() <= 1e-8 * a.lambda_min);
    }

    #[test]
    fn one_dimensional_path() {
        let torus = Torus::new(TorusGeometry::new_1d(64, 2.0 * PI).unwrap()).unwrap();
        let b = SpatialField::from_fn(torus, FieldRole::Weight, |x, _| C64::new(if x < 1.0 { 1.0 } else { 0.0 }, 0.0)).unwrap();
        let setup = ObservationSetup::new(&b, ObservationConfig::new(1.0, 100.0)).unwrap();
        let r = observability_constant(&setup, &SolverOptions::default()).unwrap();
        assert_eq!(r.dim, 21);
        let dense = Gramian::new(&setup).unwrap().assemble_dense();
        assert!((dense_smallest_eigenvalue(&dense) - r.lambda_min).abs() <= 1e-8 * r.lambda_min);
        assert!(r.lambda_min > 0.0);
    }
}
