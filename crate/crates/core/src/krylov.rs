//! Matrix-free Krylov solvers on complex coefficient vectors: conjugate
//! gradients for Hermitian positive-definite systems, and Lanczos / inverse
//! iteration for the smallest eigenvalue.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::C64;

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn scale(v: &mut [C64], s: f64) {
    v.iter_mut().for_each(|x| *x *= s);
}

pub fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Vec<C64>,
    pub iterations: usize,
    /// `‖b - Ax‖ / ‖b‖` from the recursively updated residual.
    pub residual: f64,
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
///
/// Fails with [`Error::CgStagnation`] if `max_iter` is exhausted, or if the
/// residual has not improved by a factor of two over the last `window`
/// iterations.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    b: &[C64],
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let dim = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![C64::new(0.0, 0.0); dim],
            iterations: 0,
            residual: 0.0,
        });
    }
    let window = 50.max(dim / 2);
    let mut x = vec![C64::new(0.0, 0.0); dim];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r).re;
    let mut history: Vec<f64> = vec![1.0];
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap).re;
        if pap <= 0.0 {
            return Err(Error::CgStagnation {
                iterations: it,
                residual: rr.sqrt() / b_norm,
            });
        }
        let alpha = rr / pap;
        axpy(C64::new(alpha, 0.0), &p, &mut x);
        axpy(C64::new(-alpha, 0.0), &ap, &mut r);
        let rr_new = dot(&r, &r).re;
        let rel = rr_new.sqrt() / b_norm;
        if rel <= tol {
            return Ok(CgOutcome {
                solution: x,
                iterations: it,
                residual: rel,
            });
        }
        history.push(rel);
        if history.len() > window {
            let old = history[history.len() - 1 - window];
            let best_recent = history[history.len() - window..]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if best_recent > 0.5 * old {
                return Err(Error::CgStagnation {
                    iterations: it,
                    residual: rel,
                });
            }
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + *pi * beta;
        }
    }
    Err(Error::CgStagnation {
        iterations: max_iter,
        residual: rr.sqrt() / b_norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    #[default]
    Lanczos,
    InversePower,
}

#[derive(Clone, Debug)]
pub struct ExtremeEigen {
    pub smallest: f64,
    pub largest: f64,
    /// Residual norm `‖A v - θ v‖` of the smallest Ritz pair (unit `v`).
    pub residual: f64,
    pub iterations: usize,
    pub vector: Vec<C64>,
}

/// Lanczos with full reorthogonalization, started from `start`.
///
/// Stops when the smallest Ritz pair has residual `<= tol · |θ_min|`, when the
/// Krylov space exhausts the dimension, or at an invariant subspace. A random
/// start vector has a component along every eigenvector with probability
/// one, so an invariant Krylov space already contains the smallest eigenvalue.
pub fn lanczos_extremes(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    start: Vec<C64>,
    tol: f64,
    max_iter: usize,
) -> Result<ExtremeEigen> {
    let dim = start.len();
    let mut q = start;
    let n0 = norm(&q);
    if n0 == 0.0 {
        return Err(Error::InvalidParameter("Lanczos start vector is zero".into()));
    }
    scale(&mut q, 1.0 / n0);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let limit = max_iter.min(dim);
    let mut last: Option<RitzState> = None;

    for j in 0..limit {
        let mut w = apply(&q);
        basis.push(q.clone());
        let alpha = dot(&w, &q).re;
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                axpy(-c, v, &mut w);
            }
        }
        let beta = norm(&w);
        let k = j + 1;
        let scale_est = alphas.iter().map(|a| a.abs()).fold(0.0, f64::max).max(1e-300);
        let breakdown = beta <= 1e-12 * scale_est;
        if k <= 40 || k % 4 == 0 || k == limit || breakdown {
            let (smallest, largest, coords) = tridiagonal_extremes(&alphas, &betas);
            let residual = if breakdown { 0.0 } else { beta * coords[k - 1].abs() };
            let state = RitzState {
                smallest,
                largest,
                residual,
                coords,
            };
            if breakdown || k == dim || residual <= tol * smallest.abs() {
                return Ok(state.into_result(&basis, k));
            }
            last = Some(state);
        }
        betas.push(beta);
        q = w;
        scale(&mut q, 1.0 / beta);
    }
    let (lower, upper) = last
        .map(|s| (s.smallest - s.residual, s.smallest))
        .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    Err(Error::NoConvergence {
        iterations: limit,
        lower,
        upper,
    })
}

struct RitzState {
    smallest: f64,
    largest: f64,
    residual: f64,
    coords: Vec<f64>,
}

impl RitzState {
    fn into_result(self, basis: &[Vec<C64>], iterations: usize) -> ExtremeEigen {
        let mut vector = vec![C64::new(0.0, 0.0); basis[0].len()];
        for (v, &c) in basis.iter().zip(&self.coords) {
            axpy(C64::new(c, 0.0), v, &mut vector);
        }
        ExtremeEigen {
            smallest: self.smallest,
            largest: self.largest,
            residual: self.residual,
            iterations,
            vector,
        }
    }
}

/// Extreme eigenvalues of the symmetric tridiagonal matrix and the
/// eigenvector of the smallest one.
fn tridiagonal_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64, Vec<f64>) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s = eig.eigenvectors.column(imin).iter().copied().collect();
    (eig.eigenvalues[imin], max, s)
}

#[derive(Clone, Debug)]
pub struct InverseIteration {
    pub smallest: f64,
    pub residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub vector: Vec<C64>,
}

/// Inverse iteration accelerated by Lanczos: Lanczos with full
/// reorthogonalization on `-A⁻¹`, each application an inner CG solve. The
/// Krylov space of `A⁻¹` contains the power iterates, so convergence is at
/// least as fast as plain inverse iteration, and it does not stall on a
/// cluster at the bottom of the spectrum. Stops on the Ritz value of the
/// inverse with relative tolerance `tol`; `max_outer` bounds the Lanczos steps.
pub fn inverse_power_smallest(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    start: Vec<C64>,
    tol: f64,
    max_outer: usize,
) -> Result<InverseIteration> {
    let cg_tol = (tol * 1e-4).max(1e-13);
    let n = start.len();
    let mut inner = 0;
    let mut failure: Option<Error> = None;
    let lz = lanczos_extremes(
        |x| {
            if failure.is_some() {
                return vec![C64::new(0.0, 0.0); n];
            }
            match conjugate_gradient(&mut apply, x, cg_tol, 20 * n + 100) {
                Ok(cg) => {
                    inner += cg.iterations;
                    cg.solution.into_iter().map(|v| -v).collect()
                }
                Err(e) => {
                    failure = Some(e);
                    vec![C64::new(0.0, 0.0); n]
                }
            }
        },
        start,
        tol,
        max_outer,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let lz = lz.map_err(|e| match e {
        Error::NoConvergence { iterations, lower, upper } => Error::NoConvergence {
            iterations,
            lower: -1.0 / upper,
            upper: -1.0 / lower,
        },
        other => other,
    })?;
    if !(lz.smallest < 0.0) {
        return Err(Error::InvalidParameter("operator is not positive definite".into()));
    }
    let theta = -1.0 / lz.smallest;
    let mut v = lz.vector;
    let nv = norm(&v);
    scale(&mut v, 1.0 / nv);
    let av = apply(&v);
    let residual = av.iter().zip(&v).map(|(a, x)| (a - x * theta).norm_sqr()).sum::<f64>().sqrt();
    Ok(InverseIteration {
        smallest: theta,
        residual,
        outer_iterations: lz.iterations,
        inner_iterations: inner,
        vector: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hermitian(dim: usize, seed: u64) -> DMatrix<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let mut a = b.adjoint() * &b;
        for i in 0..dim {
            a[(i, i)] += C64::new(0.1, 0.0);
        }
        a
    }

    fn mat_apply(a: &DMatrix<C64>) -> impl FnMut(&[C64]) -> Vec<C64> + '_ {
        move |x: &[C64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (a * v).iter().copied().collect()
        }
    }

    fn dense_min(a: &DMatrix<C64>) -> f64 {
        a.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cg_solves_hpd_system() {
        let a = hermitian(30, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = random_vector(30, &mut rng);
        let out = conjugate_gradient(mat_apply(&a), &b, 1e-12, 500).unwrap();
        let ax = mat_apply(&a)(&out.solution);
        let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * norm(&b));
    }

    #[test]
    fn cg_reports_stagnation_on_singular_operator() {
        // rank-deficient PSD operator with rhs outside its range
        let apply = |x: &[C64]| {
            let mut y = x.to_vec();
            y[0] = C64::new(0.0, 0.0);
            y
        };
        let b = vec![C64::new(1.0, 0.0); 4];
        assert!(matches!(conjugate_gradient(apply, &b, 1e-12, 50), Err(Error::CgStagnation { .. })));
    }

    #[test]
    fn lanczos_and_inverse_power_agree_with_dense() {
        let a = hermitian(40, 2);
        let exact = dense_min(&a);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let start = random_vector(40, &mut rng);
        let lz = lanczos_extremes(mat_apply(&a), start.clone(), 1e-10, 200).unwrap();
        assert!((lz.smallest - exact).abs() <= 1e-8 * exact);
        let ip = inverse_power_smallest(mat_apply(&a), start, 1e-10, 500).unwrap();
        assert!((ip.smallest - exact).abs() <= 1e-8 * exact);
    }

    #[test]
    fn inverse_power_survives_a_cluster() {
        // twenty eigenvalues within 1e-5 of the smallest, then a spread tail
        let d: Vec<f64> = (0..120)
            .map(|i| if i < 20 { 0.04 + 5e-7 * i as f64 } else { 0.05 + 0.01 * i as f64 })
            .collect();
        let apply = |x: &[C64]| x.iter().zip(&d).map(|(v, l)| v * *l).collect::<Vec<_>>();
        let start = random_vector(120, &mut ChaCha8Rng::seed_from_u64(8));
        let ip = inverse_power_smallest(apply, start, 1e-8, 2000).unwrap();
        assert!((ip.smallest - 0.04).abs() <= 1e-8 * 0.04, "{}", ip.smallest);
        assert!(ip.outer_iterations <= 120);
    }

    #[test]
    fn lanczos_handles_scalar_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let start = random_vector(25, &mut rng);
        let out = lanczos_extremes(|x| x.iter().map(|v| v * 3.0).collect(), start, 1e-10, 100).unwrap();
        assert!((out.smallest - 3.0).abs() < 1e-13);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn lanczos_iteration_cap_yields_bracket() {
        let a = hermitian(60, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let start = random_vector(60, &mut rng);
        match lanczos_extremes(mat_apply(&a), start, 1e-14, 5) {
            Err(Error::NoConvergence { lower, upper, iterations }) => {
                assert_eq!(iterations, 5);
                assert!(lower <= upper);
                assert!(upper >= dense_min(&a) - 1e-12);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
