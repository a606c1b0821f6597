use std::f64::consts::TAU;

use nalgebra::DMatrix;

use super::gramian::dense_smallest_eigenvalue;
use crate::error::{Error, Result};
use crate::torus::{SpatialField, Torus, C64};

/// Largest eigenvalue below which every lattice mode sits strictly inside the
/// grid band (so eigenspaces are captured completely).
pub fn complete_eigenvalue_limit(torus: &Torus) -> f64 {
    let g = torus.geometry();
    let kx = TAU * (g.nx / 2) as f64 / g.a;
    if g.dim == 1 {
        kx * kx
    } else {
        let ky = TAU * (g.ny / 2) as f64 / g.b;
        (kx * kx).min(ky * ky)
    }
}

/// Flat indices of the modes with `-Δ`-eigenvalue `lambda` (relative match 1e-9).
pub fn eigenspace_modes(torus: &Torus, lambda: f64) -> Result<Vec<usize>> {
    let limit = complete_eigenvalue_limit(torus);
    if lambda >= limit {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue {lambda} is not fully resolved on this grid (limit {limit})"
        )));
    }
    let tol = 1e-9 * lambda.max(1.0);
    let modes: Vec<usize> = torus
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, &l)| (l - lambda).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    if modes.is_empty() {
        return Err(Error::EmptyEigenspace(lambda));
    }
    Ok(modes)
}

/// Fourier coefficients of `W²` (normalized so the zero mode is the mean).
pub fn weight_sq_coefficients(weight: &SpatialField) -> Result<Vec<C64>> {
    let w = weight.real_values()?;
    let sq: Vec<C64> = w.iter().map(|v| C64::new(v * v, 0.0)).collect();
    Ok(SpatialField::state(weight.torus().clone(), sq)?.to_fourier().into_coeffs())
}

/// Matrix of `P_λ M_{W²} P_λ` in the orthonormal basis `e_k / |T|^{1/2}`,
/// i.e. `M_{jk} = (1/|T|)∫ W² e^{i(k-j)·z} dz`.
pub fn restricted_matrix(weight: &SpatialField, modes: &[usize]) -> Result<DMatrix<C64>> {
    let coeffs = weight_sq_coefficients(weight)?;
    let g = *weight.geometry();
    let mut m = DMatrix::<C64>::zeros(modes.len(), modes.len());
    for (r, &j) in modes.iter().enumerate() {
        let (mj, nj) = g.mode(j);
        for (c, &k) in modes.iter().enumerate() {
            let (mk, nk) = g.mode(k);
            let dm = (mj - mk).rem_euclid(g.nx as i64) as usize;
            let dn = (nj - nk).rem_euclid(g.ny as i64) as usize;
            m[(r, c)] = coeffs[dm * g.ny + dn];
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of `P_λ M_{W²} P_λ` on the `λ`-eigenspace of `-Δ`,
/// normalized so that `W ≡ 1` gives 1. Its reciprocal is the constant of the
/// eigenfunction restriction estimate `‖u_λ‖² <= C ∫|W u_λ|²`.
pub fn eigenspace_observability(weight: &SpatialField, lambda: f64) -> Result<f64> {
    let modes = eigenspace_modes(weight.torus(), lambda)?;
    let m = restricted_matrix(weight, &modes)?;
    Ok(dense_smallest_eigenvalue(&m))
}
