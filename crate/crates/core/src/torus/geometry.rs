use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular torus `ℝ/Aℤ × ℝ/Bℤ` (or the circle `ℝ/Aℤ` when `dim == 1`)
/// together with its sampling grid.
///
/// Grid values are stored row-major with `y` varying fastest: the value at
/// grid point `(ix, iy)` lives at flat index `ix * ny + iy`. Fourier
/// coefficients use the same layout in FFT order, so flat index `i` along an
/// axis of length `N` carries mode `i` for `i < N/2` and `i - N` otherwise.
/// The retained band is therefore `[-N/2, N/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    pub dim: u32,
    pub nx: usize,
    pub ny: usize,
    pub a: f64,
    pub b: f64,
}

impl TorusGeometry {
    pub fn new_2d(nx: usize, ny: usize, a: f64, b: f64) -> Result<Self> {
        let g = Self {
            dim: 2,
            nx,
            ny,
            a,
            b,
        };
        g.validate()?;
        Ok(g)
    }

    /// The circle `ℝ/Aℤ`, stored as an `nx × 1` grid with `B` ignored.
    pub fn new_1d(nx: usize, a: f64) -> Result<Self> {
        let g = Self {
            dim: 1,
            nx,
            ny: 1,
            a,
            b: 1.0,
        };
        g.validate()?;
        Ok(g)
    }

    /// `(ℝ/Lℤ)²` sampled on an `n × n` grid.
    pub fn square(n: usize, period: f64) -> Result<Self> {
        Self::new_2d(n, n, period, period)
    }

    /// The standard torus `(ℝ/2πℤ)²`, whose Laplace eigenvalues are the
    /// integers `m² + n²`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::square(n, TAU)
    }

    /// `ℝ²/(ℤ ⊕ γℤ)` with `A = 1`, `B = γ`.
    pub fn with_aspect(nx: usize, ny: usize, gamma: f64) -> Result<Self> {
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(Error::Geometry(format!("aspect ratio must be a nonzero real, got {gamma}")));
        }
        Self::new_2d(nx, ny, 1.0, gamma.abs())
    }

    pub fn validate(&self) -> Result<()> {
        let even = |n: usize| n >= 2 && n.is_multiple_of(2);
        match self.dim {
            1 => {
                if !even(self.nx) || self.ny != 1 {
                    return Err(Error::Geometry(format!(
                        "1-D grid needs even nx >= 2 and ny = 1, got {}x{}",
                        self.nx, self.ny
                    )));
                }
            }
            2 => {
                if !even(self.nx) || !even(self.ny) {
                    return Err(Error::Geometry(format!(
                        "grid sizes must be even and >= 2, got {}x{}",
                        self.nx, self.ny
                    )));
                }
            }
            d => return Err(Error::Geometry(format!("dimension must be 1 or 2, got {d}"))),
        }
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::Geometry(format!(
                "periods must be positive and finite, got ({}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lebesgue measure of the torus.
    pub fn measure(&self) -> f64 {
        if self.dim == 1 {
            self.a
        } else {
            self.a * self.b
        }
    }

    pub fn cell_area(&self) -> f64 {
        self.measure() / self.len() as f64
    }

    pub fn gamma(&self) -> f64 {
        self.b / self.a
    }

    pub fn mode_x(&self, ix: usize) -> i64 {
        centered(ix, self.nx)
    }

    pub fn mode_y(&self, iy: usize) -> i64 {
        centered(iy, self.ny)
    }

    /// Integer mode pair `(m, n)` carried by flat index `i`.
    pub fn mode(&self, i: usize) -> (i64, i64) {
        (self.mode_x(i / self.ny), self.mode_y(i % self.ny))
    }

    /// Flat index of mode `(m, n)`, if it lies in the retained band.
    pub fn index_of_mode(&self, m: i64, n: i64) -> Option<usize> {
        let ix = wrap(m, self.nx)?;
        let iy = wrap(n, self.ny)?;
        Some(ix * self.ny + iy)
    }

    /// Eigenvalue `(2πm/A)² + (2πn/B)²` of `-Δ` on the mode `e^{i2π(mx/A + ny/B)}`.
    pub fn eigenvalue(&self, m: i64, n: i64) -> f64 {
        let kx = TAU * m as f64 / self.a;
        let ky = if self.dim == 1 {
            0.0
        } else {
            TAU * n as f64 / self.b
        };
        kx * kx + ky * ky
    }

    /// Whether flat index `i` sits on a Nyquist row or column (`m = -Nx/2` or
    /// `n = -Ny/2`). Generated states never populate these modes.
    pub fn is_nyquist(&self, i: usize) -> bool {
        let ix = i / self.ny;
        let iy = i % self.ny;
        ix == self.nx / 2 || (self.dim == 2 && iy == self.ny / 2)
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        let ix = i / self.ny;
        let iy = i % self.ny;
        (
            self.a * ix as f64 / self.nx as f64,
            self.b * iy as f64 / self.ny as f64,
        )
    }

    /// Best rational approximation `p/q` of `γ = B/A` if it matches to 1e-9.
    pub fn rational_aspect(&self) -> Option<(i64, i64)> {
        rational_approximation(self.gamma(), 1e-9, 1_000_000)
    }
}

fn centered(i: usize, n: usize) -> i64 {
    if n == 1 {
        return 0;
    }
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn wrap(m: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if n == 1 {
        return (m == 0).then_some(0);
    }
    if m < -half || m >= half {
        return None;
    }
    Some(if m >= 0 { m as usize } else { (m + n as i64) as usize })
}

/// Continued-fraction search for `p/q` with `|x - p/q| <= tol` and `q <= max_den`.
pub fn rational_approximation(x: f64, tol: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_degenerate_grids() {
        assert!(TorusGeometry::new_2d(3, 4, 1.0, 1.0).is_err());
        assert!(TorusGeometry::new_2d(4, 0, 1.0, 1.0).is_err());
        assert!(TorusGeometry::new_2d(4, 4, 0.0, 1.0).is_err());
        assert!(TorusGeometry::new_2d(4, 4, 1.0, -2.0).is_err());
        assert!(TorusGeometry::with_aspect(4, 4, 0.0).is_err());
    }

    #[test]
    fn modes_are_centered_and_invertible() {
        let g = TorusGeometry::new_2d(8, 6, 1.0, 2.0).unwrap();
        for i in 0..g.len() {
            let (m, n) = g.mode(i);
            assert!((-4..4).contains(&m));
            assert!((-3..3).contains(&n));
            assert_eq!(g.index_of_mode(m, n), Some(i));
        }
        assert_eq!(g.index_of_mode(4, 0), None);
        assert!(g.is_nyquist(g.index_of_mode(-4, 1).unwrap()));
        assert!(g.is_nyquist(g.index_of_mode(1, -3).unwrap()));
        assert!(!g.is_nyquist(g.index_of_mode(3, 2).unwrap()));
    }

    #[test]
    fn eigenvalues_vanish_only_at_zero_mode() {
        let g = TorusGeometry::standard(8).unwrap();
        for i in 0..g.len() {
            let (m, n) = g.mode(i);
            let lam = g.eigenvalue(m, n);
            assert!((lam - (m * m + n * n) as f64).abs() < 1e-12);
            assert_eq!(lam == 0.0, (m, n) == (0, 0));
        }
    }

    #[test]
    fn one_dimensional_torus_ignores_second_axis() {
        let g = TorusGeometry::new_1d(16, 2.0).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.measure(), 2.0);
        assert_eq!(g.mode(3), (3, 0));
        assert_eq!(g.index_of_mode(-2, 0), Some(14));
        assert_eq!(g.index_of_mode(1, 1), None);
    }

    #[test]
    fn rationality_flag() {
        assert_eq!(rational_approximation(1.5, 1e-9, 1000), Some((3, 2)));
        assert_eq!(rational_approximation(1.0, 1e-9, 1000), Some((1, 1)));
        assert_eq!(rational_approximation(std::f64::consts::SQRT_2, 1e-9, 1000), None);
        let g = TorusGeometry::with_aspect(4, 4, 0.75).unwrap();
        assert_eq!(g.rational_aspect(), Some((3, 4)));
    }
}
