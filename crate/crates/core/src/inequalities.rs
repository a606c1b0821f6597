//! Lattice points on circles, the Zygmund `L⁴` bound for trigonometric
//! polynomials with frequencies on one circle, and Ingham-type lower bounds
//! for nonharmonic exponential sums.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observability::{eigenspace_observability, TimeQuadrature};
use crate::torus::{Fft2, SpatialField, C64};

/// `{(p, q) ∈ ℤ² : p² + q² = λ}`, sorted lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeCircle {
    pub lambda: u64,
    pub points: Vec<(i64, i64)>,
}

impl LatticeCircle {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radius_bound(&self) -> i64 {
        isqrt(self.lambda) as i64
    }
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn lattice_circle(lambda: u64) -> LatticeCircle {
    let r = isqrt(lambda) as i64;
    let mut points = Vec::new();
    for p in -r..=r {
        let rest = lambda - (p * p) as u64;
        let q = isqrt(rest) as i64;
        if (q * q) as u64 == rest {
            points.push((p, q));
            if q != 0 {
                points.push((p, -q));
            }
        }
    }
    points.sort_unstable();
    LatticeCircle { lambda, points }
}

/// Sums of two squares in `[0, limit]`, increasing.
pub fn sums_of_two_squares(limit: u64) -> Vec<u64> {
    let r = isqrt(limit);
    let mut set = BTreeSet::new();
    for p in 0..=r {
        for q in 0..=r {
            let s = p * p + q * q;
            if s <= limit {
                set.insert(s);
            }
        }
    }
    set.into_iter().collect()
}

/// Side of the square grid on which `|p|⁴` is integrated exactly for a
/// polynomial with `|frequency| <= radius` per axis (`>= 4·radius + 1`, even).
pub fn zygmund_grid(radius: i64) -> usize {
    let n = 4 * radius.max(0) as usize + 2;
    n + n % 2
}

fn circle_values(circle: &LatticeCircle, coeffs: &[C64], fft: &Fft2, n: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); n * n];
    let wrap = |m: i64| m.rem_euclid(n as i64) as usize;
    for (&(p, q), &c) in circle.points.iter().zip(coeffs) {
        buf[wrap(p) * n + wrap(q)] += c;
    }
    fft.inverse(&mut buf);
    buf
}

fn ratio_on_grid(circle: &LatticeCircle, coeffs: &[C64], fft: &Fft2, n: usize) -> f64 {
    let vals = circle_values(circle, coeffs, fft, n);
    let len = vals.len() as f64;
    let (m2, m4) = vals.iter().fold((0.0, 0.0), |(a, b), v| {
        let s = v.norm_sqr();
        (a + s, b + s * s)
    });
    (m4 / len).sqrt() / (m2 / len)
}

/// `‖p‖²_{L⁴(dμ)} / ‖p‖²_{L²(dμ)}` for `p(z) = Σ c_n e^{in·z}` over the
/// circle `|n|² = λ` on `(ℝ/2πℤ)²` with normalized measure `dμ = dz/4π²`.
/// Zygmund's inequality bounds it by `√5`.
pub fn zygmund_ratio(lambda: u64, coeffs: &[C64]) -> Result<f64> {
    let circle = lattice_circle(lambda);
    if coeffs.len() != circle.len() {
        return Err(Error::DimensionMismatch {
            expected: circle.len(),
            got: coeffs.len(),
        });
    }
    if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(Error::ZeroField);
    }
    let n = zygmund_grid(circle.radius_bound());
    let fft = Fft2::new(n, n);
    Ok(ratio_on_grid(&circle, coeffs, &fft, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZygmundRow {
    pub lambda: u64,
    pub circle_count: usize,
    pub max_ratio: f64,
}

/// Largest ratio over `trials` complex Gaussian coefficient vectors for every
/// `λ <= lambda_max` whose circle carries at least `min_count` points. Each
/// `λ` draws from its own stream seeded by `(seed, λ)`.
pub fn zygmund_sweep(lambda_max: u64, min_count: usize, trials: usize, seed: u64) -> Vec<ZygmundRow> {
    let circles: Vec<LatticeCircle> = sums_of_two_squares(lambda_max)
        .into_iter()
        .map(lattice_circle)
        .filter(|c| c.len() >= min_count)
        .collect();
    circles
        .par_iter()
        .map(|circle| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ circle.lambda.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let n = zygmund_grid(circle.radius_bound());
            let fft = Fft2::new(n, n);
            let mut max_ratio: f64 = 0.0;
            for _ in 0..trials {
                let coeffs: Vec<C64> = (0..circle.len())
                    .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                    .collect();
                max_ratio = max_ratio.max(ratio_on_grid(circle, &coeffs, &fft, n));
            }
            ZygmundRow {
                lambda: circle.lambda,
                circle_count: circle.len(),
                max_ratio,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InghamReport {
    pub frequencies: Vec<f64>,
    pub horizon: f64,
    /// Smallest eigenvalue `B(T)` of the Gram matrix.
    pub b: f64,
    pub largest: f64,
    pub condition: f64,
}

fn check_frequencies(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::InvalidParameter("empty frequency list".into()));
    }
    for w in freqs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::DuplicateFrequency(w[1]));
        }
    }
    Ok(())
}

fn report_from(freqs: &[f64], horizon: f64, m: DMatrix<C64>) -> InghamReport {
    let eig = SymmetricEigen::new(m).eigenvalues;
    let b = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let largest = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    InghamReport {
        frequencies: freqs.to_vec(),
        horizon,
        b,
        largest,
        condition: if b > 0.0 { largest / b } else { f64::INFINITY },
    }
}

/// `∫₀ᵀ e^{itd} dt`, with a series near `d = 0`.
fn phase_integral(d: f64, t: f64) -> C64 {
    let x = d * t;
    if x.abs() < 1e-4 {
        C64::new(t * (1.0 - x * x / 6.0), t * (x / 2.0 - x * x * x / 24.0))
    } else {
        C64::new(x.sin(), 1.0 - x.cos()) / d
    }
}

/// Gram matrix `M_{jk} = ∫₀ᵀ e^{it(λⱼ-λₖ)} dt` and its extreme eigenvalues.
pub fn ingham_gram(freqs: &[f64], horizon: f64) -> Result<InghamReport> {
    check_frequencies(freqs)?;
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let n = freqs.len();
    let m = DMatrix::<C64>::from_fn(n, n, |j, k| {
        if j == k {
            C64::new(horizon, 0.0)
        } else {
            phase_integral(freqs[j] - freqs[k], horizon)
        }
    });
    Ok(report_from(freqs, horizon, m))
}

/// Same Gram matrix with the time integral replaced by a quadrature rule, so
/// that `Σⱼ wⱼ |Σ aₖ e^{-itⱼλₖ}|² >= B Σ|aₖ|²` holds exactly for that rule.
pub fn ingham_gram_discrete(freqs: &[f64], quadrature: &TimeQuadrature) -> Result<InghamReport> {
    check_frequencies(freqs)?;
    let n = freqs.len();
    let m = DMatrix::<C64>::from_fn(n, n, |j, k| {
        let d = freqs[j] - freqs[k];
        quadrature.iter().map(|(t, w)| C64::from_polar(w, t * d)).sum()
    });
    Ok(report_from(freqs, quadrature.horizon, m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InghamPoint {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

pub fn ingham_chart(freqs: &[f64], horizons: &[f64]) -> Result<Vec<InghamPoint>> {
    horizons
        .iter()
        .map(|&t| {
            ingham_gram(freqs, t).map(|r| InghamPoint { horizon: t, b: r.b })
        })
        .collect()
}

/// Lower bound for the observability Gramian's smallest eigenvalue from
/// `B(T) · min_λ μ(λ)`, `μ(λ)` the eigenspace restriction constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InghamBound {
    pub horizon: f64,
    pub lambda_cutoff: f64,
    pub frequencies: usize,
    /// `B(T)` from the closed-form Gram matrix.
    pub b_closed: f64,
    /// `B` for the quadrature the Gramian uses.
    pub b_discrete: f64,
    pub min_eigenspace: f64,
    /// `b_discrete · min_eigenspace`, or `None` when `B <= 0` (no certificate at this T).
    pub bound: Option<f64>,
    pub bound_closed: Option<f64>,
}

/// Distinct `-Δ` eigenvalues `<= cutoff` carried by non-Nyquist grid modes.
pub fn distinct_eigenvalues(weight: &SpatialField, cutoff: f64) -> Vec<f64> {
    let torus = weight.torus();
    let mut lams: Vec<f64> = torus
        .modes_below(cutoff)
        .into_iter()
        .map(|i| torus.eigenvalues()[i])
        .collect();
    lams.sort_by(f64::total_cmp);
    lams.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    lams
}

/// Ingham route to observability. `quadrature` should be the one used by the
/// direct Gramian so the two numbers are comparable without slack.
pub fn observability_from_ingham(
    weight: &SpatialField,
    quadrature: &TimeQuadrature,
    lambda_cutoff: f64,
) -> Result<InghamBound> {
    let g = weight.geometry();
    if g.dim == 2 && g.rational_aspect().is_none() {
        return Err(Error::InvalidParameter(
            "the Ingham route needs a rational torus (grouped eigenvalues are then separated)".into(),
        ));
    }
    let freqs = distinct_eigenvalues(weight, lambda_cutoff);
    let closed = ingham_gram(&freqs, quadrature.horizon)?;
    let discrete = ingham_gram_discrete(&freqs, quadrature)?;
    let min_eigenspace = freqs
        .iter()
        .map(|&l| eigenspace_observability(weight, l))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let certify = |b: f64| (b > 0.0).then_some(b * min_eigenspace);
    Ok(InghamBound {
        horizon: quadrature.horizon,
        lambda_cutoff,
        frequencies: freqs.len(),
        b_closed: closed.b,
        b_discrete: discrete.b,
        min_eigenspace,
        bound: certify(discrete.b),
        bound_closed: certify(closed.b),
    })
}
