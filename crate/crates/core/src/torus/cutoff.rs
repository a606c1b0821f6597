use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// C^∞ transition from 0 (at `x <= 0`) to 1 (at `x >= 1`), built from the
/// flat function `e^{-1/x}`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let f = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let (p, q) = (f(x), f(1.0 - x));
    p / (p + q)
}

/// Even cutoff χ with χ = 1 on `|r| <= plateau` and χ = 0 on `|r| >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub plateau: f64,
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self { plateau: 0.5 }
    }
}

impl CutoffProfile {
    pub fn new(plateau: f64) -> Result<Self> {
        if !(plateau > 0.0 && plateau < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff plateau must lie in (0, 1), got {plateau}"
            )));
        }
        Ok(Self { plateau })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.plateau {
            1.0
        } else if r >= 1.0 {
            0.0
        } else {
            1.0 - smooth_step((r - self.plateau) / (1.0 - self.plateau))
        }
    }
}

/// Littlewood–Paley partition `φ₀(r)² + Σ_{k≥1} φ(R^{-k} r)² = 1`, with the
/// base profile `φ` supported in `(1/R, R)` and `φ(1) = 1`.
///
/// The partition is complete on `[0, R^K]` where `K = max_level`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicSpec {
    pub ratio: f64,
    pub max_level: usize,
}

impl DyadicSpec {
    pub fn new(ratio: f64, max_level: usize) -> Result<Self> {
        if !(ratio > 1.0 && ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dyadic ratio must exceed 1, got {ratio}"
            )));
        }
        Ok(Self { ratio, max_level })
    }

    /// Upper end of the range on which the squares sum to one.
    pub fn covered_limit(&self) -> f64 {
        self.ratio.powi(self.max_level as i32)
    }

    /// Base profile `φ`.
    pub fn base(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let s = r.ln() / self.ratio.ln();
        if s <= -1.0 || s >= 1.0 {
            0.0
        } else if s <= 0.0 {
            (FRAC_PI_2 * smooth_step(s + 1.0)).sin()
        } else {
            (FRAC_PI_2 * smooth_step(s)).cos()
        }
    }

    /// `φ_k(r)`; level 0 is the low-frequency piece equal to 1 on `[0, 1]`.
    pub fn level(&self, k: usize, r: f64) -> f64 {
        let r = r.abs();
        if k == 0 {
            if r <= 1.0 {
                1.0
            } else {
                let s = r.ln() / self.ratio.ln();
                if s >= 1.0 {
                    0.0
                } else {
                    (FRAC_PI_2 * smooth_step(s)).cos()
                }
            }
        } else {
            self.base(r / self.ratio.powi(k as i32))
        }
    }

    pub fn partition_sum(&self, r: f64) -> f64 {
        (0..=self.max_level).map(|k| self.level(k, r).powi(2)).sum()
    }
}
