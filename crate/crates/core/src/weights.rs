//! Observation weights and damping coefficients: indicator sets,
//! fat Cantor products and capped power singularities, sampled at the grid
//! points `(iA/Nx, jB/Ny)`. Fat Cantor sets are sampled at cell centres
//! instead, which keeps the grid measure unbiased.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::io::load_spatial_on;
use crate::torus::{FieldRole, SpatialField, Torus, TorusGeometry};

/// How the grid value at the singular point of a power singularity is set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapRule {
    /// Mean of the (up to eight) neighbouring grid values.
    #[default]
    NeighborAverage,
    /// Value the formula gives at distance half a grid cell.
    HalfCell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Uniform {
        #[serde(default = "one")]
        value: f64,
    },
    /// Indicator of `x0 <= x < x1`.
    Strip { x0: f64, x1: f64 },
    /// Indicator of the disk of radius `r` about `(cx, cy)` in the periodic
    /// metric (an interval on the circle).
    Disk {
        cx: f64,
        #[serde(default)]
        cy: f64,
        r: f64,
    },
    /// Indicator of the "black" squares of a `k × k` board.
    Checkerboard { k: usize },
    /// Product of fat Cantor sets, one per axis.
    FatCantor { depth: u32, ratio: f64 },
    /// `|z - z0|^{-β}` in the periodic metric.
    PowerSingularity {
        x0: f64,
        #[serde(default)]
        y0: f64,
        beta: f64,
        #[serde(default)]
        cap: CapRule,
    },
    /// A TCF1 grid file on the same geometry.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec::Uniform { value: 1.0 }
    }
}

impl WeightSpec {
    pub fn label(&self) -> String {
        match self {
            WeightSpec::Uniform { value } => format!("uniform({value})"),
            WeightSpec::Strip { x0, x1 } => format!("strip({x0}, {x1})"),
            WeightSpec::Disk { cx, cy, r } => format!("disk({cx}, {cy}, {r})"),
            WeightSpec::Checkerboard { k } => format!("checkerboard({k})"),
            WeightSpec::FatCantor { depth, ratio } => format!("fat_cantor({depth}, {ratio})"),
            WeightSpec::PowerSingularity { x0, y0, beta, .. } => format!("power_singularity({x0}, {y0}, {beta})"),
            WeightSpec::File { path } => format!("file({})", path.display()),
        }
    }
}

/// Closed intervals left after `depth` stages of the construction that, at
/// stage `n`, removes the open middle `ratio^n` fraction of every interval.
#[derive(Clone, Debug, PartialEq)]
pub struct FatCantor {
    pub intervals: Vec<(f64, f64)>,
}

impl FatCantor {
    pub fn new(length: f64, depth: u32, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("fat Cantor ratio must lie in (0, 1), got {ratio}")));
        }
        if depth > 24 {
            return Err(Error::InvalidParameter(format!("fat Cantor depth {depth} exceeds 24")));
        }
        let mut intervals = vec![(0.0, length)];
        for n in 1..=depth {
            let cut = ratio.powi(n as i32);
            intervals = intervals
                .into_iter()
                .flat_map(|(a, b)| {
                    let mid = 0.5 * (a + b);
                    let half_gap = 0.5 * cut * (b - a);
                    [(a, mid - half_gap), (mid + half_gap, b)]
                })
                .collect();
        }
        Ok(Self { intervals })
    }

    /// `length · Π_{n=1}^{depth} (1 - ratio^n)`.
    pub fn closed_form_measure(length: f64, depth: u32, ratio: f64) -> f64 {
        (1..=depth).fold(length, |m, n| m * (1.0 - ratio.powi(n as i32)))
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn longest_interval(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, b)| b < x);
        i < self.intervals.len() && self.intervals[i].0 <= x
    }
}

fn periodic(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    r.min(period - r)
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn build_weight(spec: &WeightSpec, torus: &Arc<Torus>) -> Result<SpatialField> {
    let g = *torus.geometry();
    let two_d = g.dim == 2;
    let points = (0..g.len()).map(|i| g.point(i));
    let values: Vec<f64> = match spec {
        WeightSpec::Uniform { value } => vec![*value; g.len()],
        WeightSpec::Strip { x0, x1 } => {
            if !(x0 < x1) {
                return Err(Error::InvalidParameter(format!("strip needs x0 < x1, got [{x0}, {x1})")));
            }
            points.map(|(x, _)| indicator(*x0 <= x && x < *x1)).collect()
        }
        WeightSpec::Disk { cx, cy, r } => {
            if !(*r > 0.0) {
                return Err(Error::InvalidParameter(format!("disk radius must be positive, got {r}")));
            }
            points
                .map(|(x, y)| {
                    let dx = periodic(x - cx, g.a);
                    let dy = if two_d { periodic(y - cy, g.b) } else { 0.0 };
                    indicator(dx * dx + dy * dy < r * r)
                })
                .collect()
        }
        WeightSpec::Checkerboard { k } => {
            if *k == 0 {
                return Err(Error::InvalidParameter("checkerboard needs k >= 1".into()));
            }
            let k = *k as f64;
            points
                .map(|(x, y)| {
                    let i = (x / g.a * k).floor() as i64;
                    let j = if two_d { (y / g.b * k).floor() as i64 } else { 0 };
                    indicator((i + j) % 2 == 0)
                })
                .collect()
        }
        WeightSpec::FatCantor { depth, ratio } => {
            let cx = FatCantor::new(g.a, *depth, *ratio)?;
            let cy = FatCantor::new(g.b, *depth, *ratio)?;
            let (hx, hy) = (0.5 * g.a / g.nx as f64, 0.5 * g.b / g.ny as f64);
            points
                .map(|(x, y)| indicator(cx.contains(x + hx) && (!two_d || cy.contains(y + hy))))
                .collect()
        }
        WeightSpec::PowerSingularity { x0, y0, beta, cap } => {
            let limit = g.dim as f64 / 4.0;
            if !(*beta > 0.0 && *beta < limit) {
                return Err(Error::InvalidParameter(format!(
                    "power singularity needs 0 < beta < {limit} to stay in L4, got {beta}"
                )));
            }
            power_singularity(&g, *x0, *y0, *beta, *cap)
        }
        WeightSpec::File { path } => {
            if !path.exists() {
                return Err(Error::Config(format!("weight file {} does not exist", path.display())));
            }
            let f = load_spatial_on(path, torus, FieldRole::Weight)?;
            f.real_values()?;
            return Ok(f);
        }
    };
    SpatialField::weight(torus.clone(), values)
}

fn power_singularity(g: &TorusGeometry, x0: f64, y0: f64, beta: f64, cap: CapRule) -> Vec<f64> {
    let hx = g.a / g.nx as f64;
    let hy = g.b / g.ny as f64;
    let dist = |i: usize| {
        let (x, y) = g.point(i);
        let dx = periodic(x - x0, g.a);
        let dy = if g.dim == 2 { periodic(y - y0, g.b) } else { 0.0 };
        (dx * dx + dy * dy).sqrt()
    };
    let tiny = 1e-12 * hx.min(hy);
    let mut values: Vec<f64> = (0..g.len())
        .map(|i| {
            let d = dist(i);
            if d > tiny {
                d.powf(-beta)
            } else {
                f64::NAN
            }
        })
        .collect();
    for i in 0..g.len() {
        if !values[i].is_nan() {
            continue;
        }
        values[i] = match cap {
            CapRule::HalfCell => (0.5 * hx.min(hy)).powf(-beta),
            CapRule::NeighborAverage => {
                let (ix, iy) = ((i / g.ny) as i64, (i % g.ny) as i64);
                let mut sum = 0.0;
                let mut n = 0;
                let dys: &[i64] = if g.dim == 2 { &[-1, 0, 1] } else { &[0] };
                for dx in [-1i64, 0, 1] {
                    for &dy in dys {
                        if (dx, dy) == (0, 0) {
                            continue;
                        }
                        let jx = (ix + dx).rem_euclid(g.nx as i64) as usize;
                        let jy = (iy + dy).rem_euclid(g.ny as i64) as usize;
                        let j = jx * g.ny + jy;
                        if j != i && !values[j].is_nan() {
                            sum += values[j];
                            n += 1;
                        }
                    }
                }
                sum / n.max(1) as f64
            }
        };
    }
    values
}
