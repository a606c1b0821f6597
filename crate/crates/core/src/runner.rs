//! Executes a [`Scenario`] and writes its outputs into one directory:
//! `manifest.json` (scenario echo, results, file list) plus CSV tables and
//! TCF1 field files. Outputs carry no timestamps, so a rerun with the same
//! scenario and seed reproduces them byte for byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::damped::damped_evolve;
use crate::diagnostics::{
    density_stability_sweep, direction_mass, flow_average_defect, time_averaged_density, DIRECTION_CONVENTION,
    PROXY_NOTE,
};
use crate::error::{Error, Result};
use crate::hum::{control_trace, synthesize_control, verify_refined, ControlOptions, ControlReport};
use crate::inequalities::{ingham_chart, observability_from_ingham, sums_of_two_squares, zygmund_sweep};
use crate::observability::{
    dense_smallest_eigenvalue, observability_constant, sweep_cutoffs, Gramian, ObservationSetup, SweepRow,
};
use crate::scenario::{Scenario, ScenarioKind};
use crate::torus::io::{save_fourier, save_spatial};
use crate::torus::{random_state, FieldRole, Torus};
use crate::weights::build_weight;

/// Dense cross-checks are refused above this subspace dimension.
pub const DENSE_LIMIT: usize = 1500;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub kind: ScenarioKind,
    pub files: Vec<String>,
    pub results: Value,
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn seed_of(s: &Scenario) -> u64 {
    s.seed.unwrap_or(0)
}

fn torus_of(s: &Scenario) -> Result<Arc<Torus>> {
    Torus::new(s.geometry.build()?)
}

/// Runs `scenario`, writing into `out`. The directory is created if needed.
pub fn run(scenario: &Scenario, out: &Path) -> Result<RunSummary> {
    scenario.validate()?;
    let mut o = Output::new(out)?;
    let results = match scenario.kind {
        ScenarioKind::Observability => run_observability(scenario, &mut o)?,
        ScenarioKind::Control => run_control(scenario, &mut o)?,
        ScenarioKind::Damp => run_damp(scenario, &mut o)?,
        ScenarioKind::Zygmund => run_zygmund(scenario, &mut o)?,
        ScenarioKind::Ingham => run_ingham(scenario, &mut o)?,
        ScenarioKind::Density => run_density(scenario, &mut o)?,
        ScenarioKind::Directions => run_directions(scenario, &mut o)?,
    };
    let manifest = json!({
        "tool": "tslab",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": scenario.kind,
        "seed": scenario.seed,
        "scenario": scenario,
        "results": results,
        "files": o.files,
    });
    fs::write(out.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunSummary {
        dir: out.to_path_buf(),
        kind: scenario.kind,
        files: o.files,
        results,
    })
}

/// Runs each scenario in its own subdirectory `out/NNN-kind` on the current
/// rayon pool. Failures are reported per scenario and do not stop the batch.
pub fn run_batch(scenarios: &[Scenario], out: &Path) -> Vec<(PathBuf, Result<RunSummary>)> {
    scenarios
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let dir = out.join(format!("{i:03}-{}", s.kind.name()));
            let r = run(s, &dir);
            (dir, r)
        })
        .collect()
}

fn observation_setup(s: &Scenario) -> Result<ObservationSetup> {
    let torus = torus_of(s)?;
    let w = build_weight(&s.weight, &torus)?;
    ObservationSetup::new(&w, s.numerics.observation())
}

fn run_observability(s: &Scenario, o: &mut Output) -> Result<Value> {
    let setup = observation_setup(s)?;
    let options = s.numerics.solver(seed_of(s));
    let report = observability_constant(&setup, &options)?;
    let mut rows = vec![SweepRow {
        lambda_max: s.numerics.lambda_max,
        dim: report.dim,
        lambda_min: report.lambda_min,
        constant: report.constant,
        iters: report.iterations,
    }];
    if !s.observability.sweep.is_empty() {
        rows.extend(sweep_cutoffs(
            setup.weight(),
            &s.numerics.observation(),
            &s.observability.sweep,
            &options,
        )?);
    }
    o.csv("sweep.csv", &rows)?;
    save_spatial(o.path("weight.tcf1"), setup.weight())?;
    let dense = if s.observability.dense_check {
        if report.dim > DENSE_LIMIT {
            return Err(Error::InvalidParameter(format!(
                "dense check requested for dimension {} (limit {DENSE_LIMIT})",
                report.dim
            )));
        }
        let lmin = dense_smallest_eigenvalue(&Gramian::new(&setup)?.assemble_dense());
        Some(json!({
            "lambda_min": lmin,
            "relative_difference": (lmin - report.lambda_min).abs() / lmin.abs(),
        }))
    } else {
        None
    };
    let sweep_ratio = (rows.len() > 1).then(|| {
        let ks: Vec<f64> = rows.iter().map(|r| r.constant).collect();
        let max = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ks.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    });
    Ok(json!({
        "gramian": report,
        "dense_check": dense,
        "sweep_max_over_min": sweep_ratio,
    }))
}

fn snapshot_indices(len: usize, count: usize) -> Vec<usize> {
    if len == 0 || count == 0 {
        return Vec::new();
    }
    if count == 1 {
        return vec![0];
    }
    let mut idx: Vec<usize> = (0..count).map(|k| k * (len - 1) / (count - 1)).collect();
    idx.dedup();
    idx
}

fn run_control(s: &Scenario, o: &mut Output) -> Result<Value> {
    let setup = observation_setup(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(s));
    let u0 = random_state(setup.subspace().torus(), Some(s.numerics.lambda_max), &mut rng);
    let options = ControlOptions {
        tolerance: s.control.tolerance,
        max_iterations: s.control.max_iterations,
        form: s.control.form,
    };
    let sol = synthesize_control(&u0, &setup, &options)?;
    let refined = match s.control.refine_factor {
        0 => None,
        k => Some(verify_refined(&setup, &sol, k)?),
    };
    let report = ControlReport::new(&setup, &options, &sol, refined)?;
    o.csv("control_trace.csv", &control_trace(&setup, &sol)?)?;
    save_fourier(o.path("u0.tcf1"), &sol.u0)?;
    save_fourier(o.path("v0.tcf1"), &sol.v0)?;
    let f = sol.control_f(&setup)?;
    let mut snapshots = Vec::new();
    for j in snapshot_indices(f.len(), s.control.snapshots) {
        let name = format!("f_{j:06}.tcf1");
        save_spatial(o.path(&name), &f.samples()[j])?;
        snapshots.push(json!({"file": name, "t": f.quadrature().nodes[j]}));
    }
    Ok(json!({"control": report, "snapshots": snapshots}))
}

fn run_damp(s: &Scenario, o: &mut Output) -> Result<Value> {
    let torus = torus_of(s)?;
    let a = build_weight(&s.weight, &torus)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(s));
    let u0 = random_state(&torus, Some(s.damp.state_cutoff), &mut rng).to_spatial(FieldRole::State);
    let report = damped_evolve(&u0, &a, s.damp.tmax, s.damp.delta, &s.weight.label())?;
    #[derive(Serialize)]
    struct Row {
        t: f64,
        norm: f64,
        energy_residual: f64,
    }
    let rows: Vec<Row> = (0..report.times.len())
        .map(|k| Row {
            t: report.times[k],
            norm: report.norms[k],
            energy_residual: report.energy_residuals[k],
        })
        .collect();
    o.csv("decay.csv", &rows)?;
    save_spatial(o.path("damping.tcf1"), &a)?;
    Ok(json!({"decay": report}))
}

fn run_zygmund(s: &Scenario, o: &mut Output) -> Result<Value> {
    let z = &s.zygmund;
    let rows = zygmund_sweep(z.lambda_max, z.min_count, z.trials, seed_of(s));
    o.csv("zygmund.csv", &rows)?;
    let worst = rows
        .iter()
        .max_by(|a, b| a.max_ratio.total_cmp(&b.max_ratio))
        .map(|r| json!({"lambda": r.lambda, "max_ratio": r.max_ratio}));
    Ok(json!({
        "circles": rows.len(),
        "worst": worst,
        "reference_bound": 5f64.sqrt(),
    }))
}

fn run_ingham(s: &Scenario, o: &mut Output) -> Result<Value> {
    let p = &s.ingham;
    let freqs: Vec<f64> = sums_of_two_squares(p.frequency_limit).into_iter().map(|l| l as f64).collect();
    let horizons: Vec<f64> = if p.t_steps == 1 {
        vec![p.t_min]
    } else {
        (0..p.t_steps)
            .map(|k| p.t_min + (p.t_max - p.t_min) * k as f64 / (p.t_steps - 1) as f64)
            .collect()
    };
    let chart = ingham_chart(&freqs, &horizons)?;
    o.csv("ingham.csv", &chart)?;
    let cross = if p.cross_check {
        let setup = observation_setup(s)?;
        let direct = observability_constant(&setup, &s.numerics.solver(seed_of(s)))?;
        let bound = observability_from_ingham(setup.weight(), setup.quadrature(), s.numerics.lambda_max)?;
        let consistent = bound.bound.is_none_or(|b| b <= direct.lambda_min + 1e-8);
        Some(json!({
            "bound": bound,
            "direct_lambda_min": direct.lambda_min,
            "consistent": consistent,
        }))
    } else {
        None
    };
    Ok(json!({
        "frequencies": freqs.len(),
        "b_at_t_max": chart.last().map(|pt| pt.b),
        "cross_check": cross,
    }))
}

fn run_density(s: &Scenario, o: &mut Output) -> Result<Value> {
    let torus = torus_of(s)?;
    let p = &s.density;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(s));
    let u0 = random_state(&torus, Some(p.state_cutoff), &mut rng);
    let d = time_averaged_density(&u0, p.tau, None)?;
    save_spatial(o.path("density.tcf1"), &d.to_field())?;
    let stability = density_stability_sweep(&torus, &p.sweep, p.tau, p.trials, &mut rng)?;
    o.csv("density_stability.csv", &stability)?;
    let expected = p.tau * u0.norm_sq();
    Ok(json!({
        "horizon": d.horizon,
        "nodes": d.nodes,
        "mass": d.mass(),
        "mass_relative_error": (d.mass() - expected).abs() / expected,
        "l2_norm": d.l2_norm(),
        "stability": stability,
        "note": PROXY_NOTE,
    }))
}

fn run_directions(s: &Scenario, o: &mut Output) -> Result<Value> {
    let torus = torus_of(s)?;
    let p = &s.directions;
    let mut rng = ChaCha8Rng::seed_from_u64(seed_of(s));
    let u0 = random_state(&torus, Some(p.state_cutoff), &mut rng);
    let hist = direction_mass(&u0, p.m_max)?;
    o.csv("directions.csv", &hist.directions)?;
    o.csv("residual_classes.csv", &hist.residual)?;
    let defects = p
        .directions
        .iter()
        .map(|d| flow_average_defect(&u0, p.tau, d[0], d[1]))
        .collect::<Result<Vec<_>>>()?;
    o.csv("flow_defects.csv", &defects)?;
    Ok(json!({
        "zero_mode": hist.zero_mode,
        "directions": hist.directions.len(),
        "note": PROXY_NOTE,
        "convention": DIRECTION_CONVENTION,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshots_cover_ends() {
        assert_eq!(snapshot_indices(10, 3), vec![0, 4, 9]);
        assert_eq!(snapshot_indices(2, 3), vec![0, 1]);
        assert_eq!(snapshot_indices(5, 1), vec![0]);
        assert!(snapshot_indices(0, 3).is_empty());
    }

    #[test]
    fn every_kind_runs_small() {
        let dir = tempfile::tempdir().unwrap();
        for kind in ScenarioKind::ALL {
            let mut s = Scenario::new(kind);
            s.seed = Some(5);
            s.geometry.nx = 16;
            s.geometry.ny = 16;
            s.numerics.lambda_max = 4.0 * (2.0 * std::f64::consts::PI).powi(2);
            s.weight = crate::weights::WeightSpec::Strip { x0: 0.0, x1: 0.5 };
            s.damp = crate::scenario::DampParams {
                tmax: 1.0,
                delta: 0.05,
                state_cutoff: 200.0,
            };
            s.zygmund.lambda_max = 50;
            s.zygmund.trials = 3;
            s.density.sweep = vec![100.0, 200.0];
            s.density.trials = 2;
            s.density.state_cutoff = 200.0;
            s.directions.state_cutoff = 200.0;
            s.ingham.t_steps = 3;
            s.ingham.frequency_limit = 10;
            let out = dir.path().join(kind.name());
            let summary = run(&s, &out).unwrap_or_else(|e| panic!("{kind:?}: {e}"));
            assert!(out.join(MANIFEST).exists());
            for f in &summary.files {
                assert!(out.join(f).exists(), "{kind:?} missing {f}");
            }
        }
    }
}
