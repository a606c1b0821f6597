//! Scenario files: one TOML document per run, with dotted-key overrides from
//! the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hum::ControlForm;
use crate::krylov::EigenMethod;
use crate::observability::{ObservationConfig, QuadratureRule, SolverOptions};
use crate::torus::TorusGeometry;
use crate::weights::WeightSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Observability,
    Control,
    Damp,
    Zygmund,
    Ingham,
    Density,
    Directions,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::Observability,
        ScenarioKind::Control,
        ScenarioKind::Damp,
        ScenarioKind::Zygmund,
        ScenarioKind::Ingham,
        ScenarioKind::Density,
        ScenarioKind::Directions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Observability => "observability",
            ScenarioKind::Control => "control",
            ScenarioKind::Damp => "damp",
            ScenarioKind::Zygmund => "zygmund",
            ScenarioKind::Ingham => "ingham",
            ScenarioKind::Density => "density",
            ScenarioKind::Directions => "directions",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub dim: u32,
    pub nx: usize,
    pub ny: usize,
    pub a: f64,
    pub b: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            dim: 2,
            nx: 64,
            ny: 64,
            a: 1.0,
            b: 1.0,
        }
    }
}

impl GeometrySpec {
    pub fn build(&self) -> Result<TorusGeometry> {
        match self.dim {
            1 => TorusGeometry::new_1d(self.nx, self.a),
            _ => {
                let g = TorusGeometry {
                    dim: self.dim,
                    nx: self.nx,
                    ny: self.ny,
                    a: self.a,
                    b: self.b,
                };
                g.validate()?;
                Ok(g)
            }
        }
    }
}

/// Time grid, frequency cutoff and eigensolver settings shared by the
/// Gramian-based kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub horizon: f64,
    pub lambda_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    pub rule: QuadratureRule,
    pub allow_undersampling: bool,
    pub method: EigenMethod,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            lambda_max: 400.0,
            nodes: None,
            rule: QuadratureRule::Midpoint,
            allow_undersampling: false,
            method: EigenMethod::Lanczos,
            tolerance: 1e-8,
            max_iterations: 2000,
        }
    }
}

impl Numerics {
    pub fn observation(&self) -> ObservationConfig {
        ObservationConfig {
            horizon: self.horizon,
            lambda_max: self.lambda_max,
            nodes: self.nodes,
            rule: self.rule,
            allow_undersampling: self.allow_undersampling,
        }
    }

    pub fn solver(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            method: self.method,
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            seed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservabilityParams {
    /// Extra cutoffs for a `K(Λmax)` sweep; empty runs `numerics.lambda_max` only.
    pub sweep: Vec<f64>,
    /// Also assemble the dense Gramian and compare (small subspaces only).
    pub dense_check: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub form: ControlForm,
    /// Node multiplier of the independent verification grid (0 disables it).
    pub refine_factor: usize,
    /// Number of control snapshots written as field files.
    pub snapshots: usize,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 5000,
            form: ControlForm::Plain,
            refine_factor: 4,
            snapshots: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampParams {
    pub tmax: f64,
    pub delta: f64,
    /// Frequency cutoff of the random initial state.
    pub state_cutoff: f64,
}

impl Default for DampParams {
    fn default() -> Self {
        Self {
            tmax: 10.0,
            delta: 0.01,
            state_cutoff: 400.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZygmundParams {
    pub lambda_max: u64,
    pub min_count: usize,
    pub trials: usize,
}

impl Default for ZygmundParams {
    fn default() -> Self {
        Self {
            lambda_max: 500,
            min_count: 8,
            trials: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InghamParams {
    /// Frequencies are the sums of two squares up to this value.
    pub frequency_limit: u64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
    /// Compare `B(T)·min μ` with the Gramian for `weight` on `geometry`.
    pub cross_check: bool,
}

impl Default for InghamParams {
    fn default() -> Self {
        Self {
            frequency_limit: 100,
            t_min: 1.0,
            t_max: 8.0,
            t_steps: 29,
            cross_check: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityParams {
    pub tau: f64,
    pub state_cutoff: f64,
    /// State cutoffs for the `‖U^τ‖_{L²}` stability chart.
    pub sweep: Vec<f64>,
    pub trials: usize,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            tau: 1.0,
            state_cutoff: 400.0,
            sweep: vec![100.0, 200.0, 400.0, 800.0],
            trials: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectionParams {
    pub m_max: i64,
    pub tau: f64,
    pub state_cutoff: f64,
    pub directions: Vec<[i64; 2]>,
}

impl Default for DirectionParams {
    fn default() -> Self {
        Self {
            m_max: 8,
            tau: 1.0,
            state_cutoff: 400.0,
            directions: vec![[1, 0], [0, 1], [1, 1], [1, -1]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub observability: ObservabilityParams,
    #[serde(default)]
    pub control: ControlParams,
    #[serde(default)]
    pub damp: DampParams,
    #[serde(default)]
    pub zygmund: ZygmundParams,
    #[serde(default)]
    pub ingham: InghamParams,
    #[serde(default)]
    pub density: DensityParams,
    #[serde(default)]
    pub directions: DirectionParams,
}

impl Scenario {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            seed: None,
            geometry: GeometrySpec::default(),
            weight: WeightSpec::default(),
            numerics: Numerics::default(),
            observability: ObservabilityParams::default(),
            control: ControlParams::default(),
            damp: DampParams::default(),
            zygmund: ZygmundParams::default(),
            ingham: InghamParams::default(),
            density: DensityParams::default(),
            directions: DirectionParams::default(),
        }
    }

    /// Parses a scenario and applies `key=value` overrides (dotted keys,
    /// TOML values; bare words are taken as strings).
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let s: Scenario = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a scenario file; a relative `weight.path` is resolved against the
    /// file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut s = Self::from_toml(&text, overrides).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        // weight files are relative to the scenario file
        if let WeightSpec::File { path: w } = &mut s.weight {
            if w.is_relative() {
                if let Some(dir) = path.parent() {
                    *w = dir.join(&*w);
                }
            }
        }
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Whether the run draws random numbers (states, Lanczos start vectors).
    pub fn is_randomized(&self) -> bool {
        !(self.kind == ScenarioKind::Ingham && !self.ingham.cross_check)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.build()?;
        if self.seed.is_some_and(|s| s > i64::MAX as u64) {
            return Err(Error::Config(format!("seed must be at most {} (TOML integers are signed)", i64::MAX)));
        }
        if self.is_randomized() && self.seed.is_none() {
            return Err(Error::Config(format!(
                "scenario kind '{}' is randomized: set `seed` in the file or pass --seed",
                self.kind.name()
            )));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("numerics.horizon", self.numerics.horizon)?;
        positive("numerics.lambda_max", self.numerics.lambda_max)?;
        positive("numerics.tolerance", self.numerics.tolerance)?;
        match self.kind {
            ScenarioKind::Control => positive("control.tolerance", self.control.tolerance)?,
            ScenarioKind::Damp => {
                positive("damp.tmax", self.damp.tmax)?;
                positive("damp.delta", self.damp.delta)?;
                positive("damp.state_cutoff", self.damp.state_cutoff)?;
            }
            ScenarioKind::Ingham => {
                positive("ingham.t_min", self.ingham.t_min)?;
                if !(self.ingham.t_max >= self.ingham.t_min) || self.ingham.t_steps == 0 {
                    return Err(Error::Config("ingham needs t_max >= t_min and t_steps >= 1".into()));
                }
            }
            ScenarioKind::Density => positive("density.tau", self.density.tau)?,
            ScenarioKind::Directions => {
                positive("directions.tau", self.directions.tau)?;
                if self.directions.directions.contains(&[0, 0]) {
                    return Err(Error::Config("direction [0, 0] does not define a flow".into()));
                }
            }
            ScenarioKind::Zygmund => {
                if self.zygmund.trials == 0 {
                    return Err(Error::Config("zygmund.trials must be at least 1".into()));
                }
            }
            ScenarioKind::Observability => {}
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c = value` in a TOML table, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key '{key}' is malformed")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Annotated default scenario for `kind`, as printed by `explain`.
pub fn explain(kind: ScenarioKind) -> String {
    let mut s = Scenario::new(kind);
    s.seed = Some(1);
    let body = s.to_toml().expect("defaults serialize");
    let mut out = format!(
        "# Default scenario for kind = \"{}\".\n\
         # Every key may be overridden with --override section.key=value.\n\
         # `seed` is required for randomized kinds (all but a plain ingham chart).\n\
         # Weight kinds: uniform, strip, disk, checkerboard, fat_cantor, power_singularity, file.\n\n",
        kind.name()
    );
    out.push_str(&body);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        for kind in ScenarioKind::ALL {
            let mut s = Scenario::new(kind);
            s.seed = Some(7);
            s.weight = WeightSpec::PowerSingularity {
                x0: 0.25,
                y0: 0.5,
                beta: 0.3,
                cap: Default::default(),
            };
            s.numerics.nodes = Some(33);
            let text = s.to_toml().unwrap();
            let back = Scenario::from_toml(&text, &[]).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.to_toml().unwrap(), text);
        }
    }

    #[test]
    fn overrides_set_nested_keys() {
        let text = "kind = \"observability\"\nseed = 3\n";
        let s = Scenario::from_toml(
            text,
            &[
                "numerics.horizon=2.5".into(),
                "weight.kind=disk".into(),
                "weight.cx=0.5".into(),
                "weight.r=0.2".into(),
                "observability.sweep=[100.0, 200.0]".into(),
            ],
        )
        .unwrap();
        assert_eq!(s.numerics.horizon, 2.5);
        assert_eq!(s.weight, WeightSpec::Disk { cx: 0.5, cy: 0.0, r: 0.2 });
        assert_eq!(s.observability.sweep, vec![100.0, 200.0]);
    }

    #[test]
    fn errors_are_config_errors() {
        let missing_seed = Scenario::from_toml("kind = \"control\"", &[]);
        assert!(matches!(missing_seed, Err(Error::Config(_))));
        assert!(Scenario::from_toml("kind = \"ingham\"", &[]).is_ok());
        let bad = Scenario::from_toml("kind = \"damp\"\nseed = 1\n[damp]\ndelta = -1.0\n", &[]);
        assert!(matches!(bad, Err(Error::Config(_))));
        let typo = Scenario::from_toml("kind = \"damp\"\nseed = 1\n[damp]\ndelt = 0.1\n", &[]).unwrap_err();
        assert!(typo.to_string().contains("delt"));
        let syntax = Scenario::from_toml("kind = \n", &[]).unwrap_err();
        assert!(syntax.to_string().contains("line 1"), "{syntax}");
        assert!(Scenario::from_toml("kind = \"ingham\"", &["nonsense".into()]).is_err());
        let mut huge = Scenario::new(ScenarioKind::Zygmund);
        huge.seed = Some(u64::MAX);
        assert!(matches!(huge.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn explain_output_parses() {
        for kind in ScenarioKind::ALL {
            let text = explain(kind);
            let s = Scenario::from_toml(&text, &[]).unwrap();
            assert_eq!(s.kind, kind);
        }
    }
}
