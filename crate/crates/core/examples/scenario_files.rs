//! Drives the scenario runner from code: parse a TOML scenario, override a
//! key, run it and read back the manifest.

use tslab::runner::{run, MANIFEST};
use tslab::scenario::Scenario;

const SCENARIO: &str = r#"
kind = "observability"
seed = 1

[geometry]
nx = 32
ny = 32

[weight]
kind = "checkerboard"
k = 4

[numerics]
horizon = 1.0
lambda_max = 400.0

[observability]
sweep = [800.0, 1600.0]
"#;

fn main() -> tslab::Result<()> {
    let scenario = Scenario::from_toml(SCENARIO, &["numerics.horizon=0.5".into()])?;
    let out = std::env::temp_dir().join("tslab-scenario-example");
    let summary = run(&scenario, &out)?;
    println!("wrote {:?} to {}", summary.files, out.display());
    println!("{}", std::fs::read_to_string(out.join("sweep.csv"))?);
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(MANIFEST))?)?;
    println!("K = {}", manifest["results"]["gramian"]["constant"]);
    Ok(())
}
