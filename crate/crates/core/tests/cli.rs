use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tslab")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn uniform_observability_reports_unit_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("obs");
    let o = tslab(&["run", "--config", &scenario("observability_uniform.toml"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let k = manifest(&out)["results"]["gramian"]["constant"].as_f64().unwrap();
    assert!((k - 1.0).abs() < 1e-10);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("lambda_max,dim,lambda_min,K,iters"));
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["zygmund.toml", "directions.toml", "damp_strip.toml"] {
        let dirs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("{name}-{i}"))).collect();
        for d in &dirs {
            let o = tslab(&[
                "run",
                "--config",
                &scenario(name),
                "--out",
                d.to_str().unwrap(),
                "--override",
                "damp.tmax=2.0",
                "--override",
                "zygmund.lambda_max=200",
            ]);
            assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        }
        assert_eq!(read_dir_sorted(&dirs[0]), read_dir_sorted(&dirs[1]), "{name}");
    }
}

#[test]
fn csv_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("zygmund.toml", "zygmund.csv", "lambda,circle_count,max_ratio"),
        ("ingham.toml", "ingham.csv", "T,B"),
        ("damp_constant.toml", "decay.csv", "t,norm,energy_residual"),
        ("directions.toml", "directions.csv", "p,q,fraction"),
        ("directions.toml", "residual_classes.csv", "m,mass"),
    ];
    for (cfg, file, header) in cases {
        let out = tmp.path().join(cfg);
        let o = tslab(&[
            "run",
            "--config",
            &scenario(cfg),
            "--out",
            out.to_str().unwrap(),
            "--override",
            "zygmund.lambda_max=100",
            "--override",
            "damp.tmax=1.0",
        ]);
        assert!(o.status.success(), "{cfg}: {}", String::from_utf8_lossy(&o.stderr));
        let text = fs::read_to_string(out.join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{file}");
        assert!(text.lines().count() > 1, "{file} has no rows");
    }
}

#[test]
fn seed_override_changes_random_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |seed: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = tslab(&["run", "--config", &scenario("directions.toml"), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        fs::read(out.join("directions.csv")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
    assert_eq!(manifest(&tmp.path().join("b"))["seed"], 2);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "kind = \"damp\"\nseed = 1\n[damp]\ndelta = \n").unwrap();
    let o = tslab(&["run", "--config", bad.to_str().unwrap(), "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    fs::write(&bad, "kind = \"control\"\n").unwrap();
    let o = tslab(&["run", "--config", bad.to_str().unwrap(), "--out", tmp.path().join("y").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = tslab(&["run", "--config", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = tslab(&["run", "--config", &scenario("damp_strip.toml"), "--override", "weight.beta=0.4"]);
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(tslab(&["explain", "nonsense"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tslab(&[
        "run",
        "--config",
        &scenario("control_disk.toml"),
        "--out",
        tmp.path().join("c").to_str().unwrap(),
        "--override",
        "geometry.nx=16",
        "--override",
        "geometry.ny=16",
        "--override",
        "numerics.lambda_max=300.0",
        "--override",
        "control.max_iterations=1",
        "--override",
        "control.tolerance=1e-14",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("conjugate gradient"));
}

#[test]
fn small_control_run_writes_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = tslab(&[
        "run",
        "--config",
        &scenario("control_disk.toml"),
        "--out",
        out.to_str().unwrap(),
        "--override",
        "geometry.nx=16",
        "--override",
        "geometry.ny=16",
        "--override",
        "numerics.lambda_max=300.0",
        "--override",
        "weight.r=0.35",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert!(m["results"]["control"]["residual_truncated"].as_f64().unwrap() < 1e-6);
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(files.contains(&"u0.tcf1") && files.contains(&"v0.tcf1"));
    assert_eq!(files.iter().filter(|f| f.starts_with("f_")).count(), 3);
    let u0 = tslab::torus::io::load_spatial(out.join("f_000000.tcf1"), tslab::torus::FieldRole::State).unwrap();
    assert_eq!(u0.geometry().nx, 16);
    let trace = fs::read_to_string(out.join("control_trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("t,u_norm,f_norm"));
}

#[test]
fn explain_prints_parseable_defaults() {
    for kind in ["observability", "control", "damp", "zygmund", "ingham", "density", "directions"] {
        let o = tslab(&["explain", kind]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        let s = tslab::scenario::Scenario::from_toml(&text, &[]).unwrap();
        assert_eq!(s.kind.name(), kind);
    }
}

#[test]
fn sweep_writes_one_directory_per_variant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = tslab(&[
        "sweep",
        "--config",
        &scenario("ingham.toml"),
        "--config",
        &scenario("zygmund.toml"),
        "--vary",
        "ingham.frequency_limit=10,20",
        "--override",
        "ingham.cross_check=false",
        "--override",
        "zygmund.lambda_max=100",
        "--threads",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut dirs: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    dirs.sort();
    assert_eq!(dirs, ["000-ingham", "001-ingham", "002-zygmund", "003-zygmund"]);
    let limit = |d: &str| manifest(&out.join(d))["scenario"]["ingham"]["frequency_limit"].as_u64().unwrap();
    assert_eq!((limit("000-ingham"), limit("001-ingham")), (10, 20));
}
