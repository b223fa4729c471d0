use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltb-redshift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let body = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, body)
}

#[test]
fn zlambda_for_open_universe() {
    let out = bin(&["zlambda", "--omega", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let z = json(&out)["summary"]["z_lambda"].as_f64().unwrap();
    assert!((z - 1.25).abs() < 1e-10, "{z}");
}

#[test]
fn bad_flag_names_the_field() {
    let out = bin(&["zlambda", "--omega", "abc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--omega"), "{}", stderr(&out));
}

#[test]
fn bad_scenario_line_is_located() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    fs::write(&cfg, "command = trace\nz0 = abc\n").unwrap();
    let out = bin(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("s.cfg:2: field 'z0'"), "{err}");
}

#[test]
fn missing_required_field_is_a_config_error() {
    let out = bin(&["crossing", "--omega", "0", "--c-scale", "1.2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("z0"));
}

fn check_dat(path: &Path, x: &str, y: &str) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(format!("# {x} {y}").as_str()));
    for l in lines {
        let v: Vec<f64> = l.split(' ').map(|v| v.parse().unwrap()).collect();
        assert_eq!(v.len(), 2, "{l}");
    }
}

#[test]
fn crossing_past_critical_point_is_singular_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let out = bin(&[
        "crossing",
        "--omega",
        "0",
        "--range",
        "1:2",
        "--c-scale",
        "1.2",
        "--out",
        o.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert_eq!(json(&out)["exit_code"], 2);

    let csv = fs::read_to_string(o.join("crossing.csv")).unwrap();
    let (header, body) = rows(&csv);
    assert_eq!(header[0], "z");
    assert!(body.len() > 2);
    // every number carries 17 significant digits
    let first = csv.lines().nth(1).unwrap().split(',').next().unwrap();
    let mantissa = first.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{first}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(o.join("crossing.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "crossing");
    check_dat(&o.join("t_vs_z.dat"), "z", "t");
}

#[test]
fn horizon_stall_below_critical_scale() {
    let out = bin(&[
        "crossing",
        "--omega",
        "0",
        "--range",
        "1:2",
        "--c-scale",
        "0.9",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let z_end = json(&out)["summary"]["z_end"].as_f64().unwrap();
    assert!((z_end - 1.036065).abs() < 1e-5, "{z_end}");
}

#[test]
fn trajectory_stays_physical() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "trace",
        "--omega",
        "0",
        "--range",
        "0.5:2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, body) = rows(&fs::read_to_string(dir.path().join("trace.csv")).unwrap());
    let col = |n: &str| header.iter().position(|h| h == n).unwrap();
    let (r, t) = (col("r"), col("t"));
    assert!(!body.is_empty());
    assert!(body.iter().all(|row| row[r] > 0.0 && row[t] > 0.0));
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# open universe\ncommand = trace\nomega = 0\nrange = 0.5:2\n",
    )
    .unwrap();
    let mut csv = Vec::new();
    for name in ["a", "b"] {
        let o = dir.path().join(name);
        let out = bin(&["run", cfg.to_str().unwrap(), "--out", o.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        csv.push(fs::read(o.join("trace.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn empty_sweep_succeeds() {
    let out = bin(&[
        "sweep", "--of", "zlambda", "--param", "omega", "--values", "",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["rows"].as_array().unwrap().len(), 0);
}

#[test]
fn sweep_rows_are_sorted_and_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&[
        "sweep",
        "--of",
        "zlambda",
        "--param",
        "omega",
        "--values",
        "1,0,0.5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Vec<f64> = json(&out)["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_f64().unwrap())
        .collect();
    assert_eq!(v, [0.0, 0.5, 1.0]);
    assert!(dir.path().join("sweep.csv").exists());
    check_dat(
        &dir.path().join("z_lambda_vs_value.dat"),
        "value",
        "z_lambda",
    );
}

#[test]
fn unknown_sweep_parameter_is_rejected() {
    let out = bin(&[
        "sweep", "--of", "zlambda", "--param", "bogus", "--values", "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
