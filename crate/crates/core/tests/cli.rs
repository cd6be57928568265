use std::fs;
use std::path::Path;
use std::process::Command;

use cbs_spectrum::oracle;

fn cbs() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cbs"));
    c.env_remove("CBS_OUTPUT_DIR");
    c
}

fn code(c: &mut Command) -> i32 {
    c.output().expect("binary runs").status.code().expect("exit code")
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn enhancement_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let st = code(cbs().args(["enhancement-curve", "--s-min", "1e-3", "--s-max", "1e3", "--points", "61", "--out"]).arg(&out));
    assert_eq!(st, 0);
    let (header, rows) = table(&out);
    assert_eq!(header, ["s", "alpha_analytic", "alpha_numeric", "abs_diff"]);
    assert_eq!(rows.len(), 61);
    assert!((rows[0][1] - (2.0 - 1e-3 / 4.0)).abs() < 1e-6);
    for r in &rows {
        assert!(r[3] <= 1e-8 * r[1]);
    }
    let last = rows.last().unwrap();
    assert!((last[2] - oracle::ENHANCEMENT_LIMIT).abs() < 1e-3);

    let first_line = fs::read_to_string(&out).unwrap().lines().nth(1).unwrap().to_string();
    for field in first_line.split(',') {
        let mantissa = field.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        assert!(mantissa.len() >= 12, "{field}");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let st = code(cbs().args(["spectrum", "--omega", "2", "--points", "101", "--out"]).arg(&out));
        assert_eq!(st, 0);
        (fs::read(&out).unwrap(), fs::read(dir.path().join(format!("{name}.meta.json"))).unwrap())
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn spectrum_weak_and_strong_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let weak = dir.path().join("weak.csv");
    assert_eq!(code(cbs().args(["spectrum", "--omega", "0.1", "--points", "401", "--out"]).arg(&weak)), 0);
    let (header, rows) = table(&weak);
    assert_eq!(header, ["nu_over_gamma", "ladder_inel", "crossed_inel"]);
    assert!(rows.iter().all(|r| r[2] <= r[1] && r[1] > 0.0));

    let strong = dir.path().join("strong.csv");
    assert_eq!(code(cbs().args(["spectrum", "--omega", "10", "--points", "801", "--out"]).arg(&strong)), 0);
    let (_, rows) = table(&strong);
    assert!(rows.iter().any(|r| r[2] < 0.0));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("strong.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["normalization"], "unit_ladder");
    assert_eq!(meta["omega_over_gamma"], 10.0);
    assert!(meta["ladder_elastic_weight"].as_f64().unwrap() > 0.0);
}

#[test]
fn strong_field_numeric_against_closed_form_at_peak_centers() {
    let dir = tempfile::tempdir().unwrap();
    let get = |method: &str| {
        let out = dir.path().join(format!("{method}.csv"));
        let st = code(
            cbs()
                .args(["spectrum", "--omega", "100", "--nu-min", "-200", "--nu-max", "200", "--points", "17", "--raw"])
                .args(["--method", method, "--out"])
                .arg(&out),
        );
        assert_eq!(st, 0);
        table(&out).1
    };
    let num = get("numeric");
    let orc = get("oracle_strong");
    let at = |nu: f64| num.iter().zip(&orc).find(|(r, _)| (r[0] - nu).abs() < 1e-9).unwrap();
    let dev = |a: f64, b: f64| (a / b - 1.0).abs();
    for nu in [-100.0, -50.0, 50.0, 100.0] {
        let (n, o) = at(nu);
        assert!(dev(n[1], o[1]) <= 0.03, "ladder at {nu}");
    }
    for nu in [-200.0, -100.0, 0.0, 100.0, 200.0] {
        let (n, o) = at(nu);
        assert!(dev(n[2], o[2]) <= 0.03, "crossed at {nu}");
    }
    // measured exceptions, see the line-shape notes in the README
    for nu in [-200.0, 0.0, 200.0] {
        let (n, o) = at(nu);
        assert!(dev(n[1], o[1]) > 0.03, "ladder at {nu}");
    }
}

#[test]
fn method_range_and_parameter_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(code(cbs().args(["spectrum", "--omega", "10", "--method", "oracle_weak", "--out"]).arg(&out)), 1);
    assert_eq!(code(cbs().args(["spectrum", "--omega", "1", "--method", "oracle_strong", "--out"]).arg(&out)), 1);
    assert_eq!(code(cbs().args(["enhancement-curve", "--s-min", "2", "--s-max", "1", "--out"]).arg(&out)), 1);
    assert_eq!(code(cbs().args(["enhancement-curve", "--points", "1", "--out"]).arg(&out)), 1);
    assert_eq!(code(cbs().args(["mc-average", "--samples", "5", "--out"]).arg(&out)), 1);
    assert_eq!(code(cbs().args(["frobnicate"])), 1);
    assert!(!out.exists());
}

#[test]
fn config_file_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out = dir.path().join("curve.csv");
    fs::write(&cfg, format!("# curve\ns_min = 0.5\ns-max = 2 # inline\npoints = 3\nout = {}\n", out.display())).unwrap();
    assert_eq!(code(cbs().args(["enhancement-curve", "--config"]).arg(&cfg)), 0);
    let (_, rows) = table(&out);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], 0.5);

    assert_eq!(code(cbs().args(["enhancement-curve", "--points", "4", "--config"]).arg(&cfg)), 0);
    assert_eq!(table(&out).1.len(), 4);

    fs::write(&cfg, "points = 3\ncolour = blue\n").unwrap();
    assert_eq!(code(cbs().args(["enhancement-curve", "--config"]).arg(&cfg)), 1);
    fs::write(&cfg, "just words\n").unwrap();
    assert_eq!(code(cbs().args(["enhancement-curve", "--config"]).arg(&cfg)), 1);
}

#[test]
fn io_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("missing").join("x.csv");
    assert_eq!(code(cbs().args(["enhancement-curve", "--points", "2", "--out"]).arg(&bad)), 2);
    let cfg = dir.path().join("absent.conf");
    assert_eq!(code(cbs().args(["enhancement-curve", "--config"]).arg(&cfg)), 2);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let st = code(cbs().env("CBS_OUTPUT_DIR", dir.path()).args(["mc-average", "--samples", "1000", "--theta-max", "0.004", "--points", "3"]));
    assert_eq!(st, 0);
    let (header, rows) = table(&dir.path().join("mc_average.csv"));
    assert_eq!(header[0], "theta");
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| (r[4] - 2.0 / 15.0).abs() < 1e-15 && r[3] <= r[4]));
}

#[test]
fn json_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    assert_eq!(code(cbs().args(["enhancement-curve", "--points", "5", "--format", "json", "--out"]).arg(&out)), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["columns"][1], "alpha_analytic");
}

#[test]
fn quick_validation_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let output = cbs().args(["validate", "--profile", "quick", "--out"]).arg(&out).output().unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 12);
    for c in checks {
        for key in ["check", "expected", "actual", "tol", "pass"] {
            assert!(c.get(key).is_some());
        }
    }
    let alpha = checks.iter().find(|c| c["check"] == "alpha oracle at s=1").unwrap();
    assert_eq!(alpha["expected"], 1.759758);
    assert!(checks.iter().any(|c| c["criterion"] == 5 && c["tol"] == 1e-6));
    let failed = v["failed"].as_u64().unwrap();
    // the weak-field pointwise check is the only quick-profile failure
    assert_eq!(failed, 2);
    assert_eq!(output.status.code(), Some(3));
}
