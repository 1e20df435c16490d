use std::path::Path;
use std::process::{Command, Output};

fn rankdiff(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankdiff"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("run rankdiff")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn classify_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = rankdiff(dir.path(), &["classify", "--rho", "0.8", "--sigma", "0.6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("classify.csv")).unwrap();
    assert!(text.starts_with("# rankdiff classify v1\n"));
    assert!(text.contains("64 roots, 56 strong"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 65);
}

#[test]
fn json_format_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"params": {"g": 1.0, "h": 1.0, "rho": 1.0, "sigma": 0.0}, "paths": 50, "seed": 3}"#).unwrap();
    let o = rankdiff(dir.path(), &["sample", "--format", "json", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("samples.json")).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 50);
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = rankdiff(d.path(), &["simulate", "--system", "skew", "--steps", "100", "--seed", "11"]);
        assert_eq!(code(&o), 0);
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("path.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn density_emits_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let o = rankdiff(dir.path(), &["density", "--grid", "21", "--x1", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(dir.path().join("density.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("stroke=\"red\""));
    let csv = std::fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(csv.contains("singular line"));
}

#[test]
fn tanaka_output_is_labelled_illustrative() {
    let dir = tempfile::tempdir().unwrap();
    let o = rankdiff(dir.path(), &["tanaka", "--paths", "20", "--dts", "0.01,0.005"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("tanaka.csv")).unwrap();
    assert!(text.contains("illustrative"));
}

#[test]
fn invalid_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&rankdiff(dir.path(), &["sample", "--rho", "0.5", "--sigma", "0.5"])), 2);
    assert_eq!(code(&rankdiff(dir.path(), &["sample", "--g", "-1"])), 2);
    assert_eq!(code(&rankdiff(dir.path(), &["sample", "--workers", "0"])), 2);
    assert_eq!(code(&rankdiff(dir.path(), &["classify", "--eps", "1"])), 2);
}

#[test]
fn non_bv_coefficient_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = r#"{"kind":"piecewise_linear","knots":[0.0],"values":[0.0],"left_slope":0.0,"right_slope":1.0}"#;
    let o = rankdiff(dir.path(), &["tanaka", "--f", f]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bounded variation"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&rankdiff(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&rankdiff(dir.path(), &["sample", "--paths", "many"])), 2);
}

#[test]
fn unwritable_output_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let o = rankdiff(&file.join("sub"), &["sample", "--paths", "10"]);
    assert_eq!(code(&o), 1);
}
