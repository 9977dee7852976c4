use std::path::Path;
use std::process::Command;

fn szego(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_szego"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SZEGO_CONFIG")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn algebra_suite_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("algebra.json");
    let o = szego(&["verify", "algebra", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["status"], "pass");
    assert!(r["checks"].as_array().unwrap().iter().all(|c| !c["anchor"].as_str().unwrap().is_empty()));
}

#[test]
fn failing_gate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("calculus.json");
    let o = szego(&["verify", "calculus", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "fail");
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(szego(&["verify", "nonsense"], dir.path()).status.code(), Some(2));
    assert_eq!(szego(&["kernel", "--m", "5"], dir.path()).status.code(), Some(2));
    assert_eq!(szego(&["kernel", "--degree", "6", "--quad-order", "12"], dir.path()).status.code(), Some(2));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(szego(&["kernel", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(szego(&["distance", "--from", "0,0", "--to", "0.1,0.1"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "m = 1\ndegree = 4\npoints = 3\n").unwrap();
    let out = dir.path().join("scan.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_szego"))
        .args(["metric", "--out", out.to_str().unwrap()])
        .current_dir(dir.path())
        .env("SZEGO_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "z0,z1,lambda,curvature,positivity,caratheodory_lower");
    assert_eq!(lines.count(), 3);
}

#[test]
fn kernel_cache_then_metric_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let base = ["--m", "2", "--degree", "6", "--cache-dir", cache.to_str().unwrap()];
    let first = dir.path().join("k1.json");
    let o = szego(&[&["kernel", "--out", first.to_str().unwrap()], &base[..]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let k1 = json(&first);
    assert_eq!(k1["cache"], "built");
    assert!(Path::new(k1["path"].as_str().unwrap()).exists());

    let second = dir.path().join("k2.json");
    szego(&[&["kernel", "--out", second.to_str().unwrap()], &base[..]].concat(), dir.path());
    let k2 = json(&second);
    assert_eq!(k2["cache"], "loaded");
    assert_eq!(k1["key"], k2["key"]);

    let scan = dir.path().join("origin.csv");
    let o = szego(&[&["metric", "--point", "0,0,0", "--out", scan.to_str().unwrap()], &base[..]].concat(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(scan).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let lambda: f64 = row[3].parse().unwrap();
    assert!((lambda - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert_eq!(row[3].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn corrupted_cache_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let args = ["kernel", "--m", "1", "--degree", "3", "--cache-dir", cache.to_str().unwrap()];
    assert_eq!(szego(&args, dir.path()).status.code(), Some(0));
    let file = std::fs::read_dir(&cache).unwrap().next().unwrap().unwrap().path();
    let text = std::fs::read_to_string(&file).unwrap();
    std::fs::write(&file, text.replacen("degree 3", "degree 4", 1)).unwrap();
    assert_eq!(szego(&args, dir.path()).status.code(), Some(2));
}

#[test]
fn distance_writes_witness_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.json");
    let path = dir.path().join("path.csv");
    let o = szego(
        &[
            "distance", "--m", "1", "--degree", "4", "--from", "0.1,0.2", "--to", "-0.3,-0.1", "--out",
            out.to_str().unwrap(), "--path-out", path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&out);
    let value = d["value"].as_f64().unwrap();
    assert!(value > 0.0 && value <= d["straight_length"].as_f64().unwrap());
    assert!(std::fs::read_to_string(path).unwrap().starts_with("z0,z1\n"));
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        szego(&["verify", "kernel", "--m", "1", "--no-timing", "--out", out.to_str().unwrap()], dir.path());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn blowup_scan_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("blowup.csv");
    let o = szego(&["caratheodory", "--m", "1", "--blowup", "--points", "5", "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 6);
}
