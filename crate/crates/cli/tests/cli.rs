use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stripwaves"));
    for (k, _) in std::env::vars() {
        if k.starts_with("STRIPWAVES_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

fn fake_run(dir: &Path, preset: &str, rows: &[(u32, &str, f64, bool)]) {
    let mut csv = String::from("criterion,name,measured,threshold,pass\n");
    for (c, n, m, p) in rows {
        csv += &format!("{c},{n},{m:e},< 1,{p}\n");
    }
    write(&dir.join("checks.csv"), &csv);
    write(
        &dir.join("manifest.json"),
        &format!("{{\"preset\": \"{preset}\", \"seed\": 1, \"files\": [\"checks.csv\"]}}"),
    );
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    for text in ["experiment = \"evolve\"\n[grid]\nnx = 3\n", "experiment = \"nope\"\n", "experiment = \"evolve\"\ntypo = 1\n", "[[[\n"] {
        fs::write(&cfg, text).unwrap();
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--quiet"]);
        assert_eq!(code(&o), 2, "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains("config"), "{}", stderr(&o));
    }
    assert_eq!(code(&run(&["run"])), 2);
    assert_eq!(code(&run(&["run", "--preset", "nope"])), 2);
    assert_eq!(code(&run(&["run", "--config", "/nonexistent/x.toml"])), 2);
}

#[test]
fn inadmissible_initial_data_exits_2_before_stepping() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "experiment = \"evolve\"\nh_floor = 0.99\n[grid]\nnx = 32\nny = 16\n[initial]\namplitude = -0.5\n",
    )
    .unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).to_lowercase().contains("admissib"), "{}", stderr(&o));
    assert!(!out.join("monitor.csv").exists());
}

#[test]
fn summary_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let o = run(&["summarize", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(empty.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["verdict"], "incomplete");
    assert_eq!(s["criteria"].as_array().unwrap().len(), 0);

    let good = dir.path().join("good");
    fake_run(&good.join("a"), "soliton", &[(8, "period_shape_err", 1e-9, true), (8, "kp_l2_drift", 1e-13, true)]);
    fake_run(&good.join("b"), "residual-scaling", &[(4, "residual_spread", 1.5, true)]);
    let o = run(&["summarize", good.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(good.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["verdict"], "pass");
    assert_eq!(s["criteria"].as_array().unwrap().len(), 2);
    assert!(good.join("summary.txt").exists());

    let bad = dir.path().join("bad");
    fake_run(&bad, "commutator-scaling", &[(5, "raw_spread", 1.2, true), (5, "weighted_spread", 3.1, false)]);
    let o = run(&["summarize", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(bad.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["verdict"], "fail");
    let failing = s["failing"].to_string();
    assert!(failing.contains('5') && failing.contains("weighted_spread"), "{failing}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("weighted_spread"));
}

#[test]
fn missing_files_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    fake_run(dir.path(), "soliton", &[(8, "period_shape_err", 1e-9, true)]);
    write(
        &dir.path().join("manifest.json"),
        "{\"preset\": \"soliton\", \"seed\": 1, \"files\": [\"checks.csv\", \"soliton.csv\"]}",
    );
    let o = run(&["summarize", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["verdict"], "incomplete");
    assert!(s["missing"].to_string().contains("soliton.csv"));
}

#[test]
fn same_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "experiment = \"residual-scaling\"\neps = [0.2, 0.1]\n[grid]\nnx = 32\nny = 16\nnz = 12\n",
    )
    .unwrap();
    let mut reports = vec![];
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "7", "--quiet"]);
        assert!(code(&o) <= 1, "{}", stderr(&o));
        let mut files: Vec<_> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        assert!(!files.is_empty());
        reports.push(files.iter().map(|p| fs::read(p).unwrap()).collect::<Vec<_>>());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn env_overrides_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "experiment = \"residual-scaling\"\neps = [0.2]\n[grid]\nnx = 32\nny = 16\nnz = 12\n").unwrap();
    let out = dir.path().join("o");
    let o = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"])
        .env("STRIPWAVES_SEED", "42")
        .output()
        .unwrap();
    assert!(code(&o) <= 1, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 42);
}

#[test]
fn printed_defaults_load_back() {
    let dir = tempfile::tempdir().unwrap();
    for p in ["dn-verify", "residual-scaling", "commutator-scaling", "evolve", "kp-compare", "linearized-energy", "soliton"] {
        let o = run(&["defaults", p]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(o.stdout).unwrap();
        let path = dir.path().join(format!("{p}.toml"));
        fs::write(&path, &text).unwrap();
        let back = stripwaves_cli::ExperimentConfig::load(&path, None).unwrap();
        assert_eq!(back, stripwaves_cli::ExperimentConfig::defaults(p.parse().unwrap()));
    }
}
