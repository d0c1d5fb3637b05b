use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn wecopt(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wecopt"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .expect("spawn wecopt")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario("two_body.toml");
    let mut dirs = Vec::new();
    for (i, threads) in ["1", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let o = wecopt(
            &["optimize", "--scenario", sc.to_str().unwrap(), "--method", "saa-mc", "--seed", "7", "--out", out.to_str().unwrap()],
            threads,
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        dirs.push(out);
    }
    for f in ["history.csv", "device_map.csv", "summary.json"] {
        let a = std::fs::read(dirs[0].join(f)).unwrap();
        let b = std::fs::read(dirs[1].join(f)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{f} differs");
        assert!(!a.contains(&b'\r'));
    }
}

#[test]
fn summary_is_consistent_with_the_device_map_and_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario("two_body.toml");
    let out = tmp.path().join("run");
    let o = wecopt(&["optimize", "--scenario", sc.to_str().unwrap(), "--out", out.to_str().unwrap()], "2");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["spec_version"], 1);
    assert_eq!(s["seed"], 1);

    let rows = csv_rows(&out.join("device_map.csv"));
    assert_eq!(rows.len(), 2);
    let powers: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    let q = powers.iter().sum::<f64>() / (2.0 * s["isolated_power"].as_f64().unwrap());
    assert!((q - s["interaction_factor"].as_f64().unwrap()).abs() <= 1e-12);

    let c: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    let st: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!((c[0] - c[1]).abs() / c[0] < 1e-6);
    assert!((st[0] - st[1]).abs() / st[0].abs().max(1.0) < 1e-6);

    let eval_dir = tmp.path().join("eval");
    let o = wecopt(
        &[
            "evaluate",
            "--scenario",
            sc.to_str().unwrap(),
            "--from-summary",
            out.join("summary.json").to_str().unwrap(),
            "--out",
            eval_dir.to_str().unwrap(),
        ],
        "2",
    );
    assert_eq!(code(&o), 0);
    let e: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_dir.join("evaluation.json")).unwrap()).unwrap();
    let p_sum = s["expected_power"].as_f64().unwrap();
    let p_eval = e["expected_power"].as_f64().unwrap();
    assert!((p_sum - p_eval).abs() <= 1e-12 * p_sum.abs());
}

#[test]
fn positive_stiffness_runs_emit_nonnegative_stiffness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pos");
    let sc = scenario("case1.toml");
    let o = wecopt(
        &["optimize", "--scenario", sc.to_str().unwrap(), "--positive-stiffness", "true", "--out", out.to_str().unwrap()],
        "2",
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for r in csv_rows(&out.join("device_map.csv")) {
        assert!(r[3].parse::<f64>().unwrap() >= 1.0);
        assert!(r[4].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn infeasible_termination_and_bad_input_have_their_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario("two_body.toml");
    let out = tmp.path().join("inf");
    let o = wecopt(
        &["optimize", "--scenario", sc.to_str().unwrap(), "--alpha", "0.3", "--max-outer", "1", "--out", out.to_str().unwrap()],
        "2",
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(summary(&out)["feasible"], false);

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[climate]\ndepth = 50.0\nbogus = 1\n").unwrap();
    let o = wecopt(&["optimize", "--scenario", bad.to_str().unwrap(), "--out", out.to_str().unwrap()], "1");
    assert_eq!(code(&o), 3);
    let o = wecopt(&["optimize", "--scenario", "/does/not/exist.toml", "--out", out.to_str().unwrap()], "1");
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("exist.toml"));
    let o = wecopt(&["evaluate", "--scenario", sc.to_str().unwrap(), "--u", "1,2,3", "--out", out.to_str().unwrap()], "1");
    assert_eq!(code(&o), 3);
}

#[test]
fn scaling_the_control_up_drives_power_towards_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario("case1.toml");
    let power = |u: &str| {
        let o = wecopt(&["evaluate", "--scenario", sc.to_str().unwrap(), "--u", u, "--out", tmp.path().to_str().unwrap()], "1");
        assert!(matches!(code(&o), 0 | 2), "{}", String::from_utf8_lossy(&o.stderr));
        let e: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(tmp.path().join("evaluation.json")).unwrap()).unwrap();
        e["expected_power"].as_f64().unwrap()
    };
    let base = power("4e4,-1.5e5");
    let scaled = power("4e8,-1.5e9");
    assert!(base > 0.0);
    assert!(scaled < 1e-3 * base, "{scaled} vs {base}");
}

#[test]
fn grid_search_and_study_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = scenario("case1.toml");
    let o = wecopt(
        &["grid-search", "--scenario", sc.to_str().unwrap(), "--resolution", "5", "--out", tmp.path().to_str().unwrap()],
        "2",
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&tmp.path().join("grid.csv"));
    assert_eq!(rows.len(), 25);
    assert!(tmp.path().join("grid_best.json").exists());

    let o = wecopt(
        &[
            "convergence-study",
            "--scenario",
            sc.to_str().unwrap(),
            "--method",
            "saa-gl",
            "--sizes",
            "2,4,8",
            "--reference-nodes",
            "64",
            "--reference-tail",
            "1e-3",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        "2",
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let header = std::fs::read_to_string(tmp.path().join("study.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), "method,n,seed,error");
    assert_eq!(csv_rows(&tmp.path().join("study.csv")).len(), 3);

    let o = wecopt(
        &["convergence-study", "--scenario", sc.to_str().unwrap(), "--method", "sa", "--out", tmp.path().to_str().unwrap()],
        "1",
    );
    assert_eq!(code(&o), 3);
}
