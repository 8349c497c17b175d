use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac-chansim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn run_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = bin(&[
        "run",
        "--config",
        &config("multi_link_umi.toml"),
        "--out",
        out.to_str().unwrap(),
        "--drops",
        "2",
        "--seed",
        "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["clusters.csv", "cir.csv", "stats.csv", "cdf.csv"] {
        let l = lines(&out.join(f));
        assert!(
            l[0].starts_with("# config_hash=") && l[0].ends_with("seed=4"),
            "{f}"
        );
    }
    // 2 drops x 6 links plus header and provenance
    assert_eq!(lines(&out.join("stats.csv")).len(), 14);

    let an = dir.path().join("an");
    let o = bin(&[
        "analyze",
        "--mpc",
        out.join("clusters.csv").to_str().unwrap(),
        "--k-range",
        "2:6",
        "--link",
        "d0_b0_u0",
        "--out",
        an.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let idx = lines(&an.join("indices.csv"));
    assert_eq!(idx[0], "k,ch,db,ci");
    assert_eq!(idx.len(), 6);
    assert!(an.join("labels.csv").exists() && an.join("cdf.csv").exists());
}

#[test]
fn emit_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "run",
        "--config",
        &config("multi_link_rma.toml"),
        "--out",
        dir.path().to_str().unwrap(),
        "--drops",
        "1",
        "--emit",
        "cir,stats",
    ]);
    assert!(o.status.success());
    assert!(dir.path().join("cir.csv").exists());
    assert!(dir.path().join("stats.csv").exists());
    assert!(!dir.path().join("clusters.csv").exists());
}

#[test]
fn validate_short_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "validate",
        "--config",
        &config("validation_umi_28ghz.toml"),
        "--out",
        dir.path().to_str().unwrap(),
        "--drops",
        "50",
    ]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.contains("[PASS] ds_p90_band"));
    assert!(!stdout.contains("[FAIL]"));
    assert!(dir.path().join("report.csv").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("validation_umi_28ghz.toml")).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("carrier_frequency"))
        .unwrap();
    std::fs::write(&bad, text.replace(line, "carrier_frequency = -1.0")).unwrap();
    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, text.replace("[run]", "[run]\nfrobnicate = 1")).unwrap();
    for (path, needle) in [(&bad, "carrier_frequency"), (&unknown, "frobnicate")] {
        let o = bin(&[
            "run",
            "--config",
            path.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&o.stderr).contains(needle));
    }
}

#[test]
fn missing_file_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&[
        "run",
        "--config",
        "/nonexistent/x.toml",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_mpc_table_exits_with_code_5() {
    let dir = tempfile::tempdir().unwrap();
    let mpc = dir.path().join("mpc.csv");
    std::fs::write(&mpc, "delay_s,power_lin\n1e-9,1\n").unwrap();
    let o = bin(&[
        "analyze",
        "--mpc",
        mpc.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(5));
}
