use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deltasys(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deltasys"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn member_lines(text: &str) -> usize {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("k=") && !l.trim().is_empty())
        .count()
}

#[test]
fn gen_chain_writes_family_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = deltasys(
        dir.path(),
        &["gen", "chain", "--k", "2", "--m", "2", "--n", "3", "--out", "f.txt"],
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("f.txt")).unwrap();
    assert_eq!(member_lines(&text), 4);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("f.txt.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "chain");
    assert_eq!(meta["members"], 4);
}

#[test]
fn json_format_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let out = deltasys(
        dir.path(),
        &[
            "gen", "parity", "--k", "4", "--n", "5", "--format", "json", "--out", "p.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(v["sets"].as_array().unwrap().len(), 40);
    let out = deltasys(
        dir.path(),
        &[
            "clique", "--family", "p.json", "--format", "json", "--L", "1,3", "--m", "5",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let c: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(c["clique_number"].as_u64().unwrap() <= 4);
}

#[test]
fn missing_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = deltasys(
        dir.path(),
        &["extract", "--family", "missing.txt", "--L", "1", "--m", "2"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_family_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "k=2 n=4\n0 1\n2 1\n").unwrap();
    let out = deltasys(
        dir.path(),
        &["sunflower", "--family", "bad.txt", "--L", "0", "--m", "2"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = deltasys(dir.path(), &["gen", "chain", "--k", "2", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn color_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        deltasys(
            d,
            &["gen", "chain", "--k", "2", "--m", "2", "--n", "3", "--out", "f.txt"]
        )
        .status
        .code(),
        Some(0)
    );
    for out in ["a.json", "b.json"] {
        let o = deltasys(
            d,
            &[
                "color", "--family", "f.txt", "--p", "2", "--a", "1", "--m", "4", "--seed", "1", "--out", out,
            ],
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, fs::read(d.join("b.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(v["chi"].is_u64() && v["T"].is_u64() && v["rounds"].is_array());
    let o = deltasys(
        d,
        &[
            "color-validate",
            "--family",
            "f.txt",
            "--p",
            "2",
            "--a",
            "1",
            "--in",
            "a.json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn invalid_colouring_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("f.txt"), "k=2 n=4\n0 1\n0 2\n").unwrap();
    // Members 0 and 1 meet in one element, which is forbidden for a = 0 mod 2.
    fs::write(d.join("bad.json"), r#"{"chi":2,"T":1,"rounds":[[0,1]]}"#).unwrap();
    let o = deltasys(
        d,
        &[
            "color-validate",
            "--family",
            "f.txt",
            "--p",
            "2",
            "--a",
            "0",
            "--in",
            "bad.json",
            "--report",
            "r.jsonl",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(fs::read_to_string(d.join("r.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(report["exit_code"], 1);
    assert_eq!(report["guarantees"][0]["passed"], false);
}

#[test]
fn report_records_digest_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    deltasys(
        d,
        &["gen", "chain", "--k", "3", "--m", "2", "--n", "3", "--out", "c.txt"],
    );
    let o = deltasys(
        d,
        &[
            "certify",
            "--family",
            "c.txt",
            "--ell",
            "1",
            "--m",
            "3",
            "--seed",
            "7",
            "--out",
            "cert.json",
            "--report",
            "r.jsonl",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let line = fs::read_to_string(d.join("r.jsonl")).unwrap();
    let report: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(report["subcommand"], "certify");
    assert_eq!(report["seed"], 7);
    assert_eq!(report["input_digest"].as_str().unwrap().len(), 64);
    assert_eq!(report["outputs"][0], "cert.json");
    let o = deltasys(
        d,
        &["oracle", "verify-cert", "--family", "c.txt", "--cert", "cert.json"],
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn corrupted_certificate_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    deltasys(
        d,
        &["gen", "chain", "--k", "3", "--m", "2", "--n", "3", "--out", "c.txt"],
    );
    deltasys(
        d,
        &[
            "certify",
            "--family",
            "c.txt",
            "--ell",
            "1",
            "--m",
            "3",
            "--out",
            "cert.json",
        ],
    );
    let mut cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("cert.json")).unwrap()).unwrap();
    let phi = cert["phi"].as_array_mut().unwrap();
    assert!(!phi.is_empty());
    // Point phi(A) at an element of A.
    let first = phi[0][0][0].clone();
    phi[0][1] = first;
    fs::write(d.join("bad.json"), serde_json::to_string(&cert).unwrap()).unwrap();
    let o = deltasys(d, &["oracle", "verify-cert", "--family", "c.txt", "--cert", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sunflower_reports_none_or_witness() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("star.txt"), "k=2 n=4\n0 1\n0 2\n0 3\n").unwrap();
    let o = deltasys(d, &["sunflower", "--family", "star.txt", "--L", "1", "--m", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let w: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(w["kernel"], serde_json::json!([0]));
    let o = deltasys(
        d,
        &["sunflower", "--family", "star.txt", "--L", "1", "--m", "4", "--exact"],
    );
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "\"none\"");
}

#[test]
fn no_verify_skips_guarantees() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = deltasys(
        d,
        &[
            "gen",
            "hadamard",
            "--p",
            "2",
            "--k",
            "4",
            "--no-verify",
            "--report",
            "r.jsonl",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(fs::read_to_string(d.join("r.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(report["guarantees"].as_array().unwrap().len(), 0);
}
