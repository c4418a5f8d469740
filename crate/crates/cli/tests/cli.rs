use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn normform(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_normform"))
        .args(args)
        .env("NORMFORM_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_of(cache: &Path, args: &[&str]) -> Value {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&normform(cache, &a))).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

#[test]
fn sieve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&normform(dir.path(), &["sieve", "--n", "1", "--x", "20"]));
    assert_eq!(text, "p\n2\n5\n13\n17\n");
}

#[test]
fn expsum_row() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&normform(dir.path(), &["expsum", "--n", "1", "--poly", "0,1", "--q", "2", "--a", "1"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,q,re,im,coefficient_re,coefficient_im"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(&row[..4], &[1.0, 2.0, -2.0, 0.0]);
    assert_eq!(lines.next(), None);
}

#[test]
fn varcheck_clean() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_of(dir.path(), &["varcheck", "--seed", "7", "--count", "1000"]);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["seed"], 7);
    assert!(schema("varcheck").is_valid(&v));
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.len() >= 20);
    assert!(checks.iter().all(|c| c["violations"] == 0 && c["checked"].as_u64().unwrap() > 0));
}

#[test]
fn every_subcommand_matches_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &[&str])] = &[
        ("sieve", &["sieve", "--n", "5", "--x", "1000"]),
        ("expsum", &["expsum", "--n", "3", "--poly", "0,0,1", "--q", "12"]),
        ("spectrum-scan", &["spectrum-scan", "--n", "1", "--m", "4096", "--grid", "64"]),
        ("major-arc", &["major-arc", "--n", "1", "--x", "10000,20000", "--a", "1", "--q", "2"]),
        ("minor-arc", &["minor-arc", "--n", "2", "--alpha", "0.618,0.25", "--x", "5000"]),
        ("vaughan", &["vaughan", "--n", "5", "--x", "200", "--U", "12", "--V", "12"]),
        ("residue", &["residue", "--n", "2", "--p", "11"]),
        ("avg", &["avg", "--n", "1", "--scales", "8,20", "--modulus", "8", "--point", "5"]),
        ("avg", &["avg", "--n", "1", "--scales", "100,1000", "--random-signal", "500", "--weighted"]),
        ("varcheck", &["varcheck", "--count", "20"]),
        ("iw", &["iw", "--rho", "0.5", "--N", "1000", "--q-cap", "30"]),
        ("iw", &["iw", "--rho", "0.5", "--N", "1000"]),
    ];
    for (name, args) in cases {
        let v = json_of(dir.path(), args);
        let validator = schema(name);
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
        let csv = stdout(&normform(dir.path(), args));
        let header = csv.lines().next().unwrap();
        assert!(!header.is_empty() && header.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == ','));
    }
}

#[test]
fn residue_counts_are_p_minus_one() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_of(dir.path(), &["residue", "--n", "1", "--p", "13"]);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r["count"] == 12 && r["expected"] == 12));
}

#[test]
fn cyclic_average_values() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&normform(dir.path(), &["avg", "--n", "1", "--scales", "8,20", "--modulus", "8", "--point", "5"]));
    assert_eq!(text, "m,re,im\n8,0.5,0\n20,0.5,0\n");
}

#[test]
fn vaughan_cells_are_quoted() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&normform(dir.path(), &["vaughan", "--n", "1", "--x", "10", "--U", "3", "--V", "3"]));
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("\"(2, w-1)^2\",4,"), "{row}");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = normform(
            dir.path(),
            &["varcheck", "--seed", "11", "--count", "200", "--format", "json", "--out", out.to_str().unwrap()],
        );
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = stdout(&normform(dir.path(), &["avg", "--n", "1", "--scales", "64", "--random-signal", "50", "--point", "60", "--seed", "4"]));
    let d = stdout(&normform(dir.path(), &["avg", "--n", "1", "--scales", "64", "--random-signal", "50", "--point", "60", "--seed", "4"]));
    let e = stdout(&normform(dir.path(), &["avg", "--n", "1", "--scales", "64", "--random-signal", "50", "--point", "60", "--seed", "5"]));
    assert_eq!(c, d);
    assert_ne!(c, e);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| normform(dir.path(), args).status.code();
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["sieve", "--n", "1", "--x", "20", "--bogus"]), Some(2));
    assert_eq!(code(&["sieve", "--n", "1"]), Some(2));
    assert_eq!(code(&["sieve", "--n", "0", "--x", "20"]), Some(2));
    assert_eq!(code(&["expsum", "--n", "1", "--q", "4", "--a", "2"]), Some(2));
    assert_eq!(code(&["avg", "--n", "1", "--scales", "20,8"]), Some(2));
    assert_eq!(code(&["sieve", "--n", "1", "--x", "1000000000"]), Some(3));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn cache_env_and_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let first = stdout(&normform(dir.path(), &["sieve", "--n", "1", "--x", "20"]));
    let file = dir.path().join("pn_1_20.bin");
    assert!(file.exists(), "cache written under NORMFORM_CACHE");
    assert_eq!(stdout(&normform(dir.path(), &["sieve", "--n", "1", "--x", "20"])), first);

    let bytes = std::fs::read(&file).unwrap();
    std::fs::write(&file, &bytes[..bytes.len() - 3]).unwrap();
    let o = normform(dir.path(), &["sieve", "--n", "1", "--x", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cache integrity"));

    let mut foreign = bytes.clone();
    foreign[..5].copy_from_slice(b"XXXX1");
    std::fs::write(&file, &foreign).unwrap();
    let o = normform(dir.path(), &["sieve", "--n", "1", "--x", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cache integrity"));

    assert_eq!(stdout(&normform(dir.path(), &["sieve", "--n", "1", "--x", "20", "--no-cache"])), first);

    let other = tempfile::tempdir().unwrap();
    let o = normform(dir.path(), &["sieve", "--n", "1", "--x", "20", "--cache-dir", other.path().to_str().unwrap()]);
    assert_eq!(stdout(&o), first);
    assert!(other.path().join("pn_1_20.bin").exists());
}
