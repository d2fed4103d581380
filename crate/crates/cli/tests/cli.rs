use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const NOISY_COPY: &str = r#"{"x_alphabet":2,"y_alphabet":2,"order":0,
  "backward":{"x:|y:":[0.5,0.5]},
  "forward":{"x:0|y:":[0.9,0.1],"x:1|y:":[0.1,0.9]}}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirinfo")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    if out.stdout.is_empty() {
        return Value::Null;
    }
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn failure(dir: &Path, args: &[&str]) -> (i32, Value) {
    let out = run(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    (out.status.code().unwrap(), err)
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("copy.json"), NOISY_COPY).unwrap();
    dir
}

/// Data rows of a CSV file, with the header and trailing metadata checked.
fn csv_rows(path: &Path, header: &str) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], header);
    let last = lines.last().unwrap();
    assert!(last.starts_with("# tool=dirinfo/") && last.contains(" config="), "{last}");
    assert_eq!(lines.iter().filter(|l| l.starts_with('#')).count(), 1);
    lines[1..lines.len() - 1].iter().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn gamble_reproduces_the_example1_target() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["example1", "--p", "0.8", "--q", "0.1", "--out", "e1.json", "--quiet"]);
    let model: Value = serde_json::from_str(&fs::read_to_string(d.join("e1.json")).unwrap()).unwrap();
    let target = model["meta"]["target_rate"].as_f64().unwrap();
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!((target - (h(0.8 * 0.9 + 0.2 * 0.1) - h(0.1))).abs() < 1e-12);
    ok(d, &["gamble", "--model", "e1.json", "--n", "12", "--csv", "g.csv"]);
    let rows = csv_rows(&d.join("g.csv"), "n,W_star_with_si,W_star_no_si,delta_W,di_rate,penalty");
    assert_eq!(rows.len(), 1);
    let delta: f64 = rows[0][3].parse().unwrap();
    assert!((delta - target).abs() < 1e-3, "{delta} vs {target}");
}

#[test]
fn example1_edge_parameters() {
    let dir = setup();
    let d = dir.path();
    let useless = ok(d, &["example1", "--p", "0.7", "--q", "0.5"]);
    assert!(useless["meta"]["target_rate"].as_f64().unwrap().abs() < 1e-12);
    let perfect = ok(d, &["example1", "--p", "0.7", "--q", "0"]);
    let h = dirinfo::binary_entropy(0.7).unwrap();
    assert!((perfect["meta"]["target_rate"].as_f64().unwrap() - h).abs() < 1e-12);
    let (code, err) = failure(d, &["example1", "--p", "1.5"]);
    assert_eq!(code, 5);
    assert_eq!(err["error"]["kind"], "domain");
}

#[test]
fn info_reports_directed_information() {
    let dir = setup();
    let d = dir.path();
    let r = ok(d, &["info", "--model", "copy.json", "--n", "4", "--quantity", "directed"]);
    let di = r["quantities"]["directed"].as_f64().unwrap();
    let expected = 4.0 * (1.0 - dirinfo::binary_entropy(0.1).unwrap());
    assert!((di - expected).abs() < 1e-9);
    assert_eq!(r["di_x_to_y"].as_f64().unwrap(), di);
    ok(d, &["info", "--model", "copy.json", "--n", "1,2,3", "--quantity", "directed,mi", "--csv", "i.csv", "--quiet"]);
    assert_eq!(csv_rows(&d.join("i.csv"), "n,quantity,direction,delay,value,rate").len(), 6);
}

#[test]
fn malformed_model_gives_a_parse_error_and_no_output() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{\"x_alphabet\": 2,").unwrap();
    let (code, err) = failure(d, &["info", "--model", "bad.json", "--n", "2", "--csv", "out.csv"]);
    assert_eq!(code, 2);
    assert_eq!(err["error"]["kind"], "parse");
    assert!(!d.join("out.csv").exists());
    let (code, err) = failure(d, &["info", "--model", "missing.json", "--n", "2"]);
    assert_eq!(code, 10);
    assert_eq!(err["error"]["kind"], "io");
}

#[test]
fn distinct_exit_codes() {
    let dir = setup();
    let d = dir.path();
    let (code, err) = failure(d, &["info", "--model", "copy.json", "--n", "40"]);
    assert_eq!((code, err["error"]["kind"].as_str().unwrap()), (3, "capacity"));
    let (code, err) = failure(d, &["info", "--model", "copy.json", "--n", "2", "--delay", "3"]);
    assert_eq!((code, err["error"]["kind"].as_str().unwrap()), (5, "unsupported_delay"));
    let (code, err) = failure(d, &["info", "--nonsense"]);
    assert_eq!((code, err["error"]["kind"].as_str().unwrap()), (5, "usage"));
    fs::write(d.join("x.txt"), "0 1 1").unwrap();
    fs::write(d.join("y.txt"), "0 0 1").unwrap();
    let copy = r#"{"x_alphabet":2,"y_alphabet":2,"order":0,"backward":{"x:|y:":[0.5,0.5]},
      "forward":{"x:0|y:":[1,0],"x:1|y:":[0,1]}}"#;
    fs::write(d.join("det.json"), copy).unwrap();
    let (code, err) = failure(d, &["compress", "--model", "det.json", "--n", "3", "--encode", "x.txt", "y.txt", "--out", "b"]);
    assert_eq!((code, err["error"]["kind"].as_str().unwrap()), (4, "support_violation"));
    let help = run(d, &["--help"]);
    assert!(help.status.success());
    let text = String::from_utf8(help.stdout).unwrap();
    assert!(text.contains("Exit codes:") && text.contains("3   capacity error"));
}

#[test]
fn csv_is_reproducible_and_appends() {
    let dir = setup();
    let d = dir.path();
    let args = |csv: &'static str| {
        vec!["gamble", "--model", "copy.json", "--n", "3,5", "--mode", "mc", "--replicas", "50", "--seed", "7", "--csv", csv, "--quiet"]
    };
    ok(d, &args("a.csv"));
    ok(d, &args("b.csv"));
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());
    ok(d, &args("a.csv"));
    let header = "n,W_star_with_si,W_star_no_si,delta_W,di_rate,penalty";
    let rows = csv_rows(&d.join("a.csv"), header);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], rows[2]);
    // The same config hashes once; another seed adds a second hash.
    let mut other = args("a.csv");
    other[10] = "8";
    ok(d, &other);
    let text = fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(text.lines().last().unwrap().matches(';').count(), 1);
    // A table of another kind is refused.
    let (code, _) = failure(d, &["info", "--model", "copy.json", "--n", "2", "--csv", "a.csv"]);
    assert_eq!(code, 5);
}

#[test]
fn compress_round_trip_and_report() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("x.txt"), "0 1 1 0 1 0").unwrap();
    fs::write(d.join("y.txt"), "0,1,0,0,1,1").unwrap();
    let e = ok(d, &["compress", "--model", "copy.json", "--n", "6", "--encode", "x.txt", "y.txt", "--out", "x.bits"]);
    let bits = e["bits"].as_u64().unwrap() as usize;
    let bytes = fs::read(d.join("x.bits")).unwrap();
    assert_eq!(bytes.len(), 8 + bits.div_ceil(8));
    assert_eq!(u64::from_be_bytes(bytes[..8].try_into().unwrap()) as usize, bits);
    let r = ok(d, &["compress", "--model", "copy.json", "--n", "6", "--decode", "x.bits", "y.txt", "--out", "x2.txt"]);
    assert_eq!(r["x"], serde_json::json!([0, 1, 1, 0, 1, 0]));
    assert_eq!(fs::read_to_string(d.join("x2.txt")).unwrap().trim(), "0 1 1 0 1 0");
    ok(d, &["compress", "--model", "copy.json", "--n", "1,4", "--report", "--csv", "c.csv", "--quiet"]);
    let rows = csv_rows(&d.join("c.csv"), "n,expected_len,entropy_bound,redundancy,dyadic_exact");
    assert_eq!(rows.len(), 2);
    for row in rows {
        let n: f64 = row[0].parse().unwrap();
        let len: f64 = row[1].parse().unwrap();
        let bound: f64 = row[2].parse().unwrap();
        // Binary Huffman spends one bit per symbol on a binary source.
        assert!((len - n).abs() < 1e-12);
        assert!(bound <= len);
    }
}

#[test]
fn hyptest_tables() {
    let dir = setup();
    let d = dir.path();
    let header = "n,alpha,beta,beta_np,exponent_beta,target_di_rate,exponent_alpha,target_l2_rate";
    let r = ok(d, &["hyptest", "--model", "copy.json", "--n-list", "2,4,6,8", "--csv", "h.csv"]);
    assert!((r["target_di_rate"].as_f64().unwrap() - 0.531004406).abs() < 1e-6);
    assert_eq!(r["fit"]["fit_ns"], serde_json::json!([6, 8]));
    let rows = csv_rows(&d.join("h.csv"), header);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let alpha: f64 = row[1].parse().unwrap();
        let beta: f64 = row[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&alpha) && (0.0..=1.0).contains(&beta));
    }
    // Monte Carlo mode beyond the enumeration guard leaves the exact columns blank.
    ok(d, &["hyptest", "--model", "copy.json", "--n-list", "40", "--mode", "mc", "--samples", "200", "--csv", "m.csv", "--quiet"]);
    let rows = csv_rows(&d.join("m.csv"), header);
    assert_eq!(rows[0][3], "");
    let (code, _) = failure(d, &["hyptest", "--model", "copy.json", "--n-list", "2,4", "--epsilon", "0.7"]);
    assert_eq!(code, 5);
}

#[test]
fn portfolio_horse_race_is_tight() {
    let dir = setup();
    let d = dir.path();
    let market = r#"{"support":[[2,0],[0,2]],"y_alphabet":2,"order":0,
      "kernel":{"x:|y:":[0.5,0.5]},
      "side_info":{"x:0|y:":[0.9,0.1],"x:1|y:":[0.1,0.9]}}"#;
    fs::write(d.join("m.json"), market).unwrap();
    let r = ok(d, &["portfolio", "--market", "m.json", "--n", "2", "--csv", "p.csv"]);
    assert!((r["gap"].as_f64().unwrap() - r["directed_info"].as_f64().unwrap()).abs() < 1e-6);
    let rows = csv_rows(&d.join("p.csv"), "n,W_with_si,W_no_si,gap,directed_info,bound_ok");
    assert_eq!(rows[0][5], "true");
}
