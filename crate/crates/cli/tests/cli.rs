use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("bundled").join(name)
}

fn coordlab<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_coordlab")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn with_input(args: &[&str], input: &Path) -> Output {
    let mut v: Vec<std::ffi::OsString> = args.iter().map(Into::into).collect();
    v.push("--input".into());
    v.push(input.into());
    coordlab(v)
}

#[test]
fn malformed_channel_row_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(bundled("inside_region.json")).unwrap()).unwrap();
    doc["channel"]["rows"][1] = serde_json::json!([0.0, 0.04, 0.1, 0.76]);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = with_input(&["code", "run", "--seeds", "1"], &path);
    assert_eq!(out.status.code(), Some(2));
    let err = text(&out.stderr);
    assert!(err.contains("channel row 1"), "{err}");
    assert!(err.contains("0.9"), "{err}");
}

#[test]
fn unreadable_input_and_unknown_mode_exit_two() {
    let out = with_input(&["region", "member"], Path::new("/nonexistent/problem.json"));
    assert_eq!(out.status.code(), Some(2));
    let out = with_input(&["code", "run", "--mode", "fast"], &bundled("counting_bound.json"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fm_paper_prints_the_rate_window() {
    let out = coordlab(["fm", "--paper"]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    let window: Vec<&str> = s.lines().skip_while(|l| !l.starts_with("# rate window")).skip(1).collect();
    assert_eq!(window[0], "R_M < min{H(WX|Z), I(X;Y)}");
    assert!(window.contains(&"R_C > max{0, I(W;Z)-I(W;Y)}"));
    let all = text(&coordlab(["fm", "--paper", "--kind", "all"]).stdout);
    assert_eq!(all.matches("# rate window").count(), 3);
    assert!(all.contains("R_M < min{H(X|Z), I(X;Y)}"));
}

#[test]
fn fm_eliminate_toy_system() {
    let out = with_input(&["fm", "eliminate", "--var", "R_F"], &bundled("fm_toy.json"));
    assert!(out.status.success());
    assert_eq!(text(&out.stdout).trim(), "R_C > -I(X;Y)");

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("table.csv");
    let val = bundled("fm_toy_valuation.json");
    let out = coordlab([
        "fm".as_ref(),
        "eliminate".as_ref(),
        "--var".as_ref(),
        "R_F".as_ref(),
        "--valuation".as_ref(),
        val.as_os_str(),
        "--input".as_ref(),
        bundled("fm_toy.json").as_os_str(),
        "--out".as_ref(),
        csv.as_os_str(),
    ] as [&std::ffi::OsStr; 10]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("inequality,lhs,rhs,slack,feasible"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "R_C > -I(X;Y)");
    assert_eq!(row[1], "0.1");
    assert_eq!(row[4], "true");
    assert!(dir.path().join("table.system.txt").exists());
}

#[test]
fn fm_valuation_rejects_unknown_rates() {
    let dir = tempfile::tempdir().unwrap();
    let val = dir.path().join("v.json");
    std::fs::write(&val, r#"{"symbols": {}, "point": {"R_Q": 1.0}}"#).unwrap();
    let out = coordlab([
        "fm".as_ref(),
        "eliminate".as_ref(),
        "--var".as_ref(),
        "R_F".as_ref(),
        "--valuation".as_ref(),
        val.as_os_str(),
        "--input".as_ref(),
        bundled("fm_toy.json").as_os_str(),
    ] as [&std::ffi::OsStr; 8]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_fails_under_injected_error() {
    let ok = coordlab(["verify", "--trials", "20"]);
    assert!(ok.status.success(), "{}", text(&ok.stdout));
    assert!(text(&ok.stdout).lines().all(|l| l.starts_with("PASS ")));

    let bad = coordlab(["verify", "--trials", "20", "--inject-tv-scale", "2"]);
    assert_eq!(bad.status.code(), Some(1));
    let err = text(&bad.stderr);
    assert!(err.contains("tv_half_l1 (seed "), "{err}");
    assert!(err.contains("tv1_equality"), "{err}");
}

#[test]
fn seed_ranges_are_reproducible() {
    let input = bundled("counting_bound.json");
    let run = || with_input(&["code", "run", "--seeds", "1..100"], &input);
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let csv = text(&a.stdout);
    assert!(csv.starts_with("n,seed,tv_mcf,tv_coord,p_err,leakage,f_star\n"));
    // four blocklengths, a hundred seeds each
    assert_eq!(csv.lines().count(), 1 + 4 * 100);
    let other = with_input(&["code", "run", "--seeds", "2..101"], &input);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn summary_lands_next_to_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cells.csv");
    let status = coordlab([
        "code".as_ref(),
        "run".as_ref(),
        "--seeds".as_ref(),
        "1..3".as_ref(),
        "--input".as_ref(),
        bundled("counting_bound.json").as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
    ] as [&std::ffi::OsStr; 8]);
    assert!(status.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cells.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["per_n"].as_array().unwrap().len(), 4);
}

#[test]
fn state_cap_overflow_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cells.csv");
    let res = coordlab([
        "code".as_ref(),
        "run".as_ref(),
        "--seeds".as_ref(),
        "1..2".as_ref(),
        "--cap".as_ref(),
        "1000".as_ref(),
        "--input".as_ref(),
        bundled("inside_region.json").as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
    ] as [&std::ffi::OsStr; 10]);
    assert_eq!(res.status.code(), Some(3));
    assert!(text(&res.stderr).contains("exceeds cap"));
    // cells that fit are still written
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("2,1,")));
}

#[test]
fn region_member_and_sweep() {
    let out = with_input(&["region", "member"], &bundled("region_member_independent_z.json"));
    assert!(out.status.success());
    assert_eq!(text(&out.stdout).lines().next(), Some("IN"));

    let out = with_input(&["region", "sweep"], &bundled("region_sweep_bsc.json"));
    assert!(out.status.success());
    let csv = text(&out.stdout);
    assert!(csv.starts_with("R_M,R_C_min,witness_id\n"));
    let last: f64 = csv.lines().last().unwrap().split(',').next().unwrap().parse().unwrap();
    // capacity of BSC(0.1)
    assert!((last - 0.531_004_406_410_718_6).abs() < 1e-6, "{last}");
}

#[test]
fn lemma_spec_reports_convergence() {
    let out = with_input(&["code", "lemma"], &bundled("lemma_theorem2.json"));
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["label"], "SATISFIED");
    assert_eq!(rep["nonincreasing"], true);
    let out = with_input(&["code", "lemma"], &bundled("lemma_theorem2_violated.json"));
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["label"], "VIOLATED");
}
