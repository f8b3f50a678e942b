use std::path::Path;
use std::process::{Command, Output};

fn krrapsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krrapsp")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn small_sysid(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "sysid", "--N", "12", "--D", "3", "--runs", "3", "--iters", "120", "--seed", "5", "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    krrapsp(&args)
}

#[test]
fn sysid_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = small_sysid(&path, &["--filter", "krr,cgrrf", "--filter", "nlms"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let header: Vec<&str> = text.lines().filter(|l| l.starts_with('#')).collect();
    assert!(header.contains(&"# N=12"));
    assert!(header.contains(&"# seed=5"));
    assert!(header.contains(&"# filters=krr_D3_q4,cgrrf_D3,nlms"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "k,algorithm,mse_db,mismatch_db,update_rate,mults");
    assert_eq!(rows.len(), 1 + 3 * 120);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("krr_D3_q4") && !stdout.contains("mults_closed_form"));
}

#[test]
fn output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(code(&small_sysid(&a, &[])), 0);
    assert_eq!(code(&small_sysid(&b, &[])), 0);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn rank_and_projection_lists_expand() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let out = krrapsp(&[
        "sysid", "--N", "10", "--D", "2,4", "--q", "1,3", "--runs", "2", "--iters", "30", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# filters=krr_D2_q1,krr_D2_q3,krr_D4_q1,krr_D4_q3"));
}

#[test]
fn count_mults_reports_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_sysid(&dir.path().join("m.csv"), &["--filter", "nlms,rls", "--count-mults"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    // Both baselines cost the same at every step and match their closed forms.
    assert!(stdout.contains("mults_measured=38.0 mults_closed_form=38.0"), "{stdout}");
    assert!(stdout.contains("mults_measured=625.0 mults_closed_form=625.0"), "{stdout}");
}

#[test]
fn cdma_dynamic_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cdma.csv");
    let out = krrapsp(&[
        "cdma", "--users", "4", "--users-post", "2", "--snr-db", "10", "--runs", "2", "--iters", "40",
        "--change-at", "20", "--filter", "krr,rls", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    for line in ["# N=31", "# users=4", "# users_post=2", "# change_at=20", "# interferer_amplitude=2"] {
        assert!(text.contains(line), "missing {line}");
    }
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let out = krrapsp(&["verify", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(&path).unwrap();
    assert_eq!(report, String::from_utf8_lossy(&out.stdout));
    assert!(report.lines().count() > 5);
    assert!(!report.lines().any(|l| l.split_whitespace().nth(1) == Some("FAIL")));
    assert!(report.contains("monotone_approximation"));
}

#[test]
fn irrelevant_flags_rejected() {
    let cases: [&[&str]; 6] = [
        &["sysid", "--users", "3", "--out", "x.csv"],
        &["sysid", "--users-post", "2", "--out", "x.csv"],
        &["cdma", "--N", "31", "--out", "x.csv"],
        &["verify", "--D", "3"],
        &["verify", "--count-mults"],
        &["sysid", "--filter", "nlms", "--rho", "0.1", "--out", "x.csv"],
    ];
    for args in cases {
        let out = krrapsp(args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn configuration_errors_exit_two_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.csv");
    let p = path.to_str().unwrap();
    let cases: [&[&str]; 6] = [
        &["sysid", "--N", "4", "--D", "8", "--out", p],
        &["sysid", "--runs", "0", "--out", p],
        &["sysid", "--lambda", "3", "--out", p],
        &["sysid", "--filter", "bogus", "--out", p],
        &["cdma", "--users", "40", "--out", p],
        &["sysid", "--runs", "1", "--iters", "5"],
    ];
    for args in cases {
        assert_eq!(code(&krrapsp(args)), 2, "{args:?}");
    }
    assert!(!path.exists());
    let missing = dir.path().join("no/such/dir/out.csv");
    let out = krrapsp(&["sysid", "--runs", "1", "--iters", "5", "--out", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}
