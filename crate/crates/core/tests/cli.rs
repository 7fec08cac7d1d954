use std::process::Command;

fn mixest(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mixest")).args(args).output().unwrap()
}

#[test]
fn square_writes_identical_csv_on_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = mixest(&["square", "--k", "1", "--levels", "3", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let table = String::from_utf8(out.stdout).unwrap();
        assert!(table.contains("(2.9") || table.contains("(3.0"), "{table}");
    }
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("level,n_elements,n_dofs,lambda_h,lambda_star"));
    let lambda = lines[1].split(',').nth(3).unwrap();
    // 17 significant digits
    assert_eq!(lambda.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    assert_eq!(lines[1].split(',').nth(2), Some("360"));
}

#[test]
fn verify_passes() {
    let out = mixest(&["verify", "--k", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0 failed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn superconv_reports_identity() {
    let out = mixest(&["superconv", "--k", "1", "--levels", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("|u_h-uh^|"));
}

#[test]
fn lshape_small_budget() {
    let out = mixest(&["lshape", "--k", "1", "--max-dofs", "3000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("slope vs N"));
    let out = mixest(&["lshape", "--k", "1", "--max-dofs", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["square", "--k", "0"][..],
        &["square", "--k", "4"],
        &["square", "--levels", "0"],
        &["square", "--tol", "-1"],
        &["square", "--quad-degree", "0"],
        &["nonsense"],
        &[],
    ] {
        let out = mixest(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn numerical_failures_map_to_one() {
    use mixest::cli::exit_code;
    use mixest::Error;
    assert_eq!(exit_code(&Error::NoConvergence { iterations: 3, change: 1.0 }), 1);
    assert_eq!(exit_code(&Error::Factorization("singular".into())), 1);
    assert_eq!(exit_code(&Error::SignMismatch), 1);
    assert_eq!(exit_code(&Error::InvalidArgument("k".into())), 2);
}

#[test]
fn unwritable_output_is_reported() {
    let out = mixest(&["square", "--levels", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}
