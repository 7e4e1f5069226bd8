use std::path::Path;
use std::process::{Command, Output};

fn maxprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxprod"))
        .args(args)
        .output()
        .expect("run maxprod")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn unknown_names_exit_2() {
    assert_eq!(code(&maxprod(&["kernel-info", "--kernel", "gaussian"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        code(&maxprod(&[
            "converge", "--kernel", "fejer", "--phi", "cosh", "--signal", "ramp", "--out", d
        ])),
        2
    );
    assert_eq!(
        code(&maxprod(&[
            "reconstruct",
            "--kernel",
            "fejer",
            "--signal",
            "nope",
            "--n",
            "8"
        ])),
        2
    );
}

#[test]
fn inadmissible_kernel_exits_3() {
    assert_eq!(
        code(&maxprod(&[
            "reconstruct",
            "--kernel",
            "bspline:3",
            "--signal",
            "ramp",
            "--n",
            "8"
        ])),
        3
    );
    assert_eq!(
        code(&maxprod(&[
            "verify",
            "--size",
            "2",
            "--kernel",
            "bspline:3"
        ])),
        3
    );
}

#[test]
fn empty_index_set_exits_4() {
    let out = maxprod(&[
        "reconstruct",
        "--kernel",
        "fejer",
        "--signal",
        "ramp",
        "--n",
        "1",
        "--domain",
        "interval:0.2,0.4",
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn io_and_csv_errors_exit_5() {
    assert_eq!(
        code(&maxprod(&[
            "reconstruct",
            "--kernel",
            "fejer",
            "--csv",
            "/nonexistent/x.csv",
            "--n",
            "8"
        ])),
        5
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "t,f\n0.0,1.0\n0.5\n").unwrap();
    assert_eq!(
        code(&maxprod(&[
            "reconstruct",
            "--kernel",
            "fejer",
            "--csv",
            bad.to_str().unwrap(),
            "--n",
            "8"
        ])),
        5
    );
    let missing = dir.path().join("missing");
    let out = maxprod(&[
        "converge",
        "--kernel",
        "fejer",
        "--signal",
        "ramp",
        "--out",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5);
}

#[test]
fn reconstruct_writes_one_row_per_grid_point() {
    let out = maxprod(&[
        "reconstruct",
        "--kernel",
        "fejer",
        "--signal",
        "constant:3.5",
        "--n",
        "16",
        "--grid",
        "11",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,f,K_n_f"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!((r[1] - r[2]).abs() <= 1e-12, "{r:?}");
    }
}

#[test]
fn reconstruct_reads_csv_samples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    std::fs::write(&path, "t,f\n0,0\n0.5,1\n1,0\n").unwrap();
    let out_path = dir.path().join("r.csv");
    let out = maxprod(&[
        "reconstruct",
        "--kernel",
        "bspline:4",
        "--csv",
        path.to_str().unwrap(),
        "--n",
        "8",
        "--grid",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read_to_string(&out_path).unwrap().lines().count(),
        6
    );
}

#[test]
fn converge_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = maxprod(&[
        "converge",
        "--kernel",
        "bspline:4",
        "--signal",
        "ramp",
        "--scales",
        "8,16",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["convergence.json", "convergence.csv"] {
        assert!(Path::new(&dir.path().join(f)).exists());
    }
    let json: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("convergence.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["scales"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_with_no_draws_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("summary.json");
    let out = maxprod(&["verify", "--size", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(path.exists());
}

#[test]
fn verify_small_campaign_passes() {
    let out = maxprod(&["verify", "--seed", "7", "--size", "12"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}
