use std::fs;
use std::process::Command;

use pbiharm_dg::study::{parse_csv, CSV_HEADER};

fn pbiharm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pbiharm"))
}

#[test]
fn study_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = pbiharm()
            .args(["--p", "2", "--k", "2", "--levels", "4,8", "--emit-vtk", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        let stdout = String::from_utf8(status.stdout).unwrap();
        assert!(stdout.lines().any(|l| l == CSV_HEADER));
        for f in ["rates.csv", "err_u.dat", "err_D.dat", "err_dg.dat", "solution_n4.vtk", "solution_n8.vtk"] {
            assert!(out.join(f).exists(), "missing {f}");
        }
        csvs.push(fs::read_to_string(out.join("rates.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let rows = parse_csv(&csvs[0]).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), [4, 8]);
    assert!(rows[0].eoc_u.is_none() && rows[1].eoc_u.is_some());
    assert!(rows[1].err_u < rows[0].err_u);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# coarse run\np = 3\nk = 2\nlevels = 2,4\nsigma = 10\n").unwrap();
    let out = pbiharm().arg("--config").arg(&cfg).args(["--levels", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("# p = 3, k = 2, sigma = 10"));
    let csv: String = stdout.lines().skip(1).map(|l| format!("{l}\n")).collect();
    assert_eq!(parse_csv(&csv).unwrap().len(), 1);
}

#[test]
fn sigma_sweep_prints_one_table_per_value() {
    let out = pbiharm().args(["--levels", "2,4", "--sigma-sweep", "1,100"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches(CSV_HEADER).count(), 2);
    assert!(stdout.contains("sigma = 100"));
}

#[test]
fn invalid_arguments_are_rejected() {
    for args in [&["--k", "1"][..], &["--p", "1.5"], &["--levels", "4,x"], &["--flux", "weird"], &["--sigma", "-1"]] {
        let out = pbiharm().args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}
