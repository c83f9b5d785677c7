use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn tddlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tddlat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = tddlat(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn temp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tddlat-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn analytic_point_has_both_schemes() {
    let csv = stdout(&["analytic"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "variable,value,scheme,mode,latency_mean,latency_ci95,rho_u,rho_d,censored_fraction,reduction,wall_time_ms,error"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("s_u,0.5,DUDA,analytic,"));
    assert!(lines[2].starts_with("s_u,0.5,DUCA,analytic,"));
}

#[test]
fn perfect_links_through_a_config_file() {
    let path = temp("perfect.conf");
    fs::write(&path, "# full success\nrho_u = 1\nrho_d = 1\ns_d = 0.5\n").unwrap();
    let csv = stdout(&[
        "analytic",
        "--config",
        path.to_str().unwrap(),
        "--sweep",
        "s_u:0.1:0.9:9",
    ]);
    assert_eq!(csv.lines().count(), 1 + 18);
    assert!(
        csv.contains("\ns_u,0.5,DUDA,analytic,1,,1,1,,0.5,,\n"),
        "{csv}"
    );
    assert!(
        csv.contains("\ns_u,0.5,DUCA,analytic,2,,1,1,,,,\n"),
        "{csv}"
    );
}

#[test]
fn flags_override_the_file() {
    let path = temp("seed.conf");
    fs::write(&path, "scheme = duca\n").unwrap();
    let csv = stdout(&[
        "analytic",
        "--config",
        path.to_str().unwrap(),
        "--scheme",
        "duda",
    ]);
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.contains(",DUDA,"));
}

#[test]
fn config_errors_exit_with_two() {
    let path = temp("bad.conf");
    fs::write(&path, "delta = 0.5\nalpha = 2\n").unwrap();
    let out = tddlat(&["analytic", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line 2") && err.contains("alpha must exceed 2"),
        "{err}"
    );

    let out = tddlat(&["analytic", "--set", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tddlat(&["analytic", "--config", "/nonexistent/tddlat.conf"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tddlat(&["sweep"]);
    assert_eq!(out.status.code(), Some(2));
    let out = tddlat(&["analytic", "--noise", "loud"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validation_failure_exits_with_one() {
    // An empirical rate far from the configured override cannot match.
    let out = tddlat(&[
        "validate",
        "--iterations",
        "300",
        "--set",
        "rho_u=0.5",
        "--set",
        "rho_d=0.5",
        "--set",
        "max_attempts=1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("check,status,measured,threshold,detail\n"));
    assert!(csv.contains(",FAIL,"));
}

#[test]
fn validation_passes_with_fixed_links() {
    let out = tddlat(&[
        "validate",
        "--iterations",
        "2000",
        "--set",
        "rho_u=0.6",
        "--set",
        "rho_d=0.8",
    ]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{csv}");
    assert!(csv.contains("kernel_alpha4_closed_form,PASS"));
}

#[test]
fn skipped_kernel_check_does_not_fail() {
    let out = tddlat(&[
        "validate",
        "--iterations",
        "1000",
        "--set",
        "alpha=3.5",
        "--set",
        "rho_u=0.6",
        "--set",
        "rho_d=0.8",
    ]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{csv}");
    assert!(csv.contains("kernel_alpha4_closed_form,SKIP"));
}

#[test]
fn every_subcommand_is_byte_identical_across_runs() {
    let runs: [&[&str]; 6] = [
        &["analytic", "--sweep", "rho_product:0.3:1:8"],
        &["simulate", "--iterations", "200", "--seed", "7"],
        &[
            "simulate",
            "--iterations",
            "100",
            "--seed",
            "7",
            "--sweep",
            "s_u:0.1:0.9:3",
            "--scheme",
            "duda",
        ],
        &[
            "sweep",
            "--sweep",
            "delta:0.2:0.8:3",
            "--mode",
            "both",
            "--iterations",
            "100",
        ],
        &[
            "validate",
            "--iterations",
            "500",
            "--set",
            "rho_u=0.6",
            "--set",
            "rho_d=0.8",
        ],
        &["snapshot", "--seed", "3"],
    ];
    for args in runs {
        let a = tddlat(args);
        let b = tddlat(args);
        assert!(!a.stdout.is_empty(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
    let c = stdout(&["snapshot", "--seed", "4"]);
    assert_ne!(c, stdout(&["snapshot", "--seed", "3"]));
}

#[test]
fn samples_and_out_files() {
    let out = temp("table.csv");
    let samples = temp("samples.csv");
    let printed = stdout(&[
        "simulate",
        "--iterations",
        "50",
        "--out",
        out.to_str().unwrap(),
        "--samples",
        samples.to_str().unwrap(),
    ]);
    assert!(printed.is_empty());
    let table = fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 3);
    let s = fs::read_to_string(&samples).unwrap();
    assert_eq!(
        s.lines().next(),
        Some("value,iteration,scheme,attempts,latency,censored")
    );
    assert_eq!(s.lines().count(), 1 + 100);
    assert!(s.contains("\n0.5,0,DUCA,"));
}

#[test]
fn wall_time_only_on_request() {
    let csv = stdout(&["analytic", "--wall-time"]);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!(row[10].parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn snapshot_roles() {
    let csv = stdout(&["snapshot"]);
    assert!(csv.starts_with("x,y,role,pair_id\n"));
    for role in ["typical_ue", "typical_ul_bs", "typical_dl_bs"] {
        assert_eq!(csv.matches(&format!(",{role},")).count(), 1, "{role}");
    }
}
