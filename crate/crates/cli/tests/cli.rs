use std::path::Path;
use std::process::{Command, Output};

fn cavloss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavloss")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const RB_ZERO_GAMMA: &str = r#"{"species": {"mass_amu": 84.911789738, "lambda_nm": 795,
    "gamma_a_mhz": 0, "c3_erg_ang3": 1.1e-10, "trap_depth_mk": 5}}"#;

#[test]
fn scan_is_byte_identical_across_runs_and_thread_counts() {
    let a = cavloss(&["scan", "--points", "40"]);
    let b = cavloss(&["scan", "--points", "40", "--jobs", "3"]);
    let c = cavloss(&["scan", "--points", "40", "--jobs", "1"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn scan_rows_ascend_and_have_all_columns() {
    let o = cavloss(&["scan", "--points", "25", "--p-model", "analytic"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 12);
    assert_eq!(header[0], "delta_mhz");
    let deltas: Vec<f64> = lines
        .map(|l| {
            let cols: Vec<_> = l.split(',').collect();
            assert_eq!(cols.len(), 12);
            // 12 significant digits in scientific notation
            assert!(cols[10].contains('e'));
            assert_eq!(cols[10].split('e').next().unwrap().replace(['-', '.'], "").len(), 12);
            cols[0].parse().unwrap()
        })
        .collect();
    assert_eq!(deltas.len(), 25);
    assert!(deltas.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn loss_free_has_at_most_one_interior_extremum() {
    let o = cavloss(&["scan"]);
    let text = stdout(&o);
    let free: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(11).unwrap().parse().unwrap()).collect();
    let extrema = (1..free.len() - 1)
        .filter(|&i| (free[i] - free[i - 1]) * (free[i + 1] - free[i]) < 0.0)
        .count();
    assert!(extrema <= 1, "{extrema}");
}

#[test]
fn excitation_and_window_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scan": {"include_excitation": true, "points": 4}}"#);
    let o = cavloss(&["scan", "--config", &cfg, "--from-mhz", "-1200", "--allow-out-of-window"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().ends_with(",loss_free,p_excite,in_window"));
    assert!(lines.next().unwrap().ends_with(",0"));
    assert!(lines.last().unwrap().ends_with(",1"));
}

#[test]
fn out_of_window_needs_override() {
    let o = cavloss(&["scan", "--from-mhz", "-1200"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("--allow-out-of-window"));
    let o = cavloss(&["times", "--delta-mhz", "-200"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(cavloss(&["times", "--delta-mhz", "-200", "--allow-out-of-window"]).status.success());
}

#[test]
fn non_negative_detuning_rejected() {
    for args in [
        &["times", "--delta-mhz", "0", "--allow-out-of-window"][..],
        &["dynamics", "--delta-mhz", "10", "--allow-out-of-window"][..],
        &["scan", "--from-mhz", "-10", "--to-mhz", "5", "--allow-out-of-window"][..],
    ] {
        let o = cavloss(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(o.stdout.is_empty());
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn missing_wavelength_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"species": {"mass_amu": 85, "gamma_a_mhz": 6, "c3_erg_ang3": 1.1e-10, "trap_depth_mk": 5}}"#,
    );
    let o = cavloss(&["constants", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("species.lambda_nm"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn malformed_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"scan": {"points": "many"}}"#);
    assert_eq!(cavloss(&["scan", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(cavloss(&["scan", "--config", "/nonexistent/run.json"]).status.code(), Some(2));
    assert_eq!(cavloss(&["scan", "--points", "1"]).status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let o = cavloss(&["scan", "--points", "10", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), cavloss(&["scan", "--points", "10"]).stdout);
}

#[test]
fn validate_defaults_pass() {
    let o = cavloss(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn validate_zero_linewidth_fails_in_loss_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RB_ZERO_GAMMA);
    let o = cavloss(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL traploss.no_cavity_identity: domain error"), "{out}");
    assert!(stderr(&o).contains("traploss.series_closed_form"));
}

#[test]
fn validate_catches_tampered_g0() {
    let o = cavloss(&["validate", "--g0-override", "0.70"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL kinematics.f_normalization"));
}

#[test]
fn dynamics_without_decay_is_pure_rabi() {
    let o = cavloss(&["dynamics", "--gamma-a-mhz", "0", "--t-max-ns", "20", "--rows", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let ot = 2.0 * std::f64::consts::PI * 200e6;
    for l in text.lines().skip(1).filter(|l| !l.starts_with('#')) {
        let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((c[1] - (ot * c[0]).cos().powi(2)).abs() < 1e-8);
        assert!(c[6].abs() < 1e-10);
    }
}

#[test]
fn dynamics_defaults_and_step_limit() {
    let o = cavloss(&["dynamics"]);
    let text = stdout(&o);
    let max_err: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# max_abs_err="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(max_err <= 1e-8);
    let o = cavloss(&["dynamics", "--dt-ps", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stability limit"));
}

#[test]
fn constants_report_keys() {
    let text = stdout(&cavloss(&["constants", "--coupling", "microscopic"]));
    for key in ["waist_um=", "mode_volume_cm3=", "omega_single_mhz=", "n_pairs=", "coupling_mode=microscopic"] {
        assert!(text.lines().any(|l| l.starts_with(key)), "{key}");
    }
}
