use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smnoma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smnoma"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL: &str = r#"
realizations = 4
snr_grid_db = [-10.0, 0.0, 10.0]
"#;

#[test]
fn fig1_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("nested/fig1.csv");
    let run = smnoma(&[
        "fig1",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "11",
    ]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );

    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("label,snr_db,mean_bits,std_error_bits,realizations,mc_samples,power_ratio")
    );
    // 10 curves x 3 SNR points
    assert_eq!(lines.count(), 30);
    assert!(csv.contains("\"SM-NOMA max(I_LB,0)(2,2)\",10,"));

    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["seed"], 11);
    assert_eq!(sidecar["config"]["realizations"], 4);
    assert_eq!(sidecar["config"]["seed"], 11);
    assert_eq!(sidecar["figure"], "fig1");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let run = smnoma(&[
            "fig2a",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
            "--method",
            "montecarlo",
            "--mc-samples",
            "3000",
        ]);
        assert!(
            run.status.success(),
            "{}",
            String::from_utf8_lossy(&run.stderr)
        );
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let csv = fs::read_to_string(&a).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains(",4,3000,")));
}

#[test]
fn fig2b_sweeps_power_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "realizations = 3\n[power_split]\nmode = \"total_power_sweep\"\ntotal = 5.0\nratios = [0.0, 1.0, 4.0]\n",
    );
    let out = dir.path().join("fig2b.csv");
    let run = smnoma(&["fig2b", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(csv.contains("\"SM-NOMA I(1,1)\",30,"));
    assert!(csv.lines().any(|l| l.ends_with(",4")));
}

#[test]
fn config_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "seeds = 3",
        "snr_grid_db = [1.0, 0.0]",
        "[system]\nnum_users = 3",
    ] {
        let config = write_config(dir.path(), text);
        let run = smnoma(&["fig1", "--config", &config]);
        assert_eq!(run.status.code(), Some(1), "{text}");
        assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
    }
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        smnoma(&["fig1", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        smnoma(&["fig1", "--realizations", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        smnoma(&["fig1", "--method", "simpson"]).status.code(),
        Some(1)
    );
    assert_eq!(
        smnoma(&["fig1", "--method", "montecarlo", "--mc-samples", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(smnoma(&["fig3"]).status.code(), Some(1));
    assert_eq!(smnoma(&["--help"]).status.code(), Some(0));
}

#[test]
fn props_exit_code_matches_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "realizations = 20\nsnr_grid_db = [0.0, 20.0]\n");
    let run = smnoma(&["props", "--config", &config]);
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("gmd::bound_sandwich"));
    assert!(stdout.contains("experiment::worker_count_invariance"));
    let failed = stdout.lines().any(|l| l.starts_with("FAIL"));
    assert_eq!(
        run.status.code(),
        Some(if failed { 2 } else { 0 }),
        "{stdout}"
    );
}
