//! End-to-end exercises of the binary surface: exit codes, file outputs,
//! custom environments, and figure rendering.

use std::path::PathBuf;
use std::process::Command;

fn batd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_batd"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("batd_smoke_{tag}_{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn usage_errors_exit_2() {
    let status = batd().arg("--definitely-not-a-flag").status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = batd().args(["analyze", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    // Unknown benchmark.
    let out = batd()
        .args(["run", "--env", "no_such_env", "--algo", "td"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_env"));

    // Analyze without any tuned-parameter source names the missing sweep.
    let dir = temp_dir("analyze_err");
    let out = batd()
        .args(["analyze", "--env", "two_state", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("batd sweep"), "stderr was: {stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn run_prints_metrics() {
    let out = batd()
        .args([
            "run", "--env", "two_state", "--algo", "ba_tdrc", "--alpha", "0.1", "--alpha-w",
            "0.1", "--beta", "0.7", "--horizon", "500", "--seed", "4",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("BA-TDRC on two_state"));
    assert!(stdout.contains("auc_ss"));
    assert!(stdout.contains("diverged false"));
}

#[test]
fn sweep_eval_analyze_pipeline() {
    let dir = temp_dir("pipeline");
    // Narrowed grids keep this a smoke test rather than a sweep.
    let cfg = dir.join("cfg.txt");
    std::fs::write(
        &cfg,
        "horizon two_state 300\n\
         grid tdrc alpha : 0.1\n\
         grid tdrc alpha_w : 0.01\n\
         grid tdrc eta : 0.03\n\
         grid ba_tdrc alpha : 0.1\n\
         grid ba_tdrc alpha_w : 0.1\n\
         grid ba_tdrc beta : 0.7\n",
    )
    .unwrap();
    for algo in ["tdrc", "ba_tdrc"] {
        let status = batd()
            .args(["sweep", "--env", "two_state", "--algo", algo, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&dir)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        assert!(dir.join("two_state").join(algo).join("sweep.csv").is_file());
    }
    let status = batd()
        .args(["eval", "--env", "two_state", "--algo", "ba_tdrc", "--from-sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .arg("--curves")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("two_state/ba_tdrc/eval.csv").is_file());
    assert!(dir.join("two_state/ba_tdrc/curves").read_dir().unwrap().count() >= 100);

    // Analysis consumes the recorded winners.
    let out = batd()
        .args(["analyze", "--env", "two_state", "--sweep-dir"])
        .arg(&dir)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("two_state"));
    assert!(dir.join("analysis.csv").is_file());

    // Plot the curves that eval wrote.
    let plots = dir.join("plots");
    let status = batd()
        .args(["plot", "--curves-dir"])
        .arg(&dir)
        .arg("--out")
        .arg(&plots)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let svg = std::fs::read_to_string(plots.join("curves_two_state.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("BA-TDRC"));

    // Plot on an empty directory fails with exit 1.
    let empty = temp_dir("empty");
    let status = batd()
        .args(["plot", "--curves-dir"])
        .arg(&empty)
        .arg("--out")
        .arg(&plots)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    std::fs::remove_dir_all(&dir).ok();
    std::fs::remove_dir_all(&empty).ok();
}

#[test]
fn env_file_environments_are_usable() {
    let dir = temp_dir("envfile");
    let env_file = dir.join("twin.env");
    std::fs::write(
        &env_file,
        "name twin\n\
         states 2\n\
         actions 2\n\
         gamma 0.9\n\
         P 0 0 : 1 0\n\
         P 0 1 : 0 1\n\
         P 1 0 : 1 0\n\
         P 1 1 : 0 1\n\
         pi 0 : 0 1\n\
         pi 1 : 0 1\n\
         mu 0 : 0.5 0.5\n\
         mu 1 : 0.5 0.5\n\
         phi 0 : 1\n\
         phi 1 : 2\n\
         theta0 : 1\n\
         horizon 400\n",
    )
    .unwrap();
    let out = batd()
        .args(["run", "--env", "twin", "--algo", "tdc", "--alpha", "0.03", "--alpha-w", "0.01"])
        .arg("--env-file")
        .arg(&env_file)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("TDC on twin"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn robustness_target_writes_figures() {
    let dir = temp_dir("robust");
    let cfg = dir.join("cfg.txt");
    // Short horizons: this checks plumbing, not the published sweep.
    std::fs::write(
        &cfg,
        "horizon two_state 200\nhorizon baird 200\nhorizon random_walk 200\nhorizon boyan 200\n",
    )
    .unwrap();
    let status = batd()
        .args(["reproduce", "robustness", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.join("robustness.csv").is_file());
    for env in ["two_state", "baird", "random_walk", "boyan"] {
        let svg = dir.join(format!("robustness_{env}.svg"));
        assert!(svg.is_file(), "{} missing", svg.display());
    }
    std::fs::remove_dir_all(&dir).ok();
}
