//! End-to-end CLI checks: exit codes, determinism of written artifacts and
//! reproduction from the JSON sidecar.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_dressedsim")
}

fn run_in(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.current_dir(dir).args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dressedsim-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn sequences_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../sequences")
}

#[test]
fn list_experiments_names_all_eight() {
    let dir = tmpdir("list");
    let out = run_in(&dir, &["list-experiments"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "rabi_bare",
        "ramsey_bare",
        "stirap_efficiency",
        "dressed_lifetime",
        "dressed_rabi",
        "dressed_ramsey",
        "phase_axis",
        "looped_drive",
    ] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn run_writes_csv_and_sidecar_and_is_deterministic_across_worker_counts() {
    let dir = tmpdir("determinism");
    let args = [
        "run",
        "rabi_bare",
        "--set",
        "points=12",
        "--set",
        "shots=40",
        "--set",
        "seed=7",
        "--set",
        "t_max=6us",
        "--out",
        "out_a",
    ];
    let out = run_in(&dir, &args, &[("RAYON_NUM_THREADS", "1")]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut args_b = args;
    args_b[args.len() - 1] = "out_b";
    let out = run_in(&dir, &args_b, &[("RAYON_NUM_THREADS", "4")]);
    assert!(out.status.success());

    let csv_a = std::fs::read(dir.join("out_a/rabi_bare.csv")).unwrap();
    let csv_b = std::fs::read(dir.join("out_b/rabi_bare.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "CSV must be byte-identical across worker counts");
    let json_a = std::fs::read(dir.join("out_a/rabi_bare.json")).unwrap();
    let json_b = std::fs::read(dir.join("out_b/rabi_bare.json")).unwrap();
    assert_eq!(json_a, json_b);
    assert!(String::from_utf8(csv_a)
        .unwrap()
        .starts_with("x,x_unit,p_bright,ci_low,ci_high,n_shots\n"));
}

#[test]
fn rerunning_from_the_sidecar_reproduces_the_csv() {
    let dir = tmpdir("sidecar");
    let out = run_in(
        &dir,
        &[
            "run",
            "dressed_ramsey",
            "--set",
            "points=6",
            "--set",
            "shots=30",
            "--set",
            "seed=3",
            "--set",
            "gap_max=8ms",
            "--set",
            "delta=160Hz",
            "--out",
            "first",
        ],
        &[],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let sidecar = dir.join("first/dressed_ramsey.json");
    let out = run_in(
        &dir,
        &[
            "run",
            "dressed_ramsey",
            "--config",
            sidecar.to_str().unwrap(),
            "--out",
            "second",
        ],
        &[],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let a = std::fs::read(dir.join("first/dressed_ramsey.csv")).unwrap();
    let b = std::fs::read(dir.join("second/dressed_ramsey.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unknown_experiment_exits_one() {
    let dir = tmpdir("unknown");
    let out = run_in(&dir, &["run", "does_not_exist"], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_value_exits_one() {
    let dir = tmpdir("badcfg");
    let out = run_in(
        &dir,
        &["run", "rabi_bare", "--set", "shots=banana"],
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(&dir, &["run", "rabi_bare", "--set", "nonsense=1"], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_sequence_exits_one_with_diagnostics() {
    let dir = tmpdir("badseq");
    std::fs::write(dir.join("bad.seq"), "mw sideways pi rabi=1kHz\n").unwrap();
    let out = run_in(&dir, &["seq", "bad.seq"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("1:4"), "diagnostic position missing: {err}");
    assert!(err.contains("sideways"));
}

#[test]
fn fit_failure_exits_two() {
    let dir = tmpdir("fitfail");
    // Two identical durations cannot constrain a frequency.
    let out = run_in(
        &dir,
        &[
            "run",
            "rabi_bare",
            "--set",
            "points=5",
            "--set",
            "t_max=0s",
            "--set",
            "shots=10",
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seq_runs_shipped_sequences() {
    let dir = tmpdir("shipseq");
    let seq = sequences_dir().join("clock_rabi.seq");
    let out = run_in(
        &dir,
        &[
            "seq",
            seq.to_str().unwrap(),
            "--set",
            "shots=50",
            "--set",
            "detector=ideal",
            "--dump-state",
        ],
        &[],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("bright fraction"));
    assert!(text.contains("\"amplitudes\""), "state dump missing: {text}");
}

#[test]
fn inline_sequences_and_noise_dump_work() {
    let dir = tmpdir("inline");
    let out = run_in(
        &dir,
        &[
            "seq",
            "--expr",
            "mw plus pi rabi=42kHz\nmeasure\n",
            "--set",
            "shots=20",
            "--set",
            "qs_sigma=4uG",
            "--dump-noise",
            "noise.csv",
        ],
        &[],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let noise = std::fs::read_to_string(dir.join("noise.csv")).unwrap();
    assert!(noise.starts_with("t,delta_b_gauss\n"));
    assert!(noise.lines().count() >= 3);
}

#[test]
fn dump_controls_prints_the_table() {
    let dir = tmpdir("dump");
    let seq = sequences_dir().join("dressed_ramsey.seq");
    let out = run_in(
        &dir,
        &["dump-controls", seq.to_str().unwrap(), "--samples", "4"],
        &[],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,mw_plus_hz,"));
    assert!(text.lines().count() > 10);
}

#[test]
fn detector_fidelity_reports_mean() {
    let dir = tmpdir("fid");
    let out = run_in(&dir, &["detector-fidelity", "--shots", "5000"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("mean fidelity"));
}

#[test]
fn calibrate_noise_prints_a_config_line() {
    let dir = tmpdir("cal");
    let out = run_in(
        &dir,
        &["calibrate-noise", "--t2", "40ms", "--shots", "4000"],
        &[],
    );
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("qs_sigma = "));
    let out = run_in(&dir, &["calibrate-noise", "--t2", "-4ms"], &[]);
    assert_eq!(out.status.code(), Some(1));
}
