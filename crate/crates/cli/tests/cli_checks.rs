//! End-to-end runs of the binary: exit codes, file outputs, determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tapkin"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tapkin-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let (code, _, stderr) = run(&["simulate", "--bogus"]);
    assert_eq!(code, 1);
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn unknown_preset_exits_one() {
    let dir = workdir("preset");
    let out = dir.join("x.csv");
    let (code, _, stderr) = run(&["simulate", "--preset", "nope", "--out", &path_str(&out)]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown preset"), "{stderr}");
}

#[test]
fn fit_on_empty_file_exits_one_with_diagnostic() {
    let dir = workdir("emptyfit");
    let empty = dir.join("empty.csv");
    fs::write(&empty, "").unwrap();
    let report = dir.join("r.txt");
    let (code, _, stderr) = run(&[
        "fit",
        "--features",
        &path_str(&empty),
        "--terms",
        "full",
        "--method",
        "scad",
        "--out",
        &path_str(&report),
    ]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("header"), "{stderr}");
}

#[test]
fn simulate_then_fit_reproduces_reversible_selection() {
    let dir = workdir("revfit");
    let sim_csv = dir.join("sim.csv");
    let (code, _, stderr) = run(&[
        "simulate",
        "--preset",
        "ads-reversible",
        "--out",
        &path_str(&sim_csv),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let report = dir.join("fit.txt");
    let (code, stdout, stderr) = run(&[
        "fit",
        "--features",
        &path_str(&sim_csv),
        "--terms",
        "full",
        "--method",
        "scad",
        "--out",
        &path_str(&report),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(
        stdout.contains("selected terms: C_A, U_A, CU_A"),
        "{stdout}"
    );
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("selected.CU2_A = false"), "{text}");
    assert!(text.contains("selected.U2_A = false"), "{text}");
    assert!(text.contains("tool = tapkin fit"));
}

#[test]
fn simulate_outputs_are_byte_identical_across_runs() {
    let dir = workdir("determinism");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out in [&a, &b] {
        let (code, _, stderr) = run(&[
            "simulate",
            "--preset",
            "lh-irrev",
            "--seed",
            "7",
            "--out",
            &path_str(out),
        ]);
        assert_eq!(code, 0, "{stderr}");
    }
    let bytes_a = fs::read(&a).unwrap();
    let bytes_b = fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b);
}

#[test]
fn features_validation_round_trip() {
    let dir = workdir("features");
    let sim_csv = dir.join("sim.csv");
    run(&[
        "simulate",
        "--preset",
        "er-irrev",
        "--out",
        &path_str(&sim_csv),
    ]);
    let canon = dir.join("canon.csv");
    let (code, _, stderr) = run(&[
        "features",
        "--features",
        &path_str(&sim_csv),
        "--out",
        &path_str(&canon),
    ]);
    assert_eq!(code, 0, "{stderr}");
    // canonicalizing the canonical file is a fixed point
    let canon2 = dir.join("canon2.csv");
    let (code, _, _) = run(&[
        "features",
        "--features",
        &path_str(&canon),
        "--out",
        &path_str(&canon2),
    ]);
    assert_eq!(code, 0);
    let t1 = fs::read_to_string(&canon).unwrap();
    let t2 = fs::read_to_string(&canon2).unwrap();
    let data = |t: &str| -> String {
        t.lines()
            .filter(|l| !l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(data(&t1), data(&t2));
}

#[test]
fn flux_preprocess_pipeline() {
    let dir = workdir("preprocess");
    let flux = dir.join("flux.csv");
    let mut text = String::from("time_s,A\n");
    for k in 0..200 {
        let t = k as f64 * 0.001;
        let v = if k > 20 {
            (t * 20.0).sin().abs() / 2.0
        } else {
            0.0
        } + 0.25;
        text.push_str(&format!("{t},{v}\n"));
    }
    fs::write(&flux, text).unwrap();
    let calib = dir.join("cal.txt");
    fs::write(&calib, "A,mu=2.0,baseline_start=0.0,baseline_end=0.01\n").unwrap();
    let out = dir.join("corrected.csv");
    let (code, _, stderr) = run(&[
        "features",
        "--flux",
        &path_str(&flux),
        "--calib",
        &path_str(&calib),
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let corrected = fs::read_to_string(&out).unwrap();
    assert!(corrected.contains("correction: gas = A, mu = 2"));
    // baseline 0.25 scaled by 2: early samples must sit at zero
    let first_data = corrected
        .lines()
        .find(|l| l.starts_with("1.0") || l.starts_with("0.0"))
        .unwrap();
    let v: f64 = first_data.split(',').nth(1).unwrap().parse().unwrap();
    assert!(v.abs() < 1e-9, "{first_data}");
}

#[test]
fn rcdc_pipeline_classifies_simulated_mechanism() {
    let dir = workdir("rcdc");
    let sim_csv = dir.join("sim.csv");
    run(&[
        "simulate",
        "--preset",
        "lh-irrev",
        "--out",
        &path_str(&sim_csv),
    ]);
    let out = dir.join("rcdc.csv");
    let (code, stdout, stderr) = run(&[
        "rcdc",
        "--features",
        &path_str(&sim_csv),
        "--products",
        "CO2",
        "--sqrt",
        "O2",
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("LangmuirHinshelwood"), "{stdout}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("series,")));
}

#[test]
fn rcdc_trim_uses_robust_estimator() {
    let dir = workdir("rcdc-trim");
    let sim_csv = dir.join("sim.csv");
    run(&[
        "simulate",
        "--preset",
        "er-irrev",
        "--out",
        &path_str(&sim_csv),
    ]);
    let out = dir.join("rcdc.csv");
    let (code, stdout, stderr) = run(&[
        "rcdc",
        "--features",
        &path_str(&sim_csv),
        "--products",
        "CO2",
        "--sqrt",
        "O2",
        "--trim",
        "0.05",
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("EleyRideal"), "{stdout}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# trim = 0.05"), "{text}");
}

#[test]
fn grid_sweep_writes_expected_rows() {
    let dir = workdir("grid");
    let out = dir.join("grid.csv");
    // coarse step keeps this a smoke test
    let (code, stdout, stderr) = run(&[
        "grid",
        "--sweep",
        "lh-irrev",
        "--step",
        "0.48",
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("9 cells (9 valid)"), "{stdout}");
    let text = fs::read_to_string(&out).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 10); // header + 9 cells
}

#[test]
fn config_file_drives_simulation() {
    let dir = workdir("config");
    let cfg = dir.join("run.toml");
    fs::write(
        &cfg,
        r#"
[reactor]
t_end = 1.0
n_cells = 96
catalyst_cell = 48

[mechanism]
kind = "irreversible-limited"
n_sites = 1.0
[mechanism.k_forward]
A = 0.2
"#,
    )
    .unwrap();
    let out = dir.join("sim.csv");
    let (code, _, stderr) = run(&[
        "simulate",
        "--config",
        &path_str(&cfg),
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let text = fs::read_to_string(&out).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1002); // header + 1001 samples
}

#[test]
fn invalid_reactor_config_exits_one() {
    let dir = workdir("badcfg");
    let cfg = dir.join("bad.toml");
    fs::write(
        &cfg,
        r#"
[reactor]
porosity = 1.5

[mechanism]
kind = "irreversible-abundant"
[mechanism.k_forward]
A = 0.2
"#,
    )
    .unwrap();
    let out = dir.join("x.csv");
    let (code, _, stderr) = run(&[
        "simulate",
        "--config",
        &path_str(&cfg),
        "--out",
        &path_str(&out),
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("porosity"), "{stderr}");
}
