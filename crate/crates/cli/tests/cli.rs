//! End-to-end tests driving the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn ccm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccm"))
        .args(args)
        .env_remove("CCM_SEED")
        .output()
        .expect("binary runs")
}

fn input_args(base: &str) -> (String, String) {
    (
        fixture(&format!("{base}.colors.tsv")).display().to_string(),
        fixture(&format!("{base}.edges.tsv")).display().to_string(),
    )
}

#[test]
fn sample_with_zero_iterations_reproduces_the_input_sorted() {
    let (colors, edges) = input_args("polarized_small");
    let out = tmp_dir("sample_zero");
    let run = ccm(&[
        "sample", "--colors", &colors, "--edges", &edges, "--iters", "0", "--samples", "1",
        "--seed", "7", "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let sample = std::fs::read_to_string(out.join("sample_000.tsv")).unwrap();
    let input = std::fs::read_to_string(fixture("polarized_small.edges.tsv")).unwrap();
    // The fixture is already canonically sorted, so the bytes round-trip.
    assert_eq!(sample, input);
    let colors_out = std::fs::read_to_string(out.join("colors.tsv")).unwrap();
    let colors_in = std::fs::read_to_string(fixture("polarized_small.colors.tsv")).unwrap();
    assert_eq!(colors_out, colors_in);
}

#[test]
fn default_iterations_are_recorded_in_the_manifest() {
    let (colors, edges) = input_args("polarized_small");
    let out = tmp_dir("sample_manifest");
    let run = ccm(&[
        "sample", "--colors", &colors, "--edges", &edges, "--samples", "1", "--seed", "3",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(run.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
            .unwrap();
    // m = 8, so the default is ceil(8 ln 8) = 17.
    assert_eq!(manifest["chain"]["iterations"], 17);
    assert_eq!(manifest["resolved_seed"], 3);
    assert_eq!(manifest["samples"], 1);
}

#[test]
fn equal_seeds_give_byte_identical_outputs() {
    let (colors, edges) = input_args("polarized_small");
    let out_a = tmp_dir("sample_seed_a");
    let out_b = tmp_dir("sample_seed_b");
    for out in [&out_a, &out_b] {
        let run = ccm(&[
            "sample", "--colors", &colors, "--edges", &edges, "--iters", "500", "--samples",
            "3", "--seed", "11", "--parallelism", "2", "--out", out.to_str().unwrap(),
        ]);
        assert!(run.status.success());
    }
    for name in ["sample_000.tsv", "sample_001.tsv", "sample_002.tsv", "tallies.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identically seeded runs");
    }
}

#[test]
fn seed_env_var_overrides_the_default() {
    let (colors, edges) = input_args("polarized_small");
    let out_env = tmp_dir("sample_env");
    let run = Command::new(env!("CARGO_BIN_EXE_ccm"))
        .args([
            "sample", "--colors", &colors, "--edges", &edges, "--iters", "200", "--samples",
            "1", "--out", out_env.to_str().unwrap(),
        ])
        .env("CCM_SEED", "42")
        .output()
        .unwrap();
    assert!(run.status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_env.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["resolved_seed"], 42);
}

#[test]
fn diagnose_emits_a_hundred_trace_rows_by_default() {
    // Disjoint-edge input: every baseline proposal is either a within-class
    // swap or out of space, so the out-of-space share is exactly binomial
    // around 1 - theta. Classes: 5 red-red, 2 blue-blue, 3 cross.
    let out = tmp_dir("diagnose_default");
    let colors = out.join("in.colors.tsv");
    let edges = out.join("in.edges.tsv");
    let mut color_lines = String::new();
    let mut edge_lines = String::new();
    let mut vertex = 0;
    let mut add_edge = |ca: &str, cb: &str, color_lines: &mut String, edge_lines: &mut String| {
        let (a, b) = (vertex, vertex + 1);
        vertex += 2;
        color_lines.push_str(&format!("v{a}\t{ca}\nv{b}\t{cb}\n"));
        edge_lines.push_str(&format!("v{a}\tv{b}\n"));
    };
    for _ in 0..5 {
        add_edge("red", "red", &mut color_lines, &mut edge_lines);
    }
    for _ in 0..2 {
        add_edge("blue", "blue", &mut color_lines, &mut edge_lines);
    }
    for _ in 0..3 {
        add_edge("red", "blue", &mut color_lines, &mut edge_lines);
    }
    std::fs::write(&colors, color_lines).unwrap();
    std::fs::write(&edges, edge_lines).unwrap();
    let run = ccm(&[
        "diagnose", "--colors", colors.to_str().unwrap(), "--edges", edges.to_str().unwrap(),
        "--algo", "sirius-b", "--iters", "20000", "--seed", "5", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 101, "header plus one row per checkpoint");
    assert_eq!(
        lines[0],
        "iteration,assortativity,out_of_space,non_changing,accepted,rejected,lazy_hold"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap())
            .unwrap();
    let theta = summary["theta"].as_f64().unwrap();
    assert!((theta - 50.0 / 180.0).abs() < 1e-12);
    let oos = summary["out_of_space_fraction"].as_f64().unwrap();
    assert!((oos - (1.0 - theta)).abs() < 0.02, "oos {oos}, theta {theta}");
}

#[test]
fn stats_reports_theta_one_for_monochromatic_input() {
    let (colors, edges) = input_args("mono");
    let run = ccm(&["stats", "--colors", &colors, "--edges", &edges]);
    assert!(run.status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&run.stdout).expect("stats emits JSON");
    assert_eq!(report["theta"], 1.0);
    assert_eq!(report["m_mean"], 1.0);
    assert_eq!(report["n"], 4);
    assert!(report["cdm_digest"].as_str().unwrap().len() == 16);
}

#[test]
fn significance_of_m_under_ccm_nulls_is_a_point_mass() {
    let (colors, edges) = input_args("polarized_small");
    let run = ccm(&[
        "test", "--colors", &colors, "--edges", &edges, "--score", "m", "--null", "sirius",
        "--samples", "19", "--iters", "300", "--seed", "2",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    let observed = report["observed"].as_f64().unwrap();
    let nulls = report["nulls"].as_array().unwrap();
    assert_eq!(nulls.len(), 19);
    assert!(nulls.iter().all(|v| v.as_f64().unwrap() == observed));
    assert_eq!(report["p_one_sided_ge"], 1.0);
    assert_eq!(report["score_name"], "m");
}

#[test]
fn verify_passes_on_the_fixture_and_writes_dot() {
    let (colors, edges) = input_args("polarized_small");
    let out = tmp_dir("verify");
    let dot = out.join("states.dot");
    let run = ccm(&[
        "verify", "--colors", &colors, "--edges", &edges, "--limit", "1000", "--dot",
        dot.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["strongly_connected"], true);
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("digraph"));
}

#[test]
fn input_errors_exit_with_code_two() {
    let run = ccm(&["stats", "--colors", "/nonexistent.tsv", "--edges", "/nonexistent.tsv"]);
    assert_eq!(run.status.code(), Some(2));

    // State-space limit exceeded is an input error as well.
    let (colors, edges) = input_args("polarized_small");
    let run = ccm(&["verify", "--colors", &colors, "--edges", &edges, "--limit", "3"]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("limit"));
}
