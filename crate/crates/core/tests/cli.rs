//! End-to-end tests of the `latnet` binary: pipelines, determinism,
//! file formats, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn latnet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latnet"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = latnet(args, dir);
    assert!(
        out.status.success(),
        "latnet {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generate_ring_reports_stability_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "generate", "ring", "--n", "40", "--w", "0.25", "--self", "0.25",
        "--manifest", "5,23,33,34,36", "--out", "net.json",
    ];
    let stdout = ok(&args, dir.path());
    assert!(stdout.contains("rho_full=0.500000"), "{stdout}");
    assert!(stdout.contains("stable=true"));
    let first = std::fs::read(dir.path().join("net.json")).unwrap();
    ok(&args, dir.path());
    let second = std::fs::read(dir.path().join("net.json")).unwrap();
    assert_eq!(first, second, "regenerated file must be byte-identical");
}

#[test]
fn generate_er_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        [
            "generate", "er", "--n", "10", "--p", "0.35", "--wmin", "0.1",
            "--wmax", "0.35", "--nm", "5", "--seed", "7", "--out", out,
        ]
    };
    ok(&args("a.json"), dir.path());
    ok(&args("b.json"), dir.path());
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn generate_from_higher_order_lifts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("hon.json"),
        r#"{"nu":2,"coeffs":[[[0.11,0.12],[0.21,0.22]],[[0.31,0.32],[0.41,0.42]]],"n_m":1}"#,
    )
    .unwrap();
    let stdout = ok(
        &[
            "generate", "from-higher-order", "--input", "hon.json", "--out", "lifted.json",
        ],
        dir.path(),
    );
    assert!(stdout.contains("n_m=1 n_l=3"), "{stdout}");
}

#[test]
fn full_pipeline_on_relabeled_ring() {
    // two manifest nodes of a 4-ring: only latent-mediated interaction
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "generate", "ring", "--n", "4", "--w", "0.25", "--manifest", "1,3",
            "--out", "net.json",
        ],
        dir.path(),
    );
    ok(
        &[
            "simulate", "--network", "net.json", "--n", "100000", "--seed", "3",
            "--out", "data.csv",
        ],
        dir.path(),
    );
    ok(
        &[
            "fit", "--data", "data.csv", "--tau", "3", "--out", "model.json",
            "--report", "report.json",
        ],
        dir.path(),
    );
    let stdout = ok(
        &[
            "classify", "--model", "model.json", "--alpha", "0.5", "--out",
            "graph.json", "--edges", "edges.csv",
        ],
        dir.path(),
    );
    assert!(stdout.contains("indirect 1 -> 2 min_order=1"), "{stdout}");
    assert!(stdout.contains("indirect 2 -> 1 min_order=1"), "{stdout}");
    let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"condition\""));
    assert!(report.contains("\"block_norms\""));
    let edges = std::fs::read_to_string(dir.path().join("edges.csv")).unwrap();
    assert!(edges.starts_with("src,dst,kind,weight_or_order\n"));
}

#[test]
fn fit_regularized_reports_objective() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "generate", "ring", "--n", "8", "--w", "0.3", "--self", "0.1",
            "--manifest", "1,4", "--out", "net.json",
        ],
        dir.path(),
    );
    ok(
        &["simulate", "--network", "net.json", "--n", "20000", "--seed", "5", "--out", "d.csv"],
        dir.path(),
    );
    let stdout = ok(
        &[
            "fit", "--data", "d.csv", "--tau", "15", "--gamma", "10", "--rho0", "0.9",
            "--out", "m.json",
        ],
        dir.path(),
    );
    assert!(stdout.contains("gamma=10"), "{stdout}");
    assert!(stdout.contains("objective="), "{stdout}");
    let model = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    assert!(model.contains("\"provenance\": \"lsar-regularized\""), "{model}");
    assert!(model.contains("\"reg\""));
}

#[test]
fn validate_reports_r_squared_in_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "generate", "ring", "--n", "8", "--w", "0.3", "--self", "0.1",
            "--manifest", "1,4", "--out", "net.json",
        ],
        dir.path(),
    );
    ok(
        &["simulate", "--network", "net.json", "--n", "20000", "--seed", "6", "--out", "d.csv"],
        dir.path(),
    );
    let stdout = ok(
        &["validate", "--data", "d.csv", "--tau", "5", "--split", "0.8"],
        dir.path(),
    );
    let r2: f64 = stdout
        .split("R2 = ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(r2 > 0.0 && r2 <= 1.0, "R2 = {r2}");
}

#[test]
fn error_surface_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "generate", "ring", "--n", "8", "--w", "0.3", "--self", "0.1",
            "--manifest", "1,4", "--out", "net.json",
        ],
        dir.path(),
    );
    let args = [
        "error-surface", "--network", "net.json", "--n-list", "500,2000",
        "--tau-list", "2,4", "--seeds", "1,2", "--grid", "256", "--out", "sweep",
    ];
    ok(&args, dir.path());
    let first = std::fs::read(dir.path().join("sweep/surface.csv")).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("N,tau,seed,hinf_error,coeff_error,error\n"));
    assert_eq!(text.lines().count(), 9, "header + 8 cells");
    // resolved config echoed for provenance
    let cfg = std::fs::read_to_string(dir.path().join("sweep/config.json")).unwrap();
    assert!(cfg.contains("\"n_list\""));
    ok(&args, dir.path());
    let second = std::fs::read(dir.path().join("sweep/surface.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn error_surface_reads_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "generate", "ring", "--n", "8", "--w", "0.3", "--self", "0.1",
            "--manifest", "1,4", "--out", "net.json",
        ],
        dir.path(),
    );
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{
  "network": "net.json",
  "n_list": [500],
  "tau_list": [2],
  "seeds": [1],
  "grid_size": 256,
  "alpha": 0.1,
  "output_dir": "from_config"
}"#,
    )
    .unwrap();
    ok(
        &["error-surface", "--config", "cfg.json", "--grid", "256"],
        dir.path(),
    );
    assert!(dir.path().join("from_config/surface.csv").exists());
    // flag overrides the config's seeds
    ok(
        &[
            "error-surface", "--config", "cfg.json", "--grid", "256",
            "--seeds", "1,2", "--out", "override",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("override/surface.csv")).unwrap();
    assert_eq!(text.lines().count(), 3, "header + 2 cells");
}

#[test]
fn bound_table_has_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "generate", "ring", "--n", "10", "--w", "0.25", "--self", "0.25",
            "--manifest", "1,4,8", "--out", "net.json",
        ],
        dir.path(),
    );
    ok(
        &[
            "bound-table", "--network", "net.json", "--tau-max", "8",
            "--grid", "512", "--out", "table.csv",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert!(text.starts_with("tau,optimal_error,gamma,bound\n"));
    assert_eq!(text.lines().count(), 9);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let err: f64 = f[1].parse().unwrap();
        let bound: f64 = f[3].parse().unwrap();
        assert!(bound >= err, "{line}");
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    // 2: usage (unknown flag, clap)
    let out = latnet(&["generate", "ring", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // 2: invalid argument (bad manifest index)
    let out = latnet(
        &["generate", "ring", "--n", "4", "--w", "0.2", "--manifest", "9", "--out", "x.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // 3: data format (malformed JSON)
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let out = latnet(
        &["simulate", "--network", "bad.json", "--n", "10", "--out", "y.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
    // 3: missing input file
    let out = latnet(
        &["simulate", "--network", "missing.json", "--n", "10", "--out", "y.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    // 4: numeric error (blow-up of an unstable network)
    ok(
        &["generate", "ring", "--n", "4", "--w", "2.0", "--self", "2.0",
          "--manifest", "1,2", "--out", "hot.json"],
        dir.path(),
    );
    let out = latnet(
        &["simulate", "--network", "hot.json", "--n", "5000", "--out", "z.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    // 4: rho_bar below the latent spectral radius is rejected
    ok(
        &["generate", "ring", "--n", "6", "--w", "0.3", "--self", "0.2",
          "--manifest", "1,4", "--out", "net.json"],
        dir.path(),
    );
    let out = latnet(
        &["bound-table", "--network", "net.json", "--rho-bar", "0.01",
          "--tau-max", "3", "--grid", "128", "--out", "t.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "invalid argument maps to 2");
}

#[test]
fn simulate_round_trips_through_fit_on_external_style_data() {
    // a y-only CSV (as an external recording would be) still fits
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("t,y1,y2\n");
    let mut state = (0.3f64, -0.1f64);
    for k in 1..=500 {
        text.push_str(&format!("{k},{:e},{:e}\n", state.0, state.1));
        state = (
            0.5 * state.0 + 0.1 * state.1 + (k as f64 * 0.7).sin() * 0.3,
            0.2 * state.0 - 0.4 * state.1 + (k as f64 * 1.3).cos() * 0.2,
        );
    }
    std::fs::write(dir.path().join("ext.csv"), text).unwrap();
    ok(
        &["fit", "--data", "ext.csv", "--tau", "2", "--out", "m.json"],
        dir.path(),
    );
    let model = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    assert!(model.contains("\"n_m\": 2"));
}
