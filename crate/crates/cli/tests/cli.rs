//! End-to-end checks of the `vigrad` binary: output schemas, determinism,
//! exit codes, and the qualitative trends each command exists to expose.

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn vigrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vigrad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = vigrad(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    vigrad(args).status.code().expect("exit code")
}

/// Parse a CSV body into (header, rows of f64-or-string).
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("header row")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("missing column {name} in {header:?}"))
}

#[test]
fn var_table_schema_trends_and_determinism() {
    let args = ["var-table", "--samples", "4000", "--seed", "0"];
    let text = stdout_of(&args);
    let again = stdout_of(&args);
    assert_eq!(text, again, "rerun must be byte-identical");

    let (header, rows) = parse_csv(&text);
    assert_eq!(
        header,
        [
            "sigma",
            "estimator",
            "h_form",
            "mu_trace",
            "phi_trace",
            "trace"
        ]
    );
    assert_eq!(rows.len(), 16);

    let mu_trace = column(&header, "mu_trace");
    let mut by_cell: HashMap<(String, String), Vec<f64>> = HashMap::new();
    for row in &rows {
        by_cell
            .entry((row[1].clone(), row[2].clone()))
            .or_default()
            .push(row[mu_trace].parse().unwrap());
    }
    let score_true = &by_cell[&("score".into(), "true".into())];
    let rp_true = &by_cell[&("rp".into(), "true".into())];
    let rp_approx = &by_cell[&("rp".into(), "approx".into())];
    assert!(score_true.windows(2).all(|w| w[0] > w[1]), "{score_true:?}");
    assert!(rp_true.windows(2).all(|w| w[0] < w[1]), "{rp_true:?}");
    assert!(score_true[0] / rp_true[0] >= 1e4);
    let gap: Vec<f64> = rp_approx.iter().zip(rp_true).map(|(a, t)| a / t).collect();
    assert!(gap.windows(2).all(|w| w[0] < w[1]), "{gap:?}");
}

#[test]
fn var_table_json_format() {
    let text = stdout_of(&[
        "var-table",
        "--samples",
        "200",
        "--seed",
        "1",
        "--format",
        "json",
        "--sigma-grid",
        "0.5,1.0",
    ]);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows[0]["mu_trace"].is_f64());
}

#[test]
fn sweep_phi_all_variance_grows_with_scale() {
    let text = stdout_of(&[
        "sweep",
        "--model",
        "quadratic",
        "--dim",
        "3",
        "--axis",
        "phi-all",
        "--grid-start",
        "-1.0",
        "--grid-stop",
        "0.5",
        "--grid-points",
        "4",
        "--samples",
        "2000",
        "--seed",
        "3",
    ]);
    let (header, rows) = parse_csv(&text);
    let var_col = column(&header, "variance");
    let mut closed_mu = Vec::new();
    let mut mc_mu = Vec::new();
    for row in &rows {
        if row[3] == "mu" && row[4] == "rp" {
            if row[5] == "closed_form" {
                closed_mu.push(row[var_col].parse::<f64>().unwrap());
            } else {
                mc_mu.push(row[var_col].parse::<f64>().unwrap());
            }
        }
    }
    assert_eq!(closed_mu.len(), 4);
    assert!(closed_mu.windows(2).all(|w| w[0] < w[1]), "{closed_mu:?}");
    assert!(mc_mu.windows(2).all(|w| w[0] < w[1]), "{mc_mu:?}");
}

// Moving the probed mean toward the data region raises the local curvature
// row norm on the logistic model, and the variances track it.
#[test]
fn sweep_mu_i_variance_tracks_curvature() {
    let text = stdout_of(&[
        "sweep",
        "--model",
        "logistic2d",
        "--axis",
        "mu-i",
        "--index",
        "1",
        "--grid-start",
        "-3.0",
        "--grid-stop",
        "0.0",
        "--grid-points",
        "4",
        "--samples",
        "3000",
        "--seed",
        "3",
    ]);
    let (header, rows) = parse_csv(&text);
    let var_col = column(&header, "variance");
    let closed: Vec<f64> = rows
        .iter()
        .filter(|r| r[3] == "mu" && r[5] == "closed_form")
        .map(|r| r[var_col].parse().unwrap())
        .collect();
    let mc_rp: Vec<f64> = rows
        .iter()
        .filter(|r| r[3] == "mu" && r[4] == "rp" && r[5] == "monte_carlo")
        .map(|r| r[var_col].parse().unwrap())
        .collect();
    assert!(closed.windows(2).all(|w| w[0] < w[1]), "{closed:?}");
    assert!(mc_rp.windows(2).all(|w| w[0] < w[1]), "{mc_rp:?}");
}

#[test]
fn sweep_zero_points_emits_header_only() {
    let text = stdout_of(&[
        "sweep",
        "--axis",
        "mu-i",
        "--grid-points",
        "0",
        "--seed",
        "0",
    ]);
    assert_eq!(
        text.trim(),
        "axis,sweep_value,param_index,block,estimator,method,variance,log10_variance"
    );
}

#[test]
fn sweep_iterations_axis_produces_records() {
    let text = stdout_of(&[
        "sweep",
        "--model",
        "quadratic",
        "--dim",
        "2",
        "--axis",
        "iterations",
        "--iters",
        "30",
        "--record-every",
        "10",
        "--samples",
        "500",
        "--seed",
        "5",
    ]);
    let (header, rows) = parse_csv(&text);
    let axis_col = column(&header, "axis");
    assert!(rows.iter().all(|r| r[axis_col] == "iterations"));
    // 30 iterations at cadence 10 record iters 0, 10, 20, 29; 6 rows each.
    assert_eq!(rows.len(), 4 * 6);
}

#[test]
fn sweep_rejects_bad_flags() {
    assert_eq!(exit_code(&["sweep", "--axis", "sideways"]), 2);
    assert_eq!(
        exit_code(&["sweep", "--axis", "mu-i", "--index", "99", "--dim", "2"]),
        2
    );
}

fn write_toy_config(dir: &Path) -> std::path::PathBuf {
    // h(theta) = theta^2 via the explicit quadratic block.
    let path = dir.join("toy.json");
    std::fs::write(
        &path,
        r#"{"model": "quadratic", "quadratic": {"c0": 0.0, "g0": [0.0], "h0": [[2.0]], "theta0": [0.0]}}"#,
    )
    .unwrap();
    path
}

#[test]
fn cross_section_of_the_toy_model_has_the_known_ranges() {
    let dir = tempdir().unwrap();
    let config = write_toy_config(dir.path());
    let text = stdout_of(&[
        "cross-section",
        "--config",
        config.to_str().unwrap(),
        "--points",
        "61",
        "--seed",
        "0",
    ]);
    let (header, rows) = parse_csv(&text);
    let score_col = column(&header, "delta_score_mu");
    let rp_col = column(&header, "delta_rp_mu");
    let score: Vec<f64> = rows.iter().map(|r| r[score_col].parse().unwrap()).collect();
    let rp: Vec<f64> = rows.iter().map(|r| r[rp_col].parse().unwrap()).collect();
    let range = |v: &[f64]| {
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    // Over z in [-3, 3] with mu = 0, sigma = 1: theta^3 spans 54, 2z spans 12.
    assert!((range(&score) - 54.0).abs() < 1e-9, "{}", range(&score));
    assert!((range(&rp) - 12.0).abs() < 1e-9, "{}", range(&rp));
    // Region bounds are the 3-sigma box.
    assert_eq!(
        rows[0][column(&header, "region_theta_lo")]
            .parse::<f64>()
            .unwrap(),
        -3.0
    );
}

#[test]
fn cross_section_of_a_constant_model_has_zero_rp_delta() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("const.json");
    std::fs::write(
        &path,
        r#"{"model": "quadratic", "quadratic": {"c0": 7.0, "g0": [0.0], "h0": [[0.0]], "theta0": [0.0]}}"#,
    )
    .unwrap();
    let text = stdout_of(&[
        "cross-section",
        "--config",
        path.to_str().unwrap(),
        "--points",
        "11",
    ]);
    let (header, rows) = parse_csv(&text);
    for col in ["delta_rp_mu", "delta_rp_phi"] {
        let idx = column(&header, col);
        assert!(rows.iter().all(|r| r[idx].parse::<f64>().unwrap() == 0.0));
    }
}

#[test]
fn cross_section_bnn_score_varies_more_than_rp() {
    let text = stdout_of(&[
        "cross-section",
        "--model",
        "bnn",
        "--n-obs",
        "40",
        "--index",
        "5",
        "--seed",
        "0",
        "--points",
        "41",
    ]);
    let (header, rows) = parse_csv(&text);
    let score_col = column(&header, "delta_score_mu");
    let rp_col = column(&header, "delta_rp_mu");
    let range = |col: usize| {
        let v: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - v.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    assert!(
        range(score_col) > range(rp_col),
        "score range {} vs rp range {}",
        range(score_col),
        range(rp_col)
    );
}

#[test]
fn cross_section_rejects_out_of_range_index() {
    assert_eq!(
        exit_code(&[
            "cross-section",
            "--model",
            "quadratic",
            "--dim",
            "2",
            "--index",
            "7"
        ]),
        2
    );
}

#[test]
fn fit_recovers_the_quadratic_optimum_and_is_deterministic() {
    let dir = tempdir().unwrap();
    let prefix = dir.path().join("run");
    let prefix_str = prefix.to_str().unwrap();
    let args = [
        "fit",
        "--model",
        "quadratic",
        "--dim",
        "2",
        "--estimator",
        "rp",
        "--samples",
        "10",
        "--iters",
        "2500",
        "--seed",
        "7",
        "--out",
        prefix_str,
    ];
    let out = vigrad(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let params: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.params.json")).unwrap())
            .unwrap();
    // Default 2-d benchmark: mean (1.0, 0.6), precision diag (1.0, 1.5) with
    // 0.25 coupling; mean-field scales settle near 1/P_ii.
    let mu: Vec<f64> = params["mu"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let phi: Vec<f64> = params["phi"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((mu[0] - 1.0).abs() < 0.15, "mu {mu:?}");
    assert!((mu[1] - 0.6).abs() < 0.15, "mu {mu:?}");
    assert!(((2.0 * phi[0]).exp() - 1.0).abs() < 0.2, "phi {phi:?}");
    assert!(
        ((2.0 * phi[1]).exp() - 1.0 / 1.5).abs() < 0.2,
        "phi {phi:?}"
    );

    let trace_a = std::fs::read(dir.path().join("run.trace.csv")).unwrap();
    let params_a = std::fs::read(dir.path().join("run.params.json")).unwrap();
    assert!(vigrad(&args).status.success());
    assert_eq!(
        trace_a,
        std::fs::read(dir.path().join("run.trace.csv")).unwrap()
    );
    assert_eq!(
        params_a,
        std::fs::read(dir.path().join("run.params.json")).unwrap()
    );

    let first_line = String::from_utf8(trace_a).unwrap();
    assert!(first_line.starts_with("iter,elbo,grad_norm"));
}

#[test]
fn fit_rejects_zero_iterations_and_reports_divergence() {
    let dir = tempdir().unwrap();
    let prefix = dir.path().join("x");
    assert_eq!(
        exit_code(&["fit", "--iters", "0", "--out", prefix.to_str().unwrap()]),
        2
    );

    // A convex target with a large constant rate blows up: exit code 4.
    let config = write_toy_config(dir.path());
    assert_eq!(
        exit_code(&[
            "fit",
            "--config",
            config.to_str().unwrap(),
            "--schedule",
            "robbins-monro",
            "--rm-a",
            "10000",
            "--rm-b",
            "1",
            "--iters",
            "300",
            "--out",
            prefix.to_str().unwrap(),
        ]),
        4
    );
}

fn write_synthetic_idx(dir: &Path, n: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let images: Vec<Vec<u8>> = (0..n)
        .map(|i| {
            (0..28 * 28)
                .map(|j| ((i * 37 + j * 11) % 256) as u8)
                .collect()
        })
        .collect();
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    let img_path = dir.join(format!("images_{n}.idx"));
    let lbl_path = dir.join(format!("labels_{n}.idx"));
    std::fs::write(
        &img_path,
        vigrad::models::encode_idx_images(&images, 28, 28),
    )
    .unwrap();
    std::fs::write(&lbl_path, vigrad::models::encode_idx_labels(&labels)).unwrap();
    (img_path, lbl_path)
}

#[test]
fn mnist_ingest_round_trips_and_feeds_the_softmax_model() {
    let dir = tempdir().unwrap();
    let (img, lbl) = write_synthetic_idx(dir.path(), 12);
    let cache = dir.path().join("cache.bin");
    let out = vigrad(&[
        "mnist-ingest",
        "--images",
        img.to_str().unwrap(),
        "--labels",
        lbl.to_str().unwrap(),
        "--out",
        cache.to_str().unwrap(),
        "--subsample",
        "10",
        "--stride",
        "7",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("10 records of 4x4"));

    // Ingest is idempotent byte-for-byte.
    let bytes = std::fs::read(&cache).unwrap();
    assert!(vigrad(&[
        "mnist-ingest",
        "--images",
        img.to_str().unwrap(),
        "--labels",
        lbl.to_str().unwrap(),
        "--out",
        cache.to_str().unwrap(),
        "--subsample",
        "10",
        "--stride",
        "7",
    ])
    .status
    .success());
    assert_eq!(bytes, std::fs::read(&cache).unwrap());

    // The cache drives the softmax model end to end.
    let text = stdout_of(&[
        "sweep",
        "--model",
        "softmax",
        "--data",
        cache.to_str().unwrap(),
        "--axis",
        "phi-all",
        "--grid-start",
        "-2.0",
        "--grid-stop",
        "-1.0",
        "--grid-points",
        "2",
        "--samples",
        "300",
        "--seed",
        "11",
    ]);
    let (header, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 2 * 6);
    let idx_col = column(&header, "param_index");
    // 4x4 pixels + bias, 10 classes: 170 parameters; default probe clamps to
    // min(1000, dim - 1).
    assert!(rows.iter().all(|r| r[idx_col] == "169"));
}

#[test]
fn mnist_ingest_rejects_bad_inputs_with_data_exit_code() {
    let dir = tempdir().unwrap();
    let (img, lbl) = write_synthetic_idx(dir.path(), 3);
    let out_path = dir.path().join("c.bin");

    let mut bad_magic = std::fs::read(&img).unwrap();
    bad_magic[3] = 0x09;
    let bad_img = dir.path().join("bad.idx");
    std::fs::write(&bad_img, bad_magic).unwrap();
    assert_eq!(
        exit_code(&[
            "mnist-ingest",
            "--images",
            bad_img.to_str().unwrap(),
            "--labels",
            lbl.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]),
        3
    );

    let (_, fewer) = write_synthetic_idx(dir.path(), 2);
    assert_eq!(
        exit_code(&[
            "mnist-ingest",
            "--images",
            img.to_str().unwrap(),
            "--labels",
            fewer.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]),
        3
    );
}

#[test]
fn config_file_merging_and_unknown_key_rejection() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"samples": 300, "sigma-grid": [0.5, 1.0], "seed": 4}"#,
    )
    .unwrap();

    // Flag overrides the file's samples; grid and seed come from the file.
    let text = stdout_of(&[
        "var-table",
        "--config",
        path.to_str().unwrap(),
        "--samples",
        "250",
    ]);
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 8);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"samples": 10, "no-such-key": 1}"#).unwrap();
    assert_eq!(
        exit_code(&["var-table", "--config", bad.to_str().unwrap()]),
        2
    );
}
