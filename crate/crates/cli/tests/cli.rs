use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sepoc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepoc")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Parse a CSV table into its header and rows.
fn table(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header
        .iter()
        .position(|h| h.split('[').next() == Some(name))
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn horizon_sweep_matches_square_root_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let run = sepoc(&["sweep", "--config", config("kuramoto_horizon_sweep.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let (header, rows) = table(&std::fs::read(&out).unwrap());
    assert_eq!(header[0], "T[time]");
    assert!(header.iter().all(|h| h.ends_with(']')), "{header:?}");
    let t = column(&header, &rows, "T");
    assert_eq!(t, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    for (mu, t) in column(&header, &rows, "theory_mu_star").iter().zip(&t) {
        assert!((mu - (1.0 / t).sqrt()).abs() < 1e-10);
    }
    assert!(column(&header, &rows, "discrepancy").iter().all(|d| *d <= 1e-3));

    let sidecar: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("sweep.csv.json")).unwrap()).unwrap();
    assert_eq!(sidecar["command"], "sweep");
    assert_eq!(sidecar["config"]["sweep"]["steps"], 6);
    assert!(sidecar["config"].get("threads").is_none());
    assert_eq!(sidecar["errors"].as_array().unwrap().len(), 0);
}

#[test]
fn gamma_sweep_leaves_control_flat() {
    let run = sepoc(&["sweep", "--config", config("oa_gamma_sweep.json").to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let (header, rows) = table(&run.stdout);
    let mu = column(&header, &rows, "numeric_mu_mean");
    let spread = mu.iter().cloned().fold(f64::MIN, f64::max) - mu.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-8, "spread {spread}");
    assert!((mu[0] - (1.0f64 / 3.0).sqrt()).abs() < 1e-8);
}

#[test]
fn adn_multipliers_follow_closed_form() {
    let run = sepoc(&["sweep", "--config", config("adn_max_objective_sweep.json").to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let (header, rows) = table(&run.stdout);
    let t = column(&header, &rows, "T");
    let phi_h = column(&header, &rows, "numeric_Phi_h");
    let lambda = column(&header, &rows, "numeric_lambda1");
    for k in 0..t.len() {
        let expected = -0.5 * phi_h[k] * (t[k] / 2.0).sqrt();
        assert!((lambda[k] - expected).abs() < 1e-6 * expected.abs(), "T = {}: {} vs {expected}", t[k], lambda[k]);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let args = |threads: &'static str| {
        vec![
            "sweep".to_string(),
            "--config".into(),
            config("adn_min_time_sweep.json").to_string_lossy().into_owned(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
            "--threads".into(),
            threads.into(),
        ]
    };
    let run = |threads| {
        let a = args(threads);
        let out_ = sepoc(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&out_), 0);
        (std::fs::read(&out).unwrap(), std::fs::read(dir.path().join("run.csv.json")).unwrap())
    };
    let first = run("1");
    let second = run("4");
    assert_eq!(first, second);
    let text = String::from_utf8(first.0).unwrap();
    assert!(!text.contains('\r'));
    // 12 significant digits
    assert!(text.lines().nth(1).unwrap().split(',').next().unwrap() == "1.00000000000e0");
}

#[test]
fn failed_points_are_recorded_and_exit_nonzero() {
    // targets above the reachable prevalence fail; the others still appear
    let run = sepoc(&[
        "sweep", "--model", "adn", "--problem", "min-effort", "--horizon", "2",
        "--sweep-param", "target", "--sweep-lo", "0.5", "--sweep-hi", "1.3", "--sweep-steps", "3",
    ]);
    assert_eq!(code(&run), 2);
    let (header, rows) = table(&run.stdout);
    let status = header.iter().position(|h| h.starts_with("status")).unwrap();
    let statuses: Vec<&str> = rows.iter().map(|r| r[status].as_str()).collect();
    assert_eq!(statuses, vec!["ok", "ok", "error"]);
    assert!(rows[2].last().unwrap().contains("not attained"));
}

#[test]
fn exit_codes() {
    // usage
    assert_eq!(code(&sepoc(&["sweep", "--sweep-param", "horizon", "--sweep-lo", "3", "--sweep-hi", "1"])), 1);
    assert_eq!(code(&sepoc(&["sweep", "--sweep-param", "horizon", "--sweep-lo", "1", "--sweep-hi", "3", "--sweep-steps", "1"])), 1);
    assert_eq!(code(&sepoc(&["solve-ref", "--no-such-flag"])), 1);
    assert_eq!(code(&sepoc(&["solve-ref", "--horizon", "-1"])), 1);
    assert_eq!(code(&sepoc(&["--help"])), 0);
    // I/O
    assert_eq!(code(&sepoc(&["solve-ref", "--config", "/nonexistent/config.json"])), 3);
    assert_eq!(code(&sepoc(&["simulate", "--graph", "/nonexistent/graph.edges"])), 3);
    // numeric
    assert_eq!(code(&sepoc(&["solve-ref", "--model", "adn", "--problem", "min-effort", "--target", "2"])), 2);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"modle": "oa"}"#).unwrap();
    let run = sepoc(&["solve-ref", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("modle"));
}

#[test]
fn flags_override_config() {
    let run = sepoc(&["sweep", "--config", config("kuramoto_horizon_sweep.json").to_str().unwrap(), "--sweep-steps", "2", "--budget", "4"]);
    assert_eq!(code(&run), 0);
    let (header, rows) = table(&run.stdout);
    assert_eq!(column(&header, &rows, "T"), vec![1.0, 6.0]);
    let mu = column(&header, &rows, "theory_mu_star");
    assert!((mu[0] - 2.0).abs() < 1e-12);
}

#[test]
fn solve_ocp_writes_stationary_point_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sp.csv");
    let run = sepoc(&["solve-ocp", "--model", "adn", "--problem", "min-time", "--budget", "2", "--target", "0.9", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let sidecar: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("sp.csv.json")).unwrap()).unwrap();
    let sp = &sidecar["stationary_point"];
    for key in ["coeffs", "multipliers", "objective", "phi_h", "residual", "positivity_flag", "T"] {
        assert!(sp.get(key).is_some(), "missing {key}");
    }
    assert_eq!(sp["multipliers"].as_array().unwrap().len(), 2);
    let (header, rows) = table(&std::fs::read(&out).unwrap());
    assert!(column(&header, &rows, "discrepancy")[0] < 1e-6);
}

#[test]
fn enumerate_lists_constant_point_first() {
    let run = sepoc(&["enumerate-sps", "--config", config("kuramoto_enumerate.json").to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    let (header, rows) = table(&run.stdout);
    assert_eq!(rows.len(), 5, "{rows:?}");
    let class = header.iter().position(|h| h.starts_with("class")).unwrap();
    assert_eq!(rows[0][class], "local-max");
    let p2 = column(&header, &rows, "p2");
    assert_eq!(p2[0], 0.0);
    assert!(p2[1..].iter().all(|p| p.abs() > 1e-3));
}

#[test]
fn simulate_and_rescale_curve_agree() {
    // with mu = 1, tau = t and the controlled and rescaled observables coincide
    let sim = sepoc(&["simulate", "--model", "oa", "--horizon", "2", "--samples", "5"]);
    assert_eq!(code(&sim), 0);
    let (sh, sr) = table(&sim.stdout);
    let curve = sepoc(&["rescale-curve", "--model", "oa", "--tau-max", "2", "--dtau", "0.5"]);
    assert_eq!(code(&curve), 0);
    let (ch, cr) = table(&curve.stdout);
    assert_eq!(column(&sh, &sr, "tau"), column(&ch, &cr, "tau"));
    for (a, b) in column(&sh, &sr, "Phi").iter().zip(column(&ch, &cr, "Phi")) {
        assert!((a - b).abs() < 1e-8);
    }
    assert_eq!(sh.len(), 4 + 20, "t, tau, mu, Phi and 2 x 10 OA components");
}

#[test]
fn validate_passes() {
    let run = sepoc(&["validate", "--seed", "3"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stdout));
    let (header, rows) = table(&run.stdout);
    let passed = header.iter().position(|h| h.starts_with("passed")).unwrap();
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r[passed] == "true"));
}

#[test]
fn json_format() {
    let run = sepoc(&["solve-ref", "--model", "kuramoto", "--horizon", "4", "--budget", "1", "--format", "json"]);
    assert_eq!(code(&run), 0);
    let v: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v[0]["mu_star[1]"], 0.5);
}
