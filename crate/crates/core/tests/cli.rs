use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irs-robust"))
}

const SMALL: &str = r#"
L = 2
R = 2
K = 2
N = 4
N_h = 2
mc_samples = 50
realizations = 3
seed = 5
"#;

#[derive(Debug, serde::Deserialize)]
struct Row {
    sweep_param: String,
    sweep_value: f64,
    scheme: String,
    mean_rate: f64,
    std_err: f64,
    n_realizations: usize,
    mean_iters: f64,
    wall_time_s: f64,
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    let out = dir.path().join("rates.csv");
    std::fs::write(&cfg, SMALL).unwrap();
    let status = bin()
        .arg("--config")
        .arg(&cfg)
        .args([
            "--sweep",
            "kappa2=0.001,0.05",
            "--schemes",
            "continuous,conventional",
        ])
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let mut reader = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header.join(","),
        "sweep_param,sweep_value,scheme,mean_rate,std_err,n_realizations,mean_iters,wall_time_s"
    );
    let rows: Vec<Row> = reader.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.sweep_param, "kappa2");
        assert!([0.001, 0.05].contains(&row.sweep_value));
        assert!(["continuous", "conventional"].contains(&row.scheme.as_str()));
        assert!(row.mean_rate.is_finite() && row.mean_rate > 0.0);
        assert!(row.std_err >= 0.0);
        assert_eq!(row.n_realizations, 3);
        assert!(row.mean_iters >= 1.0);
        assert!(row.wall_time_s >= 0.0);
    }
}

#[test]
fn records_go_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .args([
            "--schemes",
            "1bit",
            "--realizations",
            "2",
            "--format",
            "records",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["scheme"], "1bit");
    assert_eq!(lines[0]["sweep_param"], "none");
    assert_eq!(lines[0]["n_realizations"], 2);
}

#[test]
fn rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "N = 5\nN_h = 2\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());

    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());

    let out = bin().args(["--sweep", "kappa2="]).output().unwrap();
    assert!(!out.status.success());
}
