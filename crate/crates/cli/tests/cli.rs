use std::path::Path;
use std::process::Command;

fn mfgstate() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfgstate"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# timestamp"))
        .collect::<Vec<_>>()
        .join("\n")
}

const SWEEP: &str = r#"{
  "method": "zero-width",
  "omega_z": [0.02],
  "g": [0.1, 0.2, 0.3],
  "temperature": [0.0, 0.006, 0.013]
}"#;

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("out{threads}.csv"));
        let status = mfgstate()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        outputs.push(without_timestamp(&std::fs::read_to_string(&out).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let body: Vec<&str> = outputs[0].lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[0].starts_with("omega_z,epsilon,g,gamma,temperature"));
    assert_eq!(body.len(), 10);
    let g: Vec<f64> = body[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(g, vec![0.1, 0.1, 0.1, 0.2, 0.2, 0.2, 0.3, 0.3, 0.3]);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"method": "oracle", "omega_z": [0.02], "gamma": [0.0, 0.1]}"#,
    );
    let status = mfgstate().args(["sweep", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let unordered = write(dir.path(), "unordered.json", r#"{"method": "weak", "omega_z": [0.05, 0.02]}"#);
    let status = mfgstate().args(["sweep", "--config"]).arg(&unordered).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let status = mfgstate()
        .args(["sweep", "--config"])
        .arg(dir.path().join("missing.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn strict_mode_flags_validity_breach() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"method": "weak", "omega_z": [0.02], "g": [0.02, 0.2], "temperature": [0.005], "strict": true}"#;
    let cfg = write(dir.path(), "strict.json", body);
    let out = dir.path().join("strict.csv");
    let status = mfgstate().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(3));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains(",false,weak,"));
    assert!(text.contains(",true,weak,"));
}

#[test]
fn gpeak_and_tn_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "gpeak.json",
        r#"{"method": "zero-width", "omega_z": 0.02, "temperature": [0.0, 0.006], "bracket": [0.05, 0.6]}"#,
    );
    let out = mfgstate().args(["gpeak", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').take(3).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!((0.25..=0.35).contains(&rows[0][1]));
    assert!(rows[1][1] < rows[0][1]);

    let cfg = write(
        dir.path(),
        "tn.json",
        r#"{"method": "weak", "omega_z": 0.02, "g": [0.0, 0.05], "bracket": [0.0, 0.05]}"#,
    );
    let out = mfgstate().args(["tn", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(body[1].contains("already vanishes"));
    let t: f64 = body[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(t > 0.0 && t < 0.05);
}

#[test]
fn dbeta_and_compare_oracle_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "dbeta.json", r#"{"gamma": 0.2, "omega": [-0.04, 0.0, 0.04]}"#);
    let out = mfgstate().args(["dbeta", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - f[3]).abs() <= 1e-8 * f[1].abs());
    }

    let cfg = write(
        dir.path(),
        "oracle.json",
        r#"{"method": "oracle", "omega_z": [0.02], "g": [0.2], "temperature": [0.0, 0.006]}"#,
    );
    let out = mfgstate().args(["compare-oracle", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let diff: f64 = line.split(',').nth(6).unwrap().parse().unwrap();
        assert!(diff < 0.01);
    }
}
