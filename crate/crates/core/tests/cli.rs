use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_delaybw");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

const TWO_HOP: &str = r#"{"seed": 5, "hops": [{"capacity_bps": 1e6, "propagation_s": 0.002}, {"capacity_bps": 2e6}]}"#;

#[test]
fn estimate_adsl_csv() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "adsl.csv", "size_bytes,delay_s\n100,0.018\n1124,0.042\n");
    let o = run(dir.path(), &["estimate", "adsl.csv", "--min-samples", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).starts_with("B_av = 341.3 kbit/s, a = 15.656 ms\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn estimate_ftp_csv_with_explicit_columns() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ftp.csv", "bytes,secs\n100,0.300\n1124,0.425\n");
    let o = run(
        dir.path(),
        &[
            "estimate",
            "ftp.csv",
            "--min-samples",
            "1",
            "--size-col",
            "bytes",
            "--delay-col",
            "secs",
            "--size-unit",
            "bytes",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("B_av = 65.54 kbit/s"), "{}", stdout(&o));
}

#[test]
fn estimate_json_carries_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "adsl.csv", "size_bytes,delay_s\n100,0.018\n1124,0.042\n");
    let o = run(dir.path(), &["--json", "estimate", "adsl.csv", "--min-samples", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let b = v["b_av_bps"].as_f64().unwrap();
    assert!((b - 8192.0 / 0.024).abs() < 1e-6);
    assert_eq!(v["intercept_s"].as_f64().unwrap(), 0.01565625);
    assert_eq!(v["method"], "pairwise");
}

#[test]
fn estimate_default_threshold_rejects_single_samples() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "adsl.csv", "size_bytes,delay_s\n100,0.018\n1124,0.042\n");
    let o = run(dir.path(), &["estimate", "adsl.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn one_way_halving_warns() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "adsl.csv", "size_bytes,delay_s\n100,0.018\n1124,0.042\n");
    let o = run(
        dir.path(),
        &["estimate", "adsl.csv", "--min-samples", "1", "--one-way-halve"],
    );
    let text = stdout(&o);
    assert!(text.starts_with("B_av = 682.7 kbit/s"), "{text}");
    assert!(text.contains("warning: delays halved"));
}

#[test]
fn simulate_reports_truth_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "path.json", TWO_HOP);
    let o = run(dir.path(), &["simulate", "path.json", "--count", "3", "-o", "s.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("ground truth = 666.7 kbit/s (666667 bit/s)"), "{text}");
    assert!(text.contains("rate 666667 bit/s"), "{text}");
    assert!(dir.path().join("s.jsonl").exists());

    let est = run(dir.path(), &["--json", "estimate", "s.jsonl", "--min-samples", "3"]);
    let v: serde_json::Value = serde_json::from_slice(&est.stdout).unwrap();
    assert!((v["b_av_bps"].as_f64().unwrap() - 2e6 / 3.0).abs() < 1e-3);
    assert!((v["intercept_s"].as_f64().unwrap() - 0.002).abs() < 1e-12);
}

#[test]
fn simulate_seed_flag_changes_session() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "noisy.json",
        r#"{"seed": 1, "hops": [{"capacity_bps": 1e6, "queue_noise_mean_s": 0.001}]}"#,
    );
    run(dir.path(), &["simulate", "noisy.json", "--count", "5", "-o", "a.jsonl"]);
    run(
        dir.path(),
        &["simulate", "noisy.json", "--count", "5", "--seed", "2", "-o", "b.jsonl"],
    );
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn malformed_path_config_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", "{\"hops\": [");
    assert_eq!(run(dir.path(), &["simulate", "bad.json"]).status.code(), Some(65));
    write(dir.path(), "neg.json", r#"{"hops": [{"capacity_bps": -1}]}"#);
    assert_eq!(run(dir.path(), &["simulate", "neg.json"]).status.code(), Some(65));
}

#[test]
fn stats_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("seq,payload_bytes,wire_bits,sent_at_us,rtt_s,lost\n");
    for i in 0..20 {
        let rtt = if i % 2 == 0 { 0.010 } else { 0.020 };
        csv.push_str(&format!("{i},100,1024,{},{rtt},false\n", i * 1000));
    }
    write(dir.path(), "s.csv", &csv);
    let o = run(dir.path(), &["stats", "s.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("20 samples, 0 lost"), "{text}");
    assert!(text.contains("jitter 10.000 ms"), "{text}");

    let o = run(dir.path(), &["stats", "s.csv", "--series", "--window", "5"]);
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "sent_at_us,jitter_s");
    assert_eq!(lines.len(), 1 + 16);
}

#[test]
fn stats_on_empty_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "e.csv",
        "seq,payload_bytes,wire_bits,sent_at_us,rtt_s,lost\n",
    );
    let code = run(dir.path(), &["stats", "e.csv"]).status.code();
    assert!(code == Some(3) || code == Some(65), "{code:?}");
}

#[test]
fn calibrate_writes_model() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "obs.csv",
        "path_id,n,l_km,a_s\np1,2,100,0.0007\np2,4,50,0.00065\np3,6,300,0.0021\n",
    );
    let o = run(dir.path(), &["calibrate", "obs.csv", "-o", "m.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("alpha = 0.100000 ms/hop, beta = 0.005000 ms/km"),
        "{}",
        stdout(&o)
    );
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert!((m["alpha_s_per_hop"].as_f64().unwrap() - 1e-4).abs() < 1e-15);
}

#[test]
fn calibrate_rejects_collinear_features() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "obs.csv",
        "path_id,n,l_km,a_s\np1,1,10,0.001\np2,2,20,0.002\np3,3,30,0.003\n",
    );
    assert_eq!(run(dir.path(), &["calibrate", "obs.csv"]).status.code(), Some(3));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(dir.path(), &["probe", "127.0.0.1", "--sizes", "100,100"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "adsl.csv", "size_bytes,delay_s\n100,0.018\n1124,0.042\n");
    write(dir.path(), "c.conf", "min_samples = 1\nformat = json\n");
    let o = run(dir.path(), &["--config", "c.conf", "estimate", "adsl.csv"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["method"], "pairwise");
    write(dir.path(), "bad.conf", "colour = blue\n");
    assert_eq!(
        run(dir.path(), &["--config", "bad.conf", "estimate", "adsl.csv"])
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn estimate_with_intercept_model() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "adsl.csv", "size_bytes,delay_s\n100,0.018\n1124,0.042\n");
    write(
        dir.path(),
        "m.json",
        r#"{"alpha_s_per_hop": 0.001, "beta_s_per_km": 0.0, "residual_rms_s": 0.0, "n_observations": 3}"#,
    );
    let o = run(
        dir.path(),
        &[
            "--json",
            "estimate",
            "adsl.csv",
            "--min-samples",
            "1",
            "--model",
            "m.json",
            "--hop-count",
            "8",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let b = v["model_estimate"]["b_av_bps"].as_f64().unwrap();
    assert!((b - 800.0 / 0.010).abs() < 1e-6, "{b}");
}
