//! End-to-end tests of the `ddgf` binary.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ddgf");

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env("DDGF_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn four_trip_csv() -> String {
    "tripduration,starttime,stoptime,start station id,start station name,start station latitude,start station longitude,end station id,end station name,end station latitude,end station longitude,bikeid,usertype,birth year,gender\n\
     600,2013-07-01 09:05:00,2013-07-01 09:15:00,72,A,40.75,-73.99,79,B,40.76,-74.00,1,Subscriber,1985,1\n\
     540,2013-07-01 09:20:00,2013-07-01 09:29:00,72,A,40.75,-73.99,79,B,40.76,-74.00,2,Customer,1990,2\n\
     480,2013-07-01 09:40:00,2013-07-01 09:48:00,72,A,40.75,-73.99,72,A,40.75,-73.99,3,Subscriber,1978,1\n\
     300,2013-07-01 09:50:00,2013-07-01 09:55:00,79,B,40.76,-74.00,72,A,40.75,-73.99,4,Customer,1982,2\n".to_string()
}

/// Two stations trading trips over `hours` hours with deterministic counts.
fn synthetic_csv(hours: usize) -> String {
    let header = "tripduration,starttime,stoptime,start station id,start station name,start station latitude,start station longitude,end station id,end station name,end station latitude,end station longitude,bikeid,usertype,birth year,gender\n";
    let mut body = String::from(header);
    let mut bike = 0;
    for h in 0..hours {
        let day = 1 + h / 24;
        let hod = h % 24;
        // Demand pattern: station 72 gets 1 + (h % 3) trips, station 79
        // follows with one hour of lag.
        let a_trips = 1 + h % 3;
        let b_trips = 1 + (h + 2) % 3;
        for t in 0..a_trips {
            bike += 1;
            body.push_str(&format!(
                "300,2013-07-{day:02} {hod:02}:{m:02}:00,2013-07-{day:02} {hod:02}:{m2:02}:00,72,A,40.75,-73.99,79,B,40.76,-74.00,{bike},Subscriber,1985,1\n",
                m = 5 + t * 2,
                m2 = 10 + t * 2
            ));
        }
        for t in 0..b_trips {
            bike += 1;
            body.push_str(&format!(
                "300,2013-07-{day:02} {hod:02}:{m:02}:00,2013-07-{day:02} {hod:02}:{m2:02}:00,79,B,40.76,-74.00,72,A,40.75,-73.99,{bike},Customer,1990,2\n",
                m = 6 + t * 2,
                m2 = 11 + t * 2
            ));
        }
    }
    body
}

#[test]
fn ingest_hand_verifies_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("trips.csv"), four_trip_csv()).unwrap();

    let out = run(
        &["ingest", "--in", "trips.csv", "--out", "demand.dmx"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let demand = ddgf_core::container::read_demand(&dir.path().join("demand.dmx")).unwrap();
    assert_eq!(demand.stations(), &["72".to_string(), "79".to_string()]);
    assert_eq!(demand.count(0, 0), 3);
    assert_eq!(demand.count(1, 0), 1);
    assert_eq!(demand.total(), 4);

    let out = run(
        &["ingest", "--in", "trips.csv", "--out", "demand2.dmx"],
        dir.path(),
    );
    assert!(out.status.success());
    let a = std::fs::read(dir.path().join("demand.dmx")).unwrap();
    let b = std::fs::read(dir.path().join("demand2.dmx")).unwrap();
    assert_eq!(a, b, "re-running ingest must be byte-identical");
}

#[test]
fn missing_config_exits_one_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing.toml"), "{stderr}");
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "{stderr}");
}

#[test]
fn help_lists_flags_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    for sub in [
        "ingest",
        "build-graph",
        "train",
        "evaluate",
        "predict",
        "export-filter",
        "report",
    ] {
        let out = run(&[sub, "--help"], dir.path());
        assert!(out.status.success(), "{sub} --help failed");
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(stdout.contains("--help"), "{sub}: {stdout}");
    }
    // Spot-check that defaults are shown.
    let out = run(&["build-graph", "--help"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("default"), "{stdout}");
}

#[test]
fn full_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("trips.csv"), synthetic_csv(60)).unwrap();

    // ingest
    let out = run(
        &["ingest", "--in", "trips.csv", "--out", "demand.dmx"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // build-graph for dc (demand only) and de (needs trips)
    for (kind, extra) in [("dc", None), ("de", Some("trips.csv"))] {
        let mut args = vec![
            "build-graph",
            "--kind",
            kind,
            "--demand",
            "demand.dmx",
            "--out",
        ];
        let name = format!("{kind}.gfl");
        args.push(&name);
        if let Some(trips) = extra {
            args.push("--trips");
            args.push(trips);
        }
        let out = run(&args, dir.path());
        assert!(
            out.status.success(),
            "build-graph {kind}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    // sd/de/atd without trips must fail as a user error
    let out = run(
        &[
            "build-graph",
            "--kind",
            "de",
            "--demand",
            "demand.dmx",
            "--out",
            "x.gfl",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    let config = r#"
seed = 7
output_dir = "run"

[data]
trips = ["trips.csv"]
c0 = 4

[training]
epochs = 12
batch_size = 8
patience = 12
learning_rate = 0.005

[[models]]
name = "reg"
arch = "gcnn-reg-ddgf"
hidden_widths = [6]

[[models]]
name = "gcnn_dc"
arch = "gcnn-fixed"
hidden_widths = [6]
graph = "dc.gfl"

[[models]]
name = "ha"
arch = "ha"

[[models]]
name = "lasso"
arch = "lasso"
lambda = 0.001
"#;
    std::fs::write(dir.path().join("exp.toml"), config).unwrap();

    // train
    let out = run(&["train", "--config", "exp.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("Reference"),
        "table footer missing: {stdout}"
    );
    for artifact in [
        "run/reg.mdl",
        "run/reg_history.csv",
        "run/reg_metrics.csv",
        "run/gcnn_dc.mdl",
        "run/ha.mdl",
        "run/lasso.mdl",
        "run/comparison.csv",
        "run/comparison.txt",
    ] {
        assert!(dir.path().join(artifact).exists(), "missing {artifact}");
    }

    // history CSV is well-formed
    let history = std::fs::read_to_string(dir.path().join("run/reg_history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_loss"));
    assert!(history.lines().count() >= 2);

    // evaluate a checkpoint
    let out = run(
        &["evaluate", "--config", "exp.toml", "--model", "run/reg.mdl"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("reg,"));

    // predict next hour
    let out = run(
        &[
            "predict",
            "--model",
            "run/reg.mdl",
            "--demand",
            "demand.dmx",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("station,next_hour,forecast"));
    assert_eq!(stdout.lines().count(), 3); // header + two stations

    // export the learned filter and read it back
    let out = run(
        &[
            "export-filter",
            "--model",
            "run/reg.mdl",
            "--layer",
            "0",
            "--out",
            "learned.gfl",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let filter = ddgf_core::container::read_filter(&dir.path().join("learned.gfl")).unwrap();
    assert_eq!(filter.n(), 2);

    // report aggregates and sorts ascending by RMSE
    let out = run(&["report", "--runs", "run"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    let rmse_column: Vec<f64> = stdout
        .lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .filter_map(|l| l.split_whitespace().nth(1)?.parse().ok())
        .collect();
    assert!(rmse_column.len() >= 4, "{stdout}");
    for pair in rmse_column.windows(2) {
        assert!(pair[0] <= pair[1], "not sorted: {rmse_column:?}");
    }

    // re-running train reproduces the checkpoint byte for byte
    let reg_before = std::fs::read(dir.path().join("run/reg.mdl")).unwrap();
    let out = run(
        &["train", "--config", "exp.toml", "--model", "reg"],
        dir.path(),
    );
    assert!(out.status.success());
    let reg_after = std::fs::read(dir.path().join("run/reg.mdl")).unwrap();
    assert_eq!(reg_before, reg_after, "training is not reproducible");
}

#[test]
fn corrupted_checkpoint_payload_exits_two() {
    // A checkpoint whose float payload was tampered into NaNs breaks a core
    // invariant (finite tensors) rather than a user contract.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("trips.csv"), synthetic_csv(40)).unwrap();
    let config = r#"
output_dir = "run"

[data]
trips = ["trips.csv"]
c0 = 3

[training]
epochs = 2
batch_size = 8

[[models]]
name = "mlp"
arch = "mlp"
hidden_widths = [4]
"#;
    std::fs::write(dir.path().join("exp.toml"), config).unwrap();
    let out = run(&["train", "--config", "exp.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mdl_path = dir.path().join("run/mlp.mdl");
    let mut bytes = std::fs::read(&mdl_path).unwrap();
    let nan = f64::NAN.to_le_bytes();
    let tail = bytes.len() - 8;
    bytes[tail..].copy_from_slice(&nan);
    std::fs::write(&mdl_path, &bytes).unwrap();

    let out = run(
        &["export-filter", "--model", "run/mlp.mdl", "--out", "x.gfl"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn export_filter_on_ha_model_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("trips.csv"), synthetic_csv(40)).unwrap();
    let config = r#"
output_dir = "run"

[data]
trips = ["trips.csv"]
c0 = 3

[[models]]
name = "ha"
arch = "ha"
"#;
    std::fs::write(dir.path().join("exp.toml"), config).unwrap();
    let out = run(&["train", "--config", "exp.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run(
        &["export-filter", "--model", "run/ha.mdl", "--out", "x.gfl"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn predict_rejects_short_demand_window() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("trips.csv"), synthetic_csv(40)).unwrap();
    let out = run(
        &["ingest", "--in", "trips.csv", "--out", "demand.dmx"],
        dir.path(),
    );
    assert!(out.status.success());

    let config = r#"
output_dir = "run"

[data]
trips = ["trips.csv"]
c0 = 3

[training]
epochs = 2
batch_size = 8

[[models]]
name = "mlp"
arch = "mlp"
hidden_widths = [4]
"#;
    std::fs::write(dir.path().join("exp.toml"), config).unwrap();
    let out = run(&["train", "--config", "exp.toml"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run(
        &[
            "predict",
            "--model",
            "run/mlp.mdl",
            "--demand",
            "demand.dmx",
            "--lags",
            "100",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}
