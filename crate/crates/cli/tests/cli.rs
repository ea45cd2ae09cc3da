use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cbp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbp"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("pair.mix"),
        "# reuse app next to a stream\nx = synthetic:ws=256KiB,skew=0,intensity=100\ny = synthetic:ws=4MiB,sf=1,intensity=150\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("fast.toml"),
        "warmup_instructions = 50000\ndetailed_instructions = 200000\n\n[cbp]\nreconfiguration_interval_ms = 0.2\nprefetch_interval_ms = 0.2\nprefetch_sampling_period_ms = 0.02\n",
    )
    .unwrap();
    dir
}

#[test]
fn run_prints_summary_and_writes_csvs() {
    let dir = setup();
    let o = cbp(&["run", "--config", "fast.toml", "--mix", "pair.mix", "--rm", "cbp", "--out", "res"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("mix,rm,weighted_speedup,antt\npair,cbp,"), "{out}");
    assert_eq!(fs::read_to_string(dir.path().join("res/summary.csv")).unwrap(), out);
    let series = fs::read_to_string(dir.path().join("res/timeseries_pair_cbp.csv")).unwrap();
    assert!(series.starts_with("interval,app,ways,bw_share,prefetch_on,ipc\n"));
}

#[test]
fn sweep_covers_the_requested_managers() {
    let dir = setup();
    let args = ["sweep", "--config", "fast.toml", "--mix", "pair.mix", "--rm", "baseline,only-cache", "--out", "res", "--jobs", "2"];
    let o = cbp(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("pair,baseline,1.0,1.0"));
    assert!(lines[2].starts_with("pair,only_cache,"));
}

#[test]
fn parameter_sweep_writes_sensitivity_csv() {
    let dir = setup();
    let args = [
        "sweep", "--config", "fast.toml", "--mix", "pair.mix", "--rm", "cbp", "--out", "res", "--intervals", "0.1,0.2",
        "--sampling", "0.01",
    ];
    let o = cbp(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("res/sensitivity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn classify_labels_each_app() {
    let dir = setup();
    let o = cbp(&["classify", "--config", "fast.toml", "--mix", "pair.mix", "--jobs", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("x,CS"), "{out}");
    assert!(lines[2].starts_with("y,"), "{out}");
}

#[test]
fn gen_trace_round_trips_through_a_mix() {
    let dir = setup();
    for (file, magic) in [("t.bin", true), ("t.txt", false)] {
        let o = cbp(&["gen-trace", "ws=64KiB,sf=0.5", "--out", file, "--instructions", "20000", "--seed", "3"], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let bytes = fs::read(dir.path().join(file)).unwrap();
        assert_eq!(bytes.starts_with(b"CBPT\x01"), magic);
    }
    let text = fs::read_to_string(dir.path().join("t.txt")).unwrap();
    let bin = fs::read(dir.path().join("t.bin")).unwrap();
    assert_eq!(text.lines().count(), (bin.len() - 5) / 13);
    fs::write(dir.path().join("traced.mix"), "trace:t.bin\ntrace:t.txt\n").unwrap();
    let o = cbp(&["run", "--config", "fast.toml", "--mix", "traced.mix", "--rm", "equal_off", "--instructions", "50000"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = setup();
    for args in [
        &["run", "--mix", "missing.mix"][..],
        &["run", "--mix", "pair.mix", "--rm", "nonsense"],
        &["gen-trace", "ws=banana", "--out", "x.txt"],
        &["sweep", "--mix", "pair.mix", "--out", "r", "--intervals", "1"],
    ] {
        let o = cbp(args, dir.path());
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{args:?}");
    }
}
