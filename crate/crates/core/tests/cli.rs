use std::fs;
use std::process::{Command, Output};

use rism_sim::metrics::{read_csv, write_csv, CsvRow, CSV_HEADER};

fn rism_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rism-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SHORT: [&str; 6] = [
    "--set",
    "duration=20",
    "--set",
    "nodes=10",
    "--quiet",
    "--seeds=2",
];

#[test]
fn writes_csv_with_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.csv");
    let mut args = SHORT.to_vec();
    args.extend([
        "--sweep",
        "protocol=dsr,rism",
        "--out",
        out.to_str().unwrap(),
    ]);
    let o = rism_sim(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    let ids: Vec<u64> = rows.iter().map(|r| r.run_id).collect();
    assert_eq!(ids, [0, 1, 2, 3]);
    assert_eq!(rows[0].seed, rows[2].seed);
    assert_eq!(rows[0].protocol, "dsr");
    assert_eq!(rows[2].protocol, "rism");
    assert!(rows.iter().all(|r| r.nodes == 10 && r.connections == 5));
}

#[test]
fn stdout_when_no_out_path() {
    let o = rism_sim(&SHORT);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn repeat_invocations_are_byte_identical() {
    let a = rism_sim(&SHORT);
    let b = rism_sim(&SHORT);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_errors_exit_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    fs::write(&path, "# scenario\nnodes = 10\nmalicious_fraction = 1.5\n").unwrap();
    let o = rism_sim(&["--config", path.to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(o.stdout.is_empty());
}

#[test]
fn config_file_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.conf");
    fs::write(
        &path,
        "nodes = 10\nduration = 20\nprotocol = dsr\nids.w_self = -6\n",
    )
    .unwrap();
    let o = rism_sim(&["--config", path.to_str().unwrap(), "--quiet"]);
    assert!(o.status.success());
    let rows = read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].protocol, "dsr");
    assert_eq!(rows[0].nodes, 10);
}

#[test]
fn bad_overrides_exit_one() {
    for args in [
        ["--set", "colour=blue"],
        ["--set", "nodes"],
        ["--set", "pause_time=-1"],
        ["--sweep", "protocol=dsr,aodv"],
        ["--sweep", "pause_time"],
    ] {
        let o = rism_sim(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("runs.csv");
    let mut args = SHORT.to_vec();
    args.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(rism_sim(&args).status.code(), Some(2));
}

#[test]
fn trace_file_has_one_section_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.txt");
    let mut args = SHORT.to_vec();
    args.extend(["--trace", trace.to_str().unwrap()]);
    assert!(rism_sim(&args).status.success());
    let text = fs::read_to_string(&trace).unwrap();
    let headers: Vec<&str> = text.lines().filter(|l| l.starts_with("# run ")).collect();
    assert_eq!(headers.len(), 2);
    assert!(headers[0].starts_with("# run 0 seed "));
    assert!(text.lines().any(|l| l.contains(",cbr-send,")));
}

#[test]
fn csv_schema_round_trip() {
    let mut empty = Vec::new();
    write_csv(&[], &mut empty).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap().trim_end(), CSV_HEADER);

    let row = CsvRow {
        run_id: 7,
        seed: 12345,
        protocol: "rism".into(),
        nodes: 20,
        malicious_pct: 30.0,
        pause_time: 300.0,
        connections: 10,
        data_sent: 3600,
        data_received: 2700,
        pdr: 0.75,
        control_generated: 1800,
        overhead_ratio: 0.5,
        warning_count: 12,
        overhead_ratio_with_ids: 1812.0 / 3600.0,
        drops_behavior: 500,
        drops_queue: 100,
        drops_noroute: 200,
        drops_linkloss: 50,
    };
    let mut buf = Vec::new();
    write_csv(std::slice::from_ref(&row), &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert_eq!(
        lines.next(),
        Some("7,12345,rism,20,30.0,300.0,10,3600,2700,0.75,1800,0.5,12,0.5033333333333333,500,100,200,50")
    );
    assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![row]);
}
