use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn scanlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scanlat")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_trace_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs/a");
    let o = scanlat(&["simulate", "--preset", "camsicle72", "--frames", "10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    assert!(line.contains("mean latency") && line.contains("0 tears"), "{line}");
    for f in ["trace.csv", "latency.csv", "latency.pgm", "latency.pgm.scale.txt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("time_ns,kind,row_start,row_end,frame\n"));
    assert!(fs::read_to_string(out.join("latency.pgm")).unwrap().starts_with("P2\n346 375\n255\n"));
    // no temporaries left behind
    assert_eq!(fs::read_dir(&out).unwrap().count(), 4);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = scanlat(&[
            "simulate",
            "--preset",
            "camsicle72",
            "--set",
            "jitter.kind=uniform",
            "--set",
            "jitter.worst_case_ms=0.4",
            "--frames",
            "3",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        ["trace.csv", "latency.csv", "latency.pgm", "latency.pgm.scale.txt"]
            .map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("x"), run("y"));
}

#[test]
fn table19_prints_the_six_values() {
    let o = scanlat(&["table19", "--preset", "testbed"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "Metric                       Eye CoR   Visual axis\n\
         Head forward (0 deg)           10.47         10.79\n\
         0-ms latency                   10.79         10.78\n\
         200-ms latency                 12.53         12.49\n"
    );
}

#[test]
fn other_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();

    let o = scanlat(&["latency-field", "--preset", "camsicle72", "--out", d]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("max 0.310829 ms"), "{}", stdout(&o));
    assert!(Path::new(d).join("field.pgm.scale.txt").is_file());

    let o = scanlat(&["geometry", "--preset", "testbed", "--out", d]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("forward separation 10.4717 cm"), "{}", stdout(&o));
    let proj = fs::read_to_string(Path::new(d).join("projection.csv")).unwrap();
    assert!(proj.starts_with("yaw_deg,left_x_cm,right_x_cm,separation_cm\n"));

    let o = scanlat(&["sobol", "--count", "3", "--lo-ms", "0", "--hi-ms", "25"]);
    assert_eq!(stdout(&o), "12.5\n18.75\n6.25\n");

    let trials = Path::new(d).join("trials.csv");
    let mut text = String::from("latency_ms,correct\n");
    for (x, k) in [(1.0, 5), (4.0, 6), (8.0, 8), (12.0, 9), (20.0, 10)] {
        for i in 0..10 {
            text.push_str(&format!("{x},{}\n", u8::from(i < k)));
        }
    }
    fs::write(&trials, text).unwrap();
    let o = scanlat(&["psychofit", "--trials", trials.to_str().unwrap(), "--out", d]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("50 trials: threshold "), "{}", stdout(&o));
    assert!(Path::new(d).join("curve.csv").is_file());
}

#[test]
fn malformed_config_names_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[pipeline]\nframes = 3\nrender_lead_ms = \"soon\"\n").unwrap();
    let o = scanlat(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("bad.toml:3") && err.contains("render_lead_ms"), "{err}");

    fs::write(&cfg, "[pipeline]\nrender_lead = 0.3\n").unwrap();
    let err = stderr(&scanlat(&["simulate", "--config", cfg.to_str().unwrap()]));
    assert!(err.contains("bad.toml:2") && err.contains("render_lead"), "{err}");
}

#[test]
fn exit_codes_are_distinct() {
    let unknown = scanlat(&["simulate", "--preset", "nope"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert_eq!(stderr(&unknown).lines().count(), 1);

    let bad_set = scanlat(&["simulate", "--set", "pipeline.no_such_key=1"]);
    assert_eq!(bad_set.status.code(), Some(2));

    // validation: more jitter headroom than the frame allows
    let invalid = scanlat(&["simulate", "--set", "display.persistence_ms=20"]);
    assert_eq!(invalid.status.code(), Some(3), "{}", stderr(&invalid));

    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let unwritable = scanlat(&["sobol", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(unwritable.status.code(), Some(4));
    assert_eq!(stderr(&unwritable).lines().count(), 1);
}

#[test]
fn help_lists_every_output_file() {
    let help = stdout(&scanlat(&["simulate", "--help"]));
    for f in ["trace.csv", "latency.csv", "latency.pgm", "latency.pgm.scale.txt"] {
        assert!(help.contains(f), "{help}");
    }
    let help = stdout(&scanlat(&["latency-field", "--help"]));
    assert!(help.contains("field.pgm.scale.txt"));
}
