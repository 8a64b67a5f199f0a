mod common;

use std::fs;
use std::process::{Command, Output};

fn fwfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwfc"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_then_eval_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let (frames, truth) = common::small_scene(12);
    common::write_dataset(tmp.path(), &frames, &truth);
    let (input, gt) = (tmp.path().join("input"), tmp.path().join("gt"));
    let (out, report) = (tmp.path().join("out"), tmp.path().join("run.csv"));

    let run = fwfc(&["run", "--input", path(&input), "--output", path(&out), "--gt", path(&gt), "--report", path(&report)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let run_csv = fs::read_to_string(&report).unwrap();
    assert_eq!(String::from_utf8(run.stdout).unwrap(), run_csv);
    assert!(out.join("weights.txt").exists());

    let eval_report = tmp.path().join("eval.csv");
    let eval = fwfc(&["eval", "--pred", path(&out), "--gt", path(&gt), "--report", path(&eval_report)]);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    // same counts, only the video name column differs
    let strip = |s: &str| s.lines().map(|l| l.split_once(',').unwrap().1.to_string()).collect::<Vec<_>>();
    assert_eq!(strip(&run_csv), strip(&fs::read_to_string(&eval_report).unwrap()));
}

#[test]
fn config_file_and_flags_are_applied() {
    let tmp = tempfile::tempdir().unwrap();
    let (frames, truth) = common::small_scene(5);
    common::write_dataset(tmp.path(), &frames, &truth);
    let cfg = tmp.path().join("fwfc.conf");
    fs::write(&cfg, "# three levels\nlevels = 3\nalpha_corr = 0.9\n").unwrap();
    let out = tmp.path().join("out");
    let r = fwfc(&["run", "--input", path(&tmp.path().join("input")), "--output", path(&out), "--config", path(&cfg)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let weights = fs::read_to_string(out.join("weights.txt")).unwrap();
    assert!(!weights.is_empty());

    let base = tmp.path().join("base");
    let r = fwfc(&["run", "--input", path(&tmp.path().join("input")), "--output", path(&base), "--baseline"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(base.join("in000005.png").exists());
    assert!(!base.join("weights.txt").exists());
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let (frames, truth) = common::small_scene(3);
    common::write_dataset(tmp.path(), &frames, &truth);
    let input = tmp.path().join("input");
    let out = tmp.path().join("out");

    let cases: Vec<Vec<String>> = vec![
        vec!["run".into(), "--input".into(), path(&tmp.path().join("nope")).into(), "--output".into(), path(&out).into()],
        vec!["run".into(), "--input".into(), path(&input).into(), "--output".into(), path(&out).into(), "--levels".into(), "0".into()],
        vec!["run".into(), "--input".into(), path(&input).into(), "--output".into(), path(&out).into(), "--config".into(), path(&tmp.path().join("missing.conf")).into()],
        vec!["run".into(), "--input".into(), path(&input).into(), "--output".into(), path(&out).into(), "--report".into(), "r.csv".into()],
        vec!["eval".into(), "--pred".into(), path(&tmp.path().join("nope")).into(), "--gt".into(), path(&input).into(), "--report".into(), "r.csv".into()],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let r = fwfc(&refs);
        assert!(!r.status.success(), "{args:?} should fail");
        assert!(!r.stderr.is_empty(), "{args:?} printed nothing");
    }

    let bad = tmp.path().join("bad.conf");
    fs::write(&bad, "levels = 3\nno_such_key = 1\n").unwrap();
    let r = fwfc(&["run", "--input", path(&input), "--output", path(&out), "--config", path(&bad)]);
    assert!(!r.status.success());
    assert!(String::from_utf8_lossy(&r.stderr).contains("no_such_key"));
}
