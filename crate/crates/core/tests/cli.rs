use std::fs;
use std::path::Path;
use std::process::Command;

fn trmode(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_trmode"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn quick() -> Vec<&'static str> {
    vec!["--set", "iterations=3", "--set", "bioheat.solver.total_time=0.5"]
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--strict"];
    args.extend(quick());
    let out = trmode(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in trmode::scenario::OUTPUT_FILES {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let manifest = fs::read_to_string(dir.path().join("run_manifest.txt")).unwrap();
    assert!(manifest.contains("iterations = 3"));
    assert!(manifest.contains("constraint_violations = 0"));
}

#[test]
fn csv_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run"];
    args.extend(quick());
    assert!(trmode(&args, dir.path()).status.success());
    for f in trmode::scenario::OUTPUT_FILES.iter().filter(|f| f.ends_with(".csv")) {
        let text = fs::read(dir.path().join(f)).unwrap();
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(&text[..]);
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut width = None;
        for rec in rdr.records() {
            let rec = rec.unwrap();
            assert_eq!(*width.get_or_insert(rec.len()), rec.len(), "{f}");
            wtr.write_record(&rec).unwrap();
        }
        assert_eq!(wtr.into_inner().unwrap(), text, "{f}");
    }
}

#[test]
fn seed_override_changes_draws() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = vec!["run"];
    args.extend(quick());
    assert!(trmode(&args, a.path()).status.success());
    args.extend(["--seed", "43"]);
    assert!(trmode(&args, b.path()).status.success());
    let read = |d: &Path| fs::read(d.join("cell_metrics.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = trmode(&["run", "--set", "tr_users=99"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tr_users"));

    let out = trmode(&["run", "--set", "no_such_key=1"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = \"x\"\n").unwrap();
    let out = trmode(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn strict_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--strict", "--set", "tr_users=0"];
    args.extend(quick());
    assert_eq!(trmode(&args, dir.path()).status.code(), Some(2));
}

#[test]
fn unstable_step_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = trmode(&["bioheat", "--dt", "0.02", "--set", "bioheat.solver.total_time=0.2"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stab"));
}

#[test]
fn config_file_matches_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "iterations = 3\n[bioheat.solver]\ntotal_time = 0.5\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(trmode(&["run", "--config", cfg.to_str().unwrap()], &a).status.success());
    let mut args = vec!["run"];
    args.extend(quick());
    assert!(trmode(&args, &b).status.success());
    for f in trmode::scenario::OUTPUT_FILES {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn other_subcommands_succeed() {
    let dir = tempfile::tempdir().unwrap();
    for (args, file) in [
        (&["exposure"][..], "pd_profile.csv"),
        (&["compare"][..], "table4_report.csv"),
        (&["channel", "--samples", "20000"][..], "power_delay_profile.csv"),
        (&["bioheat", "--set", "bioheat.solver.total_time=0.5"][..], "temperature_slice_tr.csv"),
    ] {
        let out = trmode(args, dir.path());
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join(file).is_file(), "{file}");
    }
    let out = trmode(&["validate"], dir.path());
    assert!(out.status.success());
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}
