use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_p53-hopf"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.conf");
    fs::write(&path, text).unwrap();
    path
}

fn report_value(report: &str, key: &str) -> Option<String> {
    report.lines().find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
}

#[test]
fn paper_case_writes_report_and_csvs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let status = bin().args(["analyze", "--paper-case", "n4", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report_value(&report, "run.0.params.n").as_deref(), Some("4"));
    let y10: f64 = report_value(&report, "run.0.eq.0.y10").unwrap().parse().unwrap();
    assert!((y10 - 0.82091152).abs() < 1e-8);
    let traj = fs::read_to_string(out.join("run_000_trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x1,y1,x2,y2\n"));
    assert!(!traj.contains('\r'));
    let phase = fs::read_to_string(out.join("run_000_phase.csv")).unwrap();
    assert!(phase.starts_with("y1,y2\n"));
    assert_eq!(phase.lines().count(), traj.lines().count());
    assert!(out.join("run_000_manifold_trajectory.csv").exists());
}

#[test]
fn config_applies_on_top_of_preset_and_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write_config(tmp.path(), "model.a12 = 0.03\nsim.enabled = false\noutput.dir = ignored\nrun.workers = 1\n");
    let out = tmp.path().join("out");
    let status = bin()
        .args(["analyze", "--paper-case", "n164", "--workers", "2", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report_value(&report, "run.0.params.n").as_deref(), Some("164"));
    assert_eq!(report_value(&report, "run.0.params.a12").unwrap().parse::<f64>().unwrap(), 0.03);
    assert!(!tmp.path().join("ignored").exists());
    assert!(!out.join("run_000_trajectory.csv").exists());
}

#[test]
fn sweep_produces_one_section_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write_config(tmp.path(), "sweep.param = n\nsweep.values = 2, 4, 163, 164\nsim.enabled = false\n");
    let out = tmp.path().join("out");
    let status = bin().args(["analyze", "--workers", "4", "--config"]).arg(&conf).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report_value(&report, "runs").as_deref(), Some("4"));
    for (i, n) in [2, 4, 163, 164].iter().enumerate() {
        assert_eq!(report_value(&report, &format!("run.{i}.label")), Some(format!("n={n}")));
        assert!(report_value(&report, &format!("run.{i}.eq.0.normal_form.mu2")).is_some());
    }
}

#[test]
fn uncoupled_model_has_no_candidates() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write_config(tmp.path(), "model.a12 = 0\n");
    let out = tmp.path().join("out");
    let status = bin().args(["analyze", "--config"]).arg(&conf).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report_value(&report, "run.0.eq.0.candidates").as_deref(), Some("0"));
    assert_eq!(report_value(&report, "run.0.eq.0.hopf.found").as_deref(), Some("false"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let conf = write_config(tmp.path(), "model.bogus = 1\n");
    let st = bin().args(["analyze", "--config"]).arg(&conf).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("bogus"));

    let conf = write_config(tmp.path(), "model.b1 = 0\n");
    assert_eq!(bin().args(["analyze", "--config"]).arg(&conf).arg("--out").arg(&out).status().unwrap().code(), Some(1));

    let missing = tmp.path().join("nope.conf");
    assert_eq!(bin().args(["analyze", "--config"]).arg(&missing).arg("--out").arg(&out).status().unwrap().code(), Some(3));

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let st = bin().args(["analyze", "--paper-case", "n2", "--out"]).arg(blocker.join("sub")).status().unwrap();
    assert_eq!(st.code(), Some(3));

    let conf = write_config(tmp.path(), "sim.perturbation = 1e13\n");
    let st = bin().args(["analyze", "--config"]).arg(&conf).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("run.0.error.simulation = integration diverged"));
}
