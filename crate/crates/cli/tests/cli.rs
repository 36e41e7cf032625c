use std::path::Path;
use std::process::{Command, Output};

fn cantor(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cantor"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn build_prints_level_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantor(&["--schedule", "128", "--depth", "1", "build"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("level 1: 128 nodes"));
    assert!(dir.path().join("tree.json").exists());
    assert!(dir.path().join("tree.json.meta.json").exists());
}

#[test]
fn slow_schedule_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantor(&["--schedule", "100", "--depth", "1", "build"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("r_1 < r_0/100"));
}

#[test]
fn depth_zero_builds() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantor(&["--depth", "0", "build"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn eval_closed_form_and_on_support() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantor(&["--depth", "0", "eval", "10+0i"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("t1_exact = 0.099+0i"), "{}", stdout(&o));
    let o = cantor(&["--depth", "0", "eval", "0"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = cantor(&["--depth", "0", "eval", "nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reflectionless_experiment_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantor(&["experiment", "reflectionless"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("reflectionless.csv")).unwrap();
    assert!(csv.starts_with("experiment,level,z.re,z.im,radius,value.re,value.im,bound,pass"));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "schedule = [128, 128]\ndepth = 1\n").unwrap();
    let o = cantor(&["--config", cfg.to_str().unwrap(), "build"], dir.path());
    assert!(stdout(&o).contains("level 1: 128 nodes"));
    assert!(!stdout(&o).contains("level 2"));
    let o = cantor(&["--config", cfg.to_str().unwrap(), "--depth", "2", "--format", "csv", "build"], dir.path());
    assert!(stdout(&o).contains("level 2: 16384 nodes"));
    std::fs::write(&cfg, "shedule = [128]\n").unwrap();
    let o = cantor(&["--config", cfg.to_str().unwrap(), "build"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn render_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let o = cantor(&["--schedule", "128", "--depth", "1", "render", "--level", "1", "--index", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(dir.path().join("node_1_3.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let o = cantor(&["--schedule", "128", "--depth", "1", "render", "--level", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_check_exits_one() {
    // The counting sub-check of pv-failure does not hold at this scale.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "schedule = [128, 128]\ndepth = 2\n[experiments]\npv_trials = 5\n").unwrap();
    let o = cantor(&["--config", cfg.to_str().unwrap(), "experiment", "pv-failure"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL counting_decay"));
    assert!(stdout(&o).contains("PASS annulus_lower_bound"));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("run.toml");
    std::fs::write(
        &cfg,
        "schedule = [112, 128]\ndepth = 2\n[experiments]\nsweep_per_stratum = 10\ndensity_samples = 50\n",
    )
    .unwrap();
    for name in ["boundedness", "density"] {
        let c = cfg.to_str().unwrap();
        cantor(&["--config", c, "--threads", "1", "experiment", name], a.path());
        cantor(&["--config", c, "--threads", "4", "experiment", name], b.path());
        for ext in ["csv", "json"] {
            let f = format!("{name}.{ext}");
            let x = std::fs::read(a.path().join(&f)).unwrap();
            let y = std::fs::read(b.path().join(&f)).unwrap();
            assert!(x == y, "{f} differs between thread counts");
        }
    }
}
