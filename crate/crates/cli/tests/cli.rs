use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rco_cli::{replay, sweep, sweep_csv, CliError, Overrides};
use rco_core::episode::Mode;
use rco_core::metrics::EpisodeResult;
use rco_core::simenv::InfractionKind;

fn rco(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rco"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn opts(scenarios: &[&str]) -> Overrides {
    Overrides {
        scenarios: scenarios.iter().map(Into::into).collect(),
        ..Default::default()
    }
}

#[test]
fn run_writes_results_and_repeats_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = rco(&["run", "--mode", "rco", "--backend", "scripted", "--seed", "7", "--out", "a"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = rco(&["run", "--mode", "rco", "--seed", "7", "--out", "b", "--jobs", "4"], dir.path());
    assert!(b.status.success());

    let episodes = fs::read_dir(dir.path().join("a/episodes")).unwrap().count();
    let logs = fs::read_dir(dir.path().join("a/logs")).unwrap().count();
    assert_eq!((episodes, logs), (9, 9));
    let sa = fs::read(dir.path().join("a/summary.csv")).unwrap();
    let sb = fs::read(dir.path().join("b/summary.csv")).unwrap();
    assert_eq!(sa, sb);
    // header, nine episodes, mean
    assert_eq!(String::from_utf8(sa).unwrap().lines().count(), 11);
}

#[test]
fn baseline_hits_the_masked_pedestrian() {
    let dir = tempfile::tempdir().unwrap();
    let out = rco(
        &["run", "--scenarios", "pedestrian_hazard", "--mode", "baseline", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("o/episodes/pedestrian_hazard.baseline.json")).unwrap();
    let r: EpisodeResult = serde_json::from_str(&text).unwrap();
    assert!(r.infractions.iter().any(|e| e.kind == InfractionKind::CollisionPedestrian));
}

#[test]
fn scenario_files_and_directories_load() {
    let dir = tempfile::tempdir().unwrap();
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios");
    fs::create_dir(dir.path().join("set")).unwrap();
    for name in ["stop_sign_benign.json", "pedestrian_benign.json"] {
        fs::copy(src.join(name), dir.path().join("set").join(name)).unwrap();
    }
    let out = rco(&["run", "--scenarios", "set", "--mode", "rco,baseline", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/summary.csv")).unwrap();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["pedestrian_benign", "pedestrian_benign", "stop_sign_benign", "stop_sign_benign", "mean"]);
}

#[test]
fn flags_beat_file_beat_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 3, "n_max": 8, "k": 4, "mode": ["baseline"], "delta_brake": 0.2}"#).unwrap();

    let from_file = Overrides {
        config: Some(cfg.clone()),
        ..Default::default()
    }
    .resolve()
    .unwrap();
    assert_eq!(from_file.episode.seed, Some(3));
    assert_eq!(from_file.episode.orchestrator.planner.max_steps, 8);
    assert_eq!(from_file.episode.orchestrator.planner.history_len, 4);
    assert_eq!(from_file.episode.orchestrator.verifier.history_len, 4);
    assert_eq!(from_file.episode.orchestrator.gains.delta_brake(), 0.2);
    assert_eq!(from_file.episode.orchestrator.gains.delta_throttle(), 0.1);
    assert_eq!(from_file.modes, [Mode::Baseline]);
    assert_eq!(from_file.scenarios.len(), 9);

    let flagged = Overrides {
        config: Some(cfg),
        n_max: Some(2),
        mode: vec![Mode::Rco, Mode::AlwaysStop],
        ..Default::default()
    }
    .resolve()
    .unwrap();
    assert_eq!(flagged.episode.seed, Some(3));
    assert_eq!(flagged.episode.orchestrator.planner.max_steps, 2);
    assert_eq!(flagged.modes, [Mode::Rco, Mode::AlwaysStop]);

    let defaults = Overrides::default().resolve().unwrap();
    assert_eq!(defaults.episode.orchestrator.planner.max_steps, 5);
    assert_eq!(defaults.episode.seed, None);
    assert_eq!(defaults.jobs, 1);
}

#[test]
fn bad_config_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"n_max": 5, "typo": true}"#).unwrap();
    for args in [
        &["run", "--scenarios", "no_such_scenario"][..],
        &["run", "--n-max", "0"],
        &["run", "--jobs", "0"],
        &["run", "--delta-throttle", "1.5"],
        &["run", "--config", "bad.json"],
        &["run", "--config", "missing.json"],
        &["run", "--not-a-flag"],
        &["sweep", "--limits", "0,5"],
        &["replay", "missing.jsonl"],
    ] {
        let out = rco(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unwritable_output_is_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("taken"), "a file, not a directory").unwrap();
    let out = rco(&["run", "--scenarios", "stop_sign_benign", "--out", "taken"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_has_one_row_per_limit() {
    let s = opts(&["traffic_light_benign"]).resolve().unwrap();
    let (_, rows) = sweep(&s, &[1, 3, 5, 8]).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows.iter().map(|r| r.n_max).collect::<Vec<_>>(), [1, 3, 5, 8]);
    assert_eq!(sweep_csv(&rows).unwrap().lines().count(), 5);
    // planning ahead pays off on the benign light
    assert!(rows[2].ds >= rows[0].ds, "{rows:?}");
    for r in &rows {
        assert!((r.delta_ds - (r.ds - 100.0)).abs() < 1e-9);
    }
}

#[test]
fn long_plans_go_stale() {
    let s = opts(&["stale_plan"]).resolve().unwrap();
    let (_, rows) = sweep(&s, &[5, 12]).unwrap();
    assert!(rows[1].is_score < rows[0].is_score, "{rows:?}");
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = rco(&["sweep", "--scenarios", "stop_sign_benign", "--limits", "1,5", "--out", "s"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert!(csv.starts_with("n_max,rc,is,ds,as,delta_rc,delta_is,delta_ds\n1,"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn replay_renders_each_tick() {
    let dir = tempfile::tempdir().unwrap();
    let run = rco(&["run", "--scenarios", "pedestrian_hazard", "--out", "o"], dir.path());
    assert!(run.status.success());
    let log = dir.path().join("o/logs/pedestrian_hazard.rco.jsonl");
    let records = replay::load_log(&log).unwrap();

    let out = rco(&["replay", log.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), records.len());

    let active = replay::render(&records, true);
    assert_eq!(active.lines().count(), records.iter().filter(|r| r.active).count());
    assert!(active.contains("stop/deceleration_to_zero") || active.contains("fail-safe"));
}

#[test]
fn replay_rejects_garbage() {
    let err = replay::parse_log("{\"tick\": 1}\n", "x.jsonl").unwrap_err();
    assert!(matches!(err, CliError::Config(ref m) if m.starts_with("x.jsonl:1:")), "{err}");
    assert_eq!(err.exit_code(), 2);
}
