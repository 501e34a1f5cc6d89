use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rimkit(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rimkit"))
        .args(args)
        .current_dir(cwd)
        .env_remove("RIMKIT_CONFIG")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

const SMALL: &[&str] = &["--teams", "8", "--referees", "12", "--games", "200", "--postseason-games", "30"];

fn simulate(cwd: &Path, seed: &str) {
    let mut args = vec!["simulate", "--out", "data", "--seed", seed];
    args.extend_from_slice(SMALL);
    let o = rimkit(cwd, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn simulate_then_emit_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        simulate(d, "7");
        let o = rimkit(d, &["emit-figures", "--dataset", "data", "--out", "figs", "--min-games-regular", "10", "--min-games-postseason", "3"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let ta = tree(a.path());
    assert_eq!(ta, tree(b.path()));
    assert_eq!(ta.keys().filter(|p| p.starts_with("figs") && p.extension().unwrap() == "csv").count(), 18);
    assert!(ta.contains_key(Path::new("data/ledger.json")));

    let o = rimkit(a.path(), &["validate", "--dataset", "data", "--figures", "figs"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let c = tempfile::tempdir().unwrap();
    simulate(c.path(), "8");
    assert_ne!(tree(c.path()).get(Path::new("data/manifest.json")), ta.get(Path::new("data/manifest.json")));
}

#[test]
fn missing_inputs_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = rimkit(d.path(), &["emit-figures", "--dataset", "nowhere", "--out", "figs"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("invalid input"));
    assert_eq!(code(&rimkit(d.path(), &["emit-figures", "--out", "figs"])), 2);
    assert_eq!(code(&rimkit(d.path(), &["refs", "--bogus"])), 2);
    assert_eq!(code(&rimkit(d.path(), &["--config", "missing.toml", "refs", "--dataset", "x", "--out", "y"])), 2);
    fs::write(d.path().join("bad.toml"), "min_game = 3\n").unwrap();
    assert_eq!(code(&rimkit(d.path(), &["--config", "bad.toml", "refs", "--dataset", "x", "--out", "y"])), 2);
    assert_eq!(code(&rimkit(d.path(), &["ingest", "--cache", "nowhere", "--dataset", "ds"])), 2);
    assert_eq!(code(&rimkit(d.path(), &["validate"])), 2);
}

#[test]
fn config_file_and_env_are_honored() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "3");
    fs::write(d.path().join("run.toml"), "dataset = \"data\"\nout = \"figs\"\nmin_games_regular = 10\ncorrection = \"cr0\"\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_rimkit"))
        .args(["refs"])
        .current_dir(d.path())
        .env("RIMKIT_CONFIG", "run.toml")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let run: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("figs/run.json")).unwrap()).unwrap();
    assert_eq!(run["config"]["min_games_regular"], 10);
    assert_eq!(run["config"]["correction"], "cr0");
    assert!(run["dataset"]["manifest_sha256"].as_str().unwrap().len() == 64);
}

#[test]
fn season_type_filter_skips_postseason_figures() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "4");
    let o = rimkit(d.path(), &["emit-figures", "--dataset", "data", "--out", "figs", "--season-type", "regular", "--min-games-regular", "10"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let err = stderr(&o);
    for f in ["fig6_series_summary", "fig7_postseason_distribution", "fig12_series_effects"] {
        assert!(err.contains(&format!("skipped {f}")), "{err}");
        assert!(!d.path().join(format!("figs/{f}.csv")).exists());
    }
    let run: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("figs/run.json")).unwrap()).unwrap();
    assert_eq!(run["skipped"].as_object().unwrap().len(), 3);
    let o = rimkit(d.path(), &["validate", "--figures", "figs"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn validator_rejects_a_damaged_figure() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "5");
    assert_eq!(code(&rimkit(d.path(), &["emit-figures", "--dataset", "data", "--out", "figs"])), 0);
    let p = d.path().join("figs/fig8_home_away.csv");
    let text = fs::read_to_string(&p).unwrap();
    let trimmed: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
    fs::write(&p, trimmed).unwrap();
    let o = rimkit(d.path(), &["validate", "--figures", "figs"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("fig8_home_away"));
}

#[test]
fn ingest_reports_no_changes_on_rerun() {
    let d = tempfile::tempdir().unwrap();
    let cache = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cache");
    let cache = cache.to_str().unwrap();
    let o = rimkit(d.path(), &["ingest", "--cache", cache, "--dataset", "ds"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("ingested 4 games (4 quarantine entries, 1 without crew)"), "{}", stdout(&o));
    let before = tree(&d.path().join("ds"));
    let o = rimkit(d.path(), &["ingest", "--cache", cache, "--dataset", "ds"]);
    assert_eq!(stdout(&o).trim(), "no changes");
    assert_eq!(before, tree(&d.path().join("ds")));

    let o = rimkit(d.path(), &["metrics", "--dataset", "ds", "--out", "m"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = fs::read_to_string(d.path().join("m/team_game_rows.csv")).unwrap();
    assert_eq!(rows.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 4);
}

#[test]
fn robustness_spot_value() {
    let d = tempfile::tempdir().unwrap();
    let o = rimkit(d.path(), &["robustness", "--t", "2", "--dof", "100"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "0.180998");
    assert_eq!(code(&rimkit(d.path(), &["robustness", "--t", "2", "--dof", "0"])), 2);
    assert_eq!(code(&rimkit(d.path(), &["robustness", "--t", "2"])), 2);
}

#[test]
fn analysis_subcommands_write_their_tables() {
    let d = tempfile::tempdir().unwrap();
    simulate(d.path(), "6");
    for (cmd, file) in [
        ("refs", "fig1_rim_distribution.csv"),
        ("outliers", "ref_team_cells.csv"),
        ("regress", "fig13_team_side_effects.csv"),
        ("robustness", "robustness.csv"),
        ("metrics", "game_metrics.csv"),
    ] {
        let out = format!("out_{cmd}");
        let o = rimkit(d.path(), &[cmd, "--dataset", "data", "--out", &out, "--min-games-regular", "10"]);
        assert_eq!(code(&o), 0, "{cmd}: {}", stderr(&o));
        let bytes = fs::read(d.path().join(&out).join(file)).unwrap();
        rimkit::table::parse_table(&bytes).unwrap();
    }
}
