//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any fail.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rimkit::cli::{ingest_ids, scan_cache, validate_figures};
use rimkit::fetch::{Fetcher, RateLimiter, UreqTransport};
use rimkit::figures::{build_named, FIGURES};
use rimkit::ingest::{ingest_game, QuarantineReason};
use rimkit_core::inference::{
    cluster_covariance, cr1_factor, fit_ols, robustness_rho, team_side_effects, Correction, FitOptions, Matrix,
    Outcome, TargetForm,
};
use rimkit_core::metrics::{compute_game_metrics, team_game_rows, FoulFilter};
use rimkit_core::model::AliasTable;
use rimkit_core::outliers::{build_cells, build_ref_team_panel, outlier_tables, PanelRow, RefTeamPanel};
use rimkit_core::synth::{generate, oracle_recompute, PairShift, SimConfig, TeamHomeShift};
use rimkit_core::{GameRecord, RefereeName, SeasonType, Side, TeamId};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn metric_kernel() -> Verdict {
    let cfg = SimConfig { games_per_season: 1000, ..SimConfig::default() };
    let corpus = generate(&cfg).expect("simulate");
    let start = Instant::now();
    let oracle = oracle_recompute(&corpus.games);
    let filter = FoulFilter::default();
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for (g, o) in corpus.games.iter().zip(&oracle) {
        let m = compute_game_metrics(g, &filter);
        worst = worst.max((m.rim - o.rim).abs());
        worst = worst.max((m.home.signed_team_rim - o.home_signed_rim).abs());
        worst = worst.max((m.away.signed_team_rim - o.away_signed_rim).abs());
        match (m.swing_per_call.value(), o.swing_per_call) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            _ => mismatches += 1,
        }
        if m.calls != o.calls
            || i64::from(m.home.signed_disparity) != o.home_disparity
            || i64::from(m.away.signed_disparity) != o.away_disparity
        {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        corpus.games.len() == 1000 && worst <= 1e-12 && mismatches == 0 && secs < 10.0,
        format!("{} games, max |diff| {worst:.3e}, integer mismatches {mismatches}, {secs:.2} s", corpus.games.len()),
    )
}

fn flipped(g: &GameRecord) -> GameRecord {
    let mut f = g.clone();
    std::mem::swap(&mut f.home_team, &mut f.away_team);
    for e in &mut f.events {
        e.pre_wp = e.pre_wp.complement();
        e.post_wp = e.post_wp.complement();
    }
    f.series_state = g.series_state.map(|s| rimkit_core::SeriesState { home_wins: s.away_wins, away_wins: s.home_wins });
    f
}

fn identities() -> Verdict {
    let cfg = SimConfig {
        seed: 77,
        n_teams: 10,
        n_referees: 20,
        games_per_season: 10_000,
        wp_drift_sd: 0.08,
        ..SimConfig::default()
    };
    let corpus = generate(&cfg).expect("simulate");
    let filter = FoulFilter::default();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut fails = [0usize; 4];
    let mut worst: f64 = 0.0;
    for g in &corpus.games {
        let m = compute_game_metrics(g, &filter);
        let q_sum = m.home.signed_team_rim + m.away.signed_team_rim;
        worst = worst.max(q_sum.abs());
        if q_sum.abs() > 1e-12 {
            fails[0] += 1;
        }
        if m.home.signed_team_rim.abs() > m.rim + 1e-12 || m.away.signed_team_rim.abs() > m.rim + 1e-12 {
            fails[1] += 1;
        }
        let f = compute_game_metrics(&flipped(g), &filter);
        if (f.rim - m.rim).abs() > 1e-12
            || (f.home.signed_team_rim - m.away.signed_team_rim).abs() > 1e-12
            || f.home.signed_disparity != m.away.signed_disparity
        {
            fails[2] += 1;
        }
        let mut p = g.clone();
        p.events.shuffle(&mut rng);
        let pm = compute_game_metrics(&p, &filter);
        let d = (pm.rim - m.rim)
            .abs()
            .max((pm.home.signed_team_rim - m.home.signed_team_rim).abs())
            .max((pm.away.signed_team_rim - m.away.signed_team_rim).abs());
        worst = worst.max(d);
        if d > 1e-12 || pm.calls != m.calls || pm.home.signed_disparity != m.home.signed_disparity {
            fails[3] += 1;
        }
    }
    verdict(
        corpus.games.len() >= 10_000 && fails.iter().all(|&f| f == 0),
        format!(
            "{} games; failures: q sum {}, |q|<=r {}, flip {}, permutation {}; max deviation {worst:.3e}",
            corpus.games.len(),
            fails[0],
            fails[1],
            fails[2],
            fails[3]
        ),
    )
}

fn panel_arithmetic() -> Verdict {
    // Published corpus sizes.
    const GAMES: usize = 4_876;
    const TEAM_ROWS: usize = 9_752;
    const REF_TEAM_ROWS: usize = 29_256;
    let cfg = SimConfig { seasons: 4, games_per_season: GAMES / 4, ..SimConfig::default() };
    let corpus = generate(&cfg).expect("simulate");
    let filter = FoulFilter::default();
    let metrics: Vec<_> = corpus.games.iter().map(|g| compute_game_metrics(g, &filter)).collect();
    let n = metrics.len();
    let team_rows = team_game_rows(&metrics).len();
    let panel = build_ref_team_panel(&metrics, None);
    let crews_ok = corpus.games.iter().all(|g| g.crew.len() == 3);
    let figs = build_named(&metrics, &rimkit::config::RunConfig::default(), &["fig8_home_away"]);
    let fig8 = figs.tables.first().map(|t| t.rows.len()).unwrap_or(0);
    verdict(
        crews_ok
            && n == GAMES
            && team_rows == TEAM_ROWS
            && team_rows == 2 * n
            && panel.rows.len() == REF_TEAM_ROWS
            && panel.rows.len() == 6 * n
            && fig8 == 2 * n,
        format!("{n} games: team rows {team_rows}, fig8 rows {fig8}, referee-team rows {}", panel.rows.len()),
    )
}

fn additive_null() -> Verdict {
    // Exactly additive, balanced panel.
    let refs: Vec<String> = (0..12).map(|i| format!("R{i:02}")).collect();
    let teams: Vec<String> = (0..8).map(|i| format!("T{i}")).collect();
    let mut rows = Vec::new();
    let mut k = 0;
    for (ri, r) in refs.iter().enumerate() {
        for (ti, t) in teams.iter().enumerate() {
            for rep in 0..6 {
                k += 1;
                let alpha = 0.013 * ri as f64 - 0.05;
                let beta = -0.021 * ti as f64 + 0.07;
                rows.push(PanelRow {
                    game_id: format!("g{k}"),
                    referee: RefereeName::new(r.clone()),
                    team: TeamId::new(t.clone()),
                    opponent: TeamId::new(teams[(ti + 1 + rep) % teams.len()].clone()),
                    season: "2023-24".into(),
                    is_home: rep % 2 == 0,
                    signed_team_rim: alpha + beta,
                    signed_disparity: 3.0 * alpha - 2.0 * beta,
                });
            }
        }
    }
    let panel = RefTeamPanel { rows, games_used: k, games_without_crew: 0 };
    let cells = build_cells(&panel);
    let max_x = cells.iter().map(|c| c.rim.x.abs().max(c.disparity.x.abs())).fold(0.0_f64, f64::max);

    let reps = 200u64;
    let results: Vec<(bool, u32)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let cfg = SimConfig {
                seed: 2024 + rep,
                n_teams: 8,
                n_referees: 12,
                games_per_season: 640,
                leverage_mean: 0.004,
                pair_shifts: vec![PairShift { referee: "Referee 01".into(), team: "T01".into(), shift: 0.05 }],
                ..SimConfig::default()
            };
            let corpus = generate(&cfg).expect("simulate");
            let filter = FoulFilter::default();
            let metrics: Vec<_> = corpus.games.iter().map(|g| compute_game_metrics(g, &filter)).collect();
            let panel = build_ref_team_panel(&metrics, Some(SeasonType::Regular));
            let cells = build_cells(&panel);
            let shared = cells
                .iter()
                .find(|c| c.referee.as_str() == "Referee 01" && c.team.as_str() == "T01")
                .map(|c| c.games)
                .unwrap_or(0);
            let report = outlier_tables(&cells, 5, 1);
            let top = report
                .rim
                .rows
                .first()
                .is_some_and(|r| r.referee.as_str() == "Referee 01" && r.team.as_str() == "T01");
            (top, shared)
        })
        .collect();
    let hits = results.iter().filter(|r| r.0).count();
    let mean_shared = results.iter().map(|r| f64::from(r.1)).sum::<f64>() / reps as f64;
    let rate = hits as f64 / reps as f64;
    verdict(
        max_x < 1e-10 && rate >= 0.95,
        format!(
            "additive panel max |x| {max_x:.3e}; injected pair ranked first in {hits}/{reps} ({:.1}%), mean shared games {mean_shared:.1}",
            100.0 * rate
        ),
    )
}

fn as_matrix(x: &[Vec<f64>]) -> Matrix {
    let rows: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
    Matrix::from_rows(&rows)
}

fn max_diff(v: &Matrix, o: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, row) in o.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            d = d.max((v.get(i, j) - x).abs());
        }
    }
    d
}

fn ols_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_beta: f64 = 0.0;
    let mut systems = 0;
    let mut attempts = 0;
    while systems < 100 {
        attempts += 1;
        let k = rng.random_range(1..=40);
        let n = rng.random_range(k + 5..=500);
        let beta: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
            row[0] = 1.0;
            for v in row.iter_mut().skip(1).step_by(4) {
                *v = if *v > 0.5 { 1.0 } else { 0.0 };
            }
            y.push(row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-1.0..1.0));
            x.push(row);
        }
        let fit = fit_ols(&as_matrix(&x), &y).expect("fit");
        if !fit.dropped().is_empty() {
            continue;
        }
        systems += 1;
        let o = oracle::ols_normal_equations(&x, &y);
        for (a, b) in fit.kept_coefficients().iter().zip(&o) {
            worst_beta = worst_beta.max((a - b).abs());
        }
    }

    // Hand-sized fixtures against a brute-force sandwich.
    let mut worst_v: f64 = 0.0;
    let x = vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]];
    let fit = fit_ols(&as_matrix(&x), &[1.0, 3.0, 2.0, 5.0]).unwrap();
    let ids = ["a", "a", "b", "b"];
    let v0 = cluster_covariance(&as_matrix(&x), &fit.residuals, &ids, Correction::Cr0).unwrap();
    worst_v = worst_v.max(max_diff(&v0, &[vec![0.125, -0.025], vec![-0.025, 0.005]]));
    for _ in 0..25 {
        let n = rng.random_range(6..16);
        let k = rng.random_range(1..4);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
                r[0] = 1.0;
                r
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let names = ["g1", "g2", "g3", "g4"];
        let ids: Vec<&str> = (0..n).map(|i| names[i % names.len()]).collect();
        let fit = fit_ols(&as_matrix(&x), &y).unwrap();
        for (corr, cr1) in [(Correction::Cr0, false), (Correction::Cr1, true)] {
            let v = cluster_covariance(&as_matrix(&x), &fit.residuals, &ids, corr).unwrap();
            worst_v = worst_v.max(max_diff(&v, &oracle::brute_sandwich(&x, &fit.residuals, &ids, cr1)));
        }
    }

    // Singleton clusters: CR1 is HC0 times the CR1 factor.
    let n = 40;
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![1.0, rng.random_range(0.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let fit = fit_ols(&as_matrix(&x), &y).unwrap();
    let ids: Vec<String> = (0..n).map(|i| format!("g{i}")).collect();
    let hc0 = cluster_covariance(&as_matrix(&x), &fit.residuals, &ids, Correction::Cr0).unwrap();
    let v1 = cluster_covariance(&as_matrix(&x), &fit.residuals, &ids, Correction::Cr1).unwrap();
    let f = cr1_factor(n, n, 3);
    let hc0_oracle = max_diff(&hc0, &oracle::hc0(&x, &fit.residuals));
    let mut exact = (f - 40.0 / 37.0).abs() <= f64::EPSILON;
    for i in 0..3 {
        for j in 0..3 {
            exact &= v1.get(i, j) == hc0.get(i, j) * f;
        }
    }
    verdict(
        worst_beta < 1e-8 && worst_v <= 1e-12 && hc0_oracle <= 1e-12 && exact,
        format!(
            "{systems} systems ({attempts} drawn) max |Δβ| {worst_beta:.3e}; sandwich max |ΔV| {worst_v:.3e}; singleton HC0 vs oracle {hc0_oracle:.3e}, CR1 = HC0 x {f:.6} exactly: {exact}"
        ),
    )
}

fn robustness_value() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut range_ok = true;
    for i in 0..=80 {
        let t = -20.0 + 0.5 * i as f64;
        for nu in [1.0, 2.0, 5.0, 10.0, 30.0, 100.0, 1_000.0, 10_000.0, 100_000.0] {
            let r = robustness_rho(t, nu).expect("rho");
            worst = worst.max((nu * r * r + t * t * r - t * t).abs());
            range_ok &= (0.0..1.0).contains(&r);
        }
    }
    let zero = [1.0, 10.0, 1e6].iter().all(|&nu| robustness_rho(0.0, nu).unwrap() == 0.0);
    let spot = robustness_rho(2.0, 100.0).unwrap();
    let dd = oracle::rho_dd(2.0, 100.0);
    verdict(
        worst <= 1e-12 && range_ok && zero && (spot - dd).abs() <= 1e-10,
        format!("max quadratic residual {worst:.3e}; rho(0, nu) = 0: {zero}; rho(2, 100) = {spot:.12} vs {dd:.12}"),
    )
}

fn estimator_recovery() -> Verdict {
    let start = Instant::now();
    let delta = 1.5;
    let reps = 500u64;
    let opts = FitOptions::default();
    let fits: Vec<Option<(f64, f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let cfg = SimConfig {
                seed: 2024 + rep,
                team_home_shifts: vec![TeamHomeShift { team: "T01".into(), shift: delta }],
                ..SimConfig::default()
            };
            let corpus = generate(&cfg).ok()?;
            let filter = FoulFilter::default();
            let metrics: Vec<_> = corpus.games.iter().map(|g| compute_game_metrics(g, &filter)).collect();
            let rows = team_game_rows(&metrics);
            let fit = team_side_effects(
                &rows,
                &[(TeamId::new("T01"), Side::Home)],
                TargetForm::Paired,
                Outcome::SignedDisparity,
                &opts,
            )
            .ok()?;
            let c = fit.targets().next()?;
            Some((c.estimate, c.ci_low, c.ci_high))
        })
        .collect();
    let ok: Vec<(f64, f64, f64)> = fits.iter().flatten().copied().collect();
    let covered = ok.iter().filter(|(_, lo, hi)| *lo <= delta && delta <= *hi).count();
    let coverage = covered as f64 / ok.len().max(1) as f64;
    let mean = ok.iter().map(|f| f.0).sum::<f64>() / ok.len().max(1) as f64;
    let sd = (ok.iter().map(|f| (f.0 - mean).powi(2)).sum::<f64>() / (ok.len().max(2) - 1) as f64).sqrt();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        ok.len() == reps as usize && (0.90..=0.98).contains(&coverage) && (mean - delta).abs() <= 0.1 && secs < 600.0,
        format!(
            "{} fits of 1230 games: coverage {:.1}%, mean estimate {mean:.4} (sd {sd:.3}, MC se {:.4}), {secs:.1} s",
            ok.len(),
            100.0 * coverage,
            sd / (ok.len() as f64).sqrt()
        ),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rimkit")
}

fn run_in(dir: &Path, args: &[&str]) -> bool {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("RIMKIT_CONFIG")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut ran = true;
    for d in &dirs {
        ran &= run_in(d.path(), &["simulate", "--out", "data", "--seed", "2024", "--seasons", "4", "--postseason-games", "85"]);
        ran &= run_in(d.path(), &["emit-figures", "--dataset", "data", "--out", "figs"]);
    }
    let a = tree(dirs[0].path());
    let b = tree(dirs[1].path());
    let identical = ran && a == b;
    let figure_files = FIGURES
        .iter()
        .filter(|f| a.contains_key(&Path::new("figs").join(format!("{f}.csv"))))
        .count();
    let problems = validate_figures(&dirs[0].path().join("figs")).unwrap_or_else(|_| vec!["validator error".into()]);
    let empty: Vec<&str> = FIGURES
        .iter()
        .copied()
        .filter(|f| {
            a.get(&Path::new("figs").join(format!("{f}.csv")))
                .and_then(|b| rimkit::table::parse_table(b).ok())
                .is_none_or(|t| t.rows.is_empty())
        })
        .collect();
    verdict(
        identical && figure_files == 18 && problems.is_empty() && empty.is_empty(),
        format!(
            "{} files compared, identical: {identical}; {figure_files}/18 figure files; validator problems: {}; files without rows: {}",
            a.len(),
            problems.len(),
            if empty.is_empty() { "none".to_string() } else { empty.join(" ") }
        ),
    )
}

fn ingest_robustness() -> Verdict {
    let cache = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cache");
    let fetcher = Fetcher {
        cache: cache.clone(),
        network: false,
        summary_template: None,
        wp_template: None,
        limiter: RateLimiter::per_minute(0),
        transport: UreqTransport::default(),
    };
    let ids = scan_cache(&cache, &[]).expect("scan");
    let out = ingest_ids(&fetcher, &ids, &AliasTable::new(), 0.5).expect("ingest");
    let mut q = out.quarantine.clone();
    q.sort();
    let got: Vec<(String, Option<String>, QuarantineReason)> =
        q.into_iter().map(|e| (e.game_id, e.play_id, e.reason)).collect();
    let expected = vec![
        ("401000003".to_string(), Some("401000003002".to_string()), QuarantineReason::WpOutOfRange),
        ("401000003".to_string(), Some("401000003004".to_string()), QuarantineReason::NoPostSample),
        ("401000005".to_string(), None, QuarantineReason::ParseError),
        ("401000006".to_string(), None, QuarantineReason::MissingWpFeed),
    ];
    let ledger_ok = got == expected && out.games.len() == 4 && out.flags.get("no-crew") == Some(&1);

    // Every truncation point and a batch of byte corruptions of every fixture.
    let mut docs = Vec::new();
    for season in std::fs::read_dir(&cache).unwrap() {
        for f in std::fs::read_dir(season.unwrap().path()).unwrap() {
            docs.push(std::fs::read(f.unwrap().path()).unwrap());
        }
    }
    let prev = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut panics = 0;
    let mut trials = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for doc in &docs {
        let mut variants: Vec<Vec<u8>> = (0..=doc.len()).map(|cut| doc[..cut].to_vec()).collect();
        for _ in 0..500 {
            let mut d = doc.clone();
            let i = rng.random_range(0..d.len());
            d[i] = rng.random();
            variants.push(d);
        }
        for v in &variants {
            trials += 1;
            let r = std::panic::catch_unwind(|| {
                ingest_game("fuzz", v, None, &AliasTable::new(), 0.5);
                ingest_game("fuzz", &docs[0], Some(v), &AliasTable::new(), 0.5);
            });
            if r.is_err() {
                panics += 1;
            }
        }
    }
    std::panic::set_hook(prev);
    verdict(
        ledger_ok && panics == 0,
        format!("ledger {} entries, expected ledger: {ledger_ok}; {panics} panics over {trials} damaged documents", got.len()),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        ("metric kernel oracle equivalence", metric_kernel),
        ("metric identities", identities),
        ("panel arithmetic", panel_arithmetic),
        ("additive null and pair recovery", additive_null),
        ("OLS and clustered covariance correctness", ols_correctness),
        ("robustness value", robustness_value),
        ("estimator recovery", estimator_recovery),
        ("end-to-end determinism", determinism),
        ("ingest robustness", ingest_robustness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        if !v.pass {
            failed += 1;
        }
        println!("{} [{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
