//! The `rimkit` command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rimkit_core::inference::{robustness_rho, Correction, DofMode, TargetForm};
use rimkit_core::model::AliasTable;
use rimkit_core::outliers::{build_cells, build_ref_team_panel};
use rimkit_core::synth::{generate, SimConfig};
use rimkit_core::{GameMetrics, GameRecord, PeriodBucket, SeasonType};
use serde::Serialize;

use crate::analysis::{compute_metrics, select_games};
use crate::config::{RunConfig, CONFIG_ENV};
use crate::dataset::{read_dataset, read_manifest, render_dataset, sha256_hex, write_dataset, MANIFEST_FILE};
use crate::fetch::{cache_path, Fetcher, RateLimiter, RawKind, UreqTransport};
use crate::figures::{build_named, FigureSet, FIGURES};
use crate::ingest::{ingest_game, QuarantineEntry, QuarantineReason};
use crate::table::{f6, int, opt6, parse_table, Table};

pub const RUN_RECORD: &str = "run.json";
pub const LEDGER_FILE: &str = "ledger.json";

/// Exit 2: missing or invalid input. Exit 1: anything else.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

trait InputContext<T> {
    fn input(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> InputContext<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
}

fn bad_input(msg: impl Into<String>) -> Failure {
    Failure::Input(anyhow!(msg.into()))
}

#[derive(Debug, Parser)]
#[command(name = "rimkit", version, about = "Leverage-weighted officiating impact metrics (RIM) and figure data")]
pub struct Cli {
    /// Flat TOML run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize cached raw feeds into a dataset with a quarantine ledger.
    Ingest(IngestArgs),
    /// Check a dataset and/or a directory of figure files.
    Validate(ValidateArgs),
    /// Per-game and team-game metric tables.
    Metrics(AnalysisArgs),
    /// Referee distributions, rankings and component checks.
    Refs(AnalysisArgs),
    /// Referee-team excess tables.
    Outliers(AnalysisArgs),
    /// Clustered fixed-effects regressions.
    Regress(AnalysisArgs),
    /// Robustness values for a t statistic, or for every fitted target.
    Robustness(RobustnessArgs),
    /// Write a synthetic dataset with a ground-truth ledger.
    Simulate(SimulateArgs),
    /// Write every figure-data file.
    EmitFigures(AnalysisArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Selection {
    /// Dataset root.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Restrict to a season label such as 2023-24 (repeatable).
    #[arg(long = "season")]
    pub seasons: Vec<String>,
    #[arg(long, value_parser = parse_season_type)]
    pub season_type: Option<SeasonType>,
    #[arg(long)]
    pub min_games_regular: Option<u32>,
    #[arg(long)]
    pub min_games_postseason: Option<u32>,
    #[arg(long)]
    pub min_pair_games: Option<u32>,
    #[arg(long, value_parser = parse_correction)]
    pub correction: Option<Correction>,
    #[arg(long, value_parser = parse_dof_mode)]
    pub dof_mode: Option<DofMode>,
    /// Confidence level for intervals.
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long, value_parser = parse_target_form)]
    pub target_form: Option<TargetForm>,
    /// Keep only fouls whose description contains this text (repeatable).
    #[arg(long)]
    pub foul_include: Vec<String>,
    /// Drop fouls whose description contains this text (repeatable).
    #[arg(long)]
    pub foul_exclude: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub select: Selection,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    /// Raw cache root: <cache>/<season>/<game_id>.summary.json and .wp.json.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long = "season")]
    pub seasons: Vec<String>,
    /// CSV of season,game_id to ingest instead of scanning the cache.
    #[arg(long)]
    pub ids: Option<PathBuf>,
    /// Allow fetching documents missing from the cache.
    #[arg(long)]
    pub network: bool,
    /// CSV of variant,canonical referee names.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Directory written by emit-figures.
    #[arg(long)]
    pub figures: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RobustnessArgs {
    /// t statistic.
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Residual degrees of freedom.
    #[arg(long)]
    pub dof: Option<f64>,
    #[command(flatten)]
    pub select: Selection,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Dataset root to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file of simulation parameters.
    #[arg(long)]
    pub sim_config: Option<PathBuf>,
    #[arg(long)]
    pub teams: Option<usize>,
    #[arg(long)]
    pub referees: Option<usize>,
    /// Regular-season games per season.
    #[arg(long)]
    pub games: Option<usize>,
    #[arg(long)]
    pub postseason_games: Option<usize>,
    #[arg(long = "seasons")]
    pub season_count: Option<usize>,
}

fn parse_season_type(s: &str) -> Result<SeasonType, String> {
    match s {
        "regular" => Ok(SeasonType::Regular),
        "postseason" => Ok(SeasonType::Postseason),
        _ => Err(format!("expected regular or postseason, got `{s}`")),
    }
}

fn parse_correction(s: &str) -> Result<Correction, String> {
    match s {
        "cr0" => Ok(Correction::Cr0),
        "cr1" => Ok(Correction::Cr1),
        _ => Err(format!("expected cr0 or cr1, got `{s}`")),
    }
}

fn parse_dof_mode(s: &str) -> Result<DofMode, String> {
    match s {
        "residual" => Ok(DofMode::Residual),
        "clusters" => Ok(DofMode::Clusters),
        _ => Err(format!("expected residual or clusters, got `{s}`")),
    }
}

fn parse_target_form(s: &str) -> Result<TargetForm, String> {
    match s {
        "paired" => Ok(TargetForm::Paired),
        "indicator" => Ok(TargetForm::Indicator),
        _ => Err(format!("expected paired or indicator, got `{s}`")),
    }
}

impl Selection {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.dataset.is_some() {
            cfg.dataset.clone_from(&self.dataset);
        }
        if !self.seasons.is_empty() {
            cfg.seasons.clone_from(&self.seasons);
        }
        if self.season_type.is_some() {
            cfg.season_type = self.season_type;
        }
        if let Some(v) = self.min_games_regular {
            cfg.min_games_regular = v;
        }
        if let Some(v) = self.min_games_postseason {
            cfg.min_games_postseason = v;
        }
        if let Some(v) = self.min_pair_games {
            cfg.min_pair_games = v;
        }
        if let Some(v) = self.correction {
            cfg.correction = v;
        }
        if let Some(v) = self.dof_mode {
            cfg.dof_mode = v;
        }
        if let Some(v) = self.level {
            cfg.level = v;
        }
        if let Some(v) = self.target_form {
            cfg.target_form = v;
        }
        if !self.foul_include.is_empty() {
            cfg.foul_include.clone_from(&self.foul_include);
        }
        if !self.foul_exclude.is_empty() {
            cfg.foul_exclude.clone_from(&self.foul_exclude);
        }
    }
}

/// Parses arguments, runs, and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, e) = match &f {
                Failure::Input(e) => ("invalid input", e),
                Failure::Internal(e) => ("internal error", e),
            };
            eprintln!("rimkit: {kind}: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref()).input()?;
    match cli.command {
        Command::Ingest(a) => {
            if a.cache.is_some() {
                cfg.cache = a.cache.clone();
            }
            if a.dataset.is_some() {
                cfg.dataset = a.dataset.clone();
            }
            if !a.seasons.is_empty() {
                cfg.seasons = a.seasons.clone();
            }
            if a.network {
                cfg.network = true;
            }
            if a.aliases.is_some() {
                cfg.aliases = a.aliases.clone();
            }
            cfg.validate().input()?;
            cmd_ingest(&cfg, a.ids.as_deref())
        }
        Command::Validate(a) => cmd_validate(a.dataset.as_deref().or(cfg.dataset.as_deref()), a.figures.as_deref()),
        Command::Metrics(a) => analysis(cfg, a, "metrics", cmd_metrics),
        Command::Refs(a) => analysis(cfg, a, "refs", |m, c| {
            Ok(build_named(m, c, &[
                "fig1_rim_distribution",
                "fig7_postseason_distribution",
                "fig2_component_calls_swing",
                "figA1_component_no_minimum",
                "fig3_top_bottom",
                "fig4_volume_swing",
                "fig5_quarter_rim",
                "figA2_quarter_disparity",
            ]))
        }),
        Command::Outliers(a) => analysis(cfg, a, "outliers", |m, c| {
            let mut set = build_named(m, c, &[
                "fig10_ref_team_rim_outliers",
                "fig11_ref_team_disp_outliers",
                "figA3_ref_team_z_map",
                "figA4_excess_scatter",
            ]);
            set.tables.push(cells_table(m, c));
            Ok(set)
        }),
        Command::Regress(a) => analysis(cfg, a, "regress", |m, c| {
            Ok(build_named(m, c, &["fig12_series_effects", "fig13_team_side_effects", "fig14_ref_team_effects"]))
        }),
        Command::Robustness(a) => cmd_robustness(cfg, a),
        Command::Simulate(a) => cmd_simulate(&cfg, a),
        Command::EmitFigures(a) => analysis(cfg, a, "emit-figures", |m, c| Ok(build_named(m, c, &FIGURES))),
    }
}

struct Loaded {
    root: PathBuf,
    games: Vec<GameRecord>,
    manifest_sha256: String,
    hashes: BTreeMap<String, String>,
}

fn load_dataset(cfg: &RunConfig) -> Result<Loaded, Failure> {
    let root = cfg.dataset.clone().ok_or_else(|| bad_input("no dataset given (--dataset or config `dataset`)"))?;
    let ds = read_dataset(&root).input()?;
    let manifest_bytes = fs::read(root.join(MANIFEST_FILE)).input()?;
    Ok(Loaded {
        hashes: ds.manifest.hashes(),
        manifest_sha256: sha256_hex(&manifest_bytes),
        root,
        games: ds.games,
    })
}

#[derive(Debug, Serialize)]
struct DatasetRef {
    path: String,
    manifest_sha256: String,
    files: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    dataset: Option<DatasetRef>,
    games_selected: usize,
    outputs: BTreeMap<String, String>,
    skipped: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    extra: BTreeMap<String, serde_json::Value>,
}

fn write_outputs(
    out: &Path,
    command: &str,
    cfg: &RunConfig,
    loaded: Option<&Loaded>,
    games_selected: usize,
    set: &FigureSet,
    extra: BTreeMap<String, serde_json::Value>,
) -> Result<(), Failure> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut outputs = BTreeMap::new();
    for t in &set.tables {
        let bytes = t.render();
        let path = out.join(t.file_name());
        fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.insert(t.file_name(), sha256_hex(&bytes));
    }
    let record = RunRecord {
        tool: "rimkit",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        dataset: loaded.map(|l| DatasetRef {
            path: l.root.display().to_string(),
            manifest_sha256: l.manifest_sha256.clone(),
            files: l.hashes.clone(),
        }),
        games_selected,
        outputs,
        skipped: set.skipped.iter().cloned().collect(),
        extra,
    };
    let mut bytes = serde_json::to_vec_pretty(&record).context("serializing run record")?;
    bytes.push(b'\n');
    fs::write(out.join(RUN_RECORD), bytes).context("writing run record")?;
    Ok(())
}

fn analysis(
    mut cfg: RunConfig,
    a: AnalysisArgs,
    command: &str,
    build: impl FnOnce(&[GameMetrics], &RunConfig) -> Result<FigureSet, Failure>,
) -> Result<(), Failure> {
    a.select.apply(&mut cfg);
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    cfg.validate().input()?;
    let out = cfg.out.clone().ok_or_else(|| bad_input("no output directory given (--out or config `out`)"))?;
    let loaded = load_dataset(&cfg)?;
    let games = select_games(loaded.games.clone(), &cfg);
    if games.is_empty() {
        warn!("no games match the selection");
    }
    let metrics = compute_metrics(&games, &cfg);
    let set = build(&metrics, &cfg)?;
    for (name, why) in &set.skipped {
        eprintln!("skipped {name}: {why}");
    }
    write_outputs(&out, command, &cfg, Some(&loaded), games.len(), &set, BTreeMap::new())?;
    println!("{command}: {} games, {} files written to {}", games.len(), set.tables.len(), out.display());
    Ok(())
}

fn cmd_metrics(metrics: &[GameMetrics], _cfg: &RunConfig) -> Result<FigureSet, Failure> {
    let mut g = Table::new(
        "game_metrics",
        "per-game foul leverage metrics",
        &[
            ("game_id", "game id"),
            ("season", "season"),
            ("season_type", "regular or postseason"),
            ("home", "home team"),
            ("away", "away team"),
            ("crew", "crew, `;`-separated"),
            ("series_state", "normalized pregame series score; empty outside the postseason"),
            ("calls", "foul calls"),
            ("rim", "game RIM: summed absolute win-probability movement over fouls"),
            ("swing_per_call", "rim / calls; empty without calls"),
            ("home_disparity", "away fouls minus home fouls"),
            ("home_signed_rim", "net win-probability movement toward the home team"),
            ("rim_q1", "first-quarter RIM"),
            ("rim_q2", "second-quarter RIM"),
            ("rim_q3", "third-quarter RIM"),
            ("rim_q4", "fourth-quarter RIM"),
            ("rim_ot", "overtime RIM"),
        ],
    );
    for m in metrics {
        let mut row = vec![
            m.game_id.clone(),
            m.season.clone(),
            m.season_type.as_str().to_string(),
            m.home.team.to_string(),
            m.away.team.to_string(),
            m.crew.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";"),
            m.series_key.map(|k| k.to_string()).unwrap_or_default(),
            int(m.calls),
            f6(m.rim),
            opt6(m.swing_per_call.value()),
            int(m.home.signed_disparity),
            f6(m.home.signed_team_rim),
        ];
        for b in PeriodBucket::ALL {
            row.push(opt6(m.per_period.get(&b).map(|t| t.rim)));
        }
        g.push(row);
    }
    let mut t = Table::new(
        "team_game_rows",
        "team-game rows, two per game",
        &[
            ("game_id", "game id"),
            ("team", "listed team"),
            ("opponent", "opponent"),
            ("side", "home or away"),
            ("season", "season"),
            ("season_type", "regular or postseason"),
            ("own_fouls", "fouls charged to the listed team"),
            ("opp_fouls", "fouls charged to the opponent"),
            ("signed_disparity", "opp_fouls - own_fouls"),
            ("signed_team_rim", "net win-probability movement toward the listed team"),
            ("game_rim", "game RIM"),
        ],
    );
    for m in metrics {
        for r in [&m.home, &m.away] {
            t.push(vec![
                r.game_id.clone(),
                r.team.to_string(),
                r.opponent.to_string(),
                if r.is_home { "home" } else { "away" }.into(),
                r.season.clone(),
                r.season_type.as_str().into(),
                int(r.own_fouls),
                int(r.opp_fouls),
                int(r.signed_disparity),
                f6(r.signed_team_rim),
                f6(r.game_rim),
            ]);
        }
    }
    Ok(FigureSet { tables: vec![g, t], skipped: Vec::new() })
}

fn cells_table(metrics: &[GameMetrics], cfg: &RunConfig) -> Table {
    let panel = build_ref_team_panel(metrics, Some(SeasonType::Regular));
    let cells = build_cells(&panel);
    let mut t = Table::new(
        "ref_team_cells",
        "every regular-season referee-team cell with additive-baseline excess",
        &[
            ("referee", "referee name"),
            ("team", "listed team"),
            ("games", "shared games"),
            ("qualified", "1 when games meets the minimum"),
            ("y_rim", "observed mean signed team RIM"),
            ("x_rim", "excess signed team RIM"),
            ("y_disp", "observed mean signed disparity"),
            ("x_disp", "excess signed disparity"),
        ],
    );
    t.note(format!("minimum shared games {}", cfg.min_pair_games));
    for c in &cells {
        t.push(vec![
            c.referee.to_string(),
            c.team.to_string(),
            int(c.games),
            int(u8::from(c.games >= cfg.min_pair_games)),
            f6(c.rim.y),
            f6(c.rim.x),
            f6(c.disparity.y),
            f6(c.disparity.x),
        ]);
    }
    t
}

fn cmd_robustness(mut cfg: RunConfig, a: RobustnessArgs) -> Result<(), Failure> {
    if let Some(t) = a.t {
        let nu = a.dof.ok_or_else(|| bad_input("--t needs --dof"))?;
        let rho = robustness_rho(t, nu).input()?;
        println!("{rho:.6}");
        return Ok(());
    }
    if a.dof.is_some() {
        return Err(bad_input("--dof needs --t"));
    }
    analysis_robustness(&mut cfg, a)
}

fn analysis_robustness(cfg: &mut RunConfig, a: RobustnessArgs) -> Result<(), Failure> {
    let args = AnalysisArgs { select: a.select, out: a.out };
    analysis(cfg.clone(), args, "robustness", |m, c| {
        let set = build_named(m, c, &["fig12_series_effects", "fig13_team_side_effects", "fig14_ref_team_effects"]);
        let mut t = Table::new(
            "robustness",
            "robustness values for every fitted target coefficient",
            &[
                ("model", "source table"),
                ("outcome", "outcome"),
                ("term", "target description"),
                ("t", "t statistic"),
                ("dof", "degrees of freedom"),
                ("rho", "share of residual outcome and target variance an omitted confounder would need to explain to remove the estimate"),
            ],
        );
        for table in &set.tables {
            let col = |name: &str| table.columns.iter().position(|(c, _)| *c == name);
            let (Some(ti), Some(di), Some(ri)) = (col("t"), col("dof"), col("rho")) else { continue };
            let lead = table.columns.len() - 9;
            for row in &table.rows {
                t.push(vec![
                    table.name.clone(),
                    row[0].clone(),
                    row[1..lead].join(" "),
                    row[ti].clone(),
                    row[di].clone(),
                    row[ri].clone(),
                ]);
            }
            for n in &table.notes {
                t.note(format!("{}: {n}", table.name));
            }
        }
        Ok(FigureSet { tables: vec![t], skipped: set.skipped })
    })
}

fn read_aliases(path: &Path) -> Result<AliasTable, Failure> {
    let mut table = AliasTable::new();
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .input()?;
    for rec in r.records() {
        let rec = rec.input()?;
        if rec.len() != 2 {
            return Err(bad_input(format!("{}: alias rows need variant,canonical", path.display())));
        }
        table.insert(&rec[0], &rec[1]);
    }
    Ok(table)
}

fn read_ids(path: &Path) -> Result<Vec<(String, String)>, Failure> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .input()?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.input()?;
        if rec.len() != 2 {
            return Err(bad_input(format!("{}: id rows need season,game_id", path.display())));
        }
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

/// (season, game_id) pairs found in the cache, sorted.
pub fn scan_cache(cache: &Path, seasons: &[String]) -> Result<Vec<(String, String)>, Failure> {
    let suffix = format!(".{}", RawKind::Summary.suffix());
    let mut out = Vec::new();
    let entries = fs::read_dir(cache)
        .map_err(|e| bad_input(format!("cannot read cache {}: {e}", cache.display())))?;
    for season_dir in entries {
        let season_dir = season_dir.context("reading cache")?;
        if !season_dir.file_type().context("reading cache")?.is_dir() {
            continue;
        }
        let season = season_dir.file_name().to_string_lossy().into_owned();
        if !seasons.is_empty() && !seasons.contains(&season) {
            continue;
        }
        for f in fs::read_dir(season_dir.path()).context("reading cache")? {
            let name = f.context("reading cache")?.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(&suffix) {
                out.push((season.clone(), id.to_string()));
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestOutcome {
    pub games: Vec<GameRecord>,
    pub quarantine: Vec<QuarantineEntry>,
    pub flags: BTreeMap<String, usize>,
}

/// Ingests every listed id through the fetcher.
pub fn ingest_ids<T: crate::fetch::Transport>(
    fetcher: &Fetcher<T>,
    ids: &[(String, String)],
    aliases: &AliasTable,
    prior: f64,
) -> Result<IngestOutcome, Failure> {
    let mut out = IngestOutcome::default();
    let mut seen = BTreeMap::new();
    for (season, id) in ids {
        let summary = match fetcher.fetch_raw(season, id, RawKind::Summary) {
            Ok(b) => b,
            Err(e @ crate::fetch::FetchError::Io { .. }) => return Err(Failure::Internal(e.into())),
            Err(e) => return Err(Failure::Input(e.into())),
        };
        let wp = if cache_path(&fetcher.cache, season, id, RawKind::WinProb).is_file()
            || (fetcher.network && fetcher.wp_template.is_some())
        {
            match fetcher.fetch_raw(season, id, RawKind::WinProb) {
                Ok(b) => Some(b),
                Err(e) => {
                    warn!("{id}: no separate win-probability document: {e}");
                    None
                }
            }
        } else {
            None
        };
        let r = ingest_game(id, &summary, wp.as_deref(), aliases, prior);
        out.quarantine.extend(r.quarantined);
        if let Some(g) = r.game {
            if let Some(prev) = seen.insert(g.game_id.clone(), season.clone()) {
                out.quarantine.push(QuarantineEntry {
                    game_id: g.game_id.clone(),
                    play_id: None,
                    reason: QuarantineReason::InvalidGame,
                    detail: format!("duplicate game id in {season}; kept the copy from {prev}"),
                });
                continue;
            }
            if r.no_crew {
                *out.flags.entry("no-crew".to_string()).or_insert(0) += 1;
            }
            out.games.push(g);
        }
    }
    Ok(out)
}

fn cmd_ingest(cfg: &RunConfig, ids: Option<&Path>) -> Result<(), Failure> {
    let cache = cfg.cache.clone().ok_or_else(|| bad_input("no cache given (--cache or config `cache`)"))?;
    let root = cfg.dataset.clone().ok_or_else(|| bad_input("no dataset given (--dataset or config `dataset`)"))?;
    let aliases = match &cfg.aliases {
        Some(p) => read_aliases(p)?,
        None => AliasTable::new(),
    };
    let ids = match ids {
        Some(p) => read_ids(p)?
            .into_iter()
            .filter(|(s, _)| cfg.seasons.is_empty() || cfg.seasons.contains(s))
            .collect(),
        None => scan_cache(&cache, &cfg.seasons)?,
    };
    if ids.is_empty() {
        return Err(bad_input(format!("no games found under {}", cache.display())));
    }
    let fetcher = Fetcher {
        cache,
        network: cfg.network,
        summary_template: cfg.summary_endpoint.clone(),
        wp_template: cfg.wp_endpoint.clone(),
        limiter: RateLimiter::per_minute(cfg.rate_limit_per_minute),
        transport: UreqTransport::default(),
    };
    let outcome = ingest_ids(&fetcher, &ids, &aliases, cfg.game_start_prior)?;
    if outcome.games.is_empty() {
        for e in &outcome.quarantine {
            eprintln!("quarantined {} ({}): {}", e.game_id, e.reason.as_str(), e.detail);
        }
        return Err(bad_input(format!("no usable games among {} documents", ids.len())));
    }
    let (manifest, _) = render_dataset(&outcome.games, &outcome.quarantine, &outcome.flags, &[]).map_err(|e| Failure::Internal(e.into()))?;
    if root.join(MANIFEST_FILE).is_file() {
        if let Ok(existing) = read_manifest(&root) {
            if existing == manifest {
                println!("no changes");
                return Ok(());
            }
        }
    }
    let manifest = write_dataset(&outcome.games, &outcome.quarantine, &outcome.flags, &[], &root)
        .map_err(|e| Failure::Internal(e.into()))?;
    info!("wrote {}", root.display());
    println!(
        "ingested {} games ({} quarantine entries, {} without crew) into {}",
        manifest.total_games(),
        manifest.quarantine_total(),
        manifest.flags.get("no-crew").copied().unwrap_or(0),
        root.display()
    );
    for (season, types) in &manifest.counts {
        for (season_type, n) in types {
            println!("  {season} {season_type}: {n} games");
        }
    }
    for (reason, n) in &manifest.quarantine {
        println!("  quarantine {reason}: {n}");
    }
    Ok(())
}

/// Checks that every figure file re-parses and that fig8 holds two rows per game.
pub fn validate_figures(dir: &Path) -> Result<Vec<String>, Failure> {
    let mut problems = Vec::new();
    let mut found = 0;
    for name in FIGURES {
        let path = dir.join(format!("{name}.csv"));
        if !path.is_file() {
            continue;
        }
        found += 1;
        let bytes = fs::read(&path).context("reading figure")?;
        let parsed = match parse_table(&bytes) {
            Ok(p) => p,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        if name == "fig8_home_away" {
            let mut per_game: BTreeMap<&str, (u32, u32)> = BTreeMap::new();
            let side = parsed.header.iter().position(|h| h == "side");
            for r in &parsed.rows {
                let e = per_game.entry(r[0].as_str()).or_default();
                match side.map(|i| r[i].as_str()) {
                    Some("home") => e.0 += 1,
                    Some("away") => e.1 += 1,
                    _ => problems.push(format!("{name}: row without a side")),
                }
            }
            if parsed.rows.len() != 2 * per_game.len() || per_game.values().any(|&c| c != (1, 1)) {
                problems.push(format!(
                    "{name}: {} rows for {} games; expected one home and one away row per game",
                    parsed.rows.len(),
                    per_game.len()
                ));
            }
        }
    }
    if found == 0 {
        problems.push(format!("no figure files in {}", dir.display()));
    }
    Ok(problems)
}

fn cmd_validate(dataset: Option<&Path>, figures: Option<&Path>) -> Result<(), Failure> {
    if dataset.is_none() && figures.is_none() {
        return Err(bad_input("nothing to validate: pass --dataset and/or --figures"));
    }
    if let Some(root) = dataset {
        let ds = read_dataset(root).input()?;
        println!(
            "dataset ok: {} games in {} partitions, {} quarantine entries",
            ds.games.len(),
            ds.manifest.partitions.len(),
            ds.quarantine.len()
        );
    }
    if let Some(dir) = figures {
        let problems = validate_figures(dir)?;
        if !problems.is_empty() {
            for p in &problems {
                eprintln!("{p}");
            }
            return Err(bad_input(format!("{} figure problems", problems.len())));
        }
        println!("figures ok");
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, a: SimulateArgs) -> Result<(), Failure> {
    let out = a.out.clone().or_else(|| cfg.dataset.clone()).ok_or_else(|| bad_input("no output dataset given (--out)"))?;
    let mut sim = match &a.sim_config {
        Some(p) => {
            let text = fs::read_to_string(p).input()?;
            toml::from_str::<SimConfig>(&text).input()?
        }
        None => SimConfig { seed: cfg.seed, ..SimConfig::default() },
    };
    if let Some(s) = a.seed {
        sim.seed = s;
    }
    if let Some(v) = a.teams {
        sim.n_teams = v;
    }
    if let Some(v) = a.referees {
        sim.n_referees = v;
    }
    if let Some(v) = a.games {
        sim.games_per_season = v;
    }
    if let Some(v) = a.postseason_games {
        sim.postseason_games_per_season = v;
    }
    if let Some(v) = a.season_count {
        sim.seasons = v;
    }
    let corpus = generate(&sim).input()?;
    let no_crew = corpus.games.iter().filter(|g| !g.has_crew()).count();
    let flags = if no_crew > 0 { BTreeMap::from([("no-crew".to_string(), no_crew)]) } else { BTreeMap::new() };
    #[derive(Serialize)]
    struct Ledger<'a> {
        config: &'a SimConfig,
        truth: &'a rimkit_core::synth::GroundTruth,
    }
    let mut ledger = serde_json::to_vec_pretty(&Ledger { config: &sim, truth: &corpus.truth }).context("serializing ledger")?;
    ledger.push(b'\n');
    let manifest = write_dataset(&corpus.games, &[], &flags, &[(LEDGER_FILE.to_string(), ledger)], &out)
        .map_err(|e| Failure::Internal(e.into()))?;
    println!(
        "simulated {} games (seed {}) into {}",
        manifest.total_games(),
        sim.seed,
        out.display()
    );
    Ok(())
}
