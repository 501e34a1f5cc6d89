//! Canonical on-disk dataset: `<root>/<season>/<season_type>/games.jsonl`,
//! `<root>/quarantine.jsonl` and `<root>/manifest.json`, written into a
//! sibling temp directory and swapped into place by rename.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rimkit_core::GameRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::QuarantineEntry;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const QUARANTINE_FILE: &str = "quarantine.jsonl";
pub const GAMES_FILE: &str = "games.jsonl";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no dataset manifest at {0}")]
    MissingManifest(PathBuf),
    #[error("corrupt dataset: {0}")]
    Corrupt(String),
    #[error("duplicate game id {0}")]
    DuplicateGame(String),
    #[error("unsupported schema version {0}")]
    Schema(u32),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub season: String,
    pub season_type: String,
    /// Relative to the dataset root, `/`-separated.
    pub path: String,
    pub games: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seasons: Vec<String>,
    /// season -> season_type -> games
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub partitions: Vec<Partition>,
    /// reason -> entries
    pub quarantine: BTreeMap<String, usize>,
    pub quarantine_sha256: String,
    /// Kept games carrying a flag, e.g. `no-crew`.
    pub flags: BTreeMap<String, usize>,
    /// Extra files stored beside the dataset, with their hashes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
}

impl Manifest {
    pub fn total_games(&self) -> usize {
        self.partitions.iter().map(|p| p.games).sum()
    }

    pub fn quarantine_total(&self) -> usize {
        self.quarantine.values().sum()
    }

    /// Content hashes of every stored file, keyed by relative path.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> =
            self.partitions.iter().map(|p| (p.path.clone(), p.sha256.clone())).collect();
        out.insert(QUARANTINE_FILE.into(), self.quarantine_sha256.clone());
        out.extend(self.extras.clone());
        out
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("in-memory serialization");
        out.push(b'\n');
    }
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(bytes).map_err(io_err(path))?;
    f.sync_all().map_err(io_err(path))
}

fn sibling(root: &Path, tag: &str) -> PathBuf {
    let name = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    root.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

/// Relative path and contents of one stored file.
pub type StoredFile = (String, Vec<u8>);

/// Builds the manifest and file contents without touching disk.
pub fn render_dataset(
    games: &[GameRecord],
    quarantine: &[QuarantineEntry],
    flags: &BTreeMap<String, usize>,
    extras: &[(String, Vec<u8>)],
) -> Result<(Manifest, Vec<StoredFile>), DatasetError> {
    let mut seen = BTreeSet::new();
    for g in games {
        if !seen.insert(g.game_id.as_str()) {
            return Err(DatasetError::DuplicateGame(g.game_id.clone()));
        }
    }
    let mut parts: BTreeMap<(String, String), Vec<&GameRecord>> = BTreeMap::new();
    for g in games {
        parts
            .entry((g.season.clone(), g.season_type.as_str().to_string()))
            .or_default()
            .push(g);
    }
    let mut files = Vec::new();
    let mut partitions = Vec::new();
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for ((season, season_type), mut rows) in parts {
        rows.sort_by(|a, b| a.game_id.cmp(&b.game_id));
        let bytes = jsonl(&rows);
        let path = format!("{season}/{season_type}/{GAMES_FILE}");
        partitions.push(Partition {
            season: season.clone(),
            season_type: season_type.clone(),
            path: path.clone(),
            games: rows.len(),
            sha256: sha256_hex(&bytes),
        });
        counts.entry(season).or_default().insert(season_type, rows.len());
        files.push((path, bytes));
    }

    let mut q = quarantine.to_vec();
    q.sort();
    let q_bytes = jsonl(&q);
    let mut q_counts = BTreeMap::new();
    for e in &q {
        *q_counts.entry(e.reason.as_str().to_string()).or_insert(0) += 1;
    }

    let mut extra_hashes = BTreeMap::new();
    for (name, bytes) in extras {
        extra_hashes.insert(name.clone(), sha256_hex(bytes));
        files.push((name.clone(), bytes.clone()));
    }

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        seasons: counts.keys().cloned().collect(),
        counts,
        partitions,
        quarantine: q_counts,
        quarantine_sha256: sha256_hex(&q_bytes),
        flags: flags.clone(),
        extras: extra_hashes,
    };
    files.push((QUARANTINE_FILE.to_string(), q_bytes));
    Ok((manifest, files))
}

/// Writes a dataset atomically; an existing dataset at `root` is replaced
/// only after the new one is complete.
pub fn write_dataset(
    games: &[GameRecord],
    quarantine: &[QuarantineEntry],
    flags: &BTreeMap<String, usize>,
    extras: &[(String, Vec<u8>)],
    root: &Path,
) -> Result<Manifest, DatasetError> {
    let (manifest, files) = render_dataset(games, quarantine, flags, extras)?;
    let tmp = sibling(root, "tmp");
    if tmp.exists() {
        fs::remove_dir_all(&tmp).map_err(io_err(&tmp))?;
    }
    fs::create_dir_all(&tmp).map_err(io_err(&tmp))?;
    for (rel, bytes) in &files {
        write_file(&tmp.join(rel), bytes)?;
    }
    let mut m = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    m.push(b'\n');
    write_file(&tmp.join(MANIFEST_FILE), &m)?;

    if root.exists() {
        let old = sibling(root, "old");
        if old.exists() {
            fs::remove_dir_all(&old).map_err(io_err(&old))?;
        }
        fs::rename(root, &old).map_err(io_err(root))?;
        fs::rename(&tmp, root).map_err(io_err(root))?;
        fs::remove_dir_all(&old).map_err(io_err(&old))?;
    } else {
        fs::rename(&tmp, root).map_err(io_err(root))?;
    }
    Ok(manifest)
}

pub fn read_manifest(root: &Path) -> Result<Manifest, DatasetError> {
    let path = root.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(DatasetError::MissingManifest(path));
    }
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let m: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| DatasetError::Corrupt(format!("{}: {e}", path.display())))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(DatasetError::Schema(m.schema_version));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: Manifest,
    pub games: Vec<GameRecord>,
    pub quarantine: Vec<QuarantineEntry>,
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path, bytes: &[u8]) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in bytes.split(|&b| b == b'\n').enumerate() {
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_slice(line).map_err(|e| {
            DatasetError::Corrupt(format!("{} line {}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

/// Reads every partition, checking hashes and counts against the manifest.
pub fn read_dataset(root: &Path) -> Result<Dataset, DatasetError> {
    let manifest = read_manifest(root)?;
    let mut games = Vec::with_capacity(manifest.total_games());
    for p in &manifest.partitions {
        let path = root.join(&p.path);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if sha256_hex(&bytes) != p.sha256 {
            return Err(DatasetError::Corrupt(format!("hash mismatch for {}", p.path)));
        }
        let rows: Vec<GameRecord> = read_jsonl(&path, &bytes)?;
        if rows.len() != p.games {
            return Err(DatasetError::Corrupt(format!(
                "{} holds {} games, manifest says {}",
                p.path,
                rows.len(),
                p.games
            )));
        }
        games.extend(rows);
    }
    let qpath = root.join(QUARANTINE_FILE);
    let qbytes = fs::read(&qpath).map_err(io_err(&qpath))?;
    if sha256_hex(&qbytes) != manifest.quarantine_sha256 {
        return Err(DatasetError::Corrupt("hash mismatch for quarantine ledger".into()));
    }
    let quarantine = read_jsonl(&qpath, &qbytes)?;
    Ok(Dataset { manifest, games, quarantine })
}
