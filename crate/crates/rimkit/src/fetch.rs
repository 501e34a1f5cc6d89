//! Cached raw-feed fetching. Cached bytes are always preferred; the network
//! is touched only when allowed, at most once per missing document, and
//! responses are stored verbatim before being returned.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::info;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawKind {
    Summary,
    WinProb,
}

impl RawKind {
    pub fn suffix(self) -> &'static str {
        match self {
            RawKind::Summary => "summary.json",
            RawKind::WinProb => "wp.json",
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("{game_id}: not cached and network access is disabled")]
    NetworkDisabled { game_id: String },
    #[error("{game_id}: not cached and no endpoint template is configured for {kind}")]
    NoEndpoint { game_id: String, kind: &'static str },
    #[error("fetch of {url} failed: {message}")]
    Transport { url: String, message: String },
    #[error("cache io at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Minimal blocking HTTP GET.
pub trait Transport {
    fn get(&self, url: &str) -> Result<Vec<u8>, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build();
        Self { agent: config.into() }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, String> {
        let mut resp = self.agent.get(url).call().map_err(|e| e.to_string())?;
        resp.body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| e.to_string())
    }
}

/// Spaces requests at least `60 / per_minute` seconds apart.
pub struct RateLimiter {
    interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(n: u32) -> Self {
        let interval = if n == 0 { Duration::ZERO } else { Duration::from_secs_f64(60.0 / f64::from(n)) };
        Self { interval, last: Mutex::new(None) }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    pub fn wait(&self) {
        let mut last = self.last.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(t) = *last {
            let ready = t + self.interval;
            let now = Instant::now();
            if ready > now {
                std::thread::sleep(ready - now);
            }
        }
        *last = Some(Instant::now());
    }
}

pub fn cache_path(cache: &Path, season: &str, game_id: &str, kind: RawKind) -> PathBuf {
    cache.join(season).join(format!("{game_id}.{}", kind.suffix()))
}

pub struct Fetcher<T: Transport> {
    pub cache: PathBuf,
    pub network: bool,
    pub summary_template: Option<String>,
    pub wp_template: Option<String>,
    pub limiter: RateLimiter,
    pub transport: T,
}

impl<T: Transport> Fetcher<T> {
    fn template(&self, kind: RawKind) -> Option<&str> {
        match kind {
            RawKind::Summary => self.summary_template.as_deref(),
            RawKind::WinProb => self.wp_template.as_deref(),
        }
    }

    /// Cached bytes, or fetched-then-cached bytes when the network is on.
    pub fn fetch_raw(&self, season: &str, game_id: &str, kind: RawKind) -> Result<Vec<u8>, FetchError> {
        let path = cache_path(&self.cache, season, game_id, kind);
        if path.is_file() {
            return fs::read(&path).map_err(|source| FetchError::Io { path, source });
        }
        if !self.network {
            return Err(FetchError::NetworkDisabled { game_id: game_id.into() });
        }
        let template = self.template(kind).ok_or_else(|| FetchError::NoEndpoint {
            game_id: game_id.into(),
            kind: kind.suffix(),
        })?;
        let url = template.replace("{game_id}", game_id);
        self.limiter.wait();
        info!("fetching {url}");
        let bytes = self
            .transport
            .get(&url)
            .map_err(|message| FetchError::Transport { url: url.clone(), message })?;
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| FetchError::Io { path, source }
        };
        let dir = path.parent().expect("cache path has a parent");
        fs::create_dir_all(dir).map_err(io(dir))?;
        let tmp = path.with_extension("part");
        fs::write(&tmp, &bytes).map_err(io(&tmp))?;
        fs::rename(&tmp, &path).map_err(io(&path))?;
        Ok(bytes)
    }
}
