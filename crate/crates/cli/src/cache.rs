//! Staged artifact cache: symmetric connection points per (settings, type, x*),
//! keyed by a hash of the settings that determine them.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use h4bp::manifolds::{ConnectionCandidate, ConnectionType};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub struct Cache {
    pub dir: PathBuf,
}

fn kind_tag(kind: ConnectionType) -> &'static str {
    match kind {
        ConnectionType::Homoclinic => "hom",
        ConnectionType::Heteroclinic => "het",
    }
}

/// Writes via a temporary file so readers never see partial output.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl Cache {
    pub fn open(cfg: &RunConfig) -> Result<Self, CliError> {
        let key = cfg.cache_key_text();
        let digest = Sha256::digest(key.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        let dir = cfg.out.join("cache").join(hex);
        fs::create_dir_all(&dir)?;
        let key_file = dir.join("settings.txt");
        if !key_file.exists() {
            write_atomic(&key_file, &key)?;
        }
        Ok(Self { dir })
    }

    fn path(&self, kind: ConnectionType, x_star: f64) -> PathBuf {
        self.dir.join(kind_tag(kind)).join(format!("x{x_star:.12}.json"))
    }

    pub fn load(&self, kind: ConnectionType, x_star: f64) -> Result<Option<Vec<ConnectionCandidate>>, CliError> {
        let p = self.path(kind, x_star);
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
    }

    pub fn store(&self, kind: ConnectionType, x_star: f64, cands: &[ConnectionCandidate]) -> Result<(), CliError> {
        let v = serde_json::to_value(cands)?;
        write_atomic(&self.path(kind, x_star), &crate::output::json17(&v))
    }
}

/// Exclusive lock on the cache, released on drop.
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(out: &Path) -> Result<Self, CliError> {
        let dir = out.join("cache");
        fs::create_dir_all(&dir)?;
        let path = dir.join(".lock");
        let start = Instant::now();
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(_) => return Ok(Self { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if start.elapsed() > Duration::from_secs(1800) {
                        return Err(CliError::Config(format!("cache lock {} held for too long", path.display())));
                    }
                    std::thread::sleep(Duration::from_millis(100));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
