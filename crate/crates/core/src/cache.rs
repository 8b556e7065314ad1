//! On-disk cache of nu-curve samples: one JSON file per (N, alpha, m), written
//! by temp-file-then-rename so readers never see a partial record.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::BaseParams;

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "HENON_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub p: f64,
    pub p_bits: String,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheFile {
    dimension: u32,
    alpha: f64,
    nodal_zones: u32,
    samples: Vec<CacheEntry>,
}

#[derive(Debug, Clone)]
pub struct NuCache {
    dir: PathBuf,
}

fn file_locks() -> &'static Mutex<HashMap<PathBuf, ()>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, ()>>> = OnceLock::new();
    LOCKS.get_or_init(|| Mutex::new(HashMap::new()))
}

impl NuCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        NuCache { dir: dir.into() }
    }

    /// Cache rooted at $HENON_CACHE_DIR if set, else `fallback`.
    pub fn from_env_or(fallback: impl Into<PathBuf>) -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => NuCache::new(PathBuf::from(d)),
            _ => NuCache::new(fallback),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, base: &BaseParams) -> PathBuf {
        self.dir.join(format!("nu_N{}_a{}_m{}.json", base.dimension, base.alpha, base.nodal_zones))
    }

    fn read(&self, base: &BaseParams) -> CacheFile {
        let path = self.path_for(base);
        let empty = CacheFile { dimension: base.dimension, alpha: base.alpha, nodal_zones: base.nodal_zones, samples: vec![] };
        let Ok(text) = fs::read_to_string(&path) else { return empty };
        match serde_json::from_str::<CacheFile>(&text) {
            Ok(f) if f.dimension == base.dimension && f.alpha == base.alpha && f.nodal_zones == base.nodal_zones => f,
            Ok(_) => {
                log::warn!("cache file {} belongs to other parameters; discarding", path.display());
                let _ = fs::remove_file(&path);
                empty
            }
            Err(e) => {
                log::warn!("corrupted cache file {} ({e}); discarding and recomputing", path.display());
                let _ = fs::remove_file(&path);
                empty
            }
        }
    }

    pub fn lookup(&self, base: &BaseParams, key: &str, p: f64) -> Option<Vec<f64>> {
        let bits = format!("{:016x}", p.to_bits());
        self.read(base).samples.into_iter().find(|e| e.key == key && e.p_bits == bits).map(|e| e.nu)
    }

    pub fn store(&self, base: &BaseParams, key: &str, p: f64, nu: &[f64]) -> Result<()> {
        let path = self.path_for(base);
        let _guard = file_locks().lock().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let mut file = self.read(base);
        let bits = format!("{:016x}", p.to_bits());
        file.samples.retain(|e| !(e.key == key && e.p_bits == bits));
        file.samples.push(CacheEntry { key: key.to_string(), p, p_bits: bits, nu: nu.to_vec() });
        file.samples.sort_by(|a, b| a.key.cmp(&b.key).then(a.p.total_cmp(&b.p)));
        let text = serde_json::to_string_pretty(&file)?;
        write_atomic(&path, text.as_bytes())
    }
}

/// Write `bytes` to a sibling temp file and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.{}.tmp", std::process::id(), COUNTER.fetch_add(1, Ordering::Relaxed)));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
