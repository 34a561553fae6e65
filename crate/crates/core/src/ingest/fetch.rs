use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use flate2::read::GzDecoder;
use sha2::{Digest, Sha256};

use super::IngestError;

pub const DEFAULT_BASE_URL: &str = "https://sparse.tamu.edu";
/// Overrides the download base URL.
pub const BASE_URL_ENV: &str = "BLCIRS_SUITESPARSE_URL";
/// Overrides the cache directory.
pub const CACHE_DIR_ENV: &str = "BLCIRS_CACHE_DIR";

const MAX_ARCHIVE_BYTES: u64 = 1 << 31;

/// Groups of the matrices that can be requested by bare name.
const KNOWN_GROUPS: &[(&str, &str)] = &[
    ("cdde1", "Bai"),
    ("cdde2", "Bai"),
    ("cdde3", "Bai"),
    ("pde900", "Bai"),
    ("pde2961", "Bai"),
    ("bfwa398", "Bai"),
    ("bfwa782", "Bai"),
    ("olm1000", "Bai"),
];

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    /// Expected SHA-256 of the archive, lowercase hex.
    pub sha256: Option<String>,
    pub timeout: Duration,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            base_url: std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string()),
            sha256: None,
            timeout: Duration::from_secs(60),
        }
    }
}

/// `$BLCIRS_CACHE_DIR`, else `$XDG_CACHE_HOME/blcirs`, else `~/.cache/blcirs`.
pub fn default_cache_dir() -> PathBuf {
    if let Ok(d) = std::env::var(CACHE_DIR_ENV) {
        return PathBuf::from(d);
    }
    if let Ok(d) = std::env::var("XDG_CACHE_HOME") {
        return PathBuf::from(d).join("blcirs");
    }
    match std::env::var("HOME") {
        Ok(h) => PathBuf::from(h).join(".cache").join("blcirs"),
        Err(_) => PathBuf::from(".blcirs-cache"),
    }
}

/// Splits `Group/name`, or looks a bare name up in the built-in table.
pub fn resolve_name(name: &str) -> Result<(String, String), IngestError> {
    let valid = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
    if let Some((g, n)) = name.split_once('/') {
        if valid(g) && valid(n) {
            return Ok((g.to_string(), n.to_string()));
        }
        return Err(IngestError::NotFound(format!("malformed matrix name '{name}'")));
    }
    KNOWN_GROUPS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, g)| (g.to_string(), n.to_string()))
        .ok_or_else(|| {
            IngestError::NotFound(format!(
                "unknown matrix '{name}'; use Group/name for matrices outside the built-in list"
            ))
        })
}

/// Path of `<name>.mtx` in `cache_dir`, downloading it first if absent.
pub fn fetch_suitesparse(name: &str, cache_dir: &Path) -> Result<PathBuf, IngestError> {
    fetch_suitesparse_with(name, cache_dir, &FetchConfig::default())
}

pub fn fetch_suitesparse_with(name: &str, cache_dir: &Path, cfg: &FetchConfig) -> Result<PathBuf, IngestError> {
    let (group, base) = resolve_name(name)?;
    let target = cache_dir.join(format!("{base}.mtx"));
    if target.is_file() {
        return Ok(target);
    }
    fs::create_dir_all(cache_dir)?;
    let url = format!("{}/MM/{group}/{base}.tar.gz", cfg.base_url.trim_end_matches('/'));
    let bytes = download(&url, cfg.timeout)?;
    if let Some(want) = &cfg.sha256 {
        let got: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        if !got.eq_ignore_ascii_case(want) {
            return Err(IngestError::Checksum {
                expected: want.clone(),
                found: got,
            });
        }
    }
    let mtx = extract_member(&bytes, &format!("{base}.mtx"))?;
    // write-then-rename so concurrent fetches never observe a partial file
    let tmp = cache_dir.join(format!(".{base}.mtx.{}.part", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&mtx)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

fn download(url: &str, timeout: Duration) -> Result<Vec<u8>, IngestError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();
    match agent.get(url).call() {
        Ok(mut resp) => resp
            .body_mut()
            .with_config()
            .limit(MAX_ARCHIVE_BYTES)
            .read_to_vec()
            .map_err(|e| IngestError::Network(format!("{url}: {e}"))),
        Err(ureq::Error::StatusCode(404)) => Err(IngestError::NotFound(format!("{url}: HTTP 404"))),
        Err(e) => Err(IngestError::Network(format!("{url}: {e}"))),
    }
}

fn extract_member(gz: &[u8], file_name: &str) -> Result<Vec<u8>, IngestError> {
    let mut archive = tar::Archive::new(GzDecoder::new(gz));
    let entries = archive
        .entries()
        .map_err(|e| IngestError::Archive(e.to_string()))?;
    for entry in entries {
        let mut entry = entry.map_err(|e| IngestError::Archive(e.to_string()))?;
        let path = entry.path().map_err(|e| IngestError::Archive(e.to_string()))?;
        if path.file_name().and_then(|f| f.to_str()) == Some(file_name) {
            let mut out = Vec::new();
            entry
                .read_to_end(&mut out)
                .map_err(|e| IngestError::Archive(e.to_string()))?;
            return Ok(out);
        }
    }
    Err(IngestError::Archive(format!("archive has no member {file_name}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        assert_eq!(resolve_name("cdde2").unwrap(), ("Bai".into(), "cdde2".into()));
        assert_eq!(resolve_name("HB/west0067").unwrap(), ("HB".into(), "west0067".into()));
        assert!(matches!(resolve_name("no_such_matrix"), Err(IngestError::NotFound(_))));
        assert!(matches!(resolve_name("a/../b"), Err(IngestError::NotFound(_))));
    }

    #[test]
    fn cached_file_needs_no_network() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cdde2.mtx");
        fs::write(&p, "x").unwrap();
        let cfg = FetchConfig {
            base_url: "http://127.0.0.1:1".into(),
            ..Default::default()
        };
        assert_eq!(fetch_suitesparse_with("cdde2", dir.path(), &cfg).unwrap(), p);
    }
}
