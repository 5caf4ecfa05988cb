use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::range::RangeSpec;
use super::solve::{CountResult, Method};
use crate::error::Result;

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "ADDSYS_CACHE_DIR";

/// Count results on disk, one JSON file per (system, range, method).
#[derive(Clone, Debug)]
pub struct CountCache {
    dir: PathBuf,
}

impl CountCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(CountCache { dir })
    }

    /// Cache in the directory named by `ADDSYS_CACHE_DIR`, if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Ok(Some(CountCache::new(PathBuf::from(d))?)),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(digest: &str, range: &RangeSpec, method: Method) -> String {
        let fields = format!(
            "{digest}|{}|{}|{}|{method}",
            serde_json::to_string(&range.kind).expect("enum serializes"),
            range.p,
            range.eta.map(|e| format!("{e:?}")).unwrap_or_default()
        );
        hex::encode(Sha256::digest(fields.as_bytes()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, digest: &str, range: &RangeSpec, method: Method) -> Option<CountResult> {
        let text = fs::read_to_string(self.path(&Self::key(digest, range, method))).ok()?;
        match serde_json::from_str::<CountResult>(&text) {
            Ok(r) if r.system_digest == digest && r.range == *range && r.method == method => Some(r),
            Ok(_) => None,
            Err(e) => {
                log::warn!("ignoring unreadable cache entry: {e}");
                None
            }
        }
    }

    pub fn put(&self, result: &CountResult) -> Result<()> {
        let key = Self::key(&result.system_digest, &result.range, result.method);
        // write then rename so a crash never leaves a half-written entry
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_string(result)?)?;
        fs::rename(tmp, self.path(&key))?;
        Ok(())
    }

    /// Returns the cached result or computes and stores it.
    pub fn get_or_compute(
        &self,
        digest: &str,
        range: &RangeSpec,
        method: Method,
        compute: impl FnOnce() -> Result<CountResult>,
    ) -> Result<(CountResult, bool)> {
        if let Some(hit) = self.get(digest, range, method) {
            return Ok((hit, true));
        }
        let fresh = compute()?;
        self.put(&fresh)?;
        Ok((fresh, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CountCache::new(dir.path()).unwrap();
        let range = RangeSpec::smooth(100, 0.5);
        let res = CountResult {
            count: u128::MAX - 7,
            system_digest: "abc".into(),
            range,
            method: Method::Mitm,
            wall_time: 0.5,
        };
        assert!(cache.get("abc", &range, Method::Mitm).is_none());
        cache.put(&res).unwrap();
        assert_eq!(cache.get("abc", &range, Method::Mitm), Some(res.clone()));
        assert!(cache.get("abc", &range, Method::Brute).is_none());
        assert!(cache.get("abc", &range.with_p(101), Method::Mitm).is_none());
        let (again, hit) = cache
            .get_or_compute("abc", &range, Method::Mitm, || unreachable!())
            .unwrap();
        assert!(hit);
        assert_eq!(again.count, res.count);
    }
}
