//! Run records.
//!
//! Each command writes `<reports>/runs/<stem>.json` describing exactly
//! what it consumed and produced: the effective config, the stage seed,
//! the crate version, and an FNV-1a content hash per input and output
//! path. Deliberately no timestamps or hostnames — a repeated run must
//! produce a byte-identical record, so the records double as a
//! reproducibility check.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ProjectConfig;
use crate::error::CliError;
use crate::seed::fnv1a;

#[derive(Serialize)]
pub struct RunRecord {
    command: String,
    seed: u64,
    version: &'static str,
    config: ProjectConfig,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl RunRecord {
    pub fn new(command: &str, seed: u64, config: &ProjectConfig) -> RunRecord {
        RunRecord {
            command: command.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION"),
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs
            .insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        self.outputs
            .insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    /// Writes `<reports_dir>/runs/<stem>.json` and returns the path.
    pub fn write(&self, reports_dir: &Path, stem: &str) -> Result<PathBuf, CliError> {
        let dir = reports_dir.join("runs");
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let path = dir.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("cannot encode run record: {e}")))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Content hash of a file, or of a directory tree (relative paths and
/// file contents, walked in sorted order). Format: `fnv1a:<16 hex>`.
pub fn hash_path(path: &Path) -> Result<String, CliError> {
    let h = if path.is_dir() {
        let mut acc: u64 = 0xcbf2_9ce4_8422_2325;
        walk(path, path, &mut |rel, file| {
            acc ^= fnv1a(rel.as_bytes());
            acc = acc.rotate_left(17) ^ hash_file(file)?;
            Ok(())
        })?;
        acc
    } else {
        hash_file(path)?
    };
    Ok(format!("fnv1a:{h:016x}"))
}

fn hash_file(path: &Path) -> Result<u64, CliError> {
    let mut file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        for &b in &buf[..n] {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    }
    Ok(h)
}

fn walk(
    root: &Path,
    dir: &Path,
    visit: &mut impl FnMut(&str, &Path) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::io(dir, e))?;
    entries.sort();
    for entry in entries {
        if entry.is_dir() {
            walk(root, &entry, visit)?;
        } else {
            let rel = entry
                .strip_prefix(root)
                .expect("walk stays under root")
                .to_string_lossy()
                .into_owned();
            visit(&rel, &entry)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_is_reproducible_and_timestamp_free() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        fs::write(&input, b"payload").unwrap();

        let cfg = ProjectConfig::default();
        let write = || {
            let mut r = RunRecord::new("simulate", 42, &cfg);
            r.input(&input).unwrap();
            r.write(dir.path(), "simulate").unwrap()
        };
        let path = write();
        let first = fs::read(&path).unwrap();
        let second = fs::read(write()).unwrap();
        assert_eq!(first, second);

        let text = String::from_utf8(first).unwrap();
        assert!(text.contains("fnv1a:"));
        assert!(!text.contains("timestamp"));
    }

    #[test]
    fn directory_hash_sees_renames_and_content_changes() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), b"one").unwrap();
        let h1 = hash_path(dir.path()).unwrap();
        fs::write(dir.path().join("a.txt"), b"two").unwrap();
        let h2 = hash_path(dir.path()).unwrap();
        assert_ne!(h1, h2);
        fs::rename(dir.path().join("a.txt"), dir.path().join("b.txt")).unwrap();
        let h3 = hash_path(dir.path()).unwrap();
        assert_ne!(h2, h3);
    }
}
