//! Provenance headers and atomic file writes.

use crate::error::{CliError, CliResult};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "EVTOL_OFFLOAD_OUT";

pub fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"))
}

/// `a..b` for a contiguous ascending batch, a comma list otherwise.
pub fn seed_batch(seeds: &[u64]) -> String {
    let contiguous = seeds.windows(2).all(|w| w[1] == w[0] + 1);
    match (seeds.first(), seeds.last()) {
        (Some(a), Some(b)) if contiguous && seeds.len() > 1 => format!("{a}..{b}"),
        _ => seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// SHA-256 of the effective configuration as canonical JSON.
    pub config_sha256: String,
    pub seeds: Vec<u64>,
}

impl Provenance {
    pub fn new(command: &'static str, config: &impl Serialize, seeds: &[u64]) -> Self {
        let canonical = serde_json::to_vec(config).expect("configs serialize");
        let digest = Sha256::digest(&canonical);
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seeds: seeds.to_vec(),
        }
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }

    /// `# key: value` comment lines for CSV outputs.
    pub fn csv_header(&self) -> String {
        let seeds = seed_batch(&self.seeds);
        format!(
            "# tool: {} {}\n# command: {}\n# config_sha256: {}\n# seeds: {seeds}\n",
            self.tool, self.version, self.command, self.config_sha256
        )
    }
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> CliResult<()> {
    let wrap = |source| CliError::Write { path: path.to_path_buf(), source };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(wrap)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(wrap)?;
        buf.flush().map_err(wrap)?;
    }
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

/// A CSV file with the provenance header followed by `rows`.
pub fn write_csv(path: &Path, provenance: &Provenance, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    write_atomic(path, |w| {
        w.write_all(provenance.csv_header().as_bytes())?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for row in rows {
            csv.write_record(row)?;
        }
        csv.flush()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_only_on_config() {
        let a = Provenance::new("x", &serde_json::json!({ "a": 1 }), &[1, 2]);
        let b = Provenance::new("y", &serde_json::json!({ "a": 1 }), &[3]);
        let c = Provenance::new("x", &serde_json::json!({ "a": 2 }), &[1, 2]);
        assert_eq!(a.config_sha256, b.config_sha256);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
        assert!(a.csv_header().contains("# seeds: 1..2\n"));
    }

    #[test]
    fn seed_batches() {
        assert_eq!(seed_batch(&[0, 1, 2]), "0..2");
        assert_eq!(seed_batch(&[4]), "4");
        assert_eq!(seed_batch(&[1, 3]), "1,3");
    }

    #[test]
    fn atomic_write_replaces_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/f.txt");
        write_atomic(&path, |w| w.write_all(b"one")).unwrap();
        write_atomic(&path, |w| w.write_all(b"two")).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
