//! Deterministic CSV emission.
//!
//! Every report starts with a `# config_hash=` provenance line and a header
//! row; bodies contain no timestamps, so identical configs produce byte-
//! identical files. Wall-clock metadata goes to a separate `run_meta.txt`.

use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::path::Path;

pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(config_hash: &str, header: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# config_hash={config_hash}");
        let _ = writeln!(buf, "{header}");
        Self { buf }
    }

    pub fn row(&mut self, row: impl AsRef<str>) {
        self.buf.push_str(row.as_ref());
        self.buf.push('\n');
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, &self.buf)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn body(&self) -> &str {
        &self.buf
    }
}

/// Fixed-precision float for CSV bodies; `{:.6e}` keeps byte-identical
/// output across runs.
pub fn num(v: f64) -> String {
    format!("{v:.6e}")
}

/// Wall-clock metadata, kept out of the CSVs.
pub fn write_run_meta(dir: &Path, config_hash: &str, experiment: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let meta = format!(
        "experiment={experiment}\nconfig_hash={config_hash}\nrng={}\nfinished_unix={}\n",
        pmlab::numerics::RNG_NAME,
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    );
    std::fs::write(dir.join("run_meta.txt"), meta)?;
    Ok(())
}
