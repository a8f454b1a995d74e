//! Atomic file output: contents are staged in a temporary file in the
//! destination directory and renamed into place, so a failed command never
//! leaves a partial output behind.

use std::io::Write;
use std::path::Path;

use scope_extract::{Error, Result};

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(Error::Config(format!(
            "output directory {} does not exist",
            parent.display()
        )));
    }
    let mut tmp = tempfile::NamedTempFile::new_in(parent)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Config(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Runs `fill` against an in-memory buffer, then writes it atomically.
pub fn write_atomic_with(path: &Path, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    write_atomic(path, &buf)
}
