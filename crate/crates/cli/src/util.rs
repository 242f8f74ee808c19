//! Small shared plumbing: atomic file output and per-run seed derivation.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Write through a temp file in the target directory and rename into
/// place, so a crash mid-write never leaves a truncated output and
/// re-running a command never exposes a partially updated file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    // Renaming over /dev/null or a pipe would replace the node itself;
    // stream into such targets instead.
    if let Ok(meta) = fs::symlink_metadata(path) {
        if !meta.is_file() {
            return fs::write(path, bytes);
        }
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(".{}.tmp-{}", name, std::process::id()));
    fs::write(&tmp, bytes)?;
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Mix (master seed, run index) into an independent 64-bit seed with the
/// splitmix64 finalizer. The finalizer is a bijection, so distinct indices
/// under one master never collide, and the derivation is stable across
/// platforms and releases.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
