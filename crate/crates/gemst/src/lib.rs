//! Standard-library companion to `gemst-core`: weight-file and config
//! parsing, CIFAR-10 ingestion, seeded initialization, the thread-parallel
//! batch runner and the self-verification suite behind the CLI.

pub mod cifar;
pub mod config;
pub mod error;
pub mod gstw;
pub mod init;
pub mod runner;
pub mod verify;

pub use error::{Error, Result};

use std::fs;
use std::io::Write as _;
use std::path::Path;

/// Atomic file write: serialize to a sibling temp file, rename on success.
/// A failed command never leaves a partial output behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = path.with_extension("tmp~");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    let _ = dir;
    Ok(())
}
