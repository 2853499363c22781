use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

use crate::failure::CliResult;

/// Hex SHA-256 over length-prefixed parts.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Creates `root/stem`, or `root/stem-r2`, `-r3`, ... when it already exists.
pub fn create(root: &Path, stem: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
    for k in 1.. {
        let name = if k == 1 { stem.to_string() } else { format!("{stem}-r{k}") };
        let dir = root.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => {
                if k > 1 {
                    eprintln!("note: {} exists, writing to {}", root.join(stem).display(), dir.display());
                }
                return Ok(dir);
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(anyhow::Error::new(e).context(format!("creating {}", dir.display())).into()),
        }
    }
    unreachable!()
}
