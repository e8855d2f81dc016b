use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// A results directory. Creation is all-or-nothing: the layout is staged
/// next to the target and renamed into place.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

const LAYOUT: &[&str] = &["objects", "runs"];

impl OutDir {
    pub fn create(path: &Path) -> io::Result<OutDir> {
        if !path.is_dir() {
            let parent = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            fs::create_dir_all(&parent)?;
            let staging = tempfile::Builder::new().prefix(".vbisect-staging-").tempdir_in(&parent)?;
            for dir in LAYOUT {
                fs::create_dir(staging.path().join(dir))?;
            }
            let staged = staging.keep();
            if let Err(e) = fs::rename(&staged, path) {
                fs::remove_dir_all(&staged).ok();
                // Lost a race with another process creating the same directory.
                if !path.is_dir() {
                    return Err(e);
                }
            }
        }
        Ok(OutDir { root: path.to_path_buf() })
    }

    /// An existing directory, for read-mostly verbs.
    pub fn existing(path: &Path) -> OutDir {
        OutDir { root: path.to_path_buf() }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn join(&self, rel: impl AsRef<Path>) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write_json(&self, rel: impl AsRef<Path>, value: &impl Serialize) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// Write via a temporary sibling so readers never see a partial file.
    pub fn write(&self, rel: impl AsRef<Path>, bytes: &[u8]) -> io::Result<PathBuf> {
        let target = self.root.join(rel);
        let dir = target.parent().unwrap_or(&self.root);
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.persist(&target).map_err(|e| e.error)?;
        Ok(target)
    }
}
