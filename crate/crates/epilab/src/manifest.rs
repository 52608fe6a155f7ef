//! Output directories and their manifests.
//!
//! Every command writes into `<out>/<subcommand>/<scenario>/` and finishes
//! with a `manifest.toml` listing what it produced, the inputs that matter
//! for reproduction and a digest of each file. No timestamps are recorded,
//! so repeating a command reproduces the directory byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub subcommand: String,
    pub scenario: String,
    pub config_hash: String,
    /// Command inputs other than the configuration, as text.
    pub inputs: BTreeMap<String, String>,
    /// File name to SHA-256 of its content.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files of one command run.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: &Path, subcommand: &str, scenario: &str, config_hash: &str) -> Result<Self> {
        let dir = root.join(subcommand).join(scenario);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            manifest: Manifest {
                subcommand: subcommand.into(),
                scenario: scenario.into(),
                config_hash: config_hash.into(),
                inputs: BTreeMap::new(),
                files: BTreeMap::new(),
            },
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn input(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.manifest.inputs.insert(key.into(), value.to_string());
        self
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        self.manifest.files.insert(name.into(), sha256_hex(content.as_bytes()));
        Ok(path)
    }

    /// Writes the manifest and returns it.
    pub fn finish(self) -> Result<Manifest> {
        let path = self.dir.join(MANIFEST);
        let text = toml::to_string(&self.manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(self.manifest)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(toml::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_files_and_manifest() {
        let root = std::env::temp_dir().join(format!("epilab-manifest-{}", std::process::id()));
        let mut out = OutputDir::create(&root, "batch", "baseline", "abc").unwrap();
        out.input("seed", 7).input("n", 3);
        out.write("a.csv", "x\n1\n").unwrap();
        let dir = out.path().to_path_buf();
        let m = out.finish().unwrap();
        assert_eq!(dir, root.join("batch").join("baseline"));
        assert_eq!(m.files["a.csv"], sha256_hex(b"x\n1\n"));
        assert_eq!(read_manifest(&dir.join(MANIFEST)).unwrap(), m);
        assert_eq!(m.inputs["seed"], "7");
        std::fs::remove_dir_all(&root).unwrap();
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
