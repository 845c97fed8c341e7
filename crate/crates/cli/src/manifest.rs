//! Content-addressed stage manifests.
//!
//! Each stage records digests of its inputs and outputs; downstream stages
//! verify those digests before consuming anything, so a stale or hand-edited
//! artifact is refused instead of silently propagated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes =
        std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_bytes(&bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_digest: String,
    pub seed: u64,
    /// Input name -> content digest.
    pub inputs: BTreeMap<String, String>,
    /// Output path (relative to out_dir) -> content digest.
    pub outputs: BTreeMap<String, String>,
}

fn manifest_path(out_dir: &Path, stage: &str) -> PathBuf {
    out_dir.join("manifests").join(format!("{stage}.json"))
}

impl Manifest {
    pub fn new(stage: &str, config_digest: &str, seed: u64) -> Self {
        Manifest {
            stage: stage.to_string(),
            config_digest: config_digest.to_string(),
            seed,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn record_input(&mut self, name: &str, path: &Path) -> Result<()> {
        self.inputs.insert(name.to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Writes `content` under out_dir and records its digest.
    pub fn write_output(&mut self, out_dir: &Path, rel: &str, content: &str) -> Result<()> {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, content)
            .with_context(|| format!("writing {}", path.display()))?;
        self.outputs.insert(rel.to_string(), sha256_bytes(content.as_bytes()));
        Ok(())
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        let path = manifest_path(out_dir, &self.stage);
        std::fs::create_dir_all(path.parent().unwrap())
            .with_context(|| format!("creating {}", path.parent().unwrap().display()))?;
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Loads and verifies the manifest of a prerequisite stage. Fails with an
/// actionable message when the stage has not run; fails on digest drift
/// (stale artifacts or changed config) unless `force` is set.
pub fn require_stage(
    out_dir: &Path,
    stage: &str,
    config_digest: &str,
    force: bool,
) -> Result<Manifest> {
    let path = manifest_path(out_dir, stage);
    if !path.exists() {
        bail!("missing artifacts for stage `{stage}`: run `rumorlens {stage}` first");
    }
    let json = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))?;
    let manifest: Manifest =
        serde_json::from_str(&json).with_context(|| format!("parsing {}", path.display()))?;
    if !force {
        if manifest.config_digest != config_digest {
            bail!(
                "stage `{stage}` was produced under a different configuration; \
                 re-run `rumorlens {stage}` or pass --force"
            );
        }
        for (rel, digest) in &manifest.outputs {
            let p = out_dir.join(rel);
            if !p.exists() {
                bail!(
                    "stage `{stage}` artifact {rel} is missing; \
                     re-run `rumorlens {stage}` or pass --force"
                );
            }
            let now = sha256_file(&p)?;
            if &now != digest {
                bail!(
                    "stage `{stage}` artifact {rel} is stale (content changed); \
                     re-run `rumorlens {stage}` or pass --force"
                );
            }
        }
    }
    Ok(manifest)
}

/// Reads a previously written stage output, relative to out_dir.
pub fn read_output(out_dir: &Path, rel: &str) -> Result<String> {
    let path = out_dir.join(rel);
    std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))
}
