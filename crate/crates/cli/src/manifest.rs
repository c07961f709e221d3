use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use romavg_core::{BasisKind, BasisSet, CaseFile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisMeta {
    pub kind: BasisKind,
    pub d: usize,
    pub rank_tol: f64,
}

impl From<&BasisSet> for BasisMeta {
    fn from(b: &BasisSet) -> Self {
        Self {
            kind: b.kind,
            d: b.d(),
            rank_tol: b.rank_tol,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one command invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub case_id: String,
    pub case: CaseFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisMeta>,
    pub m_list: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub outputs: Vec<OutputFile>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, case: &CaseFile) -> Self {
        Self {
            command: command.to_string(),
            case_id: case.id.clone(),
            case: case.clone(),
            basis: None,
            m_list: case.m_list.clone(),
            n: None,
            outputs: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(OutputFile {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.{}.manifest.json", self.case_id, self.command));
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
