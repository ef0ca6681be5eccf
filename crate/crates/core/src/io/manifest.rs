//! Dataset manifest CSV: `video_id,ref_path,syn_path,group,dmos,dmos_stderr`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    pub ref_path: PathBuf,
    pub syn_path: PathBuf,
    pub group: String,
    pub dmos: f64,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub dmos_stderr: Option<f64>,
}

fn empty_as_none<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    let s: Option<String> = Option::deserialize(d)?;
    match s.as_deref().map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => v.parse().map(Some).map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Parse a manifest; relative paths are resolved against its directory.
    /// Every referenced path must exist and ids must be unique.
    pub fn load(path: &Path) -> Result<Manifest> {
        if !path.is_file() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for row in rdr.deserialize::<ManifestEntry>() {
            let mut e = row?;
            if !seen.insert(e.video_id.clone()) {
                return Err(Error::Malformed(format!("duplicate video_id {}", e.video_id)));
            }
            if !e.dmos.is_finite() {
                return Err(Error::Malformed(format!("non-finite dmos for {}", e.video_id)));
            }
            for p in [&mut e.ref_path, &mut e.syn_path] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                if !p.exists() {
                    return Err(Error::MissingPath(p.clone()));
                }
            }
            entries.push(e);
        }
        Ok(Manifest { entries })
    }

    /// Write with paths relative to the manifest's directory where possible.
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["video_id", "ref_path", "syn_path", "group", "dmos", "dmos_stderr"])?;
        for e in &self.entries {
            let rel = |p: &Path| p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned();
            w.write_record([
                e.video_id.clone(),
                rel(&e.ref_path),
                rel(&e.syn_path),
                e.group.clone(),
                format!("{}", e.dmos),
                e.dmos_stderr.map(|v| format!("{v}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.video_id.as_str()).collect()
    }

    /// Standard errors, if every entry has one.
    pub fn stderrs(&self) -> Option<Vec<f64>> {
        self.entries.iter().map(|e| e.dmos_stderr).collect()
    }
}
