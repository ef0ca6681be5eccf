//! Binary feature cache keyed by video id and extraction-config digest.
//!
//! Layout (little endian): magic `EMVQMFC1`, then entries until EOF, each
//! `u32` id length, id bytes, 32-byte digest, 7 validity bytes, 120 `f64`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::temporal::{FeatureVector, FEATURE_LEN, N_SCALES};

pub const CACHE_MAGIC: &[u8; 8] = b"EMVQMFC1";

pub type Digest = [u8; 32];

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub digest: Digest,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureCache {
    entries: BTreeMap<String, CacheEntry>,
}

impl FeatureCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Cached features, only if they were extracted under `digest`.
    pub fn get(&self, id: &str, digest: &Digest) -> Option<&FeatureVector> {
        self.entries.get(id).filter(|e| &e.digest == digest).map(|e| &e.features)
    }

    /// Cached features regardless of digest.
    pub fn get_any(&self, id: &str) -> Option<&CacheEntry> {
        self.entries.get(id)
    }

    pub fn insert(&mut self, id: &str, digest: Digest, features: FeatureVector) {
        self.entries.insert(id.to_string(), CacheEntry { digest, features });
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &CacheEntry)> {
        self.entries.iter()
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CACHE_MAGIC)?;
        for (id, e) in &self.entries {
            w.write_all(&(id.len() as u32).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            w.write_all(&e.digest)?;
            for v in e.features.valid {
                w.write_all(&[u8::from(v)])?;
            }
            for v in &e.features.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<FeatureCache> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::MalformedHeader("feature cache too short".into()))?;
        if &magic != CACHE_MAGIC {
            return Err(Error::MalformedHeader("feature cache magic".into()));
        }
        let mut out = FeatureCache::new();
        loop {
            let mut len = [0u8; 4];
            match r.read(&mut len[..1])? {
                0 => break,
                _ => r.read_exact(&mut len[1..]).map_err(truncated)?,
            }
            let n = u32::from_le_bytes(len) as usize;
            if n > 1 << 20 {
                return Err(Error::Malformed("implausible id length in feature cache".into()));
            }
            let mut id = vec![0u8; n];
            r.read_exact(&mut id).map_err(truncated)?;
            let id = String::from_utf8(id).map_err(|_| Error::Malformed("non UTF-8 id".into()))?;
            let mut digest = [0u8; 32];
            r.read_exact(&mut digest).map_err(truncated)?;
            let mut flags = [0u8; N_SCALES];
            r.read_exact(&mut flags).map_err(truncated)?;
            let mut values = vec![0.0; FEATURE_LEN];
            let mut b8 = [0u8; 8];
            for v in values.iter_mut() {
                r.read_exact(&mut b8).map_err(truncated)?;
                *v = f64::from_le_bytes(b8);
            }
            let mut valid = [false; N_SCALES];
            for (d, s) in valid.iter_mut().zip(flags) {
                *d = s != 0;
            }
            out.insert(&id, digest, FeatureVector { values, valid });
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<FeatureCache> {
        let f = fs::File::open(path).map_err(|_| Error::MissingPath(path.to_path_buf()))?;
        FeatureCache::read(BufReader::new(f))
    }

    /// Load if present, else start empty.
    pub fn load_or_default(path: &Path) -> Result<FeatureCache> {
        if path.exists() {
            Self::load(path)
        } else {
            Ok(Self::new())
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

fn truncated(_: std::io::Error) -> Error {
    Error::Malformed("truncated feature cache entry".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = FeatureCache::new();
        let mut fv = FeatureVector::zeros();
        fv.values[3] = 1.25;
        fv.values[119] = -0.5;
        fv.valid[2] = true;
        c.insert("clip-α", [7; 32], fv.clone());
        c.insert("b", [1; 32], FeatureVector::zeros());
        let mut buf = Vec::new();
        c.write(&mut buf).unwrap();
        assert_eq!(&buf[..8], CACHE_MAGIC);
        assert_eq!(buf.len(), 8 + 2 * (4 + 32 + 7 + 120 * 8) + "clip-α".len() + 1);
        let back = FeatureCache::read(buf.as_slice()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.get("clip-α", &[7; 32]), Some(&fv));
        assert_eq!(back.get("clip-α", &[8; 32]), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FeatureCache::read(&b"EMVQMFC2"[..]).is_err());
        let mut buf = Vec::new();
        let mut c = FeatureCache::new();
        c.insert("x", [0; 32], FeatureVector::zeros());
        c.write(&mut buf).unwrap();
        buf.pop();
        assert!(matches!(FeatureCache::read(buf.as_slice()), Err(Error::Malformed(_))));
    }
}
