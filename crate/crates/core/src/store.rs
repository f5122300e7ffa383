//! On-disk index snapshots.
//!
//! A snapshot directory holds the search index, the org model, the evidence
//! sets and short document records, plus a manifest with hashes of the build
//! inputs, the configuration and every payload file. Loading recomputes the
//! payload hash and refuses a directory that does not match its manifest.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{DbKind, Source};
use crate::evidence::EvidenceSet;
use crate::org::OrgModel;
use crate::pipeline::{BuildConfig, Engine, SourceSet, System};
use crate::retrieval::{FragmentIndex, INDEX_FORMAT_VERSION};
use crate::Score;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const INDEX_FILE: &str = "index.json";
pub const ORG_FILE: &str = "org.json";
pub const EVIDENCE_FILE: &str = "evidence.jsonl";
pub const DOCUMENTS_FILE: &str = "documents.jsonl";

const PAYLOAD_FILES: [&str; 4] = [INDEX_FILE, ORG_FILE, EVIDENCE_FILE, DOCUMENTS_FILE];

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Decode { path: String, reason: String },
    #[error("index format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("content hash mismatch: manifest says {expected}, files hash to {actual}")]
    ContentHash { expected: String, actual: String },
    #[error("index was built with config {found}, but {expected} was requested")]
    ConfigMismatch { expected: String, found: String },
}

/// Digest of one build input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub name: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub documents: usize,
    pub persons: usize,
    pub fragments: usize,
    pub vocabulary: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub system: System,
    pub sources: SourceSet,
    pub run_tag: String,
    pub config: BuildConfig,
    pub config_hash: String,
    pub inputs: Vec<InputDigest>,
    pub content_hash: String,
    pub created_unix: u64,
    pub stats: SnapshotStats,
    pub warnings: Vec<String>,
}

/// What the service needs to show a document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocSummary {
    pub doc_id: String,
    pub url: String,
    pub title: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db_kind: Option<DbKind>,
}

/// A loaded, verified index directory.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub manifest: Manifest,
    pub index: FragmentIndex<Score>,
    pub org: OrgModel,
    pub evidence: BTreeMap<String, EvidenceSet<Score>>,
    pub documents: BTreeMap<String, DocSummary>,
}

fn hex(digest: impl AsRef<[u8]>) -> String {
    digest.as_ref().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(Sha256::digest(bytes))
}

pub fn config_hash(cfg: &BuildConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("config serializes"))
}

pub fn digest_file(name: &str, path: &Path) -> Result<InputDigest, StoreError> {
    let bytes = std::fs::read(path).map_err(|source| io_err(path, source))?;
    Ok(InputDigest {
        name: name.to_string(),
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn content_hash(payload: &[(&str, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in payload {
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex(h.finalize())
}

fn jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("record serializes");
        out.push(b'\n');
    }
    out
}

fn payload(engine: &Engine) -> Vec<(&'static str, Vec<u8>)> {
    let docs = engine.corpus.iter().map(|d| DocSummary {
        doc_id: d.doc_id.clone(),
        url: d.url.clone(),
        title: d.title.clone(),
        source: d.source,
        db_kind: d.db_kind,
    });
    vec![
        (INDEX_FILE, serde_json::to_vec(&engine.index).expect("index serializes")),
        (ORG_FILE, serde_json::to_vec(&engine.org).expect("org serializes")),
        (EVIDENCE_FILE, jsonl(engine.evidence.iter())),
        (DOCUMENTS_FILE, jsonl(docs)),
    ]
}

/// Writes `engine` into `dir`. The manifest is written last, so a directory
/// interrupted mid-write fails verification on load.
pub fn save_snapshot(
    engine: &Engine,
    cfg: &BuildConfig,
    inputs: Vec<InputDigest>,
    dir: &Path,
) -> Result<Manifest, StoreError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        std::fs::remove_file(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    }
    let payload = payload(engine);
    for (name, bytes) in &payload {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
    }
    let manifest = Manifest {
        format_version: INDEX_FORMAT_VERSION,
        system: engine.system,
        sources: engine.sources.clone(),
        run_tag: engine.tag(),
        config: cfg.clone(),
        config_hash: config_hash(cfg),
        inputs,
        content_hash: content_hash(&payload),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        stats: SnapshotStats {
            documents: engine.corpus.len(),
            persons: engine.org.persons.len(),
            fragments: engine.index.fragment_count(),
            vocabulary: engine.index.vocabulary_size(),
        },
        warnings: engine.warnings.clone(),
    };
    let text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest)
}

fn decode<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, StoreError> {
    serde_json::from_slice(bytes).map_err(|e| StoreError::Decode {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn decode_lines<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<Vec<T>, StoreError> {
    bytes
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| decode(path, l))
        .collect()
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, StoreError> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = std::fs::read(&path).map_err(|e| io_err(&path, e))?;
    decode(&path, &bytes)
}

/// Loads and verifies a snapshot.
pub fn load_snapshot(dir: &Path) -> Result<Snapshot, StoreError> {
    let manifest = read_manifest(dir)?;
    if manifest.format_version != INDEX_FORMAT_VERSION {
        return Err(StoreError::Version {
            found: manifest.format_version,
            expected: INDEX_FORMAT_VERSION,
        });
    }
    let mut payload = Vec::with_capacity(PAYLOAD_FILES.len());
    for name in PAYLOAD_FILES {
        let path = dir.join(name);
        payload.push((name, std::fs::read(&path).map_err(|e| io_err(&path, e))?));
    }
    let actual = content_hash(&payload);
    if actual != manifest.content_hash {
        return Err(StoreError::ContentHash {
            expected: manifest.content_hash,
            actual,
        });
    }
    let index: FragmentIndex<Score> = decode(&dir.join(INDEX_FILE), &payload[0].1)?;
    if index.version != INDEX_FORMAT_VERSION {
        return Err(StoreError::Version {
            found: index.version,
            expected: INDEX_FORMAT_VERSION,
        });
    }
    let org: OrgModel = decode(&dir.join(ORG_FILE), &payload[1].1)?;
    let evidence: Vec<EvidenceSet<Score>> = decode_lines(&dir.join(EVIDENCE_FILE), &payload[2].1)?;
    let documents: Vec<DocSummary> = decode_lines(&dir.join(DOCUMENTS_FILE), &payload[3].1)?;
    Ok(Snapshot {
        manifest,
        index,
        org,
        evidence: evidence.into_iter().map(|e| (e.person_id.clone(), e)).collect(),
        documents: documents.into_iter().map(|d| (d.doc_id.clone(), d)).collect(),
    })
}

/// Loads a snapshot and checks it was built with `cfg`.
pub fn load_snapshot_for(dir: &Path, cfg: &BuildConfig) -> Result<Snapshot, StoreError> {
    let snap = load_snapshot(dir)?;
    let expected = config_hash(cfg);
    if snap.manifest.config_hash != expected {
        return Err(StoreError::ConfigMismatch {
            expected,
            found: snap.manifest.config_hash,
        });
    }
    Ok(snap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::build_engine;
    use crate::retrieval::rank_experts;
    use crate::synth::{gen_synthetic, SynthConfig};

    fn engine() -> (Engine, BuildConfig) {
        let cfg = BuildConfig::default();
        let s = gen_synthetic(
            &SynthConfig {
                docs: 120,
                topics: 10,
                ..SynthConfig::default()
            },
            3,
        )
        .unwrap();
        let col = s.collection(&cfg).unwrap();
        (build_engine(&col, &SourceSet::all(), System::New, &cfg).unwrap(), cfg)
    }

    #[test]
    fn round_trip_preserves_rankings() {
        let (engine, cfg) = engine();
        let dir = tempfile::tempdir().unwrap();
        save_snapshot(&engine, &cfg, Vec::new(), dir.path()).unwrap();
        let snap = load_snapshot_for(dir.path(), &cfg).unwrap();
        assert_eq!(snap.index, engine.index);
        assert_eq!(snap.org, engine.org);
        assert_eq!(snap.evidence.len(), engine.evidence.len());
        let q = "meeting report";
        assert_eq!(
            rank_experts(q, 5, None, &snap.index, &snap.org).unwrap(),
            rank_experts(q, 5, None, &engine.index, &engine.org).unwrap()
        );
    }

    #[test]
    fn tampered_payload_rejected() {
        let (engine, cfg) = engine();
        let dir = tempfile::tempdir().unwrap();
        save_snapshot(&engine, &cfg, Vec::new(), dir.path()).unwrap();
        let path = dir.path().join(DOCUMENTS_FILE);
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(b"\n");
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_snapshot(dir.path()), Err(StoreError::ContentHash { .. })));
    }

    #[test]
    fn other_config_rejected() {
        let (engine, cfg) = engine();
        let dir = tempfile::tempdir().unwrap();
        save_snapshot(&engine, &cfg, Vec::new(), dir.path()).unwrap();
        let mut other = cfg.clone();
        other.index.k1 = 2.0;
        assert!(matches!(
            load_snapshot_for(dir.path(), &other),
            Err(StoreError::ConfigMismatch { .. })
        ));
    }
}
