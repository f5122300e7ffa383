//! URL canonicalization: scheme/host case folding, default-file collapsing,
//! query/fragment stripping and redirect/alias resolution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

pub const DEFAULT_FILES: [&str; 4] = ["index.html", "index.htm", "default.html", "default.htm"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrlError {
    #[error("malformed URL {url:?}: {reason}")]
    Malformed { url: String, reason: String },
    #[error("alias cycle through {0:?}")]
    AliasCycle(String),
}

/// Alias URL to canonical URL. Targets never appear as keys, so a single
/// lookup already reaches the fixpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasMap {
    entries: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a map from raw `(alias, target)` pairs. Both sides are
    /// canonicalized with `default_files`, chains are resolved, and cycles
    /// are rejected.
    pub fn from_pairs<I, A, B>(pairs: I, default_files: &[String]) -> Result<Self, UrlError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut raw = BTreeMap::new();
        for (alias, target) in pairs {
            let alias = canonical_form(alias.as_ref(), default_files)?;
            let target = canonical_form(target.as_ref(), default_files)?;
            if alias != target {
                raw.insert(alias, target);
            }
        }

        let mut entries = BTreeMap::new();
        for alias in raw.keys() {
            let mut current = alias;
            let mut hops = 0usize;
            while let Some(next) = raw.get(current) {
                hops += 1;
                if hops > raw.len() {
                    return Err(UrlError::AliasCycle(alias.clone()));
                }
                current = next;
            }
            entries.insert(alias.clone(), current.clone());
        }
        Ok(Self { entries })
    }

    pub fn get(&self, url: &str) -> Option<&str> {
        self.entries.get(url).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

/// Canonicalizes URLs against a default-file list and an alias map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlNormalizer {
    default_files: Vec<String>,
    aliases: AliasMap,
}

impl Default for UrlNormalizer {
    fn default() -> Self {
        Self {
            default_files: DEFAULT_FILES.iter().map(|s| s.to_string()).collect(),
            aliases: AliasMap::new(),
        }
    }
}

impl UrlNormalizer {
    pub fn new(default_files: Vec<String>, aliases: AliasMap) -> Self {
        Self {
            default_files,
            aliases,
        }
    }

    pub fn with_aliases(aliases: AliasMap) -> Self {
        Self {
            aliases,
            ..Self::default()
        }
    }

    pub fn default_files(&self) -> &[String] {
        &self.default_files
    }

    pub fn aliases(&self) -> &AliasMap {
        &self.aliases
    }

    pub fn normalize(&self, raw: &str) -> Result<String, UrlError> {
        let canonical = canonical_form(raw, &self.default_files)?;
        Ok(match self.aliases.get(&canonical) {
            Some(target) => target.to_string(),
            None => canonical,
        })
    }
}

/// Normalizes with the stock default-file list.
pub fn normalize_url(raw: &str, aliases: &AliasMap) -> Result<String, UrlError> {
    let canonical = canonical_form(raw, &default_file_list())?;
    Ok(match aliases.get(&canonical) {
        Some(target) => target.to_string(),
        None => canonical,
    })
}

fn default_file_list() -> Vec<String> {
    DEFAULT_FILES.iter().map(|s| s.to_string()).collect()
}

fn canonical_form(raw: &str, default_files: &[String]) -> Result<String, UrlError> {
    let trimmed = raw.trim();
    let mut url = Url::parse(trimmed).map_err(|e| UrlError::Malformed {
        url: raw.to_string(),
        reason: e.to_string(),
    })?;
    if url.cannot_be_a_base() {
        return Err(UrlError::Malformed {
            url: raw.to_string(),
            reason: "not a hierarchical URL".to_string(),
        });
    }
    url.set_query(None);
    url.set_fragment(None);

    let path = url.path().to_string();
    let (folder, file) = split_folder(&path);
    if default_files.iter().any(|d| d.eq_ignore_ascii_case(file)) {
        url.set_path(folder);
    }
    Ok(url.to_string())
}

/// Splits a URL path into its folder (ending in `/`) and final file segment.
pub(crate) fn split_folder(path: &str) -> (&str, &str) {
    match path.rfind('/') {
        Some(i) => (&path[..=i], &path[i + 1..]),
        None => ("/", path),
    }
}

/// Link direction relative to the folder tree of the source page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DirectionClass {
    /// Same host, target folder equals or lies below the source folder.
    DownOrSame,
    /// Ancestor folders, sibling subtrees, or another host.
    UpOrAway,
}

/// Classifies a link between two canonical URLs. Unparseable input is
/// treated as away.
pub fn classify_edge(src: &str, dst: &str) -> DirectionClass {
    let (Ok(s), Ok(d)) = (Url::parse(src), Url::parse(dst)) else {
        return DirectionClass::UpOrAway;
    };
    if s.scheme() != d.scheme() || s.host_str() != d.host_str() || s.port() != d.port() {
        return DirectionClass::UpOrAway;
    }
    let (src_folder, _) = split_folder(s.path());
    let (dst_folder, _) = split_folder(d.path());
    if dst_folder.starts_with(src_folder) {
        DirectionClass::DownOrSame
    } else {
        DirectionClass::UpOrAway
    }
}
