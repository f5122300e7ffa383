//! Crawled pages and corporate database records, plus the line-oriented
//! corpus, links and aliases file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::urls::{AliasMap, UrlError, UrlNormalizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Intranet,
    Extranet,
    Db,
}

impl Source {
    pub const ALL: [Source; 3] = [Source::Intranet, Source::Extranet, Source::Db];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Intranet => "intranet",
            Source::Extranet => "extranet",
            Source::Db => "db",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "intranet" => Ok(Source::Intranet),
            "extranet" => Ok(Source::Extranet),
            "db" => Ok(Source::Db),
            other => Err(format!("unknown source {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbKind {
    ProjectDescription,
    Publication,
    Contact,
}

impl DbKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DbKind::ProjectDescription => "project_description",
            DbKind::Publication => "publication",
            DbKind::Contact => "contact",
        }
    }
}

impl FromStr for DbKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "project_description" => Ok(DbKind::ProjectDescription),
            "publication" => Ok(DbKind::Publication),
            "contact" => Ok(DbKind::Contact),
            other => Err(format!("unknown database record kind {other:?}")),
        }
    }
}

/// One crawled page or corporate database record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub url: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub db_kind: Option<DbKind>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub content: String,
    /// Project a database record belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project_id: Option<String>,
    /// Authors or contacts named by a database record.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub person_ids: Vec<String>,
}

impl Document {
    /// Title and body, as indexed and searched for name mentions.
    pub fn text(&self) -> String {
        if self.title.is_empty() {
            self.content.clone()
        } else {
            format!("{}\n{}", self.title, self.content)
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("corpus line {line}: {source}")]
    Url {
        line: usize,
        #[source]
        source: UrlError,
    },
    #[error("duplicate doc_id {0:?}")]
    DuplicateDoc(String),
    #[error("document {doc_id:?}: {reason}")]
    Invalid { doc_id: String, reason: String },
}

/// An immutable set of documents keyed by doc id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    docs: BTreeMap<String, Document>,
    by_url: BTreeMap<String, BTreeSet<String>>,
}

impl Corpus {
    /// Builds a corpus, canonicalizing every URL and checking record
    /// invariants. Input order does not matter.
    pub fn from_documents<I>(docs: I, urls: &UrlNormalizer) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = Document>,
    {
        let mut corpus = Corpus::default();
        for mut doc in docs {
            doc.url = urls.normalize(&doc.url).map_err(|e| CorpusError::Invalid {
                doc_id: doc.doc_id.clone(),
                reason: e.to_string(),
            })?;
            corpus.insert(doc)?;
        }
        Ok(corpus)
    }

    fn insert(&mut self, doc: Document) -> Result<(), CorpusError> {
        if doc.doc_id.is_empty() {
            return Err(CorpusError::Invalid {
                doc_id: doc.doc_id,
                reason: "empty doc_id".into(),
            });
        }
        if (doc.source == Source::Db) != doc.db_kind.is_some() {
            return Err(CorpusError::Invalid {
                doc_id: doc.doc_id,
                reason: "db_kind must be set exactly when source is db".into(),
            });
        }
        if self.docs.contains_key(&doc.doc_id) {
            return Err(CorpusError::DuplicateDoc(doc.doc_id));
        }
        self.by_url
            .entry(doc.url.clone())
            .or_default()
            .insert(doc.doc_id.clone());
        self.docs.insert(doc.doc_id.clone(), doc);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.docs.get(doc_id)
    }

    /// Documents in doc-id order.
    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn docs_at(&self, url: &str) -> impl Iterator<Item = &str> {
        self.by_url
            .get(url)
            .into_iter()
            .flat_map(|ids| ids.iter().map(String::as_str))
    }

    pub fn contains_url(&self, url: &str) -> bool {
        self.by_url.contains_key(url)
    }

    pub fn urls(&self) -> impl Iterator<Item = &str> {
        self.by_url.keys().map(String::as_str)
    }

    /// Sub-corpus holding only documents from `sources`.
    pub fn restrict(&self, sources: &BTreeSet<Source>) -> Corpus {
        let mut out = Corpus::default();
        for doc in self.docs.values().filter(|d| sources.contains(&d.source)) {
            out.insert(doc.clone()).expect("restriction preserves invariants");
        }
        out
    }
}

/// Parses a corpus file: one JSON object per line, blank lines ignored.
pub fn parse_corpus(text: &str, urls: &UrlNormalizer) -> Result<Corpus, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut doc: Document = serde_json::from_str(line).map_err(|e| CorpusError::Record {
            line: i + 1,
            reason: e.to_string(),
        })?;
        doc.url = urls
            .normalize(&doc.url)
            .map_err(|source| CorpusError::Url { line: i + 1, source })?;
        docs.push(doc);
    }
    Corpus::from_documents(docs, urls)
}

pub fn write_corpus(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(doc).expect("document serializes"));
        out.push('\n');
    }
    out
}

/// One `src<TAB>dst` line from a links file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLink {
    pub line: usize,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct LineError {
    pub line: usize,
    pub reason: String,
}

/// Splits a tab-separated two-column file, skipping blanks and `#` comments.
fn parse_pairs(text: &str) -> (Vec<RawLink>, Vec<LineError>) {
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 2 || cols[0].trim().is_empty() || cols[1].trim().is_empty() {
            errors.push(LineError {
                line: i + 1,
                reason: format!("expected two tab-separated URLs, got {trimmed:?}"),
            });
            continue;
        }
        pairs.push(RawLink {
            line: i + 1,
            src: cols[0].trim().to_string(),
            dst: cols[1].trim().to_string(),
        });
    }
    (pairs, errors)
}

pub fn parse_links(text: &str) -> (Vec<RawLink>, Vec<LineError>) {
    parse_pairs(text)
}

pub fn parse_aliases(text: &str, default_files: &[String]) -> Result<AliasMap, LineError> {
    let (pairs, errors) = parse_pairs(text);
    if let Some(first) = errors.into_iter().next() {
        return Err(first);
    }
    AliasMap::from_pairs(pairs.iter().map(|p| (&p.src, &p.dst)), default_files).map_err(|e| {
        LineError {
            line: 0,
            reason: e.to_string(),
        }
    })
}
