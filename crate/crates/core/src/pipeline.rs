//! End-to-end assembly: load a collection, restrict it to a set of sources,
//! build evidence for every person with either the structured or the
//! name-only system, index it and run topic files through it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{parse_aliases, parse_corpus, parse_links, Corpus, CorpusError, RawLink, Source};
use crate::eval::{macro_average, MacroTable, Qrels, RunEntry, RunFile, Topics};
use crate::evidence::{
    build_baseline_evidence, build_evidence, EvidenceConfig, EvidenceContext, EvidenceSet, TypeFactorTable,
};
use crate::graph::{build_web_graph, WebGraph};
use crate::org::{attach_db_documents, dangling_seeds, extract_seeds, parse_org, OrgError, OrgModel};
use crate::retrieval::{build_index, score_experts, FragmentIndex, IndexConfig, IndexError};
use crate::text::MentionIndex;
use crate::urls::{UrlNormalizer, DEFAULT_FILES};
use crate::Score;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("org file: {0}")]
    Org(#[from] OrgError),
    #[error("aliases file: {0}")]
    Aliases(String),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("source set is empty")]
    EmptySources,
}

/// Evidence-building system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    /// Name mentions only, all documents weighted equally.
    Base,
    /// Seed propagation, name mentions, database links and type factors.
    New,
}

impl System {
    pub fn as_str(self) -> &'static str {
        match self {
            System::Base => "base",
            System::New => "new",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "base" => Ok(System::Base),
            "new" => Ok(System::New),
            other => Err(format!("unknown system {other:?} (expected base or new)")),
        }
    }
}

/// A non-empty subset of document sources.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SourceSet(BTreeSet<Source>);

impl SourceSet {
    pub fn new<I: IntoIterator<Item = Source>>(sources: I) -> Result<Self, PipelineError> {
        let set: BTreeSet<Source> = sources.into_iter().collect();
        if set.is_empty() {
            return Err(PipelineError::EmptySources);
        }
        Ok(Self(set))
    }

    pub fn all() -> Self {
        Self(Source::ALL.into_iter().collect())
    }

    pub fn sources(&self) -> &BTreeSet<Source> {
        &self.0
    }

    pub fn contains(&self, s: Source) -> bool {
        self.0.contains(&s)
    }

    pub fn is_subset(&self, other: &SourceSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Short label: `intranet`, `extranet`, `web` for both, `+db` suffix.
    pub fn label(&self) -> String {
        let web = match (self.contains(Source::Intranet), self.contains(Source::Extranet)) {
            (true, true) => Some("web"),
            (true, false) => Some("intranet"),
            (false, true) => Some("extranet"),
            (false, false) => None,
        };
        match (web, self.contains(Source::Db)) {
            (Some(w), true) => format!("{w}+db"),
            (Some(w), false) => w.to_string(),
            (None, _) => "db".to_string(),
        }
    }
}

impl fmt::Display for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for SourceSet {
    type Err = String;

    /// Accepts names separated by `,` or `+`; `web` means intranet and extranet.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = BTreeSet::new();
        for part in s.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("web") {
                set.insert(Source::Intranet);
                set.insert(Source::Extranet);
            } else {
                set.insert(part.parse::<Source>()?);
            }
        }
        SourceSet::new(set).map_err(|e| e.to_string())
    }
}

impl TryFrom<String> for SourceSet {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SourceSet> for String {
    fn from(s: SourceSet) -> String {
        s.label()
    }
}

/// The seven system/source combinations of the data-source study.
pub fn standard_runs() -> Vec<(System, SourceSet)> {
    let s = |t: &str| t.parse::<SourceSet>().expect("valid source label");
    vec![
        (System::Base, s("intranet")),
        (System::Base, s("extranet")),
        (System::Base, s("web")),
        (System::New, s("extranet")),
        (System::New, s("extranet+db")),
        (System::New, s("web")),
        (System::New, s("web+db")),
    ]
}

pub fn run_tag(system: System, sources: &SourceSet) -> String {
    format!("{}-{}", system.as_str(), sources.label())
}

/// Everything configurable about a build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub evidence: EvidenceConfig<Score>,
    pub index: IndexConfig<Score>,
    pub default_files: Vec<String>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            evidence: EvidenceConfig::default(),
            index: IndexConfig::default(),
            default_files: DEFAULT_FILES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl BuildConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.evidence
            .propagation
            .validate()
            .and_then(|_| self.index.validate())
            .map_err(PipelineError::Config)
    }
}

/// Parsed inputs before source restriction.
#[derive(Debug, Clone)]
pub struct Collection {
    pub corpus: Corpus,
    pub graph: WebGraph,
    pub org: OrgModel,
    pub normalizer: UrlNormalizer,
    pub warnings: Vec<String>,
}

/// Raw input texts of a collection.
#[derive(Debug, Clone, Default)]
pub struct CollectionText<'a> {
    pub corpus: &'a str,
    pub links: &'a str,
    pub aliases: &'a str,
    pub org: &'a [u8],
}

impl Collection {
    pub fn parse(input: &CollectionText<'_>, cfg: &BuildConfig) -> Result<Self, PipelineError> {
        let aliases = parse_aliases(input.aliases, &cfg.default_files)
            .map_err(|e| PipelineError::Aliases(e.to_string()))?;
        let normalizer = UrlNormalizer::new(cfg.default_files.clone(), aliases);
        let corpus = parse_corpus(input.corpus, &normalizer)?;
        let (links, link_errors) = parse_links(input.links);
        let parsed_org = parse_org(input.org, &normalizer)?;
        let mut warnings: Vec<String> = link_errors.iter().map(|e| format!("links {e}")).collect();
        let graph = Self::graph_from(&links, &normalizer, &mut warnings);
        warnings.extend(parsed_org.warnings.iter().map(|w| format!("org: {w}")));
        Ok(Self::assemble(corpus, graph, parsed_org.model, normalizer, warnings))
    }

    pub fn load(
        corpus: &Path,
        links: &Path,
        aliases: Option<&Path>,
        org: &Path,
        cfg: &BuildConfig,
    ) -> Result<Self, PipelineError> {
        let read = |p: &Path| {
            std::fs::read(p).map_err(|source| PipelineError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let corpus_text = String::from_utf8_lossy(&read(corpus)?).into_owned();
        let links_text = String::from_utf8_lossy(&read(links)?).into_owned();
        let aliases_text = match aliases {
            Some(p) => String::from_utf8_lossy(&read(p)?).into_owned(),
            None => String::new(),
        };
        let org_bytes = read(org)?;
        Self::parse(
            &CollectionText {
                corpus: &corpus_text,
                links: &links_text,
                aliases: &aliases_text,
                org: &org_bytes,
            },
            cfg,
        )
    }

    fn graph_from(links: &[RawLink], normalizer: &UrlNormalizer, warnings: &mut Vec<String>) -> WebGraph {
        let (graph, rejected) = build_web_graph(links, normalizer);
        warnings.extend(rejected.iter().map(|r| format!("links line {}: {}", r.line, r.error)));
        graph
    }

    pub fn assemble(
        corpus: Corpus,
        graph: WebGraph,
        org: OrgModel,
        normalizer: UrlNormalizer,
        mut warnings: Vec<String>,
    ) -> Self {
        let seeds = extract_seeds(&org);
        for s in dangling_seeds(&seeds, &corpus) {
            warnings.push(format!(
                "seed {} of {} ({:?}) is not in the corpus",
                s.url, s.person_id, s.seed_kind
            ));
        }
        Self {
            corpus,
            graph,
            org,
            normalizer,
            warnings,
        }
    }
}

/// A searchable build over one source subset.
#[derive(Debug, Clone)]
pub struct Engine {
    pub system: System,
    pub sources: SourceSet,
    pub corpus: Corpus,
    pub org: OrgModel,
    pub evidence: Vec<EvidenceSet<Score>>,
    pub index: FragmentIndex<Score>,
    pub warnings: Vec<String>,
}

impl Engine {
    pub fn tag(&self) -> String {
        run_tag(self.system, &self.sources)
    }

    pub fn evidence_for(&self, person_id: &str) -> Option<&EvidenceSet<Score>> {
        self.evidence
            .binary_search_by(|s| s.person_id.as_str().cmp(person_id))
            .ok()
            .map(|i| &self.evidence[i])
    }
}

/// Builds evidence and index from the documents of `sources` only. The link
/// graph is cut down to pages present in the restricted corpus.
pub fn build_engine(
    collection: &Collection,
    sources: &SourceSet,
    system: System,
    cfg: &BuildConfig,
) -> Result<Engine, PipelineError> {
    cfg.validate()?;
    let corpus = collection.corpus.restrict(sources.sources());
    let graph = collection
        .graph
        .induced(|u| corpus.contains_url(u))
        .with_nodes(corpus.urls());
    let org = &collection.org;
    let mentions = MentionIndex::new(&corpus);
    let mut warnings = Vec::new();

    let evidence: Vec<EvidenceSet<Score>> = match system {
        System::Base => org
            .persons
            .values()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|p| build_baseline_evidence(&p.person_id, &mentions.mentions(p)))
            .collect(),
        System::New => {
            let mut seeds: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for s in extract_seeds(org) {
                seeds.entry(s.person_id).or_default().push(s.url);
            }
            let db = if sources.contains(Source::Db) {
                let attached = attach_db_documents(org, &corpus);
                warnings.extend(attached.warnings.iter().map(|w| w.to_string()));
                attached
            } else {
                Default::default()
            };
            let table = TypeFactorTable::new(org, cfg.evidence.type_factors.clone());
            let ctx = EvidenceContext {
                corpus: &corpus,
                graph: &graph,
                type_factors: &table,
                config: &cfg.evidence,
            };
            let no_seeds = Vec::new();
            org.persons
                .values()
                .collect::<Vec<_>>()
                .par_iter()
                .map(|p| {
                    let pid = p.person_id.as_str();
                    build_evidence(
                        pid,
                        seeds.get(pid).unwrap_or(&no_seeds),
                        &mentions.mentions(p),
                        &db.docs_for(pid),
                        &ctx,
                    )
                })
                .collect()
        }
    };

    let index = build_index(&corpus, &evidence, cfg.index)?;
    Ok(Engine {
        system,
        sources: sources.clone(),
        corpus,
        org: org.clone(),
        evidence,
        index,
        warnings,
    })
}

/// Runs every topic, keeping the top `depth` people per topic.
pub fn run_topics(engine: &Engine, topics: &Topics, depth: usize) -> RunFile {
    let mut run = RunFile::new(engine.tag());
    for t in topics.iter() {
        let ranked: Vec<RunEntry> = score_experts(&t.query_text, None, &engine.index, &engine.org)
            .into_iter()
            .take(depth)
            .map(|r| RunEntry {
                person_id: r.person_id,
                score: r.score,
            })
            .collect();
        run.topics.insert(t.topic_id.clone(), ranked);
    }
    run
}

pub const DEFAULT_RUN_DEPTH: usize = 100;

#[derive(Debug, Clone)]
pub struct AblationRun {
    pub run: RunFile,
    pub summary: MacroTable<Score>,
    pub engine: Engine,
}

/// Rebuilds with the given sources and system, runs all topics and
/// summarizes precision at `cutoffs`.
pub fn run_ablation(
    collection: &Collection,
    sources: &SourceSet,
    system: System,
    topics: &Topics,
    qrels: &Qrels,
    cfg: &BuildConfig,
    cutoffs: &[usize],
) -> Result<AblationRun, PipelineError> {
    let engine = build_engine(collection, sources, system, cfg)?;
    let run = run_topics(&engine, topics, DEFAULT_RUN_DEPTH);
    let summary = macro_average(&run, qrels, topics, cutoffs);
    Ok(AblationRun {
        run,
        summary,
        engine,
    })
}
