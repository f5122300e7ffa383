//! Per-person weighted evidence.
//!
//! Weight flows outward from a person's seed pages (homepage, project and
//! group pages) along web-graph links. Each link multiplies the weight by
//! `down_same_factor` when it stays in or descends the source folder and by
//! `up_away_factor` otherwise; a page keeps the best product over all paths.
//! Name-mention and database-linked documents join at base weight 1, and every
//! fragment is finally scaled by the type factor of its page.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DbKind};
use crate::graph::WebGraph;
use crate::org::{OrgModel, SeedKind};
use crate::scalar::Scalar;
use crate::urls::DirectionClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig<W> {
    pub down_same_factor: W,
    pub up_away_factor: W,
    pub weight_floor: W,
}

impl<W: Scalar> Default for PropagationConfig<W> {
    fn default() -> Self {
        Self {
            down_same_factor: W::ratio(1, 2),
            up_away_factor: W::ratio(1, 10),
            weight_floor: W::ratio(1, 1000),
        }
    }
}

impl<W: Scalar> PropagationConfig<W> {
    pub fn validate(&self) -> Result<(), String> {
        let (zero, one) = (W::zero(), W::one());
        if !(zero < self.up_away_factor
            && self.up_away_factor <= self.down_same_factor
            && self.down_same_factor < one)
        {
            return Err("factors must satisfy 0 < up_away <= down_same < 1".into());
        }
        if !(zero < self.weight_floor && self.weight_floor < one) {
            return Err("weight floor must lie in (0, 1)".into());
        }
        Ok(())
    }

    pub fn factor(&self, class: DirectionClass) -> W {
        match class {
            DirectionClass::DownOrSame => self.down_same_factor,
            DirectionClass::UpOrAway => self.up_away_factor,
        }
    }
}

/// Best weight reaching a page and the seed it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reach<W> {
    pub weight: W,
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation<W> {
    pub reached: BTreeMap<String, Reach<W>>,
    /// Seeds that are not graph nodes.
    pub skipped_seeds: Vec<String>,
}

impl<W: Scalar> Propagation<W> {
    pub fn weights(&self) -> BTreeMap<String, W> {
        self.reached
            .iter()
            .map(|(u, r)| (u.clone(), r.weight))
            .collect()
    }
}

/// Heap entry ordered so the best label pops first: higher weight, then the
/// lexicographically smaller origin seed.
struct Label<W> {
    weight: W,
    origin: usize,
    node: usize,
}

impl<W: Scalar> Label<W> {
    fn beats(&self, weight: W, origin: usize) -> bool {
        match self.weight.partial_cmp(&weight) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Equal) => self.origin < origin,
            _ => false,
        }
    }
}

impl<W: Scalar> PartialEq for Label<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<W: Scalar> Eq for Label<W> {}
impl<W: Scalar> PartialOrd for Label<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<W: Scalar> Ord for Label<W> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .partial_cmp(&other.weight)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.origin.cmp(&self.origin))
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Max-product propagation from a set of seed URLs.
///
/// Every factor is below one, so extending a path strictly lowers its weight
/// and a best-first search settles each page at its optimum the first time it
/// is popped. Pages below the floor are neither kept nor expanded.
pub fn propagate_from_seeds<W, I, S>(graph: &WebGraph, seeds: I, cfg: &PropagationConfig<W>) -> Propagation<W>
where
    W: Scalar,
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seed_ids: BTreeSet<usize> = BTreeSet::new();
    let mut skipped = BTreeSet::new();
    for s in seeds {
        match graph.node_id(s.as_ref()) {
            Some(id) => {
                seed_ids.insert(id);
            }
            None => {
                skipped.insert(s.as_ref().to_string());
            }
        }
    }

    // Node ids follow URL order, so comparing origin ids compares seed URLs.
    let mut best: BTreeMap<usize, (W, usize)> = BTreeMap::new();
    let mut settled: BTreeSet<usize> = BTreeSet::new();
    let mut heap = BinaryHeap::new();
    for &id in &seed_ids {
        best.insert(id, (W::one(), id));
        heap.push(Label {
            weight: W::one(),
            origin: id,
            node: id,
        });
    }

    while let Some(label) = heap.pop() {
        if !settled.insert(label.node) {
            continue;
        }
        for &(next, class) in graph.out_edges(label.node) {
            if settled.contains(&next) {
                continue;
            }
            let weight = label.weight * cfg.factor(class);
            if weight < cfg.weight_floor {
                continue;
            }
            let candidate = Label {
                weight,
                origin: label.origin,
                node: next,
            };
            let improves = match best.get(&next) {
                None => true,
                Some(&(w, o)) => candidate.beats(w, o),
            };
            if improves {
                best.insert(next, (weight, label.origin));
                heap.push(candidate);
            }
        }
    }

    Propagation {
        reached: best
            .into_iter()
            .map(|(node, (weight, origin))| {
                (
                    graph.url(node).to_string(),
                    Reach {
                        weight,
                        origin: graph.url(origin).to_string(),
                    },
                )
            })
            .collect(),
        skipped_seeds: skipped.into_iter().collect(),
    }
}

/// Multipliers applied to a fragment according to the page it comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeFactors<W> {
    pub person_homepage: W,
    pub project_homepage: W,
    pub group_homepage: W,
    pub other: W,
    /// Per database-record kind; kinds not listed use `other`.
    pub db: BTreeMap<DbKind, W>,
}

impl<W: Scalar> Default for TypeFactors<W> {
    fn default() -> Self {
        let ten = W::ratio(10, 1);
        Self {
            person_homepage: ten,
            project_homepage: ten,
            group_homepage: ten,
            other: W::one(),
            db: BTreeMap::new(),
        }
    }
}

/// Resolves type factors for documents against one org model.
#[derive(Debug, Clone)]
pub struct TypeFactorTable<W> {
    factors: TypeFactors<W>,
    page_kinds: BTreeMap<String, SeedKind>,
}

impl<W: Scalar> TypeFactorTable<W> {
    pub fn new(org: &OrgModel, factors: TypeFactors<W>) -> Self {
        Self {
            factors,
            page_kinds: org.page_kinds(),
        }
    }

    pub fn for_document(&self, corpus: &Corpus, doc_id: &str) -> W {
        let Some(doc) = corpus.get(doc_id) else {
            return self.factors.other;
        };
        if let Some(kind) = doc.db_kind {
            return self.factors.db.get(&kind).copied().unwrap_or(self.factors.other);
        }
        match self.page_kinds.get(&doc.url) {
            Some(SeedKind::PersonHomepage) => self.factors.person_homepage,
            Some(SeedKind::ProjectHomepage) => self.factors.project_homepage,
            Some(SeedKind::GroupHomepage) => self.factors.group_homepage,
            None => self.factors.other,
        }
    }
}

pub fn type_factor<W: Scalar>(doc_id: &str, corpus: &Corpus, org: &OrgModel, factors: &TypeFactors<W>) -> W {
    TypeFactorTable::new(org, factors.clone()).for_document(corpus, doc_id)
}

/// Why a document counts as evidence. Declaration order breaks weight ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SeedSelf,
    SeedPropagated,
    NameMention,
    DbRecord,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SeedSelf => "seed_self",
            Provenance::SeedPropagated => "seed_propagated",
            Provenance::NameMention => "name_mention",
            Provenance::DbRecord => "db_record",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceFragment<W> {
    pub person_id: String,
    pub doc_id: String,
    pub base_weight: W,
    pub type_factor: W,
    pub final_weight: W,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSet<W> {
    pub person_id: String,
    /// Sorted by doc id; one fragment per document.
    pub fragments: Vec<EvidenceFragment<W>>,
}

impl<W: Scalar> EvidenceSet<W> {
    pub fn empty(person_id: impl Into<String>) -> Self {
        Self {
            person_id: person_id.into(),
            fragments: Vec::new(),
        }
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.fragments.iter().map(|f| f.doc_id.as_str())
    }

    pub fn get(&self, doc_id: &str) -> Option<&EvidenceFragment<W>> {
        self.fragments
            .binary_search_by(|f| f.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.fragments[i])
    }
}

/// Base weights for database-linked records, by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceConfig<W> {
    pub propagation: PropagationConfig<W>,
    pub type_factors: TypeFactors<W>,
    pub name_mention_weight: W,
    pub db_weight: W,
    pub db_weight_by_kind: BTreeMap<DbKind, W>,
}

impl<W: Scalar> Default for EvidenceConfig<W> {
    fn default() -> Self {
        Self {
            propagation: PropagationConfig::default(),
            type_factors: TypeFactors::default(),
            name_mention_weight: W::one(),
            db_weight: W::one(),
            db_weight_by_kind: BTreeMap::new(),
        }
    }
}

struct Candidate<W> {
    weight: W,
    provenance: Provenance,
    seed_url: Option<String>,
}

fn offer<W: Scalar>(slot: &mut BTreeMap<String, Candidate<W>>, doc_id: &str, cand: Candidate<W>) {
    match slot.get(doc_id) {
        Some(cur)
            if cur.weight > cand.weight
                || (cur.weight == cand.weight && cur.provenance <= cand.provenance) => {}
        _ => {
            slot.insert(doc_id.to_string(), cand);
        }
    }
}

/// Inputs shared by every person's evidence build.
pub struct EvidenceContext<'a, W> {
    pub corpus: &'a Corpus,
    pub graph: &'a WebGraph,
    pub type_factors: &'a TypeFactorTable<W>,
    pub config: &'a EvidenceConfig<W>,
}

/// Assembles one person's evidence set. A document reachable through several
/// routes keeps the highest base weight; equal weights prefer seed pages over
/// propagated pages over name mentions over database links.
pub fn build_evidence<W: Scalar>(
    person_id: &str,
    seeds: &[String],
    mentions: &BTreeSet<String>,
    db_docs: &BTreeSet<String>,
    ctx: &EvidenceContext<'_, W>,
) -> EvidenceSet<W> {
    let mut slot: BTreeMap<String, Candidate<W>> = BTreeMap::new();
    let seed_set: BTreeSet<&str> = seeds.iter().map(String::as_str).collect();

    let propagation = propagate_from_seeds(ctx.graph, seeds, &ctx.config.propagation);
    for (url, reach) in &propagation.reached {
        let provenance = if seed_set.contains(url.as_str()) {
            Provenance::SeedSelf
        } else {
            Provenance::SeedPropagated
        };
        for doc_id in ctx.corpus.docs_at(url) {
            offer(
                &mut slot,
                doc_id,
                Candidate {
                    weight: reach.weight,
                    provenance,
                    seed_url: Some(reach.origin.clone()),
                },
            );
        }
    }
    // Seed pages missing from the graph still count for themselves.
    for url in &propagation.skipped_seeds {
        for doc_id in ctx.corpus.docs_at(url) {
            offer(
                &mut slot,
                doc_id,
                Candidate {
                    weight: W::one(),
                    provenance: Provenance::SeedSelf,
                    seed_url: Some(url.clone()),
                },
            );
        }
    }
    for doc_id in mentions {
        offer(
            &mut slot,
            doc_id,
            Candidate {
                weight: ctx.config.name_mention_weight,
                provenance: Provenance::NameMention,
                seed_url: None,
            },
        );
    }
    for doc_id in db_docs {
        let weight = ctx
            .corpus
            .get(doc_id)
            .and_then(|d| d.db_kind)
            .and_then(|k| ctx.config.db_weight_by_kind.get(&k).copied())
            .unwrap_or(ctx.config.db_weight);
        offer(
            &mut slot,
            doc_id,
            Candidate {
                weight,
                provenance: Provenance::DbRecord,
                seed_url: None,
            },
        );
    }

    let fragments = slot
        .into_iter()
        .filter(|(doc_id, _)| ctx.corpus.get(doc_id).is_some())
        .map(|(doc_id, c)| {
            let type_factor = ctx.type_factors.for_document(ctx.corpus, &doc_id);
            EvidenceFragment {
                person_id: person_id.to_string(),
                base_weight: c.weight,
                type_factor,
                final_weight: c.weight * type_factor,
                provenance: c.provenance,
                seed_url: c.seed_url,
                doc_id,
            }
        })
        .collect();
    EvidenceSet {
        person_id: person_id.to_string(),
        fragments,
    }
}

/// Name-mention documents only, all at weight 1.
pub fn build_baseline_evidence<W: Scalar>(person_id: &str, mentions: &BTreeSet<String>) -> EvidenceSet<W> {
    EvidenceSet {
        person_id: person_id.to_string(),
        fragments: mentions
            .iter()
            .map(|doc_id| EvidenceFragment {
                person_id: person_id.to_string(),
                doc_id: doc_id.clone(),
                base_weight: W::one(),
                type_factor: W::one(),
                final_weight: W::one(),
                provenance: Provenance::NameMention,
                seed_url: None,
            })
            .collect(),
    }
}

/// One evidence-dump line.
pub fn dump_line<W: Scalar + Serialize>(fragment: &EvidenceFragment<W>) -> String {
    serde_json::to_string(fragment).expect("fragment serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Source};
    use crate::graph::GraphBuilder;
    use crate::urls::UrlNormalizer;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn q(n: i64, d: i64) -> Q {
        Ratio::new(n, d)
    }

    // S and A share a folder; B is on another host
    const S: &str = "http://x/s/";
    const A: &str = "http://x/s/a.html";
    const B: &str = "http://y/b.html";

    #[test]
    fn chain_weights() {
        let mut g = GraphBuilder::new();
        g.add_edge(S, A);
        g.add_edge(A, B);
        let out = propagate_from_seeds::<Q, _, _>(&g.build(), [S], &PropagationConfig::default());
        let w = out.weights();
        assert_eq!(w[S], q(1, 1));
        assert_eq!(w[A], q(1, 2));
        assert_eq!(w[B], q(1, 20));
        assert_eq!(w.len(), 3);
    }

    #[test]
    fn isolated_seed() {
        let mut g = GraphBuilder::new();
        g.add_node(S);
        let out = propagate_from_seeds::<Q, _, _>(&g.build(), [S], &PropagationConfig::default());
        assert_eq!(out.weights(), [(S.to_string(), q(1, 1))].into());
    }

    #[test]
    fn best_path_wins() {
        use DirectionClass::*;
        let mut g = GraphBuilder::new();
        g.add_classified_edge("s", "a", UpOrAway);
        g.add_classified_edge("s", "c", DownOrSame);
        g.add_classified_edge("c", "a", DownOrSame);
        let out = propagate_from_seeds::<Q, _, _>(&g.build(), ["s"], &PropagationConfig::default());
        assert_eq!(out.weights()["a"], q(1, 4));
    }

    #[test]
    fn floor_excludes_far_pages() {
        let mut g = GraphBuilder::new();
        g.add_edge("http://a/", "http://b/");
        g.add_edge("http://b/", "http://c/");
        g.add_edge("http://c/", "http://d/");
        g.add_edge("http://d/", "http://e/");
        let out = propagate_from_seeds::<Q, _, _>(&g.build(), ["http://a/"], &PropagationConfig::default());
        let w = out.weights();
        assert_eq!(w["http://d/"], q(1, 1000));
        assert!(!w.contains_key("http://e/"));
    }

    #[test]
    fn unknown_seed_is_reported() {
        let g = GraphBuilder::new().build();
        let out = propagate_from_seeds::<f64, _, _>(&g, ["http://nowhere/"], &PropagationConfig::default());
        assert!(out.reached.is_empty());
        assert_eq!(out.skipped_seeds, vec!["http://nowhere/".to_string()]);
    }

    #[test]
    fn origin_is_smallest_seed_on_ties() {
        let mut g = GraphBuilder::new();
        g.add_edge("http://x/b/", "http://x/t.html");
        g.add_edge("http://x/a/", "http://x/t.html");
        let out = propagate_from_seeds::<Q, _, _>(
            &g.build(),
            ["http://x/b/", "http://x/a/"],
            &PropagationConfig::default(),
        );
        assert_eq!(out.reached["http://x/t.html"].origin, "http://x/a/");
    }

    #[test]
    fn config_validation() {
        assert!(PropagationConfig::<f64>::default().validate().is_ok());
        let bad = PropagationConfig {
            down_same_factor: 0.1,
            up_away_factor: 0.5,
            weight_floor: 0.001,
        };
        assert!(bad.validate().is_err());
    }

    fn page(id: &str, url: &str, content: &str) -> Document {
        Document {
            doc_id: id.into(),
            url: url.into(),
            source: Source::Extranet,
            db_kind: None,
            title: String::new(),
            content: content.into(),
            project_id: None,
            person_ids: vec![],
        }
    }

    fn fixture() -> (Corpus, OrgModel, WebGraph) {
        let corpus = Corpus::from_documents(
            [
                page("home", "http://x/p1/", "John Smith home"),
                page("sub", "http://x/p1/work.html", "work page that names John Smith"),
                page("far", "http://other/z.html", "unrelated"),
                page("news", "http://x/news.html", "nothing"),
            ],
            &UrlNormalizer::default(),
        )
        .unwrap();
        let org = crate::org::parse_org(
            br#"<org><person id="p1"><name>John Smith</name><homepage>http://x/p1/</homepage></person></org>"#,
            &UrlNormalizer::default(),
        )
        .unwrap()
        .model;
        let mut g = GraphBuilder::new();
        g.add_edge("http://x/p1/", "http://x/p1/work.html");
        g.add_edge("http://x/p1/work.html", "http://other/z.html");
        for u in corpus.urls() {
            g.add_node(u);
        }
        (corpus, org, g.build())
    }

    #[test]
    fn build_evidence_merge_and_type_factor() {
        let (corpus, org, graph) = fixture();
        let cfg = EvidenceConfig::<Q> {
            propagation: PropagationConfig {
                weight_floor: q(1, 10),
                ..Default::default()
            },
            ..Default::default()
        };
        let table = TypeFactorTable::new(&org, cfg.type_factors.clone());
        let ctx = EvidenceContext {
            corpus: &corpus,
            graph: &graph,
            type_factors: &table,
            config: &cfg,
        };
        let mentions = crate::text::find_name_mentions(&corpus, &org.persons["p1"]);
        let set = build_evidence("p1", &["http://x/p1/".to_string()], &mentions, &BTreeSet::new(), &ctx);

        let home = set.get("home").unwrap();
        assert_eq!(home.provenance, Provenance::SeedSelf);
        assert_eq!(home.final_weight, q(10, 1));

        // propagated 1/2 loses to the name mention at 1
        let sub = set.get("sub").unwrap();
        assert_eq!(sub.base_weight, q(1, 1));
        assert_eq!(sub.provenance, Provenance::NameMention);

        // 1/20 is below the 1/10 floor and the page has no mention
        assert!(set.get("far").is_none());
        assert!(set.get("news").is_none());
    }

    #[test]
    fn type_factor_values() {
        let (corpus, org, _) = fixture();
        let f = TypeFactors::<Q>::default();
        assert_eq!(type_factor("home", &corpus, &org, &f), q(10, 1));
        assert_eq!(type_factor("news", &corpus, &org, &f), q(1, 1));
        let db = Corpus::from_documents(
            [Document {
                db_kind: Some(DbKind::ProjectDescription),
                source: Source::Db,
                ..page("plan", "db://projects/expert", "")
            }],
            &UrlNormalizer::default(),
        )
        .unwrap();
        assert_eq!(type_factor("plan", &db, &org, &f), q(1, 1));
    }

    #[test]
    fn baseline_is_flat() {
        let mentions: BTreeSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let set = build_baseline_evidence::<f64>("p", &mentions);
        assert_eq!(set.fragments.len(), 3);
        assert!(set.fragments.iter().all(|f| f.final_weight == 1.0));
        assert!(build_baseline_evidence::<f64>("p", &BTreeSet::new()).fragments.is_empty());
    }
}
