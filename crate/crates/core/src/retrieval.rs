//! Okapi BM25 over the indexed collection, with per-person aggregation of
//! weighted evidence fragments.
//!
//! ```text
//! score(q, d)      = Σ_t max(idf(t), idf_floor) · tf·(k1+1) / (tf + k1·(1 − b + b·|d|/avgdl))
//! idf(t)           = ln(1 + (N − df + 0.5) / (df + 0.5))
//! fragment score   = score(q, d) · final_weight(person, d)
//! person score     = Σ fragment scores
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::evidence::EvidenceSet;
use crate::org::OrgModel;
use crate::scalar::Real;
use crate::text::tokenize;

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig<R> {
    pub k1: R,
    pub b: R,
    pub idf_floor: R,
}

impl<R: Real> Default for IndexConfig<R> {
    fn default() -> Self {
        Self {
            k1: R::ratio(6, 5),
            b: R::ratio(3, 4),
            idf_floor: R::zero(),
        }
    }
}

impl<R: Real> IndexConfig<R> {
    pub fn validate(&self) -> Result<(), String> {
        if self.k1 < R::zero() {
            return Err("k1 must be non-negative".into());
        }
        if self.b < R::zero() || self.b > R::one() {
            return Err("b must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedDoc {
    pub doc_id: String,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPerson<R> {
    pub person_id: String,
    pub final_weight: R,
}

/// Inverted index over the collection plus the evidence table mapping each
/// document to the people it supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentIndex<R> {
    pub version: u32,
    pub config: IndexConfig<R>,
    docs: Vec<IndexedDoc>,
    total_len: u64,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    /// Parallel to `docs`, sorted by person id.
    fragments: Vec<Vec<WeightedPerson<R>>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("evidence for person {person_id} references missing document {doc_id}")]
    MissingDocument { person_id: String, doc_id: String },
    #[error("invalid index config: {0}")]
    Config(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RankError {
    #[error("result size k must be positive")]
    ZeroK,
}

/// Indexes every document of `corpus` and attaches the fragments of
/// `evidence`. The result does not depend on the order of either input.
pub fn build_index<R: Real>(
    corpus: &Corpus,
    evidence: &[EvidenceSet<R>],
    config: IndexConfig<R>,
) -> Result<FragmentIndex<R>, IndexError> {
    config.validate().map_err(IndexError::Config)?;
    let mut docs = Vec::with_capacity(corpus.len());
    let mut position = BTreeMap::new();
    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    let mut total_len = 0u64;

    for (i, doc) in corpus.iter().enumerate() {
        let tokens = tokenize(&doc.text());
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.clone()).or_default() += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push((i as u32, count));
        }
        total_len += tokens.len() as u64;
        docs.push(IndexedDoc {
            doc_id: doc.doc_id.clone(),
            len: tokens.len() as u32,
        });
        position.insert(doc.doc_id.as_str(), i);
    }

    let mut fragments: Vec<Vec<WeightedPerson<R>>> = vec![Vec::new(); docs.len()];
    for set in evidence {
        for f in &set.fragments {
            let Some(&i) = position.get(f.doc_id.as_str()) else {
                return Err(IndexError::MissingDocument {
                    person_id: f.person_id.clone(),
                    doc_id: f.doc_id.clone(),
                });
            };
            fragments[i].push(WeightedPerson {
                person_id: f.person_id.clone(),
                final_weight: f.final_weight,
            });
        }
    }
    for list in &mut fragments {
        list.sort_by(|a, b| a.person_id.cmp(&b.person_id));
    }

    Ok(FragmentIndex {
        version: INDEX_FORMAT_VERSION,
        config,
        docs,
        total_len,
        postings,
        fragments,
    })
}

impl<R: Real> FragmentIndex<R> {
    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn fragment_count(&self) -> usize {
        self.fragments.iter().map(Vec::len).sum()
    }

    pub fn avg_len(&self) -> R {
        if self.docs.is_empty() {
            R::zero()
        } else {
            R::from_u64(self.total_len).unwrap() / R::from_count(self.docs.len())
        }
    }

    pub fn doc_len(&self, doc_id: &str) -> Option<u32> {
        self.doc_position(doc_id).map(|i| self.docs[i].len)
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    fn doc_position(&self, doc_id: &str) -> Option<usize> {
        self.docs
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .ok()
    }

    pub fn persons_for(&self, doc_id: &str) -> &[WeightedPerson<R>] {
        self.doc_position(doc_id)
            .map(|i| self.fragments[i].as_slice())
            .unwrap_or(&[])
    }

    fn idf(&self, df: usize, cfg: &IndexConfig<R>) -> R {
        let n = R::from_count(self.docs.len());
        let df = R::from_count(df);
        let half = R::ratio(1, 2);
        let idf = (R::one() + (n - df + half) / (df + half)).ln();
        idf.max_of(cfg.idf_floor)
    }

    fn term_weight(&self, tf: u32, len: u32, idf: R, cfg: &IndexConfig<R>) -> R {
        let tf = R::from_u32(tf).unwrap();
        let avg = self.avg_len();
        let ratio = if avg > R::zero() {
            R::from_u32(len).unwrap() / avg
        } else {
            R::one()
        };
        let norm = cfg.k1 * (R::one() - cfg.b + cfg.b * ratio);
        idf * tf * (cfg.k1 + R::one()) / (tf + norm)
    }

    /// BM25 scores of every document matching at least one query term,
    /// keyed by document position.
    fn score_all(&self, terms: &BTreeSet<String>, cfg: &IndexConfig<R>) -> BTreeMap<usize, R> {
        let mut scores: BTreeMap<usize, R> = BTreeMap::new();
        for term in terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(list.len(), cfg);
            for &(pos, tf) in list {
                let pos = pos as usize;
                let w = self.term_weight(tf, self.docs[pos].len, idf, cfg);
                let slot = scores.entry(pos).or_insert_with(R::zero);
                *slot = *slot + w;
            }
        }
        scores
    }
}

/// Distinct query terms.
pub fn query_terms(query: &str) -> BTreeSet<String> {
    tokenize(query).into_iter().collect()
}

/// BM25 score of one indexed document; zero when no query term occurs in it
/// or the document is not indexed.
pub fn okapi_score<R: Real>(
    query_tokens: &[String],
    doc_id: &str,
    index: &FragmentIndex<R>,
    cfg: &IndexConfig<R>,
) -> R {
    let Some(pos) = index.doc_position(doc_id) else {
        return R::zero();
    };
    let terms: BTreeSet<&String> = query_tokens.iter().collect();
    let mut score = R::zero();
    for term in terms {
        let Some(list) = index.postings.get(term) else { continue };
        if let Ok(j) = list.binary_search_by(|&(p, _)| (p as usize).cmp(&pos)) {
            let idf = index.idf(list.len(), cfg);
            score = score + index.term_weight(list[j].1, index.docs[pos].len, idf, cfg);
        }
    }
    score
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution<R> {
    pub doc_id: String,
    pub fragment_score: R,
    pub final_weight: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertResult<R> {
    pub person_id: String,
    pub score: R,
    /// Sorted by fragment score, highest first; ties by doc id.
    pub contributions: Vec<Contribution<R>>,
}

/// Ranks people for a free-text query. People without a positive score are
/// omitted, and with a role filter so are people lacking that role. Results
/// are ordered by score, then person id, and cut to `k`.
pub fn rank_experts<R: Real>(
    query: &str,
    k: usize,
    role_filter: Option<&str>,
    index: &FragmentIndex<R>,
    org: &OrgModel,
) -> Result<Vec<ExpertResult<R>>, RankError> {
    let results = score_experts(query, role_filter, index, org);
    if k == 0 {
        return Err(RankError::ZeroK);
    }
    Ok(results.into_iter().take(k).collect())
}

/// Every person with a positive score, fully ranked.
pub fn score_experts<R: Real>(
    query: &str,
    role_filter: Option<&str>,
    index: &FragmentIndex<R>,
    org: &OrgModel,
) -> Vec<ExpertResult<R>> {
    let terms = query_terms(query);
    let doc_scores = index.score_all(&terms, &index.config);

    let mut per_person: BTreeMap<&str, Vec<Contribution<R>>> = BTreeMap::new();
    for (&pos, &score) in &doc_scores {
        if score <= R::zero() {
            continue;
        }
        for wp in &index.fragments[pos] {
            per_person
                .entry(wp.person_id.as_str())
                .or_default()
                .push(Contribution {
                    doc_id: index.docs[pos].doc_id.clone(),
                    fragment_score: score * wp.final_weight,
                    final_weight: wp.final_weight,
                });
        }
    }

    let mut results: Vec<ExpertResult<R>> = per_person
        .into_iter()
        .filter(|(pid, _)| role_filter.map_or(true, |role| org.has_role(pid, role)))
        .map(|(pid, mut contributions)| {
            contributions.sort_by(|a, b| {
                b.fragment_score
                    .partial_cmp(&a.fragment_score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            });
            let score = contributions
                .iter()
                .fold(R::zero(), |acc, c| acc + c.fragment_score);
            ExpertResult {
                person_id: pid.to_string(),
                score,
                contributions,
            }
        })
        .filter(|r| r.score > R::zero())
        .collect();
    results.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.person_id.cmp(&b.person_id))
    });
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Source};
    use crate::evidence::{build_baseline_evidence, EvidenceFragment, Provenance};
    use crate::urls::UrlNormalizer;

    fn corpus(texts: &[(&str, &str)]) -> Corpus {
        Corpus::from_documents(
            texts.iter().map(|(id, c)| Document {
                doc_id: id.to_string(),
                url: format!("http://x/{id}.html"),
                source: Source::Extranet,
                db_kind: None,
                title: String::new(),
                content: c.to_string(),
                project_id: None,
                person_ids: vec![],
            }),
            &UrlNormalizer::default(),
        )
        .unwrap()
    }

    fn set(person: &str, frags: &[(&str, f64)]) -> EvidenceSet<f64> {
        EvidenceSet {
            person_id: person.into(),
            fragments: frags
                .iter()
                .map(|(d, w)| EvidenceFragment {
                    person_id: person.into(),
                    doc_id: d.to_string(),
                    base_weight: *w,
                    type_factor: 1.0,
                    final_weight: *w,
                    provenance: Provenance::NameMention,
                    seed_url: None,
                })
                .collect(),
        }
    }

    #[test]
    fn vocabulary_count() {
        let c = corpus(&[("d", "alpha beta gamma alpha")]);
        let idx = build_index(&c, &[set("p", &[("d", 1.0)])], IndexConfig::default()).unwrap();
        assert_eq!(idx.vocabulary_size(), 3);
        assert_eq!(idx.fragment_count(), 1);
        assert_eq!(idx.avg_len(), 4.0);
    }

    #[test]
    fn missing_document_is_an_error() {
        let c = corpus(&[("d", "x")]);
        let err = build_index(&c, &[set("p", &[("nope", 1.0)])], IndexConfig::default()).unwrap_err();
        assert_eq!(
            err,
            IndexError::MissingDocument {
                person_id: "p".into(),
                doc_id: "nope".into()
            }
        );
    }

    #[test]
    fn no_matching_term_scores_zero() {
        let c = corpus(&[("d", "alpha beta")]);
        let idx = build_index::<f64>(&c, &[], IndexConfig::default()).unwrap();
        assert_eq!(okapi_score(&tokenize("gamma"), "d", &idx, &idx.config), 0.0);
    }

    #[test]
    fn single_document_reference_value() {
        let c = corpus(&[("d", "alpha")]);
        let idx = build_index::<f64>(&c, &[], IndexConfig::default()).unwrap();
        let expected = (4.0f64 / 3.0).ln() * (1.0 * 2.2) / (1.0 + 1.2);
        let got = okapi_score(&tokenize("alpha"), "d", &idx, &idx.config);
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn term_frequency_saturates() {
        let c = corpus(&[("one", "alpha beta"), ("two", "alpha alpha"), ("z", "gamma delta")]);
        let idx = build_index::<f64>(&c, &[], IndexConfig::default()).unwrap();
        let q = tokenize("alpha");
        let s1 = okapi_score(&q, "one", &idx, &idx.config);
        let s2 = okapi_score(&q, "two", &idx, &idx.config);
        assert!(s2 > s1 && s2 < 2.0 * s1);
    }

    fn ranking_fixture() -> (FragmentIndex<f64>, OrgModel) {
        // identical documents give identical BM25 scores, so weights drive the sums
        let c = corpus(&[("d1", "xml"), ("d2", "xml"), ("d3", "xml"), ("d4", "other")]);
        let evidence = vec![
            set("A", &[("d1", 2.0), ("d2", 0.5)]),
            set("B", &[("d3", 1.0), ("d4", 5.0)]),
        ];
        let idx = build_index(&c, &evidence, IndexConfig::default()).unwrap();
        let org = crate::org::parse_org(
            br#"<org><role id="sci"/><person id="A"><name>A</name></person>
                <person id="B"><name>B</name><role roleID="sci"/></person></org>"#,
            &UrlNormalizer::default(),
        )
        .unwrap()
        .model;
        (idx, org)
    }

    #[test]
    fn summation_and_order() {
        let (idx, org) = ranking_fixture();
        let s = okapi_score(&tokenize("xml"), "d1", &idx, &idx.config);
        let r = rank_experts("xml", 10, None, &idx, &org).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].person_id, "A");
        assert!((r[0].score - 2.5 * s).abs() < 1e-12);
        assert!((r[1].score - 1.0 * s).abs() < 1e-12);
        assert_eq!(r[0].contributions[0].doc_id, "d1");
    }

    #[test]
    fn role_filter() {
        let (idx, org) = ranking_fixture();
        let r = rank_experts("xml", 10, Some("sci"), &idx, &org).unwrap();
        assert_eq!(r.iter().map(|x| x.person_id.as_str()).collect::<Vec<_>>(), vec!["B"]);
    }

    #[test]
    fn ties_break_by_person_id() {
        let c = corpus(&[("d1", "xml")]);
        let idx = build_index(&c, &[set("B", &[("d1", 1.0)]), set("A", &[("d1", 1.0)])], IndexConfig::default())
            .unwrap();
        let r = rank_experts("xml", 5, None, &idx, &OrgModel::default()).unwrap();
        assert_eq!(r[0].person_id, "A");
        assert_eq!(r[1].person_id, "B");
        assert_eq!(r[0].score, r[1].score);
    }

    #[test]
    fn zero_k_rejected() {
        let (idx, org) = ranking_fixture();
        assert_eq!(rank_experts("xml", 0, None, &idx, &org), Err(RankError::ZeroK));
    }

    #[test]
    fn baseline_orders_by_raw_okapi_sums() {
        let c = corpus(&[("d1", "xml protocols"), ("d2", "xml"), ("d3", "protocols stack")]);
        let m = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect();
        let evidence = vec![
            build_baseline_evidence::<f64>("A", &m(&["d2"])),
            build_baseline_evidence::<f64>("B", &m(&["d1", "d3"])),
        ];
        let idx = build_index(&c, &evidence, IndexConfig::default()).unwrap();
        let q = tokenize("xml protocols");
        let raw_b = okapi_score(&q, "d1", &idx, &idx.config) + okapi_score(&q, "d3", &idx, &idx.config);
        let raw_a = okapi_score(&q, "d2", &idx, &idx.config);
        let r = rank_experts("xml protocols", 5, None, &idx, &OrgModel::default()).unwrap();
        assert_eq!(r[0].person_id, if raw_b > raw_a { "B" } else { "A" });
        assert!((r.iter().find(|x| x.person_id == "B").unwrap().score - raw_b).abs() < 1e-12);
    }

    #[test]
    fn serde_round_trip_preserves_results() {
        let (idx, org) = ranking_fixture();
        let json = serde_json::to_string(&idx).unwrap();
        let back: FragmentIndex<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(
            rank_experts("xml other", 5, None, &idx, &org).unwrap(),
            rank_experts("xml other", 5, None, &back, &org).unwrap()
        );
    }
}
