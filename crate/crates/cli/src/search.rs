//! Response records shared by the command line and the HTTP API.

use serde::{Deserialize, Serialize};

use peoplefinder_core::evidence::Provenance;
use peoplefinder_core::org::ContainerKind;
use peoplefinder_core::retrieval::score_experts;
use peoplefinder_core::store::Snapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub doc_id: String,
    pub url: String,
    pub title: String,
    pub fragment_score: f64,
    pub final_weight: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub rank: usize,
    pub person_id: String,
    pub display_name: String,
    pub roles: Vec<String>,
    pub score: f64,
    pub evidence: Vec<EvidenceItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub query: String,
    pub role: Option<String>,
    pub k: usize,
    pub total_matched: usize,
    pub results: Vec<SearchHit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchError {
    EmptyQuery,
    ZeroK,
}

impl std::fmt::Display for SearchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SearchError::EmptyQuery => f.write_str("query must contain at least one word"),
            SearchError::ZeroK => f.write_str("k must be positive"),
        }
    }
}

impl std::error::Error for SearchError {}

pub const DEFAULT_K: usize = 10;

/// Ranks people against `query` and decorates each hit for display.
pub fn search(snap: &Snapshot, query: &str, k: usize, role: Option<&str>) -> Result<SearchResponse, SearchError> {
    if query.trim().is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    if k == 0 {
        return Err(SearchError::ZeroK);
    }
    let role = role.map(str::trim).filter(|r| !r.is_empty());
    let ranked = score_experts(query, role, &snap.index, &snap.org);
    let total_matched = ranked.len();
    let results = ranked
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, r)| {
            let person = snap.org.person(&r.person_id);
            let set = snap.evidence.get(&r.person_id);
            let evidence = r
                .contributions
                .iter()
                .map(|c| {
                    let doc = snap.documents.get(&c.doc_id);
                    EvidenceItem {
                        doc_id: c.doc_id.clone(),
                        url: doc.map(|d| d.url.clone()).unwrap_or_default(),
                        title: doc.map(|d| d.title.clone()).unwrap_or_default(),
                        fragment_score: c.fragment_score,
                        final_weight: c.final_weight,
                        provenance: set
                            .and_then(|s| s.get(&c.doc_id))
                            .map(|f| f.provenance)
                            .unwrap_or(Provenance::NameMention),
                    }
                })
                .collect();
            SearchHit {
                rank: i + 1,
                display_name: person.map(|p| p.display_name.clone()).unwrap_or_default(),
                roles: person.map(|p| p.roles.clone()).unwrap_or_default(),
                person_id: r.person_id,
                score: r.score,
                evidence,
            }
        })
        .collect();
    Ok(SearchResponse {
        query: query.to_string(),
        role: role.map(str::to_string),
        k,
        total_matched,
        results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub id: String,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEvidence {
    pub doc_id: String,
    pub url: String,
    pub title: String,
    pub base_weight: f64,
    pub type_factor: f64,
    pub final_weight: f64,
    pub provenance: Provenance,
    pub seed_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub person_id: String,
    pub display_name: String,
    pub name_aliases: Vec<String>,
    pub roles: Vec<String>,
    pub homepage_urls: Vec<String>,
    pub units: Vec<Membership>,
    pub projects: Vec<Membership>,
    /// Sorted by final weight, highest first; ties by doc id.
    pub evidence: Vec<ProfileEvidence>,
}

pub fn profile(snap: &Snapshot, person_id: &str) -> Option<Profile> {
    let p = snap.org.person(person_id)?;
    let mut evidence: Vec<ProfileEvidence> = snap
        .evidence
        .get(person_id)
        .map(|s| {
            s.fragments
                .iter()
                .map(|f| {
                    let doc = snap.documents.get(&f.doc_id);
                    ProfileEvidence {
                        doc_id: f.doc_id.clone(),
                        url: doc.map(|d| d.url.clone()).unwrap_or_default(),
                        title: doc.map(|d| d.title.clone()).unwrap_or_default(),
                        base_weight: f.base_weight,
                        type_factor: f.type_factor,
                        final_weight: f.final_weight,
                        provenance: f.provenance,
                        seed_url: f.seed_url.clone(),
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    evidence.sort_by(|a, b| {
        b.final_weight
            .total_cmp(&a.final_weight)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
    });
    Some(Profile {
        person_id: p.person_id.clone(),
        display_name: p.display_name.clone(),
        name_aliases: p.name_aliases.clone(),
        roles: p.roles.clone(),
        homepage_urls: p.homepage_urls.clone(),
        units: snap
            .org
            .units_of(person_id)
            .map(|u| Membership {
                id: u.unit_id.clone(),
                title: u.title.clone(),
            })
            .collect(),
        projects: snap
            .org
            .projects_of(person_id)
            .map(|pr| Membership {
                id: pr.project_id.clone(),
                title: pr.title.clone(),
            })
            .collect(),
        evidence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipEdge {
    pub person_id: String,
    pub display_name: String,
    pub via: ContainerKind,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relationships {
    pub person_id: String,
    pub relationships: Vec<RelationshipEdge>,
}

pub fn relationships(snap: &Snapshot, person_id: &str) -> Option<Relationships> {
    snap.org.person(person_id)?;
    Some(Relationships {
        person_id: person_id.to_string(),
        relationships: snap
            .org
            .relationships(person_id)
            .into_iter()
            .map(|r| RelationshipEdge {
                display_name: snap
                    .org
                    .person(&r.person_id)
                    .map(|p| p.display_name.clone())
                    .unwrap_or_default(),
                person_id: r.person_id,
                via: r.via,
                id: r.container_id,
            })
            .collect(),
    })
}
