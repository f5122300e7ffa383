//! Seeded generator for small synthetic test collections.
//!
//! Every topic gets planted experts whose homepage or project subtree holds
//! the topic's vocabulary. Intranet minutes and policy pages mention many
//! people without any topical content, and some news items mix topic words
//! with unrelated names. "Structured-advantage" topics keep the expert's
//! name off every topical page and the topic words off the homepage, so only
//! link structure ties the pages to the expert.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{write_corpus, DbKind, Document, Source};
use crate::eval::{write_qrels, write_topics, Grade, Qrels, Topic, Topics};
use crate::org::{write_org_xml, Membership, OrgModel, Person, Project, Role, Unit, UnitType};
use crate::pipeline::{BuildConfig, Collection, CollectionText, PipelineError};

const EXTRANET: &str = "http://www.example.org";
const INTRANET: &str = "http://intranet.example.org";
const DB: &str = "http://db.example.org";

const FIRST_NAMES: [&str; 24] = [
    "Alice", "Bruno", "Chen", "Dana", "Elif", "Farid", "Greta", "Hiro", "Ines", "Jonas", "Kavya",
    "Luca", "Maya", "Nils", "Olga", "Pedro", "Quinn", "Rosa", "Sami", "Tara", "Uma", "Viktor",
    "Wen", "Yara",
];
const LAST_NAMES: [&str; 24] = [
    "Abbott", "Berger", "Castillo", "Dufresne", "Eriksen", "Fontaine", "Gallo", "Haddad",
    "Iverson", "Jovanovic", "Kowalski", "Lindqvist", "Moreau", "Nakamura", "Okafor", "Petrov",
    "Quiroga", "Rasmussen", "Sorensen", "Takahashi", "Urquhart", "Varga", "Whitfield", "Zeller",
];
const FILLER: [&str; 48] = [
    "the", "and", "of", "for", "with", "on", "staff", "meeting", "update", "report", "plan",
    "review", "team", "office", "budget", "schedule", "notes", "action", "item", "agenda",
    "policy", "travel", "leave", "safety", "building", "access", "form", "approval", "general",
    "week", "month", "year", "summary", "process", "service", "support", "request", "quarter",
    "facility", "training", "record", "minutes", "member", "attend", "discuss", "agreed",
    "circulated", "information",
];
const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "ne", "pu", "ra", "si", "to", "vu", "ze", "bra", "dri", "flo", "gru",
    "kle", "pha", "stro", "thi", "vex", "xan",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub persons: usize,
    pub projects: usize,
    pub docs: usize,
    pub topics: usize,
    /// Fraction of topics that are structured-advantage topics.
    pub structured_ratio: f64,
    /// Fraction of ordinary topical pages that leave out the expert's name.
    pub name_omit_ratio: f64,
    /// Experts planted per ordinary topic.
    pub experts_per_topic: usize,
    /// Topical pages written per planted expert.
    pub pages_per_expert: usize,
    /// Persons per group unit.
    pub group_size: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            persons: 20,
            projects: 5,
            docs: 200,
            topics: 30,
            structured_ratio: 0.3,
            name_omit_ratio: 0.5,
            experts_per_topic: 1,
            pages_per_expert: 2,
            group_size: 5,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("{path}: {reason}")]
    Write { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicKind {
    /// Experts are the members of one project.
    Project,
    /// Expert pages carry the name on some pages only.
    Ordinary,
    /// Expert pages never carry the name.
    StructuredAdvantage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTopic {
    pub topic_id: String,
    pub kind: TopicKind,
    pub experts: Vec<String>,
    pub vocabulary: Vec<String>,
}

/// A generated collection plus what was planted in it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCollection {
    pub documents: Vec<Document>,
    pub links: Vec<(String, String)>,
    pub aliases: Vec<(String, String)>,
    pub org: OrgModel,
    pub topics: Topics,
    pub qrels: Qrels,
    pub planted: Vec<PlantedTopic>,
}

/// File names written by [`SyntheticCollection::write_to`].
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const LINKS_FILE: &str = "links.tsv";
pub const ALIASES_FILE: &str = "aliases.tsv";
pub const ORG_FILE: &str = "org.xml";
pub const TOPICS_FILE: &str = "topics.tsv";
pub const QRELS_FILE: &str = "qrels.tsv";
pub const PLANTED_FILE: &str = "planted.json";

impl SyntheticCollection {
    pub fn corpus_text(&self) -> String {
        write_corpus(&self.documents)
    }

    pub fn links_text(&self) -> String {
        pairs_text(&self.links)
    }

    pub fn aliases_text(&self) -> String {
        pairs_text(&self.aliases)
    }

    pub fn org_text(&self) -> String {
        write_org_xml(&self.org)
    }

    pub fn planted_text(&self) -> String {
        serde_json::to_string_pretty(&self.planted).expect("planted info serializes") + "\n"
    }

    /// `(file name, contents)` for every output file.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        vec![
            (CORPUS_FILE, self.corpus_text()),
            (LINKS_FILE, self.links_text()),
            (ALIASES_FILE, self.aliases_text()),
            (ORG_FILE, self.org_text()),
            (TOPICS_FILE, write_topics(&self.topics)),
            (QRELS_FILE, write_qrels(&self.qrels)),
            (PLANTED_FILE, self.planted_text()),
        ]
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), SynthError> {
        let err = |p: &Path, e: std::io::Error| SynthError::Write {
            path: p.display().to_string(),
            reason: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(|e| err(dir, e))?;
        for (name, text) in self.files() {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| err(&path, e))?;
        }
        Ok(())
    }

    /// Parses the serialized files, exactly as a build from disk would.
    pub fn collection(&self, cfg: &BuildConfig) -> Result<Collection, PipelineError> {
        let (corpus, links, aliases, org) =
            (self.corpus_text(), self.links_text(), self.aliases_text(), self.org_text());
        Collection::parse(
            &CollectionText {
                corpus: &corpus,
                links: &links,
                aliases: &aliases,
                org: org.as_bytes(),
            },
            cfg,
        )
    }

    pub fn topics_of_kind(&self, kind: TopicKind) -> Topics {
        let ids: BTreeSet<&str> = self
            .planted
            .iter()
            .filter(|p| p.kind == kind)
            .map(|p| p.topic_id.as_str())
            .collect();
        Topics(
            self.topics
                .iter()
                .filter(|t| ids.contains(t.topic_id.as_str()))
                .cloned()
                .collect(),
        )
    }
}

fn pairs_text(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(a, b)| format!("{a}\t{b}\n")).collect()
}

struct Gen {
    rng: ChaCha8Rng,
    docs: Vec<Document>,
    links: Vec<(String, String)>,
}

impl Gen {
    fn filler(&mut self, n: usize) -> Vec<String> {
        (0..n)
            .map(|_| FILLER[self.rng.gen_range(0..FILLER.len())].to_string())
            .collect()
    }

    /// Filler text with `extra` words dropped in at random positions.
    fn text(&mut self, len: usize, extra: &[String]) -> String {
        let mut words = self.filler(len);
        for w in extra {
            let at = self.rng.gen_range(0..=words.len());
            words.insert(at, w.clone());
        }
        words.join(" ")
    }

    fn push(&mut self, url: String, source: Source, title: String, content: String) -> String {
        let doc_id = format!("d{:04}", self.docs.len() + 1);
        self.docs.push(Document {
            doc_id: doc_id.clone(),
            url,
            source,
            db_kind: None,
            title,
            content,
            project_id: None,
            person_ids: Vec::new(),
        });
        doc_id
    }

    fn push_db(&mut self, url: String, kind: DbKind, title: String, content: String) -> &mut Document {
        self.push(url, Source::Db, title, content);
        let doc = self.docs.last_mut().expect("just pushed");
        doc.db_kind = Some(kind);
        doc
    }

    fn link(&mut self, src: &str, dst: &str) {
        self.links.push((src.to_string(), dst.to_string()));
    }
}

fn vocabulary(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let parts = rng.gen_range(3..=4);
        let w: String = (0..parts)
            .map(|_| SYLLABLES[rng.gen_range(0..SYLLABLES.len())])
            .collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

const WORDS_PER_TOPIC: usize = 3;

fn check(cfg: &SynthConfig) -> Result<(), SynthError> {
    let bad = |m: String| Err(SynthError::Infeasible(m));
    if cfg.persons == 0 {
        return bad("at least one person is required".into());
    }
    if cfg.persons > FIRST_NAMES.len() * LAST_NAMES.len() {
        return bad(format!("at most {} persons supported", FIRST_NAMES.len() * LAST_NAMES.len()));
    }
    if cfg.experts_per_topic == 0 || cfg.experts_per_topic > cfg.persons {
        return bad(format!(
            "{} experts per topic with {} persons",
            cfg.experts_per_topic, cfg.persons
        ));
    }
    if cfg.projects > 0 && cfg.persons < 2 {
        return bad("projects need at least two persons".into());
    }
    if cfg.pages_per_expert == 0 || cfg.group_size == 0 {
        return bad("pages_per_expert and group_size must be positive".into());
    }
    for (name, r) in [("structured_ratio", cfg.structured_ratio), ("name_omit_ratio", cfg.name_omit_ratio)] {
        if !(0.0..=1.0).contains(&r) {
            return bad(format!("{name} must lie in [0, 1]"));
        }
    }
    Ok(())
}

/// Generates a collection. The same config and seed always produce the same
/// collection.
pub fn gen_synthetic(cfg: &SynthConfig, rng_seed: u64) -> Result<SyntheticCollection, SynthError> {
    check(cfg)?;
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(rng_seed),
        docs: Vec::new(),
        links: Vec::new(),
    };

    // People
    let mut firsts: Vec<usize> = (0..FIRST_NAMES.len()).collect();
    let mut lasts: Vec<usize> = (0..LAST_NAMES.len()).collect();
    firsts.shuffle(&mut g.rng);
    lasts.shuffle(&mut g.rng);
    // Distinct surnames for the first round, then shifted pairings.
    let n = FIRST_NAMES.len();
    let name_pairs: Vec<(usize, usize)> = (0..cfg.persons)
        .map(|i| (firsts[i % n], lasts[(i + i / n) % n]))
        .collect();
    let pids: Vec<String> = (1..=cfg.persons).map(|i| format!("p{i:02}")).collect();
    let names: BTreeMap<String, String> = pids
        .iter()
        .zip(&name_pairs)
        .map(|(p, &(f, l))| (p.clone(), format!("{} {}", FIRST_NAMES[f], LAST_NAMES[l])))
        .collect();
    let homepage = |p: &str| format!("{EXTRANET}/people/{p}/");

    let mut org = OrgModel::default();
    for (id, title) in [("researcher", "Research Scientist"), ("leader", "Group Leader"), ("engineer", "Engineer")] {
        org.roles.insert(
            id.to_string(),
            Role {
                role_id: id.to_string(),
                title: title.to_string(),
            },
        );
    }

    // Groups
    let groups: Vec<Vec<String>> = pids.chunks(cfg.group_size).map(|c| c.to_vec()).collect();
    let mut person_roles: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (gi, members) in groups.iter().enumerate() {
        let gid = format!("g{}", gi + 1);
        let memberships = members
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let role = if i == 0 {
                    "leader"
                } else if g.rng.gen_bool(0.3) {
                    "engineer"
                } else {
                    "researcher"
                };
                person_roles.entry(p.clone()).or_default().insert(role.to_string());
                Membership {
                    person_id: p.clone(),
                    roles: vec![role.to_string()],
                }
            })
            .collect();
        org.units.insert(
            gid.clone(),
            Unit {
                unit_id: gid.clone(),
                unit_type: UnitType::Group,
                title: format!("Group {}", gi + 1),
                description: String::new(),
                description_urls: vec![format!("{INTRANET}/groups/{gid}/")],
                members: memberships,
                projects: Vec::new(),
                parent_unit: Some("div1".to_string()),
            },
        );
    }
    org.units.insert(
        "div1".to_string(),
        Unit {
            unit_id: "div1".to_string(),
            unit_type: UnitType::Division,
            title: "Research Division".to_string(),
            description: String::new(),
            description_urls: Vec::new(),
            members: Vec::new(),
            projects: Vec::new(),
            parent_unit: None,
        },
    );

    // Projects
    let mut project_members: Vec<Vec<String>> = Vec::new();
    for k in 1..=cfg.projects {
        let size = g.rng.gen_range(2..=4.min(cfg.persons).max(2));
        let mut members: Vec<String> = pids.choose_multiple(&mut g.rng, size).cloned().collect();
        members.sort();
        let prid = format!("proj{k}");
        org.projects.insert(
            prid.clone(),
            Project {
                project_id: prid.clone(),
                title: format!("Project {k}"),
                description_urls: vec![format!("{EXTRANET}/projects/{prid}/")],
                members: members.clone(),
            },
        );
        // Attach each project to the group of its first member.
        let gi = pids.iter().position(|p| *p == members[0]).unwrap_or(0) / cfg.group_size;
        if let Some(u) = org.units.get_mut(&format!("g{}", gi + 1)) {
            u.projects.push(prid);
        }
        project_members.push(members);
    }

    for p in &pids {
        let roles: Vec<String> = person_roles.remove(p).unwrap_or_default().into_iter().collect();
        org.persons.insert(
            p.clone(),
            Person {
                person_id: p.clone(),
                display_name: names[p].clone(),
                name_aliases: Vec::new(),
                homepage_urls: vec![homepage(p)],
                roles,
            },
        );
    }

    // Topics
    let n_project = cfg.projects.min(cfg.topics);
    let n_adv = ((cfg.structured_ratio * cfg.topics as f64).round() as usize).min(cfg.topics - n_project);
    let mut kinds: Vec<TopicKind> = std::iter::repeat(TopicKind::Project)
        .take(n_project)
        .chain(std::iter::repeat(TopicKind::StructuredAdvantage).take(n_adv))
        .chain(std::iter::repeat(TopicKind::Ordinary).take(cfg.topics - n_project - n_adv))
        .collect();
    kinds.shuffle(&mut g.rng);
    let vocab = vocabulary(&mut g.rng, cfg.topics * WORDS_PER_TOPIC);
    let mut expert_cycle: Vec<String> = pids.clone();
    expert_cycle.shuffle(&mut g.rng);
    let mut cycle_pos = 0;
    let mut next_project = 0;
    let mut project_topic: BTreeMap<usize, usize> = BTreeMap::new();
    let mut planted = Vec::with_capacity(cfg.topics);
    for (t, kind) in kinds.iter().enumerate() {
        let experts = match kind {
            TopicKind::Project => {
                let m = project_members[next_project].clone();
                project_topic.insert(next_project, t);
                next_project += 1;
                m.into_iter().take(2.max(cfg.experts_per_topic)).collect()
            }
            _ => {
                let mut e: Vec<String> = (0..cfg.experts_per_topic)
                    .map(|i| expert_cycle[(cycle_pos + i) % expert_cycle.len()].clone())
                    .collect();
                cycle_pos += cfg.experts_per_topic;
                e.sort();
                e
            }
        };
        planted.push(PlantedTopic {
            topic_id: format!("t{:02}", t + 1),
            kind: *kind,
            experts,
            vocabulary: vocab[t * WORDS_PER_TOPIC..(t + 1) * WORDS_PER_TOPIC].to_vec(),
        });
    }

    let mut qrels = Qrels::default();
    let judge = |q: &mut Qrels, t: &str, p: &str, grade: Grade| {
        // First judgment wins; experts are judged before anyone else.
        let _ = q.insert(t, p, grade);
    };
    for pt in &planted {
        for e in &pt.experts {
            judge(&mut qrels, &pt.topic_id, e, Grade::High);
        }
    }

    // Homepages: name plus the vocabulary of every topic the person openly works on.
    let mut interests: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for pt in planted.iter().filter(|p| p.kind != TopicKind::StructuredAdvantage) {
        for e in &pt.experts {
            interests.entry(e.as_str()).or_default().extend(pt.vocabulary.iter().cloned());
        }
    }
    for p in &pids {
        let name = names[p].clone();
        let words = interests.get(p.as_str()).cloned().unwrap_or_default();
        let body = format!("{name} homepage. Research interests: {}. {}", words.join(" "), g.text(20, &[]));
        g.push(homepage(p), Source::Extranet, name, body);
        g.link(&format!("{EXTRANET}/"), &homepage(p));
    }
    for (k, members) in project_members.iter().enumerate() {
        let prid = format!("proj{}", k + 1);
        let url = format!("{EXTRANET}/projects/{prid}/");
        let words = project_topic
            .get(&k)
            .map(|&t| planted[t].vocabulary.clone())
            .unwrap_or_default();
        let listed: Vec<String> = members.iter().map(|m| names[m].clone()).collect();
        let body = format!(
            "Project {} team: {}. Topics: {}. {}",
            k + 1,
            listed.join(", "),
            words.join(" "),
            g.text(25, &words)
        );
        g.push(url.clone(), Source::Extranet, format!("Project {}", k + 1), body);
        g.link(&format!("{EXTRANET}/"), &url);
        for m in members {
            g.link(&homepage(m), &url);
        }
        let content = g.text(30, &[words.clone(), words.clone()].concat());
        let rec = g.push_db(
            format!("{DB}/projects/{prid}"),
            DbKind::ProjectDescription,
            format!("Project {} description", k + 1),
            content,
        );
        rec.project_id = Some(prid);
    }
    for (gi, members) in groups.iter().enumerate() {
        let url = format!("{INTRANET}/groups/g{}/", gi + 1);
        let listed: Vec<String> = members.iter().map(|m| names[m].clone()).collect();
        let body = format!("Group {} members: {}. {}", gi + 1, listed.join(", "), g.text(20, &[]));
        g.push(url.clone(), Source::Intranet, format!("Group {}", gi + 1), body);
        g.link(&format!("{INTRANET}/"), &url);
        g.link(&url, &format!("{INTRANET}/"));
        for m in members {
            g.link(&url, &homepage(m));
        }
    }

    // Topical pages and per-topic noise.
    let mut pub_no = 0;
    for pt in &planted {
        let t = &pt.topic_id;
        let advantage = pt.kind == TopicKind::StructuredAdvantage;
        for e in &pt.experts {
            for i in 1..=cfg.pages_per_expert {
                let url = format!("{EXTRANET}/people/{e}/{t}-{i}.html");
                let omit = advantage || g.rng.gen_bool(cfg.name_omit_ratio);
                let mut extra: Vec<String> = [pt.vocabulary.clone(), pt.vocabulary.clone()].concat();
                if !omit {
                    extra.push(names[e].clone());
                }
                let body = g.text(40, &extra);
                g.push(url.clone(), Source::Extranet, format!("{} notes {i}", pt.vocabulary[0]), body);
                // Half the links use the default-file form of the homepage.
                let src = if g.rng.gen_bool(0.5) {
                    format!("{}index.html", homepage(e))
                } else {
                    homepage(e)
                };
                g.link(&src, &url);
                g.link(&url, &homepage(e));
            }
        }
        if pt.kind != TopicKind::Project && g.rng.gen_bool(0.5) {
            pub_no += 1;
            let content = g.text(30, &[pt.vocabulary.clone(), pt.vocabulary.clone()].concat());
            let rec = g.push_db(
                format!("{DB}/publications/pub{pub_no}"),
                DbKind::Publication,
                format!("Publication {pub_no}"),
                content,
            );
            rec.person_ids = pt.experts.clone();
        }
        // A long news item: one topic word amid several unrelated names.
        let others: Vec<&String> = pids.iter().filter(|p| !pt.experts.contains(p)).collect();
        let mentioned: Vec<String> = others
            .choose_multiple(&mut g.rng, 3.min(others.len()))
            .map(|p| (*p).clone())
            .collect();
        let mut extra: Vec<String> = mentioned.iter().map(|p| names[p].clone()).collect();
        extra.push(pt.vocabulary[g.rng.gen_range(0..WORDS_PER_TOPIC)].clone());
        let body = g.text(120, &extra);
        let url = format!("{INTRANET}/news/{t}.html");
        g.push(url.clone(), Source::Intranet, "News".to_string(), body);
        g.link(&format!("{INTRANET}/"), &url);
        for p in &mentioned {
            judge(&mut qrels, t, p, Grade::None);
        }
    }
    for (&k, &ti) in &project_topic {
        for m in &project_members[k] {
            judge(&mut qrels, &planted[ti].topic_id, m, Grade::Low);
        }
    }

    let required = g.docs.len();
    if required > cfg.docs {
        return Err(SynthError::Infeasible(format!(
            "{required} documents are needed for the planted structure but only {} were requested",
            cfg.docs
        )));
    }

    // Minutes and policy pages: many names, no topical content.
    let mut filler_no = 0;
    while g.docs.len() < cfg.docs {
        filler_no += 1;
        let gi = g.rng.gen_range(0..groups.len());
        let group_url = format!("{INTRANET}/groups/g{}/", gi + 1);
        let count = g.rng.gen_range(3..=8).min(pids.len());
        let mentioned: Vec<String> = pids
            .choose_multiple(&mut g.rng, count)
            .map(|p| names[p].clone())
            .collect();
        let (url, title) = if filler_no % 3 == 0 {
            (format!("{INTRANET}/policy/p{filler_no}.html"), "Policy".to_string())
        } else {
            (format!("{group_url}minutes-{filler_no}.html"), "Minutes".to_string())
        };
        let body = g.text(60, &mentioned);
        g.push(url.clone(), Source::Intranet, title, body);
        g.link(&group_url, &url);
    }

    // Old-style homepage addresses still linked from a few pages.
    let mut aliases = Vec::new();
    for (i, p) in pids.iter().enumerate().filter(|(i, _)| i % 4 == 0) {
        let old = format!("{EXTRANET}/~{p}/");
        aliases.push((old.clone(), homepage(p)));
        let src = format!("{INTRANET}/groups/g{}/", i / cfg.group_size + 1);
        g.link(&src, &old);
    }

    let topics = Topics(
        planted
            .iter()
            .map(|p| Topic {
                topic_id: p.topic_id.clone(),
                query_text: p.vocabulary[..2].join(" "),
            })
            .collect(),
    );
    Ok(SyntheticCollection {
        documents: g.docs,
        links: g.links,
        aliases,
        org,
        topics,
        qrels,
        planted,
    })
}
