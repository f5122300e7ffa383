//! Organizational structure: people, units, projects and roles, read from
//! the org XML file, plus seed-page extraction and database-record linkage.
//!
//! Schema: a top-level `<org>` holding any number of `<role>`, `<unit>`,
//! `<project>` and `<person>` elements.
//!
//! ```xml
//! <org>
//!   <role id="t1"><title>scientist</title></role>
//!   <unit id="ted" type="team" parent="cmis">
//!     <details>
//!       <title>...</title>
//!       <description>...</description>
//!       <descriptionurls><url>http://...</url></descriptionurls>
//!       <member personID="p1"><role roleID="t1"/></member>
//!       <project projectID="expert"/>
//!     </details>
//!   </unit>
//!   <project id="expert">
//!     <title>...</title>
//!     <descriptionurls><url>http://...</url></descriptionurls>
//!     <member personID="p1"/>
//!   </project>
//!   <person id="p1">
//!     <name>John Smith</name>
//!     <alias>J. Smith</alias>
//!     <homepage>http://...</homepage>
//!     <role roleID="t1"/>
//!   </person>
//! </org>
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, DbKind};
use crate::urls::UrlNormalizer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Person {
    pub person_id: String,
    pub display_name: String,
    pub name_aliases: Vec<String>,
    pub homepage_urls: Vec<String>,
    /// Declared roles plus roles held through unit memberships, sorted.
    pub roles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub role_id: String,
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitType {
    Team,
    Group,
    Division,
    Other,
}

impl UnitType {
    fn parse(s: &str) -> UnitType {
        match s {
            "team" => UnitType::Team,
            "group" => UnitType::Group,
            "division" => UnitType::Division,
            _ => UnitType::Other,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            UnitType::Team => "team",
            UnitType::Group => "group",
            UnitType::Division => "division",
            UnitType::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub person_id: String,
    pub roles: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub unit_id: String,
    pub unit_type: UnitType,
    pub title: String,
    pub description: String,
    pub description_urls: Vec<String>,
    pub members: Vec<Membership>,
    pub projects: Vec<String>,
    pub parent_unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub project_id: String,
    pub title: String,
    pub description_urls: Vec<String>,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgModel {
    pub persons: BTreeMap<String, Person>,
    pub units: BTreeMap<String, Unit>,
    pub projects: BTreeMap<String, Project>,
    pub roles: BTreeMap<String, Role>,
}

#[derive(Debug, Error)]
pub enum OrgError {
    #[error("org XML parse error: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("org XML is not UTF-8: {0}")]
    Encoding(#[from] std::str::Utf8Error),
    #[error("org XML root element must be <org>, found <{0}>")]
    Root(String),
}

/// A referential problem found while resolving the org file. The offending
/// entity or link is skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgWarning(pub String);

impl fmt::Display for OrgWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedOrg {
    pub model: OrgModel,
    pub warnings: Vec<OrgWarning>,
}

fn child_elements<'a, 'i>(
    node: roxmltree::Node<'a, 'i>,
    name: &'a str,
) -> impl Iterator<Item = roxmltree::Node<'a, 'i>> + 'a {
    node.children()
        .filter(move |c| c.is_element() && c.tag_name().name() == name)
}

fn child_text(node: roxmltree::Node, name: &str) -> String {
    child_elements(node, name)
        .next()
        .and_then(|c| c.text())
        .map(|t| t.trim().to_string())
        .unwrap_or_default()
}

fn normalize_urls(
    raw: impl Iterator<Item = String>,
    urls: &UrlNormalizer,
    owner: &str,
    warnings: &mut Vec<OrgWarning>,
) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in raw {
        if r.is_empty() {
            continue;
        }
        match urls.normalize(&r) {
            Ok(u) if !out.contains(&u) => out.push(u),
            Ok(_) => {}
            Err(e) => warnings.push(OrgWarning(format!("{owner}: {e}"))),
        }
    }
    out
}

fn description_urls<'a, 'i: 'a>(node: roxmltree::Node<'a, 'i>) -> impl Iterator<Item = String> + 'a {
    child_elements(node, "descriptionurls")
        .flat_map(|d| child_elements(d, "url"))
        .filter_map(|u| u.text().map(|t| t.trim().to_string()))
}

/// Parses and resolves the org XML file.
pub fn parse_org(xml: &[u8], urls: &UrlNormalizer) -> Result<ParsedOrg, OrgError> {
    let text = std::str::from_utf8(xml)?;
    let doc = roxmltree::Document::parse(text)?;
    let root = doc.root_element();
    if root.tag_name().name() != "org" {
        return Err(OrgError::Root(root.tag_name().name().to_string()));
    }

    let mut warnings = Vec::new();
    let mut model = OrgModel::default();

    for node in child_elements(root, "role") {
        let Some(id) = node.attribute("id") else {
            warnings.push(OrgWarning("role without id".into()));
            continue;
        };
        model.roles.insert(
            id.to_string(),
            Role {
                role_id: id.to_string(),
                title: child_text(node, "title"),
            },
        );
    }

    let mut declared_roles: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for node in child_elements(root, "person") {
        let Some(id) = node.attribute("id") else {
            warnings.push(OrgWarning("person without id".into()));
            continue;
        };
        let name = child_text(node, "name");
        if name.is_empty() {
            warnings.push(OrgWarning(format!("person {id}: missing name, skipped")));
            continue;
        }
        if model.persons.contains_key(id) {
            warnings.push(OrgWarning(format!("person {id}: duplicate declaration, skipped")));
            continue;
        }
        let aliases: Vec<String> = child_elements(node, "alias")
            .filter_map(|a| a.text().map(|t| t.trim().to_string()))
            .filter(|a| !a.is_empty())
            .collect();
        let homepages = normalize_urls(
            child_elements(node, "homepage").filter_map(|h| h.text().map(|t| t.trim().to_string())),
            urls,
            &format!("person {id}"),
            &mut warnings,
        );
        let roles = declared_roles.entry(id.to_string()).or_default();
        for r in child_elements(node, "role") {
            match r.attribute("roleID") {
                Some(rid) if model.roles.contains_key(rid) => {
                    roles.insert(rid.to_string());
                }
                Some(rid) => warnings.push(OrgWarning(format!("person {id}: unknown role {rid}"))),
                None => {}
            }
        }
        model.persons.insert(
            id.to_string(),
            Person {
                person_id: id.to_string(),
                display_name: name,
                name_aliases: aliases,
                homepage_urls: homepages,
                roles: Vec::new(),
            },
        );
    }

    // Projects before units so unit→project links can be checked.
    for node in child_elements(root, "project") {
        let Some(id) = node.attribute("id") else {
            warnings.push(OrgWarning("project without id".into()));
            continue;
        };
        if model.projects.contains_key(id) {
            warnings.push(OrgWarning(format!("project {id}: duplicate declaration, skipped")));
            continue;
        }
        let mut members = Vec::new();
        for m in child_elements(node, "member") {
            let Some(pid) = m.attribute("personID") else { continue };
            if !model.persons.contains_key(pid) {
                warnings.push(OrgWarning(format!("project {id}: unknown person {pid}")));
            } else if !members.iter().any(|x| x == pid) {
                members.push(pid.to_string());
            }
        }
        let description_urls =
            normalize_urls(description_urls(node), urls, &format!("project {id}"), &mut warnings);
        model.projects.insert(
            id.to_string(),
            Project {
                project_id: id.to_string(),
                title: child_text(node, "title"),
                description_urls,
                members,
            },
        );
    }

    for node in child_elements(root, "unit") {
        let Some(id) = node.attribute("id") else {
            warnings.push(OrgWarning("unit without id".into()));
            continue;
        };
        if model.units.contains_key(id) {
            warnings.push(OrgWarning(format!("unit {id}: duplicate declaration, skipped")));
            continue;
        }
        let details = child_elements(node, "details").next().unwrap_or(node);
        let mut members: Vec<Membership> = Vec::new();
        for m in child_elements(details, "member") {
            let Some(pid) = m.attribute("personID") else { continue };
            if !model.persons.contains_key(pid) {
                warnings.push(OrgWarning(format!("unit {id}: unknown person {pid}")));
                continue;
            }
            let mut roles = Vec::new();
            for r in child_elements(m, "role") {
                match r.attribute("roleID") {
                    Some(rid) if model.roles.contains_key(rid) => {
                        if !roles.iter().any(|x| x == rid) {
                            roles.push(rid.to_string());
                        }
                    }
                    Some(rid) => {
                        warnings.push(OrgWarning(format!("unit {id}: unknown role {rid}")))
                    }
                    None => {}
                }
            }
            match members.iter_mut().find(|x| x.person_id == pid) {
                Some(existing) => {
                    for r in roles {
                        if !existing.roles.contains(&r) {
                            existing.roles.push(r);
                        }
                    }
                }
                None => members.push(Membership {
                    person_id: pid.to_string(),
                    roles,
                }),
            }
        }
        let mut projects = Vec::new();
        for p in child_elements(details, "project") {
            let Some(proj) = p.attribute("projectID") else { continue };
            if !model.projects.contains_key(proj) {
                warnings.push(OrgWarning(format!("unit {id}: unknown project {proj}")));
            } else if !projects.iter().any(|x| x == proj) {
                projects.push(proj.to_string());
            }
        }
        let description_urls =
            normalize_urls(description_urls(details), urls, &format!("unit {id}"), &mut warnings);
        model.units.insert(
            id.to_string(),
            Unit {
                unit_id: id.to_string(),
                unit_type: UnitType::parse(node.attribute("type").unwrap_or("other")),
                title: child_text(details, "title"),
                description: child_text(details, "description"),
                description_urls,
                members,
                projects,
                parent_unit: node.attribute("parent").map(str::to_string),
            },
        );
    }

    resolve_parents(&mut model, &mut warnings);

    for unit in model.units.values() {
        for m in &unit.members {
            declared_roles
                .entry(m.person_id.clone())
                .or_default()
                .extend(m.roles.iter().cloned());
        }
    }
    for (pid, roles) in declared_roles {
        if let Some(p) = model.persons.get_mut(&pid) {
            p.roles = roles.into_iter().collect();
        }
    }

    Ok(ParsedOrg { model, warnings })
}

/// Drops parent links to unknown units and breaks cycles.
fn resolve_parents(model: &mut OrgModel, warnings: &mut Vec<OrgWarning>) {
    let ids: Vec<String> = model.units.keys().cloned().collect();
    for id in &ids {
        let parent = model.units[id].parent_unit.clone();
        if let Some(p) = parent {
            if !model.units.contains_key(&p) {
                warnings.push(OrgWarning(format!("unit {id}: unknown parent unit {p}")));
                model.units.get_mut(id).unwrap().parent_unit = None;
            }
        }
    }
    for id in &ids {
        let mut seen = BTreeSet::new();
        let mut cur = id.clone();
        seen.insert(cur.clone());
        while let Some(p) = model.units[&cur].parent_unit.clone() {
            if !seen.insert(p.clone()) {
                warnings.push(OrgWarning(format!("unit {cur}: parent cycle through {p}, link dropped")));
                model.units.get_mut(&cur).unwrap().parent_unit = None;
                break;
            }
            cur = p;
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes a model back to the org XML schema.
pub fn write_org_xml(model: &OrgModel) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<org>\n");
    for role in model.roles.values() {
        let _ = writeln!(
            out,
            "  <role id=\"{}\"><title>{}</title></role>",
            escape(&role.role_id),
            escape(&role.title)
        );
    }
    for unit in model.units.values() {
        let _ = write!(
            out,
            "  <unit id=\"{}\" type=\"{}\"",
            escape(&unit.unit_id),
            unit.unit_type.as_str()
        );
        if let Some(p) = &unit.parent_unit {
            let _ = write!(out, " parent=\"{}\"", escape(p));
        }
        out.push_str(">\n    <details>\n");
        let _ = writeln!(out, "      <title>{}</title>", escape(&unit.title));
        let _ = writeln!(out, "      <description>{}</description>", escape(&unit.description));
        out.push_str("      <descriptionurls>\n");
        for u in &unit.description_urls {
            let _ = writeln!(out, "        <url>{}</url>", escape(u));
        }
        out.push_str("      </descriptionurls>\n");
        for m in &unit.members {
            let _ = write!(out, "      <member personID=\"{}\">", escape(&m.person_id));
            for r in &m.roles {
                let _ = write!(out, "<role roleID=\"{}\"/>", escape(r));
            }
            out.push_str("</member>\n");
        }
        for p in &unit.projects {
            let _ = writeln!(out, "      <project projectID=\"{}\"/>", escape(p));
        }
        out.push_str("    </details>\n  </unit>\n");
    }
    for project in model.projects.values() {
        let _ = writeln!(out, "  <project id=\"{}\">", escape(&project.project_id));
        let _ = writeln!(out, "    <title>{}</title>", escape(&project.title));
        out.push_str("    <descriptionurls>\n");
        for u in &project.description_urls {
            let _ = writeln!(out, "      <url>{}</url>", escape(u));
        }
        out.push_str("    </descriptionurls>\n");
        for m in &project.members {
            let _ = writeln!(out, "    <member personID=\"{}\"/>", escape(m));
        }
        out.push_str("  </project>\n");
    }
    for person in model.persons.values() {
        let _ = writeln!(out, "  <person id=\"{}\">", escape(&person.person_id));
        let _ = writeln!(out, "    <name>{}</name>", escape(&person.display_name));
        for a in &person.name_aliases {
            let _ = writeln!(out, "    <alias>{}</alias>", escape(a));
        }
        for h in &person.homepage_urls {
            let _ = writeln!(out, "    <homepage>{}</homepage>", escape(h));
        }
        for r in &person.roles {
            let _ = writeln!(out, "    <role roleID=\"{}\"/>", escape(r));
        }
        out.push_str("  </person>\n");
    }
    out.push_str("</org>\n");
    out
}

/// What kind of org page a seed URL is. Declaration order is priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    PersonHomepage,
    ProjectHomepage,
    GroupHomepage,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedPoint {
    pub person_id: String,
    pub url: String,
    pub seed_kind: SeedKind,
}

impl OrgModel {
    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
            && self.units.is_empty()
            && self.projects.is_empty()
            && self.roles.is_empty()
    }

    pub fn person(&self, id: &str) -> Option<&Person> {
        self.persons.get(id)
    }

    pub fn units_of<'a>(&'a self, person_id: &'a str) -> impl Iterator<Item = &'a Unit> + 'a {
        self.units
            .values()
            .filter(move |u| u.members.iter().any(|m| m.person_id == person_id))
    }

    pub fn projects_of<'a>(&'a self, person_id: &'a str) -> impl Iterator<Item = &'a Project> + 'a {
        self.projects
            .values()
            .filter(move |p| p.members.iter().any(|m| m == person_id))
    }

    pub fn has_role(&self, person_id: &str, role_id: &str) -> bool {
        self.persons
            .get(person_id)
            .is_some_and(|p| p.roles.iter().any(|r| r == role_id))
    }

    /// Every org page URL with its highest-priority kind.
    pub fn page_kinds(&self) -> BTreeMap<String, SeedKind> {
        let mut kinds: BTreeMap<String, SeedKind> = BTreeMap::new();
        let mut put = |url: &String, kind: SeedKind| {
            kinds
                .entry(url.clone())
                .and_modify(|k| *k = (*k).min(kind))
                .or_insert(kind);
        };
        for p in self.persons.values() {
            p.homepage_urls.iter().for_each(|u| put(u, SeedKind::PersonHomepage));
        }
        for p in self.projects.values() {
            p.description_urls.iter().for_each(|u| put(u, SeedKind::ProjectHomepage));
        }
        for u in self.units.values() {
            u.description_urls.iter().for_each(|x| put(x, SeedKind::GroupHomepage));
        }
        kinds
    }

    /// Co-members reachable through a shared unit or project.
    pub fn relationships(&self, person_id: &str) -> Vec<Relationship> {
        let mut out = BTreeSet::new();
        for unit in self.units_of(person_id) {
            for m in unit.members.iter().filter(|m| m.person_id != person_id) {
                out.insert(Relationship {
                    person_id: m.person_id.clone(),
                    via: ContainerKind::Unit,
                    container_id: unit.unit_id.clone(),
                });
            }
        }
        for project in self.projects_of(person_id) {
            for m in project.members.iter().filter(|m| *m != person_id) {
                out.insert(Relationship {
                    person_id: m.clone(),
                    via: ContainerKind::Project,
                    container_id: project.project_id.clone(),
                });
            }
        }
        out.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerKind {
    Unit,
    Project,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relationship {
    pub person_id: String,
    pub via: ContainerKind,
    pub container_id: String,
}

/// Seed pages for every person, sorted by person then URL. When one URL is
/// reachable as several kinds for the same person, the highest-priority kind
/// is kept.
pub fn extract_seeds(org: &OrgModel) -> Vec<SeedPoint> {
    let mut best: BTreeMap<(String, String), SeedKind> = BTreeMap::new();
    let mut put = |pid: &str, url: &str, kind: SeedKind| {
        best.entry((pid.to_string(), url.to_string()))
            .and_modify(|k| *k = (*k).min(kind))
            .or_insert(kind);
    };
    for person in org.persons.values() {
        let pid = person.person_id.as_str();
        for h in &person.homepage_urls {
            put(pid, h, SeedKind::PersonHomepage);
        }
        for project in org.projects_of(pid) {
            for u in &project.description_urls {
                put(pid, u, SeedKind::ProjectHomepage);
            }
        }
        for unit in org.units_of(pid) {
            for u in &unit.description_urls {
                put(pid, u, SeedKind::GroupHomepage);
            }
        }
    }
    best.into_iter()
        .map(|((person_id, url), seed_kind)| SeedPoint {
            person_id,
            url,
            seed_kind,
        })
        .collect()
}

/// Seeds whose page is not in the corpus.
pub fn dangling_seeds<'a>(seeds: &'a [SeedPoint], corpus: &Corpus) -> Vec<&'a SeedPoint> {
    seeds.iter().filter(|s| !corpus.contains_url(&s.url)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DbAttachment {
    pub pairs: BTreeSet<(String, String)>,
    pub warnings: Vec<OrgWarning>,
}

impl DbAttachment {
    pub fn docs_for(&self, person_id: &str) -> BTreeSet<String> {
        self.pairs
            .iter()
            .filter(|(p, _)| p == person_id)
            .map(|(_, d)| d.clone())
            .collect()
    }
}

/// Links database records to people through their project id and
/// author/contact ids.
pub fn attach_db_documents(org: &OrgModel, corpus: &Corpus) -> DbAttachment {
    let mut out = DbAttachment::default();
    for doc in corpus.iter() {
        let Some(kind) = doc.db_kind else { continue };
        if let Some(project_id) = &doc.project_id {
            match org.projects.get(project_id) {
                Some(project) => {
                    for m in &project.members {
                        out.pairs.insert((m.clone(), doc.doc_id.clone()));
                    }
                }
                None => out.warnings.push(OrgWarning(format!(
                    "{} {}: unknown project {project_id}",
                    kind.as_str(),
                    doc.doc_id
                ))),
            }
        } else if kind == DbKind::ProjectDescription && doc.person_ids.is_empty() {
            out.warnings.push(OrgWarning(format!(
                "project_description {}: no project id",
                doc.doc_id
            )));
        }
        for pid in &doc.person_ids {
            if org.persons.contains_key(pid) {
                out.pairs.insert((pid.clone(), doc.doc_id.clone()));
            } else {
                out.warnings.push(OrgWarning(format!(
                    "{} {}: unknown person {pid}",
                    kind.as_str(),
                    doc.doc_id
                )));
            }
        }
    }
    out
}
