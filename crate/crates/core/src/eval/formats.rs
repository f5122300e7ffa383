use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("{file} line {line}: {reason}")]
    Line {
        file: &'static str,
        line: usize,
        reason: String,
    },
    #[error("run {tag}: topic {topic}: {reason}")]
    Run {
        tag: String,
        topic: String,
        reason: String,
    },
}

fn line_err(file: &'static str, line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::Line {
        file,
        line,
        reason: reason.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: String,
    pub query_text: String,
}

/// Topics in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Topics(pub Vec<Topic>);

impl Topics {
    pub fn iter(&self) -> impl Iterator<Item = &Topic> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|t| t.topic_id.as_str())
    }
}

/// `topic_id<TAB>query text`
pub fn parse_topics(text: &str) -> Result<Topics, FormatError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (n, line) in data_lines(text) {
        let Some((id, query)) = line.split_once('\t') else {
            return Err(line_err("topics", n, "expected topic_id<TAB>query"));
        };
        let (id, query) = (id.trim(), query.trim());
        if id.is_empty() || query.is_empty() {
            return Err(line_err("topics", n, "empty topic id or query"));
        }
        if !seen.insert(id.to_string()) {
            return Err(line_err("topics", n, format!("duplicate topic {id}")));
        }
        out.push(Topic {
            topic_id: id.to_string(),
            query_text: query.to_string(),
        });
    }
    Ok(Topics(out))
}

pub fn write_topics(topics: &Topics) -> String {
    let mut out = String::new();
    for t in topics.iter() {
        let _ = writeln!(out, "{}\t{}", t.topic_id, t.query_text);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grade {
    High,
    Medium,
    Low,
    None,
}

impl Grade {
    pub const ALL: [Grade; 4] = [Grade::High, Grade::Medium, Grade::Low, Grade::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::High => "high",
            Grade::Medium => "medium",
            Grade::Low => "low",
            Grade::None => "none",
        }
    }
}

impl FromStr for Grade {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(Grade::High),
            "medium" => Ok(Grade::Medium),
            "low" => Ok(Grade::Low),
            "none" => Ok(Grade::None),
            other => Err(format!("unknown grade {other:?}")),
        }
    }
}

/// Graded judgments per topic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, Grade>>,
}

impl Qrels {
    /// Adds a judgment; a second judgment for the same pair is rejected.
    pub fn insert(&mut self, topic: &str, person: &str, grade: Grade) -> Result<(), String> {
        let pool = self.judgments.entry(topic.to_string()).or_default();
        if pool.contains_key(person) {
            return Err(format!("duplicate judgment for ({topic}, {person})"));
        }
        pool.insert(person.to_string(), grade);
        Ok(())
    }

    pub fn pool(&self, topic: &str) -> Option<&BTreeMap<String, Grade>> {
        self.judgments.get(topic)
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, Grade)> {
        self.judgments.iter().flat_map(|(t, pool)| {
            pool.iter().map(move |(p, g)| (t.as_str(), p.as_str(), *g))
        })
    }
}

/// `topic_id<TAB>person_id<TAB>grade`
pub fn parse_qrels(text: &str) -> Result<Qrels, FormatError> {
    let mut qrels = Qrels::default();
    for (n, line) in data_lines(text) {
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(line_err("qrels", n, "expected topic_id<TAB>person_id<TAB>grade"));
        }
        let grade: Grade = cols[2].parse().map_err(|e: String| line_err("qrels", n, e))?;
        qrels
            .insert(cols[0], cols[1], grade)
            .map_err(|e| line_err("qrels", n, e))?;
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (t, p, g) in qrels.iter() {
        let _ = writeln!(out, "{t}\t{p}\t{}", g.as_str());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub person_id: String,
    pub score: f64,
}

/// Ranked people per topic; ranks are positions in each list, from 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunFile {
    pub run_tag: String,
    pub topics: BTreeMap<String, Vec<RunEntry>>,
}

impl RunFile {
    pub fn new(run_tag: impl Into<String>) -> Self {
        Self {
            run_tag: run_tag.into(),
            topics: BTreeMap::new(),
        }
    }

    pub fn ranked(&self, topic: &str) -> Vec<&str> {
        self.topics
            .get(topic)
            .map(|v| v.iter().map(|e| e.person_id.as_str()).collect())
            .unwrap_or_default()
    }

    /// Checks unique persons and non-increasing scores per topic.
    pub fn validate(&self) -> Result<(), FormatError> {
        for (topic, entries) in &self.topics {
            let err = |reason: String| FormatError::Run {
                tag: self.run_tag.clone(),
                topic: topic.clone(),
                reason,
            };
            let mut seen = BTreeSet::new();
            for (i, e) in entries.iter().enumerate() {
                if !seen.insert(e.person_id.as_str()) {
                    return Err(err(format!("person {} listed twice", e.person_id)));
                }
                if i > 0 && e.score > entries[i - 1].score {
                    return Err(err(format!("score increases at rank {}", i + 1)));
                }
            }
        }
        Ok(())
    }
}

/// `topic_id<TAB>rank<TAB>person_id<TAB>score<TAB>run_tag`, scores with six
/// decimals, topics in id order.
pub fn write_run(run: &RunFile) -> String {
    let mut out = String::new();
    for (topic, entries) in &run.topics {
        for (i, e) in entries.iter().enumerate() {
            let _ = writeln!(
                out,
                "{topic}\t{}\t{}\t{:.6}\t{}",
                i + 1,
                e.person_id,
                e.score,
                run.run_tag
            );
        }
    }
    out
}

pub fn parse_run(text: &str) -> Result<RunFile, FormatError> {
    let mut run = RunFile::default();
    let mut tag: Option<String> = None;
    for (n, line) in data_lines(text) {
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(line_err(
                "run",
                n,
                "expected topic_id<TAB>rank<TAB>person_id<TAB>score<TAB>run_tag",
            ));
        }
        let rank: usize = cols[1]
            .parse()
            .map_err(|_| line_err("run", n, format!("bad rank {:?}", cols[1])))?;
        let score: f64 = cols[3]
            .parse()
            .map_err(|_| line_err("run", n, format!("bad score {:?}", cols[3])))?;
        match &tag {
            None => tag = Some(cols[4].to_string()),
            Some(t) if t != cols[4] => {
                return Err(line_err("run", n, format!("mixed run tags {t} and {}", cols[4])))
            }
            _ => {}
        }
        let entries = run.topics.entry(cols[0].to_string()).or_default();
        if rank != entries.len() + 1 {
            return Err(line_err(
                "run",
                n,
                format!("rank {rank} out of sequence, expected {}", entries.len() + 1),
            ));
        }
        entries.push(RunEntry {
            person_id: cols[2].to_string(),
            score,
        });
    }
    run.run_tag = tag.unwrap_or_default();
    run.validate()?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topics_round_trip() {
        let t = parse_topics("# comment\nt1\txml protocols\nt2\tdata mining\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(parse_topics(&write_topics(&t)).unwrap(), t);
    }

    #[test]
    fn duplicate_topic_rejected() {
        assert!(parse_topics("t1\ta\nt1\tb\n").is_err());
    }

    #[test]
    fn qrels_reject_duplicates_and_bad_grades() {
        assert!(parse_qrels("t1\tp1\thigh\nt1\tp1\tlow\n").is_err());
        let err = parse_qrels("t1\tp1\tsuperb\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }

    #[test]
    fn run_round_trip_and_validation() {
        let text = "t1\t1\tp2\t3.500000\tnew-web\nt1\t2\tp1\t1.000000\tnew-web\n";
        let run = parse_run(text).unwrap();
        assert_eq!(run.run_tag, "new-web");
        assert_eq!(run.ranked("t1"), vec!["p2", "p1"]);
        assert_eq!(write_run(&run), text);

        assert!(parse_run("t1\t2\tp1\t1.0\tx\n").is_err());
        assert!(parse_run("t1\t1\tp1\t1.0\tx\nt1\t2\tp2\t2.0\tx\n").is_err());
        assert!(parse_run("t1\t1\tp1\t2.0\tx\nt1\t2\tp1\t1.0\tx\n").is_err());
    }
}
