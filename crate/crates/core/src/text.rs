//! Tokenization and person-name matching.

use std::collections::BTreeSet;

use crate::corpus::Corpus;
use crate::org::Person;

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty()
        && haystack.len() >= needle.len()
        && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Pre-tokenized corpus text for repeated name lookups.
#[derive(Debug, Clone)]
pub struct MentionIndex {
    docs: Vec<(String, Vec<String>)>,
}

impl MentionIndex {
    pub fn new(corpus: &Corpus) -> Self {
        Self {
            docs: corpus
                .iter()
                .map(|d| (d.doc_id.clone(), tokenize(&d.text())))
                .collect(),
        }
    }

    /// Documents whose title or content contains the person's display name or
    /// any alias as a whole-token sequence, ignoring case.
    pub fn mentions(&self, person: &Person) -> BTreeSet<String> {
        let names: Vec<Vec<String>> = std::iter::once(&person.display_name)
            .chain(person.name_aliases.iter())
            .map(|n| tokenize(n))
            .filter(|t| !t.is_empty())
            .collect();
        self.docs
            .iter()
            .filter(|(_, tokens)| names.iter().any(|n| contains_sequence(tokens, n)))
            .map(|(id, _)| id.clone())
            .collect()
    }
}

pub fn find_name_mentions(corpus: &Corpus, person: &Person) -> BTreeSet<String> {
    MentionIndex::new(corpus).mentions(person)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Source};
    use crate::urls::UrlNormalizer;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("XML Protocols!"), vec!["xml", "protocols"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("data-mining"), vec!["data", "mining"]);
    }

    fn corpus(contents: &[&str]) -> Corpus {
        Corpus::from_documents(
            contents.iter().enumerate().map(|(i, c)| Document {
                doc_id: format!("d{i}"),
                url: format!("http://x/{i}.html"),
                source: Source::Intranet,
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

    fn person(name: &str, aliases: &[&str]) -> Person {
        Person {
            person_id: "p".into(),
            display_name: name.into(),
            name_aliases: aliases.iter().map(|s| s.to_string()).collect(),
            homepage_urls: vec![],
            roles: vec![],
        }
    }

    #[test]
    fn name_mentions() {
        let c = corpus(&[
            "talk presented by John Smith at the seminar",
            "Johnson Smithers attended",
            "ANNE-MARIE VERCOUSTRE wrote this",
        ]);
        assert_eq!(
            find_name_mentions(&c, &person("John Smith", &[])),
            ["d0".to_string()].into()
        );
        assert_eq!(
            find_name_mentions(&c, &person("Someone Else", &["Anne-Marie Vercoustre"])),
            ["d2".to_string()].into()
        );
    }
}
