use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::formats::{Grade, Qrels, RunFile, Topics};
use crate::scalar::Scalar;

/// Binary relevance of a graded judgment. High and medium are relevant; low
/// is relevant only when the topic's whole judgment pool has no high or
/// medium expert.
pub fn quantize<I>(grade: Grade, topic_pool: I) -> u8
where
    I: IntoIterator<Item = Grade>,
{
    match grade {
        Grade::High | Grade::Medium => 1,
        Grade::Low => {
            let strong = topic_pool
                .into_iter()
                .any(|g| matches!(g, Grade::High | Grade::Medium));
            u8::from(!strong)
        }
        Grade::None => 0,
    }
}

fn relevance(pool: &BTreeMap<String, Grade>, person: &str) -> u8 {
    match pool.get(person) {
        Some(&g) => quantize(g, pool.values().copied()),
        None => 0,
    }
}

/// Relevant people among the first `k` ranks, divided by `k`. Unjudged
/// people are not relevant, and short lists are still divided by `k`.
pub fn precision_at_k<S: Scalar>(
    ranked: &[&str],
    topic_pool: Option<&BTreeMap<String, Grade>>,
    k: usize,
) -> S {
    assert!(k >= 1, "cutoff must be at least 1");
    let Some(pool) = topic_pool else {
        return S::zero();
    };
    let hits = ranked
        .iter()
        .take(k)
        .filter(|p| relevance(pool, p) == 1)
        .count();
    S::from_count(hits) / S::from_count(k)
}

/// Precision per topic, in topic-file order, for each cutoff.
pub fn per_topic_precision<S: Scalar>(
    run: &RunFile,
    qrels: &Qrels,
    topics: &Topics,
    cutoff: usize,
) -> Vec<S> {
    topics
        .iter()
        .map(|t| precision_at_k(&run.ranked(&t.topic_id), qrels.pool(&t.topic_id), cutoff))
        .collect()
}

/// Mean precision over every topic of the topic file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroTable<S> {
    pub run_tag: String,
    pub cutoffs: Vec<usize>,
    pub means: Vec<S>,
    pub warnings: Vec<String>,
}

pub fn macro_average<S: Scalar>(
    run: &RunFile,
    qrels: &Qrels,
    topics: &Topics,
    cutoffs: &[usize],
) -> MacroTable<S> {
    let mut warnings = Vec::new();
    for t in topics.iter() {
        if qrels.pool(&t.topic_id).is_none() {
            warnings.push(format!("topic {} has no judgments", t.topic_id));
        }
    }
    for topic in run.topics.keys() {
        if !topics.ids().any(|t| t == topic) {
            warnings.push(format!("run topic {topic} is not in the topic file"));
        }
    }
    let means = cutoffs
        .iter()
        .map(|&k| {
            if topics.is_empty() {
                return S::zero();
            }
            let values = per_topic_precision::<S>(run, qrels, topics, k);
            let sum = values.into_iter().fold(S::zero(), |a, b| a + b);
            sum / S::from_count(topics.len())
        })
        .collect();
    MacroTable {
        run_tag: run.run_tag.clone(),
        cutoffs: cutoffs.to_vec(),
        means,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::formats::{parse_qrels, parse_topics, RunEntry};
    use num_rational::Ratio;

    #[test]
    fn quantize_examples() {
        use Grade::*;
        assert_eq!(quantize(High, [Low]), 1);
        assert_eq!(quantize(Low, [Low, Medium]), 0);
        assert_eq!(quantize(Low, [Low, None]), 1);
        assert_eq!(quantize(None, [None]), 0);
    }

    fn pool(pairs: &[(&str, Grade)]) -> BTreeMap<String, Grade> {
        pairs.iter().map(|(p, g)| (p.to_string(), *g)).collect()
    }

    #[test]
    fn precision_examples() {
        let judged = pool(&[("a", Grade::High), ("c", Grade::Medium)]);
        let p: f64 = precision_at_k(&["a", "b", "c", "d", "e"], Some(&judged), 5);
        assert_eq!(p, 0.4);
        let all = pool(&[("a", Grade::High), ("b", Grade::High), ("c", Grade::High)]);
        let p: Ratio<i64> = precision_at_k(&["a", "b", "c"], Some(&all), 5);
        assert_eq!(p, Ratio::new(3, 5));
        let p: f64 = precision_at_k(&[], Some(&all), 5);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn macro_mean() {
        let topics = parse_topics("t1\ta\nt2\tb\n").unwrap();
        let qrels = parse_qrels("t1\tp1\thigh\nt1\tp2\thigh\nt2\tp1\thigh\nt2\tp2\thigh\nt2\tp3\thigh\n").unwrap();
        let mut run = RunFile::new("x");
        let e = |p: &str| RunEntry { person_id: p.into(), score: 1.0 };
        run.topics.insert("t1".into(), vec![e("p1"), e("p2")]);
        run.topics.insert("t2".into(), vec![e("p1"), e("p2"), e("p3")]);
        let table: MacroTable<Ratio<i64>> = macro_average(&run, &qrels, &topics, &[5]);
        assert_eq!(table.means, vec![Ratio::new(1, 2)]);
        assert!(table.warnings.is_empty());
    }
}
