//! Direction-classified web graph over canonical page URLs.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::RawLink;
use crate::urls::{classify_edge, DirectionClass, UrlError, UrlNormalizer};

/// Immutable directed graph. Nodes are kept sorted so node indices are
/// stable for a given node set regardless of construction order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WebGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Outgoing edges per node, sorted by target index.
    out: Vec<Vec<(usize, DirectionClass)>>,
}

/// A links-file line that could not be turned into an edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedLink {
    pub line: usize,
    pub error: UrlError,
}

#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), Option<DirectionClass>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, url: impl Into<String>) {
        self.nodes.insert(url.into());
    }

    /// Adds an edge between canonical URLs. Self-loops are dropped.
    pub fn add_edge(&mut self, src: impl Into<String>, dst: impl Into<String>) {
        let (src, dst) = (src.into(), dst.into());
        if src == dst {
            self.nodes.insert(src);
            return;
        }
        self.nodes.insert(src.clone());
        self.nodes.insert(dst.clone());
        self.edges.entry((src, dst)).or_insert(None);
    }

    /// Adds an edge with an explicit class instead of the URL-derived one.
    pub fn add_classified_edge(
        &mut self,
        src: impl Into<String>,
        dst: impl Into<String>,
        class: DirectionClass,
    ) {
        let (src, dst) = (src.into(), dst.into());
        if src == dst {
            self.nodes.insert(src);
            return;
        }
        self.nodes.insert(src.clone());
        self.nodes.insert(dst.clone());
        self.edges.insert((src, dst), Some(class));
    }

    pub fn build(self) -> WebGraph {
        let nodes: Vec<String> = self.nodes.into_iter().collect();
        let index: BTreeMap<String, usize> =
            nodes.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let mut out = vec![Vec::new(); nodes.len()];
        for ((src, dst), class) in &self.edges {
            let class = class.unwrap_or_else(|| classify_edge(src, dst));
            out[index[src]].push((index[dst], class));
        }
        for list in &mut out {
            list.sort_unstable();
        }
        WebGraph { nodes, index, out }
    }
}

impl WebGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, url: &str) -> bool {
        self.index.contains_key(url)
    }

    pub fn node_id(&self, url: &str) -> Option<usize> {
        self.index.get(url).copied()
    }

    pub fn url(&self, id: usize) -> &str {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn out_edges(&self, id: usize) -> &[(usize, DirectionClass)] {
        &self.out[id]
    }

    /// All edges as `(src, dst, class)` in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, DirectionClass)> {
        self.out.iter().enumerate().flat_map(move |(s, list)| {
            list.iter()
                .map(move |&(d, c)| (self.nodes[s].as_str(), self.nodes[d].as_str(), c))
        })
    }

    pub fn edge_class(&self, src: &str, dst: &str) -> Option<DirectionClass> {
        let s = self.node_id(src)?;
        let d = self.node_id(dst)?;
        self.out[s].iter().find(|(t, _)| *t == d).map(|&(_, c)| c)
    }

    /// Subgraph induced by nodes accepted by `keep`.
    pub fn induced<F: Fn(&str) -> bool>(&self, keep: F) -> WebGraph {
        let mut b = GraphBuilder::new();
        for n in self.nodes.iter().filter(|n| keep(n)) {
            b.add_node(n.clone());
        }
        for (s, d, c) in self.edges() {
            if keep(s) && keep(d) {
                b.add_classified_edge(s, d, c);
            }
        }
        b.build()
    }

    /// Copy of this graph with extra isolated nodes.
    pub fn with_nodes<'a, I: IntoIterator<Item = &'a str>>(&self, extra: I) -> WebGraph {
        let mut b = GraphBuilder::new();
        for n in &self.nodes {
            b.add_node(n.clone());
        }
        for n in extra {
            b.add_node(n);
        }
        for (s, d, c) in self.edges() {
            b.add_classified_edge(s, d, c);
        }
        b.build()
    }
}

/// Normalizes every link, collapses duplicates, drops self-loops created by
/// alias collapsing and classifies each surviving edge. Lines whose URLs do
/// not parse are reported and skipped.
pub fn build_web_graph(links: &[RawLink], urls: &UrlNormalizer) -> (WebGraph, Vec<RejectedLink>) {
    let mut builder = GraphBuilder::new();
    let mut rejected = Vec::new();
    for link in links {
        match (urls.normalize(&link.src), urls.normalize(&link.dst)) {
            (Ok(s), Ok(d)) => builder.add_edge(s, d),
            (Err(error), _) | (_, Err(error)) => rejected.push(RejectedLink {
                line: link.line,
                error,
            }),
        }
    }
    (builder.build(), rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urls::AliasMap;
    use proptest::prelude::*;

    fn links(pairs: &[(&str, &str)]) -> Vec<RawLink> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, (s, d))| RawLink {
                line: i + 1,
                src: s.to_string(),
                dst: d.to_string(),
            })
            .collect()
    }

    #[test]
    fn duplicate_edges_collapse() {
        let (g, rej) = build_web_graph(
            &links(&[("http://x/a", "http://x/b"), ("http://x/a", "http://x/b")]),
            &UrlNormalizer::default(),
        );
        assert!(rej.is_empty());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn alias_rewrites_endpoint() {
        let aliases = AliasMap::from_pairs(
            [("http://x/old", "http://x/a")],
            &crate::urls::DEFAULT_FILES.map(String::from),
        )
        .unwrap();
        let (g, _) = build_web_graph(
            &links(&[("http://x/old", "http://x/b")]),
            &UrlNormalizer::with_aliases(aliases),
        );
        let edges: Vec<_> = g.edges().map(|(s, d, _)| (s.to_string(), d.to_string())).collect();
        assert_eq!(edges, vec![("http://x/a".to_string(), "http://x/b".to_string())]);
    }

    #[test]
    fn self_loop_from_default_file_is_dropped() {
        // http://x/a/index.html normalizes to http://x/a/, the same node as the source
        let (g, _) = build_web_graph(
            &links(&[("http://x/a/", "http://x/a/index.html")]),
            &UrlNormalizer::default(),
        );
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn malformed_lines_reported_processing_continues() {
        let (g, rej) = build_web_graph(
            &links(&[("nonsense", "http://x/b"), ("http://x/a", "http://x/b")]),
            &UrlNormalizer::default(),
        );
        assert_eq!(rej.len(), 1);
        assert_eq!(rej[0].line, 1);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn edges_carry_direction() {
        let (g, _) = build_web_graph(
            &links(&[("http://x/a/", "http://x/a/b/c.html"), ("http://x/a/b/c.html", "http://x/")]),
            &UrlNormalizer::default(),
        );
        assert_eq!(g.edge_class("http://x/a/", "http://x/a/b/c.html"), Some(DirectionClass::DownOrSame));
        assert_eq!(g.edge_class("http://x/a/b/c.html", "http://x/"), Some(DirectionClass::UpOrAway));
    }

    fn edge_list() -> impl Strategy<Value = Vec<(String, String)>> {
        let page = prop::sample::select(vec![
            "http://x/", "http://x/index.html", "http://x/a/", "http://x/a/p.html",
            "http://x/b/q.html", "http://y/", "http://y/z/index.htm",
        ]);
        prop::collection::vec((page.clone(), page), 0..20).prop_map(|v| {
            v.into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
        })
    }

    proptest! {
        #[test]
        fn graph_is_order_independent_and_bounded(mut pairs in edge_list(), seed in any::<u64>()) {
            let norm = UrlNormalizer::default();
            let to_links = |p: &[(String, String)]| -> Vec<RawLink> {
                p.iter().enumerate().map(|(i, (s, d))| RawLink { line: i + 1, src: s.clone(), dst: d.clone() }).collect()
            };
            let (g1, _) = build_web_graph(&to_links(&pairs), &norm);
            // deterministic shuffle
            let n = pairs.len();
            if n > 1 {
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    pairs.swap(i, (s >> 33) as usize % (i + 1));
                }
            }
            let (g2, _) = build_web_graph(&to_links(&pairs), &norm);
            prop_assert_eq!(&g1, &g2);

            let distinct: BTreeSet<String> = pairs.iter()
                .flat_map(|(a, b)| [norm.normalize(a).unwrap(), norm.normalize(b).unwrap()])
                .collect();
            prop_assert!(g1.node_count() <= distinct.len());
            prop_assert!(g1.edge_count() <= pairs.len());
            for (s, d, _) in g1.edges() {
                prop_assert!(s != d);
                prop_assert!(g1.contains(s) && g1.contains(d));
            }
        }
    }
}
