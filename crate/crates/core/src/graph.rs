//! Weighted undirected graphs with string-labelled vertices.
//!
//! Vertex ids are assigned in lexicographic label order when a graph is
//! built, so the same set of labelled edges always produces the same
//! [`Graph`] regardless of the order the edges were supplied in.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vertex index, contiguous in `0..n` within one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    User,
    Hashtag,
}

impl VertexKind {
    /// Hashtags are exactly the labels starting with `#`.
    pub fn of_label(label: &str) -> Self {
        if label.starts_with('#') {
            VertexKind::Hashtag
        } else {
            VertexKind::User
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexMeta {
    pub label: String,
    pub kind: VertexKind,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub weight: f64,
}

/// One line of an edge-list file: `src`, `dst`, edge type and occurrence count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeRecord {
    pub src: String,
    pub dst: String,
    pub etype: String,
    pub count: u64,
}

/// Immutable weighted undirected graph.
///
/// Each unordered pair is stored once with `u <= v`. Self-loops are allowed
/// and contribute twice their weight to the strength of their vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    vertices: Vec<VertexMeta>,
    index: HashMap<String, VertexId>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(VertexId, f64)>>,
    strengths: Vec<f64>,
}

impl Graph {
    pub fn empty() -> Self {
        GraphBuilder::new().build()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_ids(&self) -> impl ExactSizeIterator<Item = VertexId> {
        (0..self.vertices.len()).map(VertexId)
    }

    pub fn vertices(&self) -> &[VertexMeta] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> &VertexMeta {
        &self.vertices[v.0]
    }

    pub fn label(&self, v: VertexId) -> &str {
        &self.vertices[v.0].label
    }

    pub fn id_of(&self, label: &str) -> Option<VertexId> {
        self.index.get(label).copied()
    }

    /// Canonical edge list, sorted by `(u, v)` with `u <= v`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `v` with edge weights; a self-loop appears once.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v.0]
    }

    /// Weight of edge `{u, v}`, zero when absent.
    pub fn weight(&self, u: VertexId, v: VertexId) -> f64 {
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&(a, b)))
            .map(|i| self.edges[i].weight)
            .unwrap_or(0.0)
    }

    /// Weighted degree of `v`, self-loops counted twice.
    pub fn strength(&self, v: VertexId) -> Result<f64> {
        self.strengths.get(v.0).copied().ok_or(Error::Index {
            index: v.0,
            len: self.len(),
        })
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Number of distinct neighbours (a self-loop counts once).
    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.0].len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Row-normalizes the adjacency by strength: `P(u -> v) = w(u,v) / s(u)`.
    ///
    /// Vertices with zero strength get an empty row and are flagged dangling.
    pub fn left_normalize(&self) -> Transitions {
        let rows = self
            .adjacency
            .iter()
            .enumerate()
            .map(|(u, nbrs)| {
                nbrs.iter()
                    .map(|&(v, w)| (v.0, if v.0 == u { 2.0 * w } else { w }))
                    .collect()
            })
            .collect();
        Transitions::from_weighted_rows(rows)
    }

    /// Subgraph induced by `keep`, preserving labels.
    pub fn induced_subgraph(&self, keep: &[VertexId]) -> Graph {
        let mut inside = vec![false; self.len()];
        let mut builder = GraphBuilder::new();
        for &v in keep {
            inside[v.0] = true;
            builder.add_vertex(self.label(v));
        }
        for e in &self.edges {
            if inside[e.u.0] && inside[e.v.0] {
                builder.add_edge(self.label(e.u), self.label(e.v), e.weight);
            }
        }
        builder.build()
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| (e.u.0, e.v.0, e.weight))
                .collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Graph> {
        let mut builder = GraphBuilder::new();
        let mut seen = HashMap::new();
        for (i, meta) in json.vertices.iter().enumerate() {
            if meta.label.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty vertex label".into(),
                });
            }
            if meta.kind != VertexKind::of_label(&meta.label) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("vertex `{}` has inconsistent kind", meta.label),
                });
            }
            if seen.insert(meta.label.as_str(), i).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate vertex label `{}`", meta.label),
                });
            }
            builder.add_vertex(&meta.label);
        }
        let n = json.vertices.len();
        for (i, &(u, v, w)) in json.edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::Index {
                    index: u.max(v),
                    len: n,
                });
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("edge weight must be positive, got {w}"),
                });
            }
            builder.add_edge(&json.vertices[u].label, &json.vertices[v].label, w);
        }
        Ok(builder.build())
    }

    pub fn write_json<W: std::io::Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &self.to_json())?;
        Ok(())
    }

    pub fn read_json<R: std::io::Read>(reader: R) -> Result<Graph> {
        let json: GraphJson = serde_json::from_reader(reader)?;
        Graph::from_json(&json)
    }

    /// Reads a `.json` graph, or otherwise a tab-separated edge list.
    pub fn load(path: &std::path::Path) -> Result<Graph> {
        let file = std::fs::File::open(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Graph::read_json(std::io::BufReader::new(file))
        } else {
            ingest_edge_lists(parse_edge_list(std::io::BufReader::new(file))?)
        }
    }
}

/// On-disk graph layout: `{"vertices":[{"label","kind"}...],"edges":[[u,v,w]...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<VertexMeta>,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Accumulates labelled, weighted edges; duplicate pairs are summed.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    labels: BTreeMap<String, ()>,
    weights: BTreeMap<(String, String), f64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, label: &str) -> &mut Self {
        if !self.labels.contains_key(label) {
            self.labels.insert(label.to_owned(), ());
        }
        self
    }

    pub fn add_edge(&mut self, a: &str, b: &str, weight: f64) -> &mut Self {
        self.add_vertex(a);
        self.add_vertex(b);
        let key = if a <= b {
            (a.to_owned(), b.to_owned())
        } else {
            (b.to_owned(), a.to_owned())
        };
        *self.weights.entry(key).or_insert(0.0) += weight;
        self
    }

    pub fn build(self) -> Graph {
        let vertices: Vec<VertexMeta> = self
            .labels
            .into_keys()
            .map(|label| VertexMeta {
                kind: VertexKind::of_label(&label),
                label,
            })
            .collect();
        let index: HashMap<String, VertexId> = vertices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.label.clone(), VertexId(i)))
            .collect();
        // Labels and keys are both sorted, so edges come out sorted by (u, v).
        let edges: Vec<Edge> = self
            .weights
            .into_iter()
            .map(|((a, b), weight)| Edge {
                u: index[&a],
                v: index[&b],
                weight,
            })
            .collect();
        let n = vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut strengths = vec![0.0; n];
        for e in &edges {
            adjacency[e.u.0].push((e.v, e.weight));
            strengths[e.u.0] += e.weight;
            if e.u != e.v {
                adjacency[e.v.0].push((e.u, e.weight));
            }
            strengths[e.v.0] += e.weight;
        }
        for nbrs in &mut adjacency {
            nbrs.sort_by_key(|&(v, _)| v);
        }
        Graph {
            vertices,
            index,
            edges,
            adjacency,
            strengths,
        }
    }
}

/// Sums counts across edge types into one weighted undirected graph.
pub fn ingest_edge_lists<I>(records: I) -> Result<Graph>
where
    I: IntoIterator<Item = EdgeRecord>,
{
    let mut builder = GraphBuilder::new();
    for (i, rec) in records.into_iter().enumerate() {
        validate_record(&rec).map_err(|message| Error::Parse {
            line: i + 1,
            message,
        })?;
        builder.add_edge(&rec.src, &rec.dst, rec.count as f64);
    }
    Ok(builder.build())
}

fn validate_record(rec: &EdgeRecord) -> std::result::Result<(), String> {
    if rec.src.is_empty() || rec.dst.is_empty() {
        return Err("empty vertex label".into());
    }
    if rec.etype.is_empty() {
        return Err("empty edge type".into());
    }
    if rec.count == 0 {
        return Err("count must be a positive integer".into());
    }
    Ok(())
}

/// Parses a `src<TAB>dst<TAB>etype<TAB>count` edge list.
///
/// Lines starting with `//` and blank lines are skipped. A leading `#` is a
/// hashtag label, never a comment.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Vec<EdgeRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with("//") {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let count: u64 = fields[3].trim().parse().map_err(|_| Error::Parse {
            line: lineno,
            message: format!("count `{}` is not a positive integer", fields[3]),
        })?;
        let rec = EdgeRecord {
            src: fields[0].to_owned(),
            dst: fields[1].to_owned(),
            etype: fields[2].to_owned(),
            count,
        };
        validate_record(&rec).map_err(|message| Error::Parse {
            line: lineno,
            message,
        })?;
        records.push(rec);
    }
    Ok(records)
}

/// Row-stochastic sparse transition structure (CSR).
///
/// Rows with no outgoing weight are empty and flagged dangling.
#[derive(Clone, Debug, PartialEq)]
pub struct Transitions {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
    dangling: Vec<bool>,
}

impl Transitions {
    /// Normalizes raw non-negative row weights. Duplicate targets are merged
    /// and zero weights dropped.
    pub fn from_weighted_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut probs = Vec::new();
        let mut dangling = Vec::with_capacity(n);
        offsets.push(0);
        for mut row in rows {
            row.retain(|&(_, w)| w > 0.0);
            row.sort_by_key(|&(v, _)| v);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (v, w) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == v => last.1 += w,
                    _ => merged.push((v, w)),
                }
            }
            let total: f64 = merged.iter().map(|&(_, w)| w).sum();
            dangling.push(merged.is_empty());
            for (v, w) in merged {
                targets.push(v);
                probs.push(w / total);
            }
            offsets.push(targets.len());
        }
        Transitions {
            offsets,
            targets,
            probs,
            dangling,
        }
    }

    pub fn len(&self) -> usize {
        self.dangling.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dangling.is_empty()
    }

    pub fn row(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.offsets[u]..self.offsets[u + 1];
        self.targets[span.clone()]
            .iter()
            .copied()
            .zip(self.probs[span].iter().copied())
    }

    pub fn is_dangling(&self, u: usize) -> bool {
        self.dangling[u]
    }

    pub fn dangling(&self) -> &[bool] {
        &self.dangling
    }

    /// `P(u -> v)`, zero when there is no arc.
    pub fn prob(&self, u: usize, v: usize) -> f64 {
        let span = self.offsets[u]..self.offsets[u + 1];
        match self.targets[span.clone()].binary_search(&v) {
            Ok(i) => self.probs[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn arc_count(&self) -> usize {
        self.targets.len()
    }

    /// All arcs `(u, v, P(u -> v))` in row-major, target-sorted order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.len()).flat_map(move |u| self.row(u).map(move |(v, p)| (u, v, p)))
    }

    pub fn row_sum(&self, u: usize) -> f64 {
        self.probs[self.offsets[u]..self.offsets[u + 1]]
            .iter()
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(src: &str, dst: &str, etype: &str, count: u64) -> EdgeRecord {
        EdgeRecord {
            src: src.into(),
            dst: dst.into(),
            etype: etype.into(),
            count,
        }
    }

    #[test]
    fn edge_types_are_summed() {
        let g =
            ingest_edge_lists([rec("a", "b", "mention", 2), rec("b", "a", "retweet", 3)]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].weight, 5.0);
    }

    #[test]
    fn empty_input_gives_empty_graph() {
        let g = ingest_edge_lists(Vec::new()).unwrap();
        assert!(g.is_empty());
        assert_eq!(g.edges().len(), 0);
    }

    #[test]
    fn hashtag_kind_from_prefix() {
        let g = ingest_edge_lists([rec("a", "#x", "mention", 1)]).unwrap();
        let x = g.id_of("#x").unwrap();
        assert_eq!(g.vertex(x).kind, VertexKind::Hashtag);
        assert_eq!(g.vertex(g.id_of("a").unwrap()).kind, VertexKind::User);
        assert_eq!(g.edges()[0].weight, 1.0);
    }

    #[test]
    fn zero_count_rejected() {
        let err = ingest_edge_lists([rec("a", "b", "t", 1), rec("a", "c", "t", 0)]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn parse_reports_line_numbers() {
        let text = "// header\na\tb\tmention\t2\n#t\ta\tco\t1\n\na\tc\tmention\n";
        let err = parse_edge_list(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");

        let err = parse_edge_list("a\tb\tx\t-1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));

        let recs = parse_edge_list("// c\na\tb\tmention\t2\n#t\ta\tco\t1\n".as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].src, "#t");
    }

    #[test]
    fn strength_examples() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "b", 2.0).add_vertex("z");
        let g = b.build();
        assert_eq!(g.strength(g.id_of("a").unwrap()).unwrap(), 2.0);
        assert_eq!(g.strength(g.id_of("z").unwrap()).unwrap(), 0.0);
        assert!(matches!(
            g.strength(VertexId(7)),
            Err(Error::Index { index: 7, len: 3 })
        ));

        let mut b = GraphBuilder::new();
        b.add_edge("x", "y", 1.0)
            .add_edge("x", "z", 2.0)
            .add_edge("y", "z", 3.0);
        let g = b.build();
        assert_eq!(g.strength(g.id_of("x").unwrap()).unwrap(), 3.0);
    }

    #[test]
    fn self_loop_counts_twice() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "a", 1.5).add_edge("a", "b", 1.0);
        let g = b.build();
        let a = g.id_of("a").unwrap();
        assert_eq!(g.strength(a).unwrap(), 4.0);
        let sum: f64 = g.strengths().iter().sum();
        assert_eq!(sum, 2.0 * g.total_weight());
        let t = g.left_normalize();
        assert!((t.prob(a.0, a.0) - 0.75).abs() < 1e-15);
        assert!((t.row_sum(a.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn left_normalize_examples() {
        let mut b = GraphBuilder::new();
        b.add_edge("c", "l1", 1.0)
            .add_edge("c", "l2", 1.0)
            .add_edge("c", "l3", 1.0);
        let g = b.build();
        let t = g.left_normalize();
        let c = g.id_of("c").unwrap().0;
        for leaf in ["l1", "l2", "l3"] {
            assert!((t.prob(c, g.id_of(leaf).unwrap().0) - 1.0 / 3.0).abs() < 1e-15);
        }

        let mut b = GraphBuilder::new();
        b.add_edge("a", "b", 1.0)
            .add_edge("a", "c", 3.0)
            .add_vertex("iso");
        let g = b.build();
        let t = g.left_normalize();
        let a = g.id_of("a").unwrap().0;
        assert_eq!(t.prob(a, g.id_of("c").unwrap().0), 0.75);
        let iso = g.id_of("iso").unwrap().0;
        assert!(t.is_dangling(iso));
        assert_eq!(t.row(iso).count(), 0);
        assert!(!t.is_dangling(a));
    }

    #[test]
    fn json_kind_mismatch_rejected() {
        let json = GraphJson {
            vertices: vec![VertexMeta {
                label: "#x".into(),
                kind: VertexKind::User,
            }],
            edges: vec![],
        };
        assert!(Graph::from_json(&json).is_err());
    }

    #[test]
    fn induced_subgraph_keeps_internal_edges() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "b", 1.0)
            .add_edge("b", "c", 2.0)
            .add_edge("c", "d", 3.0);
        let g = b.build();
        let keep: Vec<VertexId> = ["b", "c", "d"]
            .iter()
            .map(|l| g.id_of(l).unwrap())
            .collect();
        let s = g.induced_subgraph(&keep);
        assert_eq!(s.len(), 3);
        assert_eq!(s.total_weight(), 5.0);
        assert!(s.id_of("a").is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn records() -> impl Strategy<Value = Vec<EdgeRecord>> {
            let label = prop_oneof![
                "[a-e]".prop_map(String::from),
                "#[a-c]".prop_map(String::from),
            ];
            let etype = prop_oneof![Just("mention"), Just("retweet"), Just("co")];
            prop::collection::vec((label.clone(), label, etype, 1u64..20), 0..40).prop_map(|v| {
                v.into_iter()
                    .map(|(s, d, t, c)| rec(&s, &d, t, c))
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn ingestion_is_order_independent(recs in records(), seed in any::<u64>()) {
                use rand::{seq::SliceRandom, SeedableRng};
                let g1 = ingest_edge_lists(recs.clone()).unwrap();
                let mut shuffled = recs;
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let g2 = ingest_edge_lists(shuffled).unwrap();
                prop_assert_eq!(g1, g2);
            }

            #[test]
            fn strengths_sum_to_twice_weight(recs in records()) {
                let g = ingest_edge_lists(recs).unwrap();
                let s: f64 = g.strengths().iter().sum();
                prop_assert!((s - 2.0 * g.total_weight()).abs() < 1e-9);
            }

            #[test]
            fn rows_are_stochastic(recs in records()) {
                let g = ingest_edge_lists(recs).unwrap();
                let t = g.left_normalize();
                for u in 0..t.len() {
                    if !t.is_dangling(u) {
                        prop_assert!((t.row_sum(u) - 1.0).abs() < 1e-12);
                    } else {
                        prop_assert_eq!(g.strengths()[u], 0.0);
                    }
                }
            }

            #[test]
            fn json_round_trip_is_idempotent(recs in records()) {
                let g = ingest_edge_lists(recs).unwrap();
                let mut buf = Vec::new();
                g.write_json(&mut buf).unwrap();
                let back = Graph::read_json(buf.as_slice()).unwrap();
                prop_assert_eq!(&back, &g);
                let mut buf2 = Vec::new();
                back.write_json(&mut buf2).unwrap();
                prop_assert_eq!(buf, buf2);
            }
        }
    }
}
