//! Two-layer network constructions: aggregation into one monoplex graph,
//! linking layers with interlayer edges, and the relaxed random walk.
//!
//! Seed pairs couple a layer-1 user with a layer-2 user. Hashtags are never
//! seeds; a hashtag label present in both layers is coupled automatically.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assignment::{CommunityAssignment, Element, ElementSet, Layer, LayeredAssignment};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, Transitions, VertexId, VertexKind};

/// A partial matching between layer-1 and layer-2 labels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlignmentSet {
    pairs: BTreeSet<(String, String)>,
}

impl AlignmentSet {
    /// Fails if a label occurs in more than one pair on the same side.
    pub fn new<I, A, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut set = BTreeSet::new();
        let mut left = HashSet::new();
        let mut right = HashSet::new();
        for (a, b) in pairs {
            let (a, b) = (a.into(), b.into());
            if set.contains(&(a.clone(), b.clone())) {
                continue;
            }
            if a.is_empty() || b.is_empty() {
                return Err(alignment_error(&a, &b, "empty label"));
            }
            if !left.insert(a.clone()) {
                return Err(alignment_error(&a, &b, "layer-1 label already aligned"));
            }
            if !right.insert(b.clone()) {
                return Err(alignment_error(&a, &b, "layer-2 label already aligned"));
            }
            set.insert((a, b));
        }
        Ok(AlignmentSet { pairs: set })
    }

    /// Reads `label_layer1<TAB>label_layer2` lines (`//` comments allowed).
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() || line.starts_with("//") {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 2 || fields[0].is_empty() || fields[1].is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "expected `label_layer1<TAB>label_layer2`".into(),
                });
            }
            pairs.push((fields[0].to_owned(), fields[1].to_owned()));
        }
        AlignmentSet::new(pairs)
    }

    /// Like [`read_tsv`](Self::read_tsv) but rejects hashtag labels, which are
    /// aligned by exact string match and never part of a truth set.
    pub fn read_truth_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let set = Self::read_tsv(reader)?;
        set.reject_hashtags()?;
        Ok(set)
    }

    pub fn write_tsv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for (a, b) in &self.pairs {
            writeln!(w, "{a}\t{b}")?;
        }
        Ok(())
    }

    pub fn reject_hashtags(&self) -> Result<()> {
        for (a, b) in &self.pairs {
            if a.starts_with('#') || b.starts_with('#') {
                return Err(alignment_error(a, b, "hashtags cannot be aligned pairs"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_owned(), b.to_owned()))
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> impl ExactSizeIterator<Item = &(String, String)> {
        self.pairs.iter()
    }

    pub fn is_subset(&self, other: &AlignmentSet) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// Pairs of `self` not in `other`.
    pub fn difference(&self, other: &AlignmentSet) -> AlignmentSet {
        AlignmentSet {
            pairs: self.pairs.difference(&other.pairs).cloned().collect(),
        }
    }

    /// Checks every label against its layer.
    pub fn validate(&self, g1: &Graph, g2: &Graph) -> Result<()> {
        for (a, b) in &self.pairs {
            if g1.id_of(a).is_none() {
                return Err(alignment_error(a, b, "layer-1 label not in layer 1"));
            }
            if g2.id_of(b).is_none() {
                return Err(alignment_error(a, b, "layer-2 label not in layer 2"));
            }
        }
        Ok(())
    }
}

/// Known alignment pairs used to couple the layers; a subset of the truth.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeedSet {
    inner: AlignmentSet,
}

impl SeedSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_alignment(inner: AlignmentSet) -> Self {
        SeedSet { inner }
    }

    /// Seeds that must be drawn from `truth`.
    pub fn within(inner: AlignmentSet, truth: &AlignmentSet) -> Result<Self> {
        if let Some((a, b)) = inner.pairs.difference(&truth.pairs).next() {
            return Err(alignment_error(
                a,
                b,
                "seed pair is not in the truth alignment",
            ));
        }
        Ok(SeedSet { inner })
    }

    pub fn alignment(&self) -> &AlignmentSet {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn pairs(&self) -> impl ExactSizeIterator<Item = &(String, String)> {
        self.inner.pairs()
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.inner.contains(a, b)
    }
}

fn alignment_error(a: &str, b: &str, reason: &str) -> Error {
    Error::Alignment {
        left: a.to_owned(),
        right: b.to_owned(),
        reason: reason.to_owned(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Aggregation,
    Linking,
    Relaxed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Aggregation => "aggregation",
            Method::Linking => "linking",
            Method::Relaxed => "relaxed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "aggregation" => Ok(Method::Aggregation),
            "linking" => Ok(Method::Linking),
            "relaxed" => Ok(Method::Relaxed),
            other => Err(format!(
                "unknown method `{other}` (expected aggregation|linking|relaxed)"
            )),
        }
    }
}

/// How weights of an edge present in both layers are combined on aggregation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    #[default]
    Sum,
    Mean,
}

impl FromStr for Combine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sum" => Ok(Combine::Sum),
            "mean" => Ok(Combine::Mean),
            other => Err(format!(
                "unknown combine rule `{other}` (expected sum|mean)"
            )),
        }
    }
}

/// Probability of staying in the current layer on a relaxed walk.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct RelaxRate(f64);

impl RelaxRate {
    pub fn new(r: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&r) {
            Ok(RelaxRate(r))
        } else {
            Err(Error::Parameter {
                name: "relax_rate",
                reason: format!("must lie in [0, 1], got {r}"),
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for RelaxRate {
    fn default() -> Self {
        RelaxRate(0.85)
    }
}

/// Directed random-walk structure over layer states, with each state's
/// physical identity.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowGraph {
    transitions: Transitions,
    identity: Vec<Element>,
}

impl FlowGraph {
    pub fn new(transitions: Transitions, identity: Vec<Element>) -> Result<Self> {
        if transitions.len() != identity.len() {
            return Err(Error::Dimension {
                expected: transitions.len(),
                actual: identity.len(),
            });
        }
        Ok(FlowGraph {
            transitions,
            identity,
        })
    }

    /// Single-layer walk on `g` with every vertex tagged `layer`.
    pub fn from_graph(g: &Graph, layer: Layer) -> Self {
        FlowGraph {
            transitions: g.left_normalize(),
            identity: g
                .vertices()
                .iter()
                .map(|m| Element::new(layer, m.label.clone()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.identity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.identity.is_empty()
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    pub fn identity(&self) -> &[Element] {
        &self.identity
    }

    /// Total transition probability from layer-`from` states into layer-`to` states.
    pub fn cross_layer_mass(&self, from: Layer, to: Layer) -> f64 {
        self.transitions
            .arcs()
            .filter(|&(u, v, _)| self.identity[u].layer == from && self.identity[v].layer == to)
            .map(|(_, _, p)| p)
            .sum()
    }
}

/// Where each original `(layer, label)` ended up in an aggregated graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeMap {
    layer1: Vec<VertexId>,
    layer2: Vec<VertexId>,
    elements: Vec<(Element, VertexId)>,
}

impl MergeMap {
    pub fn layer1(&self) -> &[VertexId] {
        &self.layer1
    }

    pub fn layer2(&self) -> &[VertexId] {
        &self.layer2
    }

    pub fn elements(&self) -> &[(Element, VertexId)] {
        &self.elements
    }

    pub fn get(&self, element: &Element) -> Option<VertexId> {
        self.elements
            .binary_search_by(|(e, _)| e.cmp(element))
            .ok()
            .map(|i| self.elements[i].1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregation {
    pub graph: Graph,
    pub merge: MergeMap,
}

/// Coupled vertex pairs: seeds first, then hashtags shared by both layers.
fn coupled_pairs(g1: &Graph, g2: &Graph, seeds: &SeedSet) -> Result<Vec<(VertexId, VertexId)>> {
    seeds.alignment().reject_hashtags()?;
    seeds.alignment().validate(g1, g2)?;
    let mut pairs: Vec<(VertexId, VertexId)> = seeds
        .pairs()
        .map(|(a, b)| (g1.id_of(a).unwrap(), g2.id_of(b).unwrap()))
        .collect();
    for v in g1.vertex_ids() {
        let meta = g1.vertex(v);
        if meta.kind == VertexKind::Hashtag {
            if let Some(w) = g2.id_of(&meta.label) {
                pairs.push((v, w));
            }
        }
    }
    Ok(pairs)
}

fn layer_tag(label: &str, layer: Layer) -> String {
    format!("{label}@{layer}")
}

/// Merges seed pairs and shared hashtags into single vertices.
///
/// Merged vertex labels: `a@1+b@2` for a seed pair, the hashtag itself for
/// a shared hashtag, and `label@1` / `label@2` for unmerged vertices.
pub fn build_aggregation(
    g1: &Graph,
    g2: &Graph,
    seeds: &SeedSet,
    combine: Combine,
) -> Result<Aggregation> {
    let pairs = coupled_pairs(g1, g2, seeds)?;
    let mut names1: Vec<Option<String>> = vec![None; g1.len()];
    let mut names2: Vec<Option<String>> = vec![None; g2.len()];
    for &(u, v) in &pairs {
        let (a, b) = (g1.label(u), g2.label(v));
        let name = if g1.vertex(u).kind == VertexKind::Hashtag {
            a.to_owned()
        } else {
            format!("{}+{}", layer_tag(a, Layer::One), layer_tag(b, Layer::Two))
        };
        names1[u.0] = Some(name.clone());
        names2[v.0] = Some(name);
    }
    let names1: Vec<String> = names1
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.unwrap_or_else(|| layer_tag(g1.label(VertexId(i)), Layer::One)))
        .collect();
    let names2: Vec<String> = names2
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.unwrap_or_else(|| layer_tag(g2.label(VertexId(i)), Layer::Two)))
        .collect();

    let mut combined: BTreeMap<(&str, &str), (f64, u32)> = BTreeMap::new();
    for (g, names) in [(g1, &names1), (g2, &names2)] {
        for e in g.edges() {
            let (a, b) = (names[e.u.0].as_str(), names[e.v.0].as_str());
            let key = if a <= b { (a, b) } else { (b, a) };
            let slot = combined.entry(key).or_insert((0.0, 0));
            slot.0 += e.weight;
            slot.1 += 1;
        }
    }

    let mut builder = GraphBuilder::new();
    for name in names1.iter().chain(&names2) {
        builder.add_vertex(name);
    }
    for ((a, b), (sum, count)) in combined {
        let w = match combine {
            Combine::Sum => sum,
            Combine::Mean => sum / count as f64,
        };
        builder.add_edge(a, b, w);
    }
    let graph = builder.build();
    let expected = g1.len() + g2.len() - pairs.len();
    if graph.len() != expected {
        return Err(Error::Domain(
            "merged vertex labels collide; relabel the input layers".into(),
        ));
    }

    let layer1: Vec<VertexId> = names1.iter().map(|n| graph.id_of(n).unwrap()).collect();
    let layer2: Vec<VertexId> = names2.iter().map(|n| graph.id_of(n).unwrap()).collect();
    let mut elements: Vec<(Element, VertexId)> = g1
        .vertices()
        .iter()
        .zip(&layer1)
        .map(|(m, &v)| (Element::new(Layer::One, m.label.clone()), v))
        .chain(
            g2.vertices()
                .iter()
                .zip(&layer2)
                .map(|(m, &v)| (Element::new(Layer::Two, m.label.clone()), v)),
        )
        .collect();
    elements.sort();
    Ok(Aggregation {
        graph,
        merge: MergeMap {
            layer1,
            layer2,
            elements,
        },
    })
}

fn layered_identity(g1: &Graph, g2: &Graph) -> Vec<Element> {
    g1.vertices()
        .iter()
        .map(|m| Element::new(Layer::One, m.label.clone()))
        .chain(
            g2.vertices()
                .iter()
                .map(|m| Element::new(Layer::Two, m.label.clone())),
        )
        .collect()
}

/// Intra-layer raw weights per vertex, self-loops doubled.
fn intra_rows(g: &Graph, offset: usize) -> Vec<Vec<(usize, f64)>> {
    g.vertex_ids()
        .map(|u| {
            g.neighbors(u)
                .iter()
                .map(|&(v, w)| (offset + v.0, if v == u { 2.0 * w } else { w }))
                .collect()
        })
        .collect()
}

/// Keeps both layers' vertices and adds an interlayer edge of weight `omega`
/// between each coupled pair, then row-normalizes.
pub fn build_linking(g1: &Graph, g2: &Graph, seeds: &SeedSet, omega: f64) -> Result<FlowGraph> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Parameter {
            name: "omega",
            reason: format!("must be a positive real, got {omega}"),
        });
    }
    let pairs = coupled_pairs(g1, g2, seeds)?;
    let n1 = g1.len();
    let mut rows = intra_rows(g1, 0);
    rows.extend(intra_rows(g2, n1));
    for (u, v) in pairs {
        rows[u.0].push((n1 + v.0, omega));
        rows[n1 + v.0].push((u.0, omega));
    }
    FlowGraph::new(
        Transitions::from_weighted_rows(rows),
        layered_identity(g1, g2),
    )
}

/// Relaxed random walk: a coupled state follows its own layer with
/// probability `r` and its counterpart's neighbourhood with probability
/// `1 - r`; uncoupled states always stay in their layer.
///
/// If either side of a coupled pair has no neighbours, the whole mass goes
/// to the side that has.
pub fn build_relaxed(g1: &Graph, g2: &Graph, seeds: &SeedSet, r: RelaxRate) -> Result<FlowGraph> {
    let pairs = coupled_pairs(g1, g2, seeds)?;
    let n1 = g1.len();
    let mut raw = intra_rows(g1, 0);
    raw.extend(intra_rows(g2, n1));
    let n = raw.len();
    let mut counterpart: Vec<Option<usize>> = vec![None; n];
    for (u, v) in pairs {
        counterpart[u.0] = Some(n1 + v.0);
        counterpart[n1 + v.0] = Some(u.0);
    }
    let normalized = |row: &[(usize, f64)], scale: f64| -> Vec<(usize, f64)> {
        let total: f64 = row.iter().map(|&(_, w)| w).sum();
        row.iter().map(|&(v, w)| (v, scale * w / total)).collect()
    };
    let stay = r.get();
    let rows = (0..n)
        .map(|state| {
            let mine = &raw[state];
            let Some(other) = counterpart[state] else {
                return mine.clone();
            };
            let theirs = &raw[other];
            if theirs.is_empty() || stay == 1.0 {
                return mine.clone();
            }
            if mine.is_empty() || stay == 0.0 {
                return theirs.clone();
            }
            let mut row = normalized(mine, stay);
            row.extend(normalized(theirs, 1.0 - stay));
            row
        })
        .collect();
    FlowGraph::new(
        Transitions::from_weighted_rows(rows),
        layered_identity(g1, g2),
    )
}

/// Anything that maps dense assignment indices to physical elements.
pub trait ElementMap {
    fn element_set(&self) -> ElementSet;
    fn size(&self) -> usize;
    /// `(element, index into the assignment)` pairs.
    fn element_indices(&self) -> Vec<(Element, usize)>;
}

impl ElementMap for FlowGraph {
    fn element_set(&self) -> ElementSet {
        ElementSet::States
    }

    fn size(&self) -> usize {
        self.len()
    }

    fn element_indices(&self) -> Vec<(Element, usize)> {
        self.identity
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect()
    }
}

impl ElementMap for Aggregation {
    fn element_set(&self) -> ElementSet {
        ElementSet::Vertices
    }

    fn size(&self) -> usize {
        self.graph.len()
    }

    fn element_indices(&self) -> Vec<(Element, usize)> {
        self.merge
            .elements
            .iter()
            .map(|(e, v)| (e.clone(), v.0))
            .collect()
    }
}

/// A plain graph viewed as a single base layer.
pub struct BaseLayer<'a>(pub &'a Graph);

impl ElementMap for BaseLayer<'_> {
    fn element_set(&self) -> ElementSet {
        ElementSet::Vertices
    }

    fn size(&self) -> usize {
        self.0.len()
    }

    fn element_indices(&self) -> Vec<(Element, usize)> {
        self.0
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, m)| (Element::new(Layer::Base, m.label.clone()), i))
            .collect()
    }
}

/// Resolves an assignment over states or merged vertices to one community
/// per physical `(layer, label)`.
pub fn project_assignment<M: ElementMap>(
    assign: &CommunityAssignment,
    map: &M,
) -> Result<LayeredAssignment> {
    if assign.is_empty() {
        return Err(Error::Domain("cannot project an empty assignment".into()));
    }
    if assign.len() != map.size() {
        return Err(Error::Dimension {
            expected: map.size(),
            actual: assign.len(),
        });
    }
    Ok(map
        .element_indices()
        .into_iter()
        .map(|(e, i)| (e, assign.community(i)))
        .collect())
}
