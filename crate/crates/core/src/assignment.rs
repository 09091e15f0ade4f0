//! Community assignments, both over dense vertex/state indices and over
//! physical `(layer, label)` identities.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexKind;

/// Which network a physical vertex belongs to. `Base` is a single,
/// un-layered graph such as the original network a reference partition was
/// computed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    Base,
    One,
    Two,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Base => "0",
            Layer::One => "1",
            Layer::Two => "2",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "0" => Ok(Layer::Base),
            "1" => Ok(Layer::One),
            "2" => Ok(Layer::Two),
            other => Err(format!("unknown layer `{other}` (expected 0, 1 or 2)")),
        }
    }
}

/// A physical vertex: a label within a layer.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Element {
    pub layer: Layer,
    pub label: String,
}

impl Element {
    pub fn new(layer: Layer, label: impl Into<String>) -> Self {
        Element {
            layer,
            label: label.into(),
        }
    }

    pub fn kind(&self) -> VertexKind {
        VertexKind::of_label(&self.label)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.label, self.layer)
    }
}

/// The universe a [`CommunityAssignment`] is defined over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementSet {
    /// Vertices of a [`Graph`](crate::graph::Graph).
    Vertices,
    /// States of a [`FlowGraph`](crate::multilayer::FlowGraph).
    States,
}

/// Community id per vertex (or flow state).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunityAssignment {
    comm: Vec<usize>,
    elements: ElementSet,
}

impl CommunityAssignment {
    pub fn new(comm: Vec<usize>, elements: ElementSet) -> Self {
        CommunityAssignment { comm, elements }
    }

    pub fn one_module(n: usize, elements: ElementSet) -> Self {
        Self::new(vec![0; n], elements)
    }

    pub fn singletons(n: usize, elements: ElementSet) -> Self {
        Self::new((0..n).collect(), elements)
    }

    pub fn len(&self) -> usize {
        self.comm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comm.is_empty()
    }

    pub fn element_set(&self) -> ElementSet {
        self.elements
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.comm
    }

    pub fn community(&self, i: usize) -> usize {
        self.comm[i]
    }

    pub fn num_communities(&self) -> usize {
        let mut ids = self.comm.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Relabels communities to `0..k`: heavier communities (by the summed
    /// `weight` of their members) get smaller ids, equal weights are ordered
    /// by their first member.
    pub fn canonicalize(&self, weight: &[f64]) -> Result<CommunityAssignment> {
        if weight.len() != self.comm.len() {
            return Err(Error::Dimension {
                expected: self.comm.len(),
                actual: weight.len(),
            });
        }
        let mut first_seen: HashMap<usize, usize> = HashMap::new();
        let mut mass: Vec<f64> = Vec::new();
        let mut dense = Vec::with_capacity(self.comm.len());
        for (&c, &w) in self.comm.iter().zip(weight) {
            let next = first_seen.len();
            let id = *first_seen.entry(c).or_insert(next);
            if id == mass.len() {
                mass.push(0.0);
            }
            mass[id] += w;
            dense.push(id);
        }
        let mut order: Vec<usize> = (0..mass.len()).collect();
        order.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
        let mut rank = vec![0; mass.len()];
        for (r, &c) in order.iter().enumerate() {
            rank[c] = r;
        }
        Ok(CommunityAssignment::new(
            dense.into_iter().map(|c| rank[c]).collect(),
            self.elements,
        ))
    }
}

/// Community id per physical `(layer, label)` element.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LayeredAssignment {
    entries: BTreeMap<Element, usize>,
}

impl LayeredAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, element: Element, community: usize) -> Option<usize> {
        self.entries.insert(element, community)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, element: &Element) -> Option<usize> {
        self.entries.get(element).copied()
    }

    pub fn lookup(&self, layer: Layer, label: &str) -> Result<usize> {
        let key = Element::new(layer, label);
        self.get(&key).ok_or_else(|| Error::Lookup(key.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Element, usize)> {
        self.entries.iter().map(|(e, &c)| (e, c))
    }

    pub fn num_communities(&self) -> usize {
        let mut ids: Vec<usize> = self.entries.values().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Keeps only user elements.
    pub fn users_only(&self) -> LayeredAssignment {
        LayeredAssignment {
            entries: self
                .entries
                .iter()
                .filter(|(e, _)| e.kind() == VertexKind::User)
                .map(|(e, &c)| (e.clone(), c))
                .collect(),
        }
    }

    /// Writes `label<TAB>layer<TAB>community_id` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        for (e, c) in &self.entries {
            writeln!(w, "{}\t{}\t{}", e.label, e.layer, c)?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<LayeredAssignment> {
        let mut out = LayeredAssignment::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() || line.starts_with("//") {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            if fields[0].is_empty() {
                return Err(parse_err("empty label".into()));
            }
            let layer: Layer = fields[1].parse().map_err(parse_err)?;
            let community: usize = fields[2]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad community id `{}`", fields[2])))?;
            let element = Element::new(layer, fields[0]);
            if out.insert(element.clone(), community).is_some() {
                return Err(parse_err(format!("duplicate element {element}")));
            }
        }
        Ok(out)
    }
}

impl FromIterator<(Element, usize)> for LayeredAssignment {
    fn from_iter<I: IntoIterator<Item = (Element, usize)>>(iter: I) -> Self {
        LayeredAssignment {
            entries: iter.into_iter().collect(),
        }
    }
}
