//! Partition comparison: contingency table, Jaccard matrix, variation of
//! information, and oracle accuracy of an alignment.

use std::collections::BTreeMap;
use std::io::Write;

use crate::assignment::{CommunityAssignment, Element, Layer, LayeredAssignment};
use crate::error::{Error, Result};
use crate::multilayer::{AlignmentSet, SeedSet};

/// `n_ij = |C_i ∩ C'_j|` with rows for the reference partition `C` and
/// columns for the test partition `C'`, both in ascending id order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyMatrix {
    counts: Vec<Vec<u64>>,
    row_ids: Vec<usize>,
    col_ids: Vec<usize>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyMatrix {
    /// Joint counts of two aligned label vectors.
    pub fn from_labels(reference: &[usize], test: &[usize]) -> Result<Self> {
        if reference.len() != test.len() {
            return Err(Error::Dimension {
                expected: reference.len(),
                actual: test.len(),
            });
        }
        Self::from_pairs(reference.iter().copied().zip(test.iter().copied()))
    }

    fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(pairs: I) -> Result<Self> {
        let mut joint: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
        let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
        for (r, c) in pairs {
            *joint.entry((r, c)).or_default() += 1;
            *rows.entry(r).or_default() += 1;
            *cols.entry(c).or_default() += 1;
        }
        if joint.is_empty() {
            return Err(Error::Domain(
                "partitions share no elements; nothing to compare".into(),
            ));
        }
        let row_ids: Vec<usize> = rows.keys().copied().collect();
        let col_ids: Vec<usize> = cols.keys().copied().collect();
        let row_pos: BTreeMap<usize, usize> =
            row_ids.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let col_pos: BTreeMap<usize, usize> =
            col_ids.iter().enumerate().map(|(j, &c)| (c, j)).collect();
        let mut counts = vec![vec![0u64; col_ids.len()]; row_ids.len()];
        for ((r, c), n) in joint {
            counts[row_pos[&r]][col_pos[&c]] = n;
        }
        let row_sums: Vec<u64> = rows.into_values().collect();
        let col_sums: Vec<u64> = cols.into_values().collect();
        let total = row_sums.iter().sum();
        Ok(ContingencyMatrix {
            counts,
            row_ids,
            col_ids,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[usize] {
        &self.col_ids
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.row_sums[i]
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.col_sums[j]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn transpose(&self) -> ContingencyMatrix {
        let counts = (0..self.cols())
            .map(|j| (0..self.rows()).map(|i| self.counts[i][j]).collect())
            .collect();
        ContingencyMatrix {
            counts,
            row_ids: self.col_ids.clone(),
            col_ids: self.row_ids.clone(),
            row_sums: self.col_sums.clone(),
            col_sums: self.row_sums.clone(),
            total: self.total,
        }
    }
}

/// Contingency of two assignments over the same elements.
pub fn contingency(c: &CommunityAssignment, c2: &CommunityAssignment) -> Result<ContingencyMatrix> {
    if c.element_set() != c2.element_set() {
        return Err(Error::Domain(
            "assignments are over different element sets".into(),
        ));
    }
    ContingencyMatrix::from_labels(c.as_slice(), c2.as_slice())
}

/// Contingency over the elements the two assignments have in common.
///
/// An element of one side tagged [`Layer::Base`] stands for that label in
/// every layer of the other side, so a partition of an original network
/// is compared against each layer copy.
pub fn contingency_layered(
    reference: &LayeredAssignment,
    test: &LayeredAssignment,
) -> Result<ContingencyMatrix> {
    let mut pairs = Vec::new();
    for (e, c_test) in test.iter() {
        if let Some(c_ref) = reference.get(e) {
            pairs.push((c_ref, c_test));
        } else if e.layer != Layer::Base {
            if let Some(c_ref) = reference.get(&Element::new(Layer::Base, e.label.clone())) {
                pairs.push((c_ref, c_test));
            }
        } else {
            for layer in [Layer::One, Layer::Two] {
                if let Some(c_ref) = reference.get(&Element::new(layer, e.label.clone())) {
                    pairs.push((c_ref, c_test));
                }
            }
        }
    }
    ContingencyMatrix::from_pairs(pairs)
}

/// `J_ij = n_ij / (|C_i| + |C'_j| - n_ij)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JaccardMatrix {
    values: Vec<Vec<f64>>,
    row_ids: Vec<usize>,
    col_ids: Vec<usize>,
}

pub fn jaccard_matrix(n: &ContingencyMatrix) -> JaccardMatrix {
    let values = (0..n.rows())
        .map(|i| {
            (0..n.cols())
                .map(|j| {
                    let nij = n.count(i, j);
                    nij as f64 / (n.row_sum(i) + n.col_sum(j) - nij) as f64
                })
                .collect()
        })
        .collect();
    JaccardMatrix {
        values,
        row_ids: n.row_ids().to_vec(),
        col_ids: n.col_ids().to_vec(),
    }
}

impl JaccardMatrix {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[usize] {
        &self.col_ids
    }

    /// Reorders rows and columns by community id lists, e.g. community
    /// PageRank order of each partition. Both lists must be permutations of
    /// the current ids.
    pub fn reorder(&self, row_order: &[usize], col_order: &[usize]) -> Result<JaccardMatrix> {
        let rows = permutation_of(&self.row_ids, row_order)?;
        let cols = permutation_of(&self.col_ids, col_order)?;
        Ok(JaccardMatrix {
            values: rows
                .iter()
                .map(|&i| cols.iter().map(|&j| self.values[i][j]).collect())
                .collect(),
            row_ids: row_order.to_vec(),
            col_ids: col_order.to_vec(),
        })
    }

    /// CSV with the test community ids as header row and the reference
    /// community ids as first column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = self.col_ids.iter().map(|c| c.to_string()).collect();
        writeln!(w, "reference\\test,{}", header.join(","))?;
        for (id, row) in self.row_ids.iter().zip(&self.values) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{id},{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn permutation_of(ids: &[usize], order: &[usize]) -> Result<Vec<usize>> {
    if order.len() != ids.len() {
        return Err(Error::Dimension {
            expected: ids.len(),
            actual: order.len(),
        });
    }
    let pos: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut seen = vec![false; ids.len()];
    order
        .iter()
        .map(|c| {
            let &i = pos
                .get(c)
                .ok_or_else(|| Error::Lookup(format!("community {c}")))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Domain(format!("community {c} listed twice")));
            }
            Ok(i)
        })
        .collect()
}

/// `VI(C, C') = H(C|C') + H(C'|C)` in bits.
///
/// Terms are summed in sorted order so that the result does not depend on
/// which partition is the reference.
pub fn variation_of_information(n: &ContingencyMatrix) -> f64 {
    let total = n.total() as f64;
    let mut terms = Vec::new();
    for i in 0..n.rows() {
        for j in 0..n.cols() {
            let nij = n.count(i, j);
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            let a = (nij / n.row_sum(i) as f64).log2();
            let b = (nij / n.col_sum(j) as f64).log2();
            terms.push(nij / total * (a + b));
        }
    }
    terms.sort_by(f64::total_cmp);
    let vi = -terms.iter().sum::<f64>();
    // -0.0 for identical partitions
    vi.max(0.0)
}

/// Fraction of non-seed truth pairs whose two endpoints share a community.
pub fn oracle_accuracy(
    truth: &AlignmentSet,
    seeds: &SeedSet,
    assign: &LayeredAssignment,
) -> Result<f64> {
    let eval = truth.difference(seeds.alignment());
    if eval.is_empty() {
        return Err(Error::Domain(
            "no truth pairs left once seeds are excluded".into(),
        ));
    }
    let mut hits = 0usize;
    for (a, b) in eval.pairs() {
        if assign.lookup(Layer::One, a)? == assign.lookup(Layer::Two, b)? {
            hits += 1;
        }
    }
    Ok(hits as f64 / eval.len() as f64)
}
