//! Stationary visit rates: PageRank by power iteration, and ranking of
//! communities by their total PageRank.

use std::collections::BTreeMap;

use crate::assignment::CommunityAssignment;
use crate::error::{Error, Result};
use crate::graph::{Graph, Transitions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageRankOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for PageRankOptions {
    fn default() -> Self {
        PageRankOptions {
            damping: 0.85,
            tolerance: 1e-10,
            max_iter: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    p: Vec<f64>,
    damping: f64,
    tolerance: f64,
    iterations: usize,
}

impl StationaryDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// PageRank with uniform teleportation and uniform redistribution of
/// dangling mass, started from the uniform vector.
pub fn pagerank(t: &Transitions, opts: PageRankOptions) -> Result<StationaryDistribution> {
    let n = t.len();
    if n == 0 {
        return Err(Error::Domain("pagerank needs at least one vertex".into()));
    }
    pagerank_from(t, opts, &vec![1.0 / n as f64; n])
}

/// PageRank on the strength-normalized walk of an undirected graph.
pub fn graph_pagerank(g: &Graph, opts: PageRankOptions) -> Result<StationaryDistribution> {
    pagerank(&g.left_normalize(), opts)
}

/// PageRank from an explicit starting distribution.
pub fn pagerank_from(
    t: &Transitions,
    opts: PageRankOptions,
    start: &[f64],
) -> Result<StationaryDistribution> {
    let n = t.len();
    if n == 0 {
        return Err(Error::Domain("pagerank needs at least one vertex".into()));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Parameter {
            name: "damping",
            reason: format!("must lie in (0, 1], got {}", opts.damping),
        });
    }
    if opts.tolerance.is_nan() || opts.tolerance <= 0.0 {
        return Err(Error::Parameter {
            name: "tolerance",
            reason: format!("must be positive, got {}", opts.tolerance),
        });
    }
    if start.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: start.len(),
        });
    }
    let total: f64 = start.iter().sum();
    if start.iter().any(|&x| x.is_nan() || x < 0.0) || total.is_nan() || total <= 0.0 {
        return Err(Error::Parameter {
            name: "start",
            reason: "starting vector must be non-negative with positive mass".into(),
        });
    }

    let d = opts.damping;
    let uniform = 1.0 / n as f64;
    let mut x: Vec<f64> = start.iter().map(|&v| v / total).collect();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let dangling_mass: f64 = (0..n).filter(|&u| t.is_dangling(u)).map(|u| x[u]).sum();
        let base = (1.0 - d) * uniform + d * dangling_mass * uniform;
        next.iter_mut().for_each(|v| *v = base);
        for (u, &xu) in x.iter().enumerate() {
            if xu == 0.0 {
                continue;
            }
            for (v, p) in t.row(u) {
                next[v] += d * xu * p;
            }
        }
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < opts.tolerance {
            let s: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= s);
            return Ok(StationaryDistribution {
                p: x,
                damping: d,
                tolerance: opts.tolerance,
                iterations: iter,
            });
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Community ids sorted by total member PageRank, heaviest first; equal
/// totals are ordered by smaller id.
pub fn community_pagerank_order(
    assign: &CommunityAssignment,
    p: &StationaryDistribution,
) -> Result<Vec<usize>> {
    community_order_by_weight(assign.as_slice(), p.as_slice())
}

pub(crate) fn community_order_by_weight(comm: &[usize], weight: &[f64]) -> Result<Vec<usize>> {
    if comm.len() != weight.len() {
        return Err(Error::Dimension {
            expected: comm.len(),
            actual: weight.len(),
        });
    }
    let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
    for (&c, &w) in comm.iter().zip(weight) {
        *mass.entry(c).or_insert(0.0) += w;
    }
    let mut ranked: Vec<(usize, f64)> = mass.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked.into_iter().map(|(c, _)| c).collect())
}
