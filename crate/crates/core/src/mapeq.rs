//! Two-level map equation and a Louvain-style greedy optimizer for it.
//!
//! For a partition `M` of nodes with visit rates `p_a`, module exit flows
//! `q_m` (flow on links leaving module `m`), `q = sum q_m` and
//! `p_m = q_m + sum_{a in m} p_a`:
//!
//! ```text
//! L(M) = q H(Q) + sum_m p_m H(P^m)
//!      = plogp(q) - 2 sum plogp(q_m) - sum plogp(p_a) + sum plogp(p_m)
//! ```
//!
//! in bits. The first term is the index codebook, the rest the module
//! codebooks.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::{CommunityAssignment, ElementSet};
use crate::error::{Error, Result};
use crate::flow::StationaryDistribution;
use crate::graph::Graph;
use crate::multilayer::FlowGraph;

const MIN_MOVE_IMPROVEMENT: f64 = 1e-12;
const MIN_ROUND_IMPROVEMENT: f64 = 1e-10;
const MAX_PASSES: usize = 200;
const MAX_TUNE_ROUNDS: usize = 10;

#[inline]
pub(crate) fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Node visit rates and directed link flows, the input to the map equation.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowNetwork {
    node_flow: Vec<f64>,
    /// `(source, target, flow)`, self-links removed, sorted, no duplicates.
    links: Vec<(usize, usize, f64)>,
    elements: ElementSet,
}

impl FlowNetwork {
    /// Undirected convention: `p_a = s_a / 2W` and each edge carries
    /// `w / 2W` in both directions. No teleportation. An edgeless graph gets
    /// uniform visit rates.
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.len();
        let total: f64 = g.strengths().iter().sum();
        if total <= 0.0 {
            let uniform = if n > 0 { 1.0 / n as f64 } else { 0.0 };
            return FlowNetwork {
                node_flow: vec![uniform; n],
                links: Vec::new(),
                elements: ElementSet::Vertices,
            };
        }
        let node_flow: Vec<f64> = g.strengths().iter().map(|s| s / total).collect();
        let t = g.left_normalize();
        let links = t.arcs().map(|(u, v, p)| (u, v, node_flow[u] * p)).collect();
        Self::from_parts(node_flow, links, ElementSet::Vertices)
    }

    /// Directed convention: visit rates from `p` and link flow
    /// `p_u * P(u -> v)` along every arc.
    pub fn from_flow_graph(f: &FlowGraph, p: &StationaryDistribution) -> Result<Self> {
        if p.len() != f.len() {
            return Err(Error::Dimension {
                expected: f.len(),
                actual: p.len(),
            });
        }
        let node_flow = p.as_slice().to_vec();
        let links = f
            .transitions()
            .arcs()
            .map(|(u, v, prob)| (u, v, node_flow[u] * prob))
            .collect();
        Ok(Self::from_parts(node_flow, links, ElementSet::States))
    }

    /// Builds from raw parts; duplicate links are summed, self-links and
    /// zero-flow links dropped.
    pub fn from_parts(
        node_flow: Vec<f64>,
        mut links: Vec<(usize, usize, f64)>,
        elements: ElementSet,
    ) -> Self {
        links.retain(|&(u, v, f)| u != v && f > 0.0);
        links.sort_by_key(|&(u, v, _)| (u, v));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(links.len());
        for (u, v, f) in links {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += f,
                _ => merged.push((u, v, f)),
            }
        }
        FlowNetwork {
            node_flow,
            links: merged,
            elements,
        }
    }

    pub fn len(&self) -> usize {
        self.node_flow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_flow.is_empty()
    }

    pub fn node_flow(&self) -> &[f64] {
        &self.node_flow
    }

    pub fn links(&self) -> &[(usize, usize, f64)] {
        &self.links
    }

    pub fn element_set(&self) -> ElementSet {
        self.elements
    }

    /// Shannon entropy of the visit rates, in bits.
    pub fn entropy(&self) -> f64 {
        -self.node_flow.iter().map(|&p| plogp(p)).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Codelength {
    pub bits: f64,
    pub index_term: f64,
    pub module_term: f64,
}

/// Map-equation codelength of `assign` on `net`.
pub fn codelength(net: &FlowNetwork, assign: &CommunityAssignment) -> Result<Codelength> {
    if assign.len() < net.len() {
        return Err(Error::Coverage(assign.len()));
    }
    if assign.len() > net.len() {
        return Err(Error::Dimension {
            expected: net.len(),
            actual: assign.len(),
        });
    }
    let comm = assign.as_slice();
    let k = comm.iter().max().map_or(0, |&m| m + 1);
    let mut exit = vec![0.0; k];
    let mut flow = vec![0.0; k];
    for (a, &p) in net.node_flow.iter().enumerate() {
        flow[comm[a]] += p;
    }
    for &(u, v, f) in &net.links {
        if comm[u] != comm[v] {
            exit[comm[u]] += f;
        }
    }
    let total_exit: f64 = exit.iter().sum();
    let exit_terms: f64 = exit.iter().map(|&q| plogp(q)).sum();
    let node_terms: f64 = net.node_flow.iter().map(|&p| plogp(p)).sum();
    let total_terms: f64 = exit.iter().zip(&flow).map(|(&q, &p)| plogp(q + p)).sum();
    let index_term = plogp(total_exit) - exit_terms;
    let module_term = -exit_terms - node_terms + total_terms;
    Ok(Codelength {
        bits: index_term + module_term,
        index_term,
        module_term,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectOptions {
    pub trials: usize,
    pub rng_seed: u64,
}

impl DetectOptions {
    pub fn new(trials: usize, rng_seed: u64) -> Self {
        DetectOptions { trials, rng_seed }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Detection {
    /// Canonical: community 0 carries the most flow.
    pub assignment: CommunityAssignment,
    pub codelength: Codelength,
}

/// Greedy map-equation minimization, best of `opts.trials` seeded trials.
///
/// Each trial starts from singletons, repeatedly moves nodes (in shuffled
/// order) to the neighbouring module with the largest codelength decrease,
/// aggregates modules into supernodes once no node moves, and recurses.
/// The converged partition is then refined by moving single nodes at the
/// finest level and re-aggregating, until that stops helping.
pub fn detect(net: &FlowNetwork, opts: DetectOptions) -> Result<Detection> {
    if opts.trials == 0 {
        return Err(Error::Parameter {
            name: "trials",
            reason: "at least one trial is required".into(),
        });
    }
    let leaf = Level::from_network(net);
    let node_terms: f64 = net.node_flow.iter().map(|&p| plogp(p)).sum();
    let candidates: Vec<Result<Detection>> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
            rng.set_stream(trial as u64);
            let partition = run_trial(&leaf, node_terms, &mut rng);
            let assignment =
                CommunityAssignment::new(partition, net.elements).canonicalize(&net.node_flow)?;
            let codelength = codelength(net, &assignment)?;
            Ok(Detection {
                assignment,
                codelength,
            })
        })
        .collect();
    let mut best: Option<Detection> = None;
    for cand in candidates {
        let cand = cand?;
        let better = match &best {
            None => true,
            Some(b) => cand
                .codelength
                .bits
                .total_cmp(&b.codelength.bits)
                .then_with(|| cand.assignment.as_slice().cmp(b.assignment.as_slice()))
                .is_lt(),
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one trial"))
}

/// One level of the coarsening hierarchy.
#[derive(Clone, Debug)]
struct Level {
    flow: Vec<f64>,
    out: Vec<Vec<(usize, f64)>>,
    inn: Vec<Vec<(usize, f64)>>,
}

impl Level {
    fn from_network(net: &FlowNetwork) -> Self {
        Self::from_links(net.node_flow.clone(), &net.links)
    }

    fn from_links(flow: Vec<f64>, links: &[(usize, usize, f64)]) -> Self {
        let n = flow.len();
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for &(u, v, f) in links {
            out[u].push((v, f));
            inn[v].push((u, f));
        }
        Level { flow, out, inn }
    }

    fn len(&self) -> usize {
        self.flow.len()
    }

    /// Collapses each module of `of` into one node. Supernodes are numbered
    /// by first appearance; returns the level and node -> supernode map.
    fn aggregate(&self, of: &[usize]) -> (Level, Vec<usize>) {
        let mut renumber: HashMap<usize, usize> = HashMap::new();
        let map: Vec<usize> = of
            .iter()
            .map(|&m| {
                let next = renumber.len();
                *renumber.entry(m).or_insert(next)
            })
            .collect();
        let k = renumber.len();
        let mut flow = vec![0.0; k];
        for (u, &s) in map.iter().enumerate() {
            flow[s] += self.flow[u];
        }
        let mut links = Vec::new();
        for (u, outs) in self.out.iter().enumerate() {
            for &(v, f) in outs {
                if map[u] != map[v] {
                    links.push((map[u], map[v], f));
                }
            }
        }
        links.sort_by_key(|&(u, v, _)| (u, v));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(links.len());
        for (u, v, f) in links {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += f,
                _ => merged.push((u, v, f)),
            }
        }
        (Level::from_links(flow, &merged), map)
    }
}

/// Module bookkeeping for one level, with enough running sums to evaluate
/// the codelength change of a single-node move in O(1).
#[derive(Clone, Debug)]
struct Modules {
    of: Vec<usize>,
    exit: Vec<f64>,
    flow: Vec<f64>,
    size: Vec<usize>,
    empty: BTreeSet<usize>,
    total_exit: f64,
    exit_terms: f64,
    total_terms: f64,
    node_terms: f64,
}

/// Flow between one node and one module, in both directions.
#[derive(Clone, Copy, Debug, Default)]
struct Contact {
    out: f64,
    inn: f64,
}

impl Modules {
    /// `of` must use ids below `level.len()`.
    fn new(level: &Level, of: Vec<usize>, node_terms: f64) -> Self {
        let n = level.len();
        let mut exit = vec![0.0; n];
        let mut flow = vec![0.0; n];
        let mut size = vec![0; n];
        for (u, &m) in of.iter().enumerate() {
            flow[m] += level.flow[u];
            size[m] += 1;
            for &(v, f) in &level.out[u] {
                if of[v] != m {
                    exit[m] += f;
                }
            }
        }
        let empty = (0..n).filter(|&m| size[m] == 0).collect();
        let mut modules = Modules {
            of,
            exit,
            flow,
            size,
            empty,
            total_exit: 0.0,
            exit_terms: 0.0,
            total_terms: 0.0,
            node_terms,
        };
        modules.refresh_sums();
        modules
    }

    fn refresh_sums(&mut self) {
        self.total_exit = self.exit.iter().sum();
        self.exit_terms = self.exit.iter().map(|&q| plogp(q)).sum();
        self.total_terms = self
            .exit
            .iter()
            .zip(&self.flow)
            .map(|(&q, &p)| plogp(q + p))
            .sum();
    }

    fn codelength(&self) -> f64 {
        plogp(self.total_exit) - 2.0 * self.exit_terms - self.node_terms + self.total_terms
    }

    /// Exit flows of the source and target module after moving `v`.
    fn moved_exits(
        &self,
        v: usize,
        to: usize,
        old: Contact,
        new: Contact,
        out_total: f64,
    ) -> (f64, f64) {
        let from = self.of[v];
        let from_exit = if self.size[from] == 1 {
            0.0
        } else {
            (self.exit[from] - (out_total - old.out) + old.inn).max(0.0)
        };
        let to_exit = (self.exit[to] + (out_total - new.out) - new.inn).max(0.0);
        (from_exit, to_exit)
    }

    /// Codelength change from moving `v` into module `to`.
    fn delta(
        &self,
        level: &Level,
        v: usize,
        to: usize,
        old: Contact,
        new: Contact,
        out_total: f64,
    ) -> f64 {
        let from = self.of[v];
        let p = level.flow[v];
        let (ea, eb) = self.moved_exits(v, to, old, new, out_total);
        let fa = if self.size[from] == 1 {
            0.0
        } else {
            self.flow[from] - p
        };
        let fb = self.flow[to] + p;
        let (ea0, eb0) = (self.exit[from], self.exit[to]);
        let (fa0, fb0) = (self.flow[from], self.flow[to]);
        let total_exit = self.total_exit - ea0 - eb0 + ea + eb;
        plogp(total_exit)
            - plogp(self.total_exit)
            - 2.0 * (plogp(ea) + plogp(eb) - plogp(ea0) - plogp(eb0))
            + plogp(ea + fa)
            + plogp(eb + fb)
            - plogp(ea0 + fa0)
            - plogp(eb0 + fb0)
    }

    fn apply(
        &mut self,
        level: &Level,
        v: usize,
        to: usize,
        old: Contact,
        new: Contact,
        out_total: f64,
    ) {
        let from = self.of[v];
        let p = level.flow[v];
        let (ea, eb) = self.moved_exits(v, to, old, new, out_total);
        let (ea0, eb0) = (self.exit[from], self.exit[to]);
        let (fa0, fb0) = (self.flow[from], self.flow[to]);
        self.size[from] -= 1;
        self.size[to] += 1;
        let fa = if self.size[from] == 0 { 0.0 } else { fa0 - p };
        let fb = fb0 + p;
        self.exit[from] = ea;
        self.exit[to] = eb;
        self.flow[from] = fa;
        self.flow[to] = fb;
        self.total_exit += ea + eb - ea0 - eb0;
        self.exit_terms += plogp(ea) + plogp(eb) - plogp(ea0) - plogp(eb0);
        self.total_terms += plogp(ea + fa) + plogp(eb + fb) - plogp(ea0 + fa0) - plogp(eb0 + fb0);
        if self.size[from] == 0 {
            self.empty.insert(from);
        }
        self.empty.remove(&to);
        self.of[v] = to;
    }

    /// Flow between `v` and every module it touches, excluding `v` itself.
    fn contacts(&self, level: &Level, v: usize, scratch: &mut HashMap<usize, Contact>) -> f64 {
        scratch.clear();
        let mut out_total = 0.0;
        for &(w, f) in &level.out[v] {
            scratch.entry(self.of[w]).or_default().out += f;
            out_total += f;
        }
        for &(w, f) in &level.inn[v] {
            scratch.entry(self.of[w]).or_default().inn += f;
        }
        out_total
    }

    /// Sweeps nodes in shuffled order until a sweep makes no move. Returns
    /// the number of moves.
    fn move_nodes(&mut self, level: &Level, rng: &mut ChaCha8Rng) -> usize {
        let mut order: Vec<usize> = (0..level.len()).collect();
        let mut scratch = HashMap::new();
        let mut total_moves = 0;
        for _ in 0..MAX_PASSES {
            order.shuffle(rng);
            let before = self.codelength();
            let mut moves = 0;
            for &v in &order {
                let out_total = self.contacts(level, v, &mut scratch);
                let from = self.of[v];
                let old = scratch.get(&from).copied().unwrap_or_default();
                let mut candidates: Vec<usize> =
                    scratch.keys().copied().filter(|&m| m != from).collect();
                if self.size[from] > 1 {
                    if let Some(&fresh) = self.empty.iter().next() {
                        candidates.push(fresh);
                    }
                }
                candidates.sort_unstable();
                let mut best: Option<(usize, f64)> = None;
                for to in candidates {
                    let new = scratch.get(&to).copied().unwrap_or_default();
                    let d = self.delta(level, v, to, old, new, out_total);
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((to, d));
                    }
                }
                if let Some((to, d)) = best {
                    if d < -MIN_MOVE_IMPROVEMENT {
                        let new = scratch.get(&to).copied().unwrap_or_default();
                        self.apply(level, v, to, old, new, out_total);
                        moves += 1;
                    }
                }
            }
            self.refresh_sums();
            total_moves += moves;
            if moves == 0 || before - self.codelength() < MIN_MOVE_IMPROVEMENT {
                break;
            }
        }
        total_moves
    }
}

/// Dense relabelling of `of` to `0..k` by first appearance.
fn compact(of: &[usize]) -> Vec<usize> {
    let mut renumber: HashMap<usize, usize> = HashMap::new();
    of.iter()
        .map(|&m| {
            let next = renumber.len();
            *renumber.entry(m).or_insert(next)
        })
        .collect()
}

/// Multilevel local moving starting from the modules of `init` (a leaf
/// partition). Returns the refined leaf partition.
fn coarsen(leaf: &Level, init: &[usize], node_terms: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let (mut level, mut leaf_to_node) = leaf.aggregate(init);
    loop {
        let mut modules = Modules::new(&level, (0..level.len()).collect(), node_terms);
        if modules.move_nodes(&level, rng) == 0 {
            return compact(&leaf_to_node);
        }
        let (next, map) = level.aggregate(&modules.of);
        leaf_to_node = leaf_to_node.iter().map(|&s| map[s]).collect();
        level = next;
    }
}

fn run_trial(leaf: &Level, node_terms: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = leaf.len();
    let mut partition = coarsen(leaf, &(0..n).collect::<Vec<_>>(), node_terms, rng);
    let mut current = Modules::new(leaf, partition.clone(), node_terms).codelength();
    for _ in 0..MAX_TUNE_ROUNDS {
        let mut fine = Modules::new(leaf, partition.clone(), node_terms);
        if fine.move_nodes(leaf, rng) == 0 {
            break;
        }
        let tuned = coarsen(leaf, &compact(&fine.of), node_terms, rng);
        let tuned_len = Modules::new(leaf, tuned.clone(), node_terms).codelength();
        if tuned_len < current {
            partition = tuned;
        }
        if current - tuned_len < MIN_ROUND_IMPROVEMENT {
            break;
        }
        current = tuned_len;
    }
    partition
}
