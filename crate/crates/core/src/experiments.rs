//! Overlap sampling, reference partitions and the parameter sweep.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::LayeredAssignment;
use crate::error::{Error, Result};
use crate::flow::{pagerank, PageRankOptions};
use crate::graph::{Graph, GraphBuilder, VertexId, VertexKind};
use crate::mapeq::{detect, DetectOptions, Detection, FlowNetwork};
use crate::metrics::{contingency_layered, oracle_accuracy, variation_of_information};
use crate::multilayer::{
    build_aggregation, build_linking, build_relaxed, project_assignment, AlignmentSet, BaseLayer,
    Combine, Method, RelaxRate, SeedSet,
};
use crate::seedsel::{centrality, select_seeds, ScoreTable, Scores, SeedStrategy};

pub const CSV_HEADER: &str =
    "method,overlap,strategy,seed_fraction,trial,vi_bits,oracle_accuracy,codelength_bits,num_communities";

/// Derives an independent stream seed from a master seed and a path of
/// integers (splitmix64 finalizer folded over the parts).
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ p))
}

/// Stochastic block model with `blocks` equal blocks and unit weights.
///
/// Vertices are labelled `v0000`, `v0001`, ... and block `b` holds the
/// labels `b*block_size .. (b+1)*block_size`.
pub fn planted_partition(
    blocks: usize,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    rng_seed: u64,
) -> Result<Graph> {
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter {
                name,
                reason: format!("must lie in [0, 1], got {p}"),
            });
        }
    }
    let n = blocks * block_size;
    let width = n.saturating_sub(1).to_string().len().max(4);
    let labels: Vec<String> = (0..n).map(|i| format!("v{i:0width$}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut b = GraphBuilder::new();
    for label in &labels {
        b.add_vertex(label);
    }
    for i in 0..n {
        for j in i + 1..n {
            let p = if i / block_size == j / block_size {
                p_in
            } else {
                p_out
            };
            if rng.gen_bool(p) {
                b.add_edge(&labels[i], &labels[j], 1.0);
            }
        }
    }
    Ok(b.build())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapSpec {
    pub fraction: f64,
    pub layer_size: usize,
    pub rng_seed: u64,
}

impl OverlapSpec {
    /// `ceil(fraction * layer_size)`, guarded against products such as
    /// `0.7 * 10` landing just above an integer.
    pub fn shared_size(&self) -> usize {
        ((self.fraction * self.layer_size as f64 - 1e-9)
            .ceil()
            .max(0.0) as usize)
            .min(self.layer_size)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapSample {
    pub layer1: Graph,
    pub layer2: Graph,
    pub truth: AlignmentSet,
}

/// Two induced subgraphs of `base` sharing exactly `ceil(f*m)` vertices.
///
/// Shared user vertices form the truth alignment; shared hashtags are
/// left to align themselves by label.
pub fn sample_overlap(base: &Graph, spec: OverlapSpec) -> Result<OverlapSample> {
    if !(spec.fraction > 0.0 && spec.fraction <= 1.0) {
        return Err(Error::Parameter {
            name: "overlap",
            reason: format!("must lie in (0, 1], got {}", spec.fraction),
        });
    }
    let m = spec.layer_size;
    let s = spec.shared_size();
    let required = 2 * m - s;
    if required > base.len() {
        return Err(Error::Capacity {
            required,
            available: base.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let picked: Vec<VertexId> = rand::seq::index::sample(&mut rng, base.len(), required)
        .into_iter()
        .map(VertexId)
        .collect();
    let (shared, rest) = picked.split_at(s);
    let (only1, only2) = rest.split_at(m - s);
    let layer1 = base.induced_subgraph(&[shared, only1].concat());
    let layer2 = base.induced_subgraph(&[shared, only2].concat());
    let truth = AlignmentSet::new(
        shared
            .iter()
            .filter(|&&v| base.vertex(v).kind == VertexKind::User)
            .map(|&v| (base.label(v), base.label(v))),
    )?;
    Ok(OverlapSample {
        layer1,
        layer2,
        truth,
    })
}

/// Construction parameters shared by all methods.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodParams {
    pub combine: Combine,
    pub omega: f64,
    pub relax_rate: RelaxRate,
    pub pagerank: PageRankOptions,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            combine: Combine::Sum,
            omega: 1.0,
            relax_rate: RelaxRate::default(),
            pagerank: PageRankOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayeredDetection {
    pub detection: Detection,
    pub assignment: LayeredAssignment,
}

/// Builds the chosen construction, detects communities on it and projects
/// them back onto `(layer, label)` elements.
pub fn detect_pair(
    g1: &Graph,
    g2: &Graph,
    seeds: &SeedSet,
    method: Method,
    params: &MethodParams,
    opts: DetectOptions,
) -> Result<LayeredDetection> {
    match method {
        Method::Aggregation => {
            let agg = build_aggregation(g1, g2, seeds, params.combine)?;
            let detection = detect(&FlowNetwork::from_graph(&agg.graph), opts)?;
            let assignment = project_assignment(&detection.assignment, &agg)?;
            Ok(LayeredDetection {
                detection,
                assignment,
            })
        }
        Method::Linking | Method::Relaxed => {
            let fg = if method == Method::Linking {
                build_linking(g1, g2, seeds, params.omega)?
            } else {
                build_relaxed(g1, g2, seeds, params.relax_rate)?
            };
            let p = pagerank(fg.transitions(), params.pagerank)?;
            let detection = detect(&FlowNetwork::from_flow_graph(&fg, &p)?, opts)?;
            let assignment = project_assignment(&detection.assignment, &fg)?;
            Ok(LayeredDetection {
                detection,
                assignment,
            })
        }
    }
}

/// Detects communities on a single network; elements are tagged as base.
pub fn detect_graph(g: &Graph, opts: DetectOptions) -> Result<LayeredDetection> {
    let detection = detect(&FlowNetwork::from_graph(g), opts)?;
    let assignment = project_assignment(&detection.assignment, &BaseLayer(g))?;
    Ok(LayeredDetection {
        detection,
        assignment,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReferenceMode {
    /// Partition of the network both layers were sampled from.
    #[serde(rename = "base")]
    Base,
    /// Partition of the same pair, detected with every truth pair as a seed.
    #[serde(rename = "pair-full-seeds")]
    PairFullSeeds,
}

/// Where seed-ranking centralities are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityMode {
    /// On the base network; a pair takes its layer-1 vertex's score.
    Base,
    /// On each layer; a pair takes the mean of its two scores.
    Layers,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SweepInput {
    Base {
        graph: Graph,
        overlaps: Vec<f64>,
        layer_size: usize,
    },
    Pair {
        layer1: Graph,
        layer2: Graph,
        truth: AlignmentSet,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub input: SweepInput,
    pub methods: Vec<Method>,
    pub strategies: Vec<SeedStrategy>,
    pub seed_fractions: Vec<f64>,
    pub trials: usize,
    pub rng_seed: u64,
    pub reference: ReferenceMode,
    pub centrality: CentralityMode,
    pub params: MethodParams,
    pub detect_trials: usize,
    /// Restrict VI to user vertices.
    pub users_only: bool,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if let SweepInput::Pair { .. } = self.input {
            if self.reference == ReferenceMode::Base {
                return Err(Error::Parameter {
                    name: "reference",
                    reason: "`base` needs a base graph".into(),
                });
            }
            if self.centrality == CentralityMode::Base {
                return Err(Error::Parameter {
                    name: "centrality",
                    reason: "`base` needs a base graph".into(),
                });
            }
        }
        if let SweepInput::Base { overlaps, .. } = &self.input {
            if let Some(&f) = overlaps.iter().find(|&&f| !(f > 0.0 && f <= 1.0)) {
                return Err(Error::Parameter {
                    name: "overlaps",
                    reason: format!("must lie in (0, 1], got {f}"),
                });
            }
        }
        if let Some(&f) = self
            .seed_fractions
            .iter()
            .find(|f| !(0.0..=1.0).contains(*f))
        {
            return Err(Error::Parameter {
                name: "seed_fractions",
                reason: format!("must lie in [0, 1], got {f}"),
            });
        }
        if self.detect_trials == 0 {
            return Err(Error::Parameter {
                name: "detect_trials",
                reason: "at least one detection trial is required".into(),
            });
        }
        if !(self.params.omega > 0.0 && self.params.omega.is_finite()) {
            return Err(Error::Parameter {
                name: "omega",
                reason: format!("must be positive, got {}", self.params.omega),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub method: Method,
    /// `None` when the layers were given rather than sampled.
    pub overlap: Option<f64>,
    pub strategy: SeedStrategy,
    pub seed_fraction: f64,
    pub trial: usize,
    pub vi_bits: f64,
    /// `None` when every truth pair is a seed.
    pub oracle_accuracy: Option<f64>,
    pub codelength_bits: f64,
    pub num_communities: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepFailure {
    pub method: Method,
    pub overlap: Option<f64>,
    pub strategy: SeedStrategy,
    pub seed_fraction: f64,
    pub trial: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepResult>,
    pub failures: Vec<SweepFailure>,
}

// Domain tags that keep derived seeds of different stages apart.
const TAG_SAMPLE: u64 = 1;
const TAG_DETECT: u64 = 2;
const TAG_SEEDS: u64 = 3;
const TAG_BASE_REFERENCE: u64 = 4;

type RowKey = (usize, usize, usize, usize, usize);

/// Runs every (method, overlap, strategy, seed fraction, trial) row.
///
/// Rows are computed in parallel and returned in key order, so the output
/// depends only on the configuration. A failing row is reported in
/// `failures` and does not stop the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    if config.methods.is_empty()
        || config.strategies.is_empty()
        || config.seed_fractions.is_empty()
        || config.trials == 0
    {
        return Ok(SweepOutcome::default());
    }
    let overlaps: Vec<Option<f64>> = match &config.input {
        SweepInput::Base { overlaps, .. } => overlaps.iter().copied().map(Some).collect(),
        SweepInput::Pair { .. } => vec![None],
    };

    let base_reference = match (&config.input, config.reference) {
        (SweepInput::Base { graph, .. }, ReferenceMode::Base) => {
            let seed = derive_seed(config.rng_seed, &[TAG_BASE_REFERENCE]);
            let r = detect_graph(graph, DetectOptions::new(config.detect_trials, seed))?;
            Some(r.assignment)
        }
        _ => None,
    };
    let base_scores: HashMap<SeedStrategy, ScoreTable> = match (&config.input, config.centrality) {
        (SweepInput::Base { graph, .. }, CentralityMode::Base) => config
            .strategies
            .iter()
            .map(|&s| Ok((s, centrality(graph, s, config.params.pagerank)?)))
            .collect::<Result<_>>()?,
        _ => HashMap::new(),
    };

    let units: Vec<(usize, usize)> = (0..overlaps.len())
        .flat_map(|oi| (0..config.trials).map(move |t| (oi, t)))
        .collect();
    let ctx = UnitContext {
        config,
        overlaps: &overlaps,
        base_reference: base_reference.as_ref(),
        base_scores: &base_scores,
    };
    let mut results: Vec<(RowKey, std::result::Result<SweepResult, SweepFailure>)> = units
        .par_iter()
        .flat_map_iter(|&(oi, trial)| ctx.run_unit(oi, trial))
        .collect();
    results.sort_by_key(|r| r.0);

    let mut outcome = SweepOutcome::default();
    for (_, r) in results {
        match r {
            Ok(row) => outcome.rows.push(row),
            Err(f) => outcome.failures.push(f),
        }
    }
    Ok(outcome)
}

struct UnitContext<'a> {
    config: &'a SweepConfig,
    overlaps: &'a [Option<f64>],
    base_reference: Option<&'a LayeredAssignment>,
    base_scores: &'a HashMap<SeedStrategy, ScoreTable>,
}

impl UnitContext<'_> {
    /// All rows sharing one sampled pair.
    fn run_unit(
        &self,
        oi: usize,
        trial: usize,
    ) -> Vec<(RowKey, std::result::Result<SweepResult, SweepFailure>)> {
        let cfg = self.config;
        let overlap = self.overlaps[oi];
        let keys: Vec<(RowKey, Method, SeedStrategy, f64)> = cfg
            .methods
            .iter()
            .enumerate()
            .flat_map(|(mi, &m)| {
                cfg.strategies.iter().enumerate().flat_map(move |(si, &s)| {
                    cfg.seed_fractions
                        .iter()
                        .enumerate()
                        .map(move |(fi, &f)| ((mi, oi, si, fi, trial), m, s, f))
                })
            })
            .collect();
        let fail_all = |reason: String| {
            keys.iter()
                .map(|&(key, method, strategy, seed_fraction)| {
                    let f = SweepFailure {
                        method,
                        overlap,
                        strategy,
                        seed_fraction,
                        trial,
                        reason: reason.clone(),
                    };
                    (key, Err(f))
                })
                .collect()
        };

        let sample = match self.pair(oi, trial) {
            Ok(s) => s,
            Err(e) => return fail_all(e.to_string()),
        };
        let scores = match self.scores(&sample) {
            Ok(s) => s,
            Err(e) => return fail_all(e.to_string()),
        };

        let mut out = Vec::with_capacity(keys.len());
        let mut references: HashMap<usize, std::result::Result<LayeredAssignment, String>> =
            HashMap::new();
        for &(key, method, strategy, seed_fraction) in &keys {
            let (mi, _, si, fi, _) = key;
            let detect_opts = DetectOptions::new(
                cfg.detect_trials,
                derive_seed(
                    cfg.rng_seed,
                    &[TAG_DETECT, oi as u64, trial as u64, mi as u64],
                ),
            );
            let reference = references.entry(mi).or_insert_with(|| {
                self.reference(&sample, method, detect_opts)
                    .map_err(|e| format!("reference: {e}"))
            });
            let row = match reference {
                Ok(reference) => self
                    .row(
                        &sample,
                        reference,
                        &scores[si],
                        (method, strategy, seed_fraction),
                        derive_seed(
                            cfg.rng_seed,
                            &[TAG_SEEDS, oi as u64, trial as u64, si as u64, fi as u64],
                        ),
                        detect_opts,
                    )
                    .map(|(vi, oa, detection)| SweepResult {
                        method,
                        overlap,
                        strategy,
                        seed_fraction,
                        trial,
                        vi_bits: vi,
                        oracle_accuracy: oa,
                        codelength_bits: detection.codelength.bits,
                        num_communities: detection.assignment.num_communities(),
                    })
                    .map_err(|e| e.to_string()),
                Err(reason) => Err(reason.clone()),
            };
            out.push((
                key,
                row.map_err(|reason| SweepFailure {
                    method,
                    overlap,
                    strategy,
                    seed_fraction,
                    trial,
                    reason,
                }),
            ));
        }
        out
    }

    fn pair(&self, oi: usize, trial: usize) -> Result<OverlapSample> {
        match &self.config.input {
            SweepInput::Base {
                graph, layer_size, ..
            } => sample_overlap(
                graph,
                OverlapSpec {
                    fraction: self.overlaps[oi].unwrap_or(1.0),
                    layer_size: *layer_size,
                    rng_seed: derive_seed(
                        self.config.rng_seed,
                        &[TAG_SAMPLE, oi as u64, trial as u64],
                    ),
                },
            ),
            SweepInput::Pair {
                layer1,
                layer2,
                truth,
            } => Ok(OverlapSample {
                layer1: layer1.clone(),
                layer2: layer2.clone(),
                truth: truth.clone(),
            }),
        }
    }

    /// Score tables indexed like `config.strategies`.
    fn scores(&self, sample: &OverlapSample) -> Result<Vec<Scores>> {
        let cfg = self.config;
        cfg.strategies
            .iter()
            .map(|&s| {
                Ok(match (s, cfg.centrality) {
                    (SeedStrategy::Random, _) => Scores::None,
                    (_, CentralityMode::Base) => Scores::Single(self.base_scores[&s].clone()),
                    (_, CentralityMode::Layers) => Scores::PerLayer {
                        layer1: centrality(&sample.layer1, s, cfg.params.pagerank)?,
                        layer2: centrality(&sample.layer2, s, cfg.params.pagerank)?,
                    },
                })
            })
            .collect()
    }

    fn reference(
        &self,
        sample: &OverlapSample,
        method: Method,
        opts: DetectOptions,
    ) -> Result<LayeredAssignment> {
        let assignment = match self.base_reference {
            Some(r) => r.clone(),
            None => {
                detect_pair(
                    &sample.layer1,
                    &sample.layer2,
                    &SeedSet::from_alignment(sample.truth.clone()),
                    method,
                    &self.config.params,
                    opts,
                )?
                .assignment
            }
        };
        Ok(self.restrict(assignment))
    }

    fn restrict(&self, a: LayeredAssignment) -> LayeredAssignment {
        if self.config.users_only {
            a.users_only()
        } else {
            a
        }
    }

    fn row(
        &self,
        sample: &OverlapSample,
        reference: &LayeredAssignment,
        scores: &Scores,
        (method, strategy, fraction): (Method, SeedStrategy, f64),
        seed_rng: u64,
        opts: DetectOptions,
    ) -> Result<(f64, Option<f64>, Detection)> {
        let seeds = select_seeds(&sample.truth, strategy, fraction, seed_rng, scores)?;
        let found = detect_pair(
            &sample.layer1,
            &sample.layer2,
            &seeds,
            method,
            &self.config.params,
            opts,
        )?;
        let vi = variation_of_information(&contingency_layered(
            reference,
            &self.restrict(found.assignment.clone()),
        )?);
        let oa = match oracle_accuracy(&sample.truth, &seeds, &found.assignment) {
            Ok(oa) => Some(oa),
            Err(Error::Domain(_)) => None,
            Err(e) => return Err(e),
        };
        Ok((vi, oa, found.detection))
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_owned(), |v| v.to_string())
}

/// Writes rows under [`CSV_HEADER`]; missing values are written as `NA`.
pub fn write_csv<W: Write>(rows: &[SweepResult], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.method,
            fmt_opt(r.overlap),
            r.strategy,
            r.seed_fraction,
            r.trial,
            r.vi_bits,
            fmt_opt(r.oracle_accuracy),
            r.codelength_bits,
            r.num_communities
        )?;
    }
    Ok(())
}

fn default_trials() -> usize {
    1
}

/// JSON sweep configuration. Relative paths resolve against the directory
/// holding the file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfigFile {
    pub base_graph: Option<PathBuf>,
    pub layer1: Option<PathBuf>,
    pub layer2: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub overlaps: Vec<f64>,
    /// Vertices per sampled layer.
    pub layer_size: Option<usize>,
    pub strategies: Vec<SeedStrategy>,
    pub seed_fractions: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub rng_seed: Option<u64>,
    pub reference: Option<ReferenceMode>,
    pub centrality: Option<CentralityMode>,
    pub relax_rate: Option<f64>,
    pub omega: Option<f64>,
    pub combine: Option<Combine>,
    pub damping: Option<f64>,
    pub detect_trials: Option<usize>,
    #[serde(default)]
    pub users_only: bool,
}

impl SweepConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Loads the referenced inputs. `rng_seed` overrides the file's seed.
    pub fn resolve(self, base_dir: &Path, rng_seed: Option<u64>) -> Result<SweepConfig> {
        let missing = |name: &'static str, reason: &str| Error::Parameter {
            name,
            reason: reason.into(),
        };
        let path = |p: &PathBuf| base_dir.join(p);
        let input = match (&self.base_graph, &self.layer1, &self.layer2, &self.truth) {
            (Some(base), None, None, None) => SweepInput::Base {
                graph: Graph::load(&path(base))?,
                overlaps: if self.overlaps.is_empty() {
                    return Err(missing("overlaps", "required with base_graph"));
                } else {
                    self.overlaps.clone()
                },
                layer_size: self
                    .layer_size
                    .ok_or_else(|| missing("layer_size", "required with base_graph"))?,
            },
            (None, Some(l1), Some(l2), Some(t)) => SweepInput::Pair {
                layer1: Graph::load(&path(l1))?,
                layer2: Graph::load(&path(l2))?,
                truth: AlignmentSet::read_truth_tsv(std::io::BufReader::new(std::fs::File::open(
                    path(t),
                )?))?,
            },
            _ => {
                return Err(missing(
                    "base_graph",
                    "give either base_graph or all of layer1, layer2 and truth",
                ))
            }
        };
        let is_base = matches!(input, SweepInput::Base { .. });
        let mut pagerank = PageRankOptions::default();
        if let Some(d) = self.damping {
            pagerank.damping = d;
        }
        Ok(SweepConfig {
            input,
            methods: self.methods,
            strategies: self.strategies,
            seed_fractions: self.seed_fractions,
            trials: self.trials,
            rng_seed: rng_seed
                .or(self.rng_seed)
                .ok_or_else(|| missing("rng_seed", "no seed given"))?,
            reference: self.reference.unwrap_or(if is_base {
                ReferenceMode::Base
            } else {
                ReferenceMode::PairFullSeeds
            }),
            centrality: self.centrality.unwrap_or(if is_base {
                CentralityMode::Base
            } else {
                CentralityMode::Layers
            }),
            params: MethodParams {
                combine: self.combine.unwrap_or_default(),
                omega: self.omega.unwrap_or(1.0),
                relax_rate: match self.relax_rate {
                    Some(r) => RelaxRate::new(r)?,
                    None => RelaxRate::default(),
                },
                pagerank,
            },
            detect_trials: self.detect_trials.unwrap_or(5),
            users_only: self.users_only,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::Layer;

    fn path6() -> Graph {
        let mut b = GraphBuilder::new();
        for i in 0..5 {
            b.add_edge(&format!("p{i}"), &format!("p{}", i + 1), 1.0);
        }
        b.build()
    }

    fn labels(g: &Graph) -> Vec<String> {
        g.vertices().iter().map(|m| m.label.clone()).collect()
    }

    fn small_config(methods: Vec<Method>) -> SweepConfig {
        SweepConfig {
            input: SweepInput::Base {
                graph: planted_partition(4, 10, 0.6, 0.02, 9).unwrap(),
                overlaps: vec![0.1, 0.5, 0.9],
                layer_size: 15,
            },
            methods,
            strategies: vec![
                SeedStrategy::Random,
                SeedStrategy::Degree,
                SeedStrategy::PageRank,
            ],
            seed_fractions: vec![0.0, 0.1, 0.3, 0.5, 1.0],
            trials: 2,
            rng_seed: 17,
            reference: ReferenceMode::Base,
            centrality: CentralityMode::Base,
            params: MethodParams::default(),
            detect_trials: 2,
            users_only: false,
        }
    }

    #[test]
    fn half_overlap_on_a_path() {
        let spec = OverlapSpec {
            fraction: 0.5,
            layer_size: 4,
            rng_seed: 3,
        };
        let s = sample_overlap(&path6(), spec).unwrap();
        assert_eq!((s.layer1.len(), s.layer2.len()), (4, 4));
        let l2 = labels(&s.layer2);
        let shared: Vec<String> = labels(&s.layer1)
            .into_iter()
            .filter(|l| l2.contains(l))
            .collect();
        assert_eq!(shared.len(), 2);
        assert_eq!(s.truth.len(), 2);
        for l in &shared {
            assert!(s.truth.contains(l, l));
        }
    }

    #[test]
    fn full_overlap_of_everything_is_the_base() {
        let base = path6();
        let spec = OverlapSpec {
            fraction: 1.0,
            layer_size: 6,
            rng_seed: 0,
        };
        let s = sample_overlap(&base, spec).unwrap();
        assert_eq!(s.layer1, base);
        assert_eq!(s.layer2, base);
        assert_eq!(s.truth.len(), 6);
    }

    #[test]
    fn hashtags_are_not_truth_pairs() {
        let mut b = GraphBuilder::new();
        b.add_edge("a", "#t", 1.0).add_edge("b", "#t", 1.0);
        let s = sample_overlap(
            &b.build(),
            OverlapSpec {
                fraction: 1.0,
                layer_size: 3,
                rng_seed: 1,
            },
        )
        .unwrap();
        assert_eq!(s.truth.len(), 2);
        assert!(!s.truth.contains("#t", "#t"));
    }

    #[test]
    fn too_small_base_is_a_capacity_error() {
        let spec = OverlapSpec {
            fraction: 0.5,
            layer_size: 5,
            rng_seed: 0,
        };
        assert!(matches!(
            sample_overlap(&path6(), spec),
            Err(Error::Capacity {
                required: 7,
                available: 6
            })
        ));
    }

    #[test]
    fn shared_size_guards_float_error() {
        let s = |fraction, layer_size| {
            OverlapSpec {
                fraction,
                layer_size,
                rng_seed: 0,
            }
            .shared_size()
        };
        assert_eq!(s(0.7, 10), 7);
        assert_eq!(s(0.1, 500), 50);
        assert_eq!(s(0.15, 10), 2);
        assert_eq!(s(1.0, 9), 9);
    }

    #[test]
    fn planted_partition_is_seeded() {
        let a = planted_partition(3, 5, 0.5, 0.1, 4).unwrap();
        assert_eq!(a, planted_partition(3, 5, 0.5, 0.1, 4).unwrap());
        assert_eq!(a.len(), 15);
        let full = planted_partition(2, 3, 1.0, 0.0, 0).unwrap();
        assert_eq!(full.edges().len(), 6);
        assert!(planted_partition(2, 2, 1.5, 0.0, 0).is_err());
    }

    #[test]
    fn sweep_row_count_is_the_cartesian_product() {
        let out = run_sweep(&small_config(vec![Method::Aggregation])).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        assert_eq!(out.rows.len(), 90);
        assert!(out.rows.iter().all(|r| r.vi_bits >= 0.0));
        assert!(out
            .rows
            .iter()
            .filter_map(|r| r.oracle_accuracy)
            .all(|oa| (0.0..=1.0).contains(&oa)));
        assert!(out
            .rows
            .iter()
            .filter(|r| r.seed_fraction == 1.0)
            .all(|r| r.oracle_accuracy.is_none()));
    }

    #[test]
    fn empty_method_list_gives_no_rows() {
        let out = run_sweep(&small_config(vec![])).unwrap();
        assert!(out.rows.is_empty() && out.failures.is_empty());
    }

    #[test]
    fn full_seeds_reproduce_the_pair_reference() {
        let mut cfg = small_config(vec![Method::Aggregation]);
        cfg.reference = ReferenceMode::PairFullSeeds;
        cfg.seed_fractions = vec![1.0];
        let out = run_sweep(&cfg).unwrap();
        assert_eq!(out.rows.len(), 18);
        for r in &out.rows {
            assert_eq!(r.vi_bits, 0.0, "{r:?}");
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = small_config(vec![Method::Linking, Method::Relaxed]);
        let csv = |out: &SweepOutcome| {
            let mut buf = Vec::new();
            write_csv(&out.rows, &mut buf).unwrap();
            buf
        };
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(csv(&a), csv(&b));
        let text = String::from_utf8(csv(&a)).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 1 + 180);
    }

    #[test]
    fn pair_mode_rejects_base_reference() {
        let mut cfg = small_config(vec![Method::Aggregation]);
        cfg.input = SweepInput::Pair {
            layer1: path6(),
            layer2: path6(),
            truth: AlignmentSet::new([("p0", "p0")]).unwrap(),
        };
        assert!(run_sweep(&cfg).is_err());
        cfg.reference = ReferenceMode::PairFullSeeds;
        cfg.centrality = CentralityMode::Layers;
        let out = run_sweep(&cfg).unwrap();
        assert!(out.rows.iter().all(|r| r.overlap.is_none()));
        let mut buf = Vec::new();
        write_csv(&out.rows[..1], &mut buf).unwrap();
        let line = String::from_utf8(buf)
            .unwrap()
            .lines()
            .nth(1)
            .unwrap()
            .to_owned();
        assert!(line.starts_with("aggregation,NA,random,0,0,"), "{line}");
    }

    #[test]
    fn detect_graph_tags_base_elements() {
        let r = detect_graph(&path6(), DetectOptions::new(2, 0)).unwrap();
        assert_eq!(r.assignment.len(), 6);
        assert!(r.assignment.lookup(Layer::Base, "p3").is_ok());
    }

    #[test]
    fn config_file_defaults() {
        let text = r#"{"base_graph":"g.json","methods":["aggregation"],"overlaps":[0.5],
            "layer_size":4,"strategies":["pagerank"],"seed_fractions":[0.1],"trials":3}"#;
        let file = SweepConfigFile::from_json(text).unwrap();
        assert_eq!(file.methods, vec![Method::Aggregation]);
        assert!(SweepConfigFile::from_json(r#"{"methods":[],"bogus":1}"#).is_err());

        let dir = std::env::temp_dir().join(format!("seedcomm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        path6()
            .write_json(std::fs::File::create(dir.join("g.json")).unwrap())
            .unwrap();
        assert!(SweepConfigFile::from_json(text)
            .unwrap()
            .resolve(&dir, None)
            .is_err());
        let cfg = file.resolve(&dir, Some(5)).unwrap();
        assert_eq!(cfg.rng_seed, 5);
        assert_eq!(cfg.reference, ReferenceMode::Base);
        assert_eq!(cfg.centrality, CentralityMode::Base);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn overlap_sizes_are_exact(n in 2usize..40, m_frac in 0.05f64..1.0, f in 0.01f64..=1.0, seed in any::<u64>()) {
                let mut b = GraphBuilder::new();
                for i in 0..n {
                    b.add_vertex(&format!("x{i}"));
                }
                let base = b.build();
                let m = ((n as f64 * m_frac) as usize).max(1);
                let spec = OverlapSpec { fraction: f, layer_size: m, rng_seed: seed };
                let s = spec.shared_size();
                match sample_overlap(&base, spec) {
                    Ok(sample) => {
                        prop_assert_eq!(sample.layer1.len(), m);
                        prop_assert_eq!(sample.layer2.len(), m);
                        let l2 = labels(&sample.layer2);
                        let common = labels(&sample.layer1).iter().filter(|l| l2.contains(l)).count();
                        prop_assert_eq!(common, s);
                        prop_assert_eq!(sample.truth.len(), s);
                    }
                    Err(Error::Capacity { required, available }) => {
                        prop_assert_eq!(required, 2 * m - s);
                        prop_assert!(required > available);
                    }
                    Err(e) => prop_assert!(false, "{e}"),
                }
            }
        }
    }
}
