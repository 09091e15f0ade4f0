//! Choosing which truth pairs to reveal as seeds.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{graph_pagerank, PageRankOptions};
use crate::graph::Graph;
use crate::multilayer::{AlignmentSet, SeedSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedStrategy {
    Random,
    Degree,
    #[serde(rename = "pagerank")]
    PageRank,
}

impl SeedStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SeedStrategy::Random => "random",
            SeedStrategy::Degree => "degree",
            SeedStrategy::PageRank => "pagerank",
        }
    }
}

impl fmt::Display for SeedStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeedStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(SeedStrategy::Random),
            "degree" => Ok(SeedStrategy::Degree),
            "pagerank" => Ok(SeedStrategy::PageRank),
            other => Err(format!(
                "unknown strategy `{other}` (expected random|degree|pagerank)"
            )),
        }
    }
}

pub type ScoreTable = HashMap<String, f64>;

/// Centrality used to rank truth pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Scores {
    #[default]
    None,
    /// One table for a network both layers were drawn from; a pair is
    /// scored by its layer-1 label.
    Single(ScoreTable),
    /// One table per layer; a pair is scored by the mean of its two labels'
    /// scores.
    PerLayer {
        layer1: ScoreTable,
        layer2: ScoreTable,
    },
}

impl Scores {
    fn score(&self, a: &str, b: &str) -> Result<f64> {
        let get = |table: &ScoreTable, label: &str| {
            table
                .get(label)
                .copied()
                .ok_or_else(|| Error::Scoring(label.to_owned()))
        };
        match self {
            Scores::None => Err(Error::Scoring(a.to_owned())),
            Scores::Single(t) => get(t, a),
            Scores::PerLayer { layer1, layer2 } => Ok((get(layer1, a)? + get(layer2, b)?) / 2.0),
        }
    }
}

/// Weighted degree of every vertex.
pub fn degree_scores(g: &Graph) -> ScoreTable {
    g.vertex_ids()
        .map(|v| (g.label(v).to_owned(), g.strengths()[v.0]))
        .collect()
}

pub fn pagerank_scores(g: &Graph, opts: PageRankOptions) -> Result<ScoreTable> {
    let pr = graph_pagerank(g, opts)?;
    Ok(g.vertex_ids()
        .map(|v| (g.label(v).to_owned(), pr.as_slice()[v.0]))
        .collect())
}

/// Scores for `strategy` computed on `g`; empty for [`SeedStrategy::Random`].
pub fn centrality(g: &Graph, strategy: SeedStrategy, opts: PageRankOptions) -> Result<ScoreTable> {
    match strategy {
        SeedStrategy::Random => Ok(ScoreTable::new()),
        SeedStrategy::Degree => Ok(degree_scores(g)),
        SeedStrategy::PageRank => pagerank_scores(g, opts),
    }
}

/// Writes `label<TAB>score`, highest score first (ties by label).
pub fn write_scores<W: Write>(table: &ScoreTable, mut w: W) -> Result<()> {
    let mut rows: Vec<(&String, f64)> = table.iter().map(|(l, &s)| (l, s)).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (label, score) in rows {
        writeln!(w, "{label}\t{score}")?;
    }
    Ok(())
}

pub fn read_scores<R: BufRead>(reader: R) -> Result<ScoreTable> {
    let mut table = ScoreTable::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with("//") {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let (label, score) = line
            .split_once('\t')
            .ok_or_else(|| err("expected `label<TAB>score`".into()))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| err(format!("bad score `{score}`")))?;
        if !score.is_finite() {
            return Err(err(format!("score must be finite, got {score}")));
        }
        table.insert(label.to_owned(), score);
    }
    Ok(table)
}

/// `round(fraction * total)` with halves rounded up.
pub fn seed_count(fraction: f64, total: usize) -> usize {
    ((fraction * total as f64 + 0.5).floor() as usize).min(total)
}

/// Picks `round(fraction * |truth|)` truth pairs.
///
/// `Random` samples uniformly without replacement; `Degree` and `PageRank`
/// take the top-scoring pairs, ties broken by pair labels.
pub fn select_seeds(
    truth: &AlignmentSet,
    strategy: SeedStrategy,
    fraction: f64,
    rng_seed: u64,
    scores: &Scores,
) -> Result<SeedSet> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Parameter {
            name: "fraction",
            reason: format!("must lie in [0, 1], got {fraction}"),
        });
    }
    let pairs: Vec<&(String, String)> = truth.pairs().collect();
    let k = seed_count(fraction, pairs.len());
    let chosen: Vec<&(String, String)> = match strategy {
        SeedStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut idx = rand::seq::index::sample(&mut rng, pairs.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| pairs[i]).collect()
        }
        SeedStrategy::Degree | SeedStrategy::PageRank => {
            let mut scored = pairs
                .iter()
                .map(|&p| Ok((scores.score(&p.0, &p.1)?, p)))
                .collect::<Result<Vec<_>>>()?;
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            scored.into_iter().take(k).map(|(_, p)| p).collect()
        }
    };
    SeedSet::within(AlignmentSet::new(chosen.into_iter().cloned())?, truth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> AlignmentSet {
        AlignmentSet::new([("a", "b"), ("c", "d"), ("e", "f"), ("g", "h")]).unwrap()
    }

    fn table(entries: &[(&str, f64)]) -> ScoreTable {
        entries.iter().map(|&(l, s)| (l.to_owned(), s)).collect()
    }

    #[test]
    fn fraction_extremes() {
        let t = truth();
        for s in [
            SeedStrategy::Random,
            SeedStrategy::Degree,
            SeedStrategy::PageRank,
        ] {
            let scores = Scores::Single(table(&[("a", 1.0), ("c", 2.0), ("e", 3.0), ("g", 4.0)]));
            let all = select_seeds(&t, s, 1.0, 3, &scores).unwrap();
            assert_eq!(all.alignment(), &t);
            assert!(select_seeds(&t, s, 0.0, 3, &scores).unwrap().is_empty());
        }
        assert!(select_seeds(&t, SeedStrategy::Random, 1.2, 0, &Scores::None).is_err());
    }

    #[test]
    fn averaged_degree_picks_top_pair() {
        let t = AlignmentSet::new([("a", "b"), ("c", "d")]).unwrap();
        let scores = Scores::PerLayer {
            layer1: table(&[("a", 4.0), ("c", 1.0)]),
            layer2: table(&[("b", 2.0), ("d", 1.0)]),
        };
        let s = select_seeds(&t, SeedStrategy::Degree, 0.5, 0, &scores).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.contains("a", "b"));
    }

    #[test]
    fn missing_score_is_named() {
        let scores = Scores::Single(table(&[("a", 1.0)]));
        match select_seeds(&truth(), SeedStrategy::PageRank, 0.5, 0, &scores) {
            Err(Error::Scoring(label)) => assert_eq!(label, "c"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ties_break_by_label() {
        let scores = Scores::Single(table(&[("a", 1.0), ("c", 1.0), ("e", 1.0), ("g", 1.0)]));
        let s = select_seeds(&truth(), SeedStrategy::Degree, 0.5, 0, &scores).unwrap();
        assert!(s.contains("a", "b") && s.contains("c", "d"));
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(seed_count(0.05, 450), 23);
        assert_eq!(seed_count(0.5, 3), 2);
        assert_eq!(seed_count(0.1, 4), 0);
        assert_eq!(seed_count(1.0, 7), 7);
    }

    #[test]
    fn score_file_round_trip() {
        let t = table(&[("a", 0.5), ("#x", 0.25)]);
        let mut buf = Vec::new();
        write_scores(&t, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "a\t0.5\n#x\t0.25\n"
        );
        assert_eq!(read_scores(buf.as_slice()).unwrap(), t);
        assert!(read_scores("a 1\n".as_bytes()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn centrality_seeds_are_nested(
                scores in prop::collection::vec(0u8..5, 1..30),
                f1 in 0.0f64..=1.0,
                f2 in 0.0f64..=1.0,
            ) {
                let labels: Vec<String> = (0..scores.len()).map(|i| format!("u{i:02}")).collect();
                let t = AlignmentSet::new(labels.iter().map(|l| (l.clone(), l.clone()))).unwrap();
                let table: ScoreTable = labels.iter().cloned().zip(scores.iter().map(|&s| s as f64)).collect();
                let sc = Scores::Single(table);
                let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
                for s in [SeedStrategy::Degree, SeedStrategy::PageRank] {
                    let a = select_seeds(&t, s, lo, 0, &sc).unwrap();
                    let b = select_seeds(&t, s, hi, 0, &sc).unwrap();
                    prop_assert!(a.alignment().is_subset(b.alignment()));
                }
            }

            #[test]
            fn random_is_reproducible(n in 1usize..40, f in 0.0f64..=1.0, seed in any::<u64>()) {
                let t = AlignmentSet::new((0..n).map(|i| (format!("a{i}"), format!("b{i}")))).unwrap();
                let a = select_seeds(&t, SeedStrategy::Random, f, seed, &Scores::None).unwrap();
                let b = select_seeds(&t, SeedStrategy::Random, f, seed, &Scores::None).unwrap();
                prop_assert_eq!(&a, &b);
                prop_assert_eq!(a.len(), seed_count(f, n));
                prop_assert!(a.alignment().is_subset(&t));
            }
        }
    }
}
