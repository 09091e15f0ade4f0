use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seedcomm::assignment::LayeredAssignment;
use seedcomm::experiments::{
    detect_graph, detect_pair, sample_overlap, write_csv, MethodParams, OverlapSpec,
    SweepConfigFile,
};
use seedcomm::flow::PageRankOptions;
use seedcomm::graph::{ingest_edge_lists, parse_edge_list, Graph};
use seedcomm::mapeq::DetectOptions;
use seedcomm::metrics::{
    contingency_layered, jaccard_matrix, oracle_accuracy, variation_of_information,
};
use seedcomm::multilayer::{AlignmentSet, Combine, Method, RelaxRate, SeedSet};
use seedcomm::seedsel::{
    centrality, read_scores, select_seeds, write_scores, Scores, SeedStrategy,
};
use seedcomm::Error;

const FORMATS: &str = "\
File formats:
  edge list    src<TAB>dst<TAB>etype<TAB>count per line; `//` starts a comment line.
               Labels beginning with `#` are hashtags.
  graph        JSON {\"vertices\":[{\"label\",\"kind\"}],\"edges\":[[u,v,w]]}; any
               graph argument also accepts an edge list (non-.json extension).
  alignment    label1<TAB>label2 per line (truth and seed files).
  scores       label<TAB>score per line, highest first.
  assignment   label<TAB>layer<TAB>community_id; layer is 0 (single network), 1 or 2.
  sweep config JSON with methods, overlaps, layer_size, strategies, seed_fractions,
               trials, reference, centrality, relax_rate, omega, combine, damping,
               detect_trials, users_only, and base_graph or layer1+layer2+truth.
  sweep output CSV: method,overlap,strategy,seed_fraction,trial,vi_bits,
               oracle_accuracy,codelength_bits,num_communities (NA = not defined).

Exit status: 0 success, 1 usage error, 2 data or convergence error.";

#[derive(Parser)]
#[command(
    name = "seedcomm",
    version,
    about = "Shared community detection across two partially aligned networks",
    after_help = FORMATS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum edge-type counts from edge lists into one weighted graph.
    Ingest {
        /// Edge list files; records from all files are combined.
        #[arg(long = "input", required = true, num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// PageRank of every vertex, written as `label<TAB>score`.
    Pagerank {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        pagerank: PageRankArgs,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choose seed pairs from a truth alignment.
    SelectSeeds {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        strategy: SeedStrategy,
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        rng_seed: u64,
        /// Scores of a single network both layers come from.
        #[arg(long, conflicts_with_all = ["scores1", "scores2"])]
        scores: Option<PathBuf>,
        /// Layer-1 scores; pairs are ranked by the mean of both layers.
        #[arg(long, requires = "scores2")]
        scores1: Option<PathBuf>,
        #[arg(long, requires = "scores1")]
        scores2: Option<PathBuf>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample two induced subgraphs sharing a fraction of their vertices.
    SampleOverlap {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        fraction: f64,
        /// Vertices per layer.
        #[arg(long)]
        layer_size: usize,
        #[arg(long)]
        rng_seed: u64,
        #[arg(long)]
        out1: PathBuf,
        #[arg(long)]
        out2: PathBuf,
        #[arg(long)]
        truth_out: PathBuf,
    },
    /// Detect communities on one network or across two layers.
    Detect(DetectArgs),
    /// Compare an assignment with a reference.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Truth alignment; enables oracle accuracy.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Seeds excluded from oracle accuracy.
        #[arg(long, requires = "truth")]
        seeds: Option<PathBuf>,
        /// Write the Jaccard matrix as CSV.
        #[arg(long)]
        jaccard: Option<PathBuf>,
        /// Ignore hashtag vertices in VI and Jaccard.
        #[arg(long)]
        users_only: bool,
    },
    /// Run a parameter sweep from a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides any seed in the config.
        #[arg(long)]
        rng_seed: u64,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PageRankArgs {
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

impl PageRankArgs {
    fn options(&self) -> PageRankOptions {
        PageRankOptions {
            damping: self.damping,
            tolerance: self.tolerance,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    /// A single network; conflicts with the two-layer options.
    #[arg(long, conflicts_with_all = ["layer1", "layer2", "seeds", "method"])]
    graph: Option<PathBuf>,
    #[arg(long, required_unless_present = "graph")]
    method: Option<Method>,
    #[arg(long, required_unless_present = "graph")]
    layer1: Option<PathBuf>,
    #[arg(long, required_unless_present = "graph")]
    layer2: Option<PathBuf>,
    /// Seed alignment; no seeds when omitted.
    #[arg(long)]
    seeds: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Seed of the detector's node orderings.
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Independent optimization runs; the shortest codelength wins.
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Interlayer weight for linking.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Stay probability for the relaxed walk.
    #[arg(long, default_value_t = 0.85)]
    relax_rate: f64,
    /// Weight combination for aggregation.
    #[arg(long, default_value = "sum")]
    combine: Combine,
    #[command(flatten)]
    pagerank: PageRankArgs,
}

fn with_path(path: &Path) -> impl FnOnce(io::Error) -> io::Error + '_ {
    move |e| io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> seedcomm::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(with_path(path))?))
}

fn open(path: &Path) -> seedcomm::Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(with_path(path))?))
}

fn output(path: Option<&Path>) -> seedcomm::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_assignment(path: &Path, users_only: bool) -> seedcomm::Result<LayeredAssignment> {
    let a = LayeredAssignment::read_tsv(open(path)?)?;
    Ok(if users_only { a.users_only() } else { a })
}

fn run(command: Command) -> seedcomm::Result<()> {
    match command {
        Command::Ingest { inputs, out } => {
            let mut records = Vec::new();
            for path in &inputs {
                records.extend(parse_edge_list(open(path)?)?);
            }
            let mut w = create(&out)?;
            ingest_edge_lists(records)?.write_json(&mut w)?;
            w.flush()?;
        }
        Command::Pagerank {
            graph,
            pagerank,
            out,
        } => {
            let g = Graph::load(&graph)?;
            let table = centrality(&g, SeedStrategy::PageRank, pagerank.options())?;
            let mut w = output(out.as_deref())?;
            write_scores(&table, &mut w)?;
            w.flush()?;
        }
        Command::SelectSeeds {
            truth,
            strategy,
            fraction,
            rng_seed,
            scores,
            scores1,
            scores2,
            out,
        } => {
            let truth = AlignmentSet::read_truth_tsv(open(&truth)?)?;
            let scores = match (scores, scores1, scores2) {
                (Some(s), _, _) => Scores::Single(read_scores(open(&s)?)?),
                (None, Some(a), Some(b)) => Scores::PerLayer {
                    layer1: read_scores(open(&a)?)?,
                    layer2: read_scores(open(&b)?)?,
                },
                _ => Scores::None,
            };
            let seeds = select_seeds(&truth, strategy, fraction, rng_seed, &scores)?;
            let mut w = output(out.as_deref())?;
            seeds.alignment().write_tsv(&mut w)?;
            w.flush()?;
        }
        Command::SampleOverlap {
            base,
            fraction,
            layer_size,
            rng_seed,
            out1,
            out2,
            truth_out,
        } => {
            let spec = OverlapSpec {
                fraction,
                layer_size,
                rng_seed,
            };
            let s = sample_overlap(&Graph::load(&base)?, spec)?;
            for (g, path) in [(&s.layer1, &out1), (&s.layer2, &out2)] {
                let mut w = create(path)?;
                g.write_json(&mut w)?;
                w.flush()?;
            }
            let mut w = create(&truth_out)?;
            s.truth.write_tsv(&mut w)?;
            w.flush()?;
        }
        Command::Detect(args) => detect(args)?,
        Command::Metrics {
            reference,
            test,
            truth,
            seeds,
            jaccard,
            users_only,
        } => {
            let reference = read_assignment(&reference, users_only)?;
            let full = read_assignment(&test, false)?;
            let test = if users_only {
                full.users_only()
            } else {
                full.clone()
            };
            let n = contingency_layered(&reference, &test)?;
            let mut out = io::stdout().lock();
            writeln!(out, "vi_bits={}", variation_of_information(&n))?;
            if let Some(truth) = truth {
                let truth = AlignmentSet::read_truth_tsv(open(&truth)?)?;
                let seeds = match seeds {
                    Some(s) => SeedSet::from_alignment(AlignmentSet::read_tsv(open(&s)?)?),
                    None => SeedSet::empty(),
                };
                writeln!(
                    out,
                    "oracle_accuracy={}",
                    oracle_accuracy(&truth, &seeds, &full)?
                )?;
            }
            if let Some(path) = jaccard {
                let mut w = create(&path)?;
                jaccard_matrix(&n).write_csv(&mut w)?;
                w.flush()?;
            }
        }
        Command::Sweep {
            config,
            rng_seed,
            jobs,
            out,
        } => {
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Error::Parameter {
                        name: "jobs",
                        reason: e.to_string(),
                    })?;
            }
            let base_dir = config.parent().unwrap_or(Path::new("."));
            let cfg = SweepConfigFile::read(&config)?.resolve(base_dir, Some(rng_seed))?;
            let outcome = seedcomm::experiments::run_sweep(&cfg)?;
            for f in &outcome.failures {
                eprintln!(
                    "row failed: method={} overlap={} strategy={} seed_fraction={} trial={}: {}",
                    f.method,
                    f.overlap.map_or_else(|| "NA".into(), |o| o.to_string()),
                    f.strategy,
                    f.seed_fraction,
                    f.trial,
                    f.reason
                );
            }
            let mut w = output(out.as_deref())?;
            write_csv(&outcome.rows, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn detect(args: DetectArgs) -> seedcomm::Result<()> {
    let opts = DetectOptions::new(args.trials, args.rng_seed);
    let found = match (&args.graph, args.method, &args.layer1, &args.layer2) {
        (Some(g), _, _, _) => detect_graph(&Graph::load(g)?, opts)?,
        (None, Some(method), Some(l1), Some(l2)) => {
            let seeds = match &args.seeds {
                Some(s) => SeedSet::from_alignment(AlignmentSet::read_tsv(open(s)?)?),
                None => SeedSet::empty(),
            };
            let params = MethodParams {
                combine: args.combine,
                omega: args.omega,
                relax_rate: RelaxRate::new(args.relax_rate)?,
                pagerank: args.pagerank.options(),
            };
            detect_pair(
                &Graph::load(l1)?,
                &Graph::load(l2)?,
                &seeds,
                method,
                &params,
                opts,
            )?
        }
        _ => unreachable!("clap enforces --graph or the two-layer options"),
    };
    let mut w = create(&args.out)?;
    found.assignment.write_tsv(&mut w)?;
    w.flush()?;
    println!("codelength_bits={}", found.detection.codelength.bits);
    println!(
        "num_communities={}",
        found.detection.assignment.num_communities()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
