use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sbmtest::experiments::{self, ExperimentGrid, GridConfig};
use sbmtest::ingest::{self, IngestOptions};
use sbmtest::io;
use sbmtest::{CliError, CliResult, EXIT_ACCEPT, EXIT_REJECT};
use sbmtest_core::clustering::{cluster_frame, embed, ClusterOptions, Embedding};
use sbmtest_core::graph::WeightedGraph;
use sbmtest_core::inference::{two_sample_test, MomentEstimates, TestOptions};
use sbmtest_core::model::{sample_graph, BlockModelSpec};

#[derive(Parser)]
#[command(name = "sbmtest", version, about = "Two-sample test for community memberships of weighted networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbeddingArg {
    Adjacency,
    Laplacian,
}

impl From<EmbeddingArg> for Embedding {
    fn from(e: EmbeddingArg) -> Self {
        match e {
            EmbeddingArg::Adjacency => Embedding::Adjacency,
            EmbeddingArg::Laplacian => Embedding::NormalizedLaplacian,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph from a model spec (JSON) and write it as CSV.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering; writes `node<TAB>label` lines (stdout unless --out).
    Cluster {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "adjacency")]
        embedding: EmbeddingArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        row_normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the leading eigenvector coordinates as CSV.
        #[arg(long)]
        dump_embedding: Option<PathBuf>,
    },
    /// Two-sample test; prints the report JSON. Exit 0 keeps, 3 rejects the null.
    Test {
        #[arg(long)]
        graph1: PathBuf,
        #[arg(long)]
        graph2: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// `plug-in`, `oracle:spec.json` (view 2 is the gamma-scaled spec) or
        /// `oracle:spec1.json,spec2.json`.
        #[arg(long, default_value = "plug-in")]
        moments: String,
        /// View-2 over view-1 mean ratio for a single oracle spec.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Seed for the plug-in clustering.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Node-id files from `ingest`; the graphs are aligned on the union of ids.
        #[arg(long, requires = "nodes2")]
        nodes1: Option<PathBuf>,
        #[arg(long, requires = "nodes1")]
        nodes2: Option<PathBuf>,
    },
    /// Run a Monte Carlo grid (TOML or JSON) and write result.json and CSV tables.
    Simulate {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a `src<TAB>dst<TAB>weight` edge list into a symmetric CSV graph.
    Ingest {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value_t = 127)]
        cap: u64,
        /// Only `none`: split edge files by date before ingesting.
        #[arg(long, default_value = "none")]
        split_date_column: String,
        #[arg(long)]
        out: PathBuf,
        /// Fixed node list (`index<TAB>id`) to index against.
        #[arg(long)]
        nodes: Option<PathBuf>,
        /// Where to write the node list; defaults to `<out stem>.nodes.tsv`.
        #[arg(long)]
        nodes_out: Option<PathBuf>,
        /// Error on self-loops instead of dropping them.
        #[arg(long)]
        keep_self_loops: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> CliResult<i32> {
    match command {
        Command::Generate { spec, seed, out } => {
            let spec = io::load_spec(&spec)?;
            io::save_graph(&sample_graph(&spec, seed)?, &out)?;
            Ok(0)
        }
        Command::Cluster {
            graph,
            k,
            embedding,
            seed,
            row_normalize,
            out,
            dump_embedding,
        } => {
            let g = io::load_graph(&graph)?;
            let embedding: Embedding = embedding.into();
            let frame = embed(&g, k, embedding)?;
            let opts = ClusterOptions {
                row_normalize,
                ..ClusterOptions::default()
            };
            let fit = cluster_frame(&frame.vectors, k, embedding, seed, &opts)?;
            if let Some(path) = dump_embedding {
                let mut w = csv::Writer::from_writer(BufWriter::new(std::fs::File::create(&path)?));
                let mut header = vec!["node".to_string()];
                header.extend((1..=k).map(|c| format!("x{c}")));
                w.write_record(&header)?;
                for (i, row) in frame.vectors.row_iter().enumerate() {
                    let mut rec = vec![i.to_string()];
                    rec.extend(row.iter().map(|x| format!("{x}")));
                    w.write_record(&rec)?;
                }
                w.flush()?;
            }
            match out {
                Some(path) => io::write_membership(&fit.membership, None, BufWriter::new(std::fs::File::create(&path)?))?,
                None => io::write_membership(&fit.membership, None, std::io::stdout().lock())?,
            }
            Ok(0)
        }
        Command::Test {
            graph1,
            graph2,
            k,
            alpha,
            moments,
            gamma,
            seed,
            nodes1,
            nodes2,
        } => {
            let (mut g1, mut g2) = (io::load_graph(&graph1)?, io::load_graph(&graph2)?);
            if let (Some(p1), Some(p2)) = (nodes1, nodes2) {
                (g1, g2) = align(&g1, &p1, &g2, &p2)?;
            }
            let mut opts = parse_moments(&moments, gamma, seed)?;
            opts.alpha = alpha;
            let report = two_sample_test(&g1, &g2, k, &opts)?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(if report.reject { EXIT_REJECT } else { EXIT_ACCEPT })
        }
        Command::Simulate { grid, out } => {
            let grid = ExperimentGrid::try_from(GridConfig::load(&grid)?)?;
            let run = experiments::run(&grid)?;
            experiments::write_outputs(&run, &out)?;
            Ok(0)
        }
        Command::Ingest {
            edges,
            cap,
            split_date_column,
            out,
            nodes,
            nodes_out,
            keep_self_loops,
        } => {
            if split_date_column != "none" {
                return Err(CliError::Usage(format!(
                    "--split-date-column {split_date_column:?}: only \"none\" is supported; split edge files by date beforehand"
                )));
            }
            let opts = IngestOptions {
                cap,
                drop_self_loops: !keep_self_loops,
            };
            let fixed = match nodes {
                Some(p) => Some(ingest::read_nodes(BufReader::new(open(&p)?))?),
                None => None,
            };
            let (g, ids) = ingest::ingest(BufReader::new(open(&edges)?), fixed, &opts)?;
            io::save_graph(&g, &out)?;
            let nodes_path = nodes_out.unwrap_or_else(|| out.with_extension("nodes.tsv"));
            ingest::write_nodes(&ids, BufWriter::new(std::fs::File::create(&nodes_path)?))?;
            Ok(0)
        }
    }
}

fn open(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn align(g1: &WeightedGraph, p1: &Path, g2: &WeightedGraph, p2: &Path) -> CliResult<(WeightedGraph, WeightedGraph)> {
    let ids1 = ingest::read_nodes(BufReader::new(open(p1)?))?;
    let ids2 = ingest::read_nodes(BufReader::new(open(p2)?))?;
    let universe = ingest::union_universe(&ids1, &ids2);
    Ok((
        ingest::align_to_universe(g1, &ids1, &universe)?,
        ingest::align_to_universe(g2, &ids2, &universe)?,
    ))
}

fn parse_moments(arg: &str, gamma: f64, seed: u64) -> CliResult<TestOptions> {
    if arg == "plug-in" {
        return Ok(TestOptions::plug_in(seed));
    }
    let Some(files) = arg.strip_prefix("oracle:") else {
        return Err(CliError::Usage(format!("--moments {arg:?}: expected plug-in or oracle:<spec.json>")));
    };
    let specs: Vec<BlockModelSpec> = files
        .split(',')
        .map(|p| io::load_spec(Path::new(p)))
        .collect::<CliResult<_>>()?;
    let est = match specs.as_slice() {
        [one] => MomentEstimates::oracle_scaled(one, gamma)?,
        [a, b] => MomentEstimates::oracle(a, b)?,
        _ => return Err(CliError::Usage("--moments oracle: takes one or two spec files".into())),
    };
    Ok(TestOptions::oracle(est))
}
