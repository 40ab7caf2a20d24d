//! The `mccs` command line: `mine`, `rank`, `embed` and `stats`.
//!
//! Exit status is 0 on success, 1 when the arguments cannot be parsed and 2
//! when the data cannot be read or processed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_graph, KPartiteGraph};
use crate::maxent::{fit, FitOptions};
use crate::miner::{is_ccs, mine, mine_parallel, read_patterns, write_patterns, MineOptions, SearchVariant};
use crate::schema::load;
use crate::score::{rank, write_ranked, RankOptions};
use crate::synth::{embed, write_dataset, write_ground_truth, EmbedSpec};

#[derive(Debug, Parser)]
#[command(name = "mccs", version, about = "Mine and rank maximal connected complete subgraphs of a multi-relational database")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate patterns and write them as JSON lines.
    Mine(MineArgs),
    /// Fit the background model and rank a pattern stream.
    Rank(RankArgs),
    /// Plant a complete pattern into a dataset.
    Embed(EmbedArgs),
    /// Print node, edge and density counts as JSON.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Emit every connected complete subgraph, not only maximal ones.
    #[arg(long)]
    pub all_ccs: bool,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_nodes: u64,
    /// Keep only patterns with at least one node of every entity type.
    #[arg(long)]
    pub require_all_types: bool,
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    /// Use the literal pseudocode search (incomplete; for comparison only).
    #[arg(long, hide = true)]
    pub pseudocode: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub patterns: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Description-length membership probability; defaults to the database density.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
    /// Also write the fitted model parameters as JSON.
    #[arg(long)]
    pub dump_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long)]
    pub hub: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub satellites: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub schema: PathBuf,
    /// Also write every edge as a JSON line.
    #[arg(long)]
    pub dump_edges: Option<PathBuf>,
}

/// Dataset summary printed by `stats`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub node_types: IndexMap<String, usize>,
    pub edge_types: IndexMap<String, usize>,
    pub nodes: usize,
    pub edges: usize,
    /// Edges over potential edges of the declared edge types; 0 when there are none.
    pub density: f64,
}

pub fn stats(graph: &KPartiteGraph) -> GraphStats {
    let cells: usize = graph.edge_types().iter().map(|e| e.left_len() * e.right_len()).sum();
    GraphStats {
        node_types: graph.node_types().iter().map(|t| (t.name().to_string(), t.len())).collect(),
        edge_types: graph.edge_types().iter().map(|e| (e.name().to_string(), e.edge_count())).collect(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        density: if cells == 0 { 0.0 } else { graph.edge_count() as f64 / cells as f64 },
    }
}

fn load_graph(schema: &Path) -> Result<KPartiteGraph> {
    let (_, db) = load(schema)?;
    build_graph(&db)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn pool(threads: u64) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads as usize)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start {threads} threads: {e}")))
}

fn run_mine(args: &MineArgs) -> Result<()> {
    let graph = load_graph(&args.schema)?;
    let opts = MineOptions {
        maximal_only: !args.all_ccs,
        min_nodes: args.min_nodes as usize,
        require_all_types: args.require_all_types,
        prune: !args.no_prune,
        variant: if args.pseudocode { SearchVariant::Pseudocode } else { SearchVariant::Representative },
    };
    let patterns = if args.threads > 1 {
        pool(args.threads)?.install(|| mine_parallel(&graph, &opts))
    } else {
        mine(&graph, &opts)
    };
    log::info!("{} patterns", patterns.len());
    let mut w = create(&args.out)?;
    write_patterns(&graph, &patterns, &mut w).map_err(|e| Error::io(&args.out, e))?;
    finish(w, &args.out)
}

fn run_rank(args: &RankArgs) -> Result<()> {
    let graph = load_graph(&args.schema)?;
    let file = File::open(&args.patterns).map_err(|e| Error::io(&args.patterns, e))?;
    let patterns = read_patterns(&graph, BufReader::new(file))?;
    for p in &patterns {
        if !is_ccs(&graph, &p.nodes) {
            return Err(Error::InvalidPattern(format!(
                "{}: a pattern is not a connected complete subgraph of this dataset",
                args.patterns.display()
            )));
        }
    }
    let model = pool(args.threads)?.install(|| fit(&graph, &FitOptions::default()))?;
    if let Some(path) = &args.dump_model {
        let mut w = create(path)?;
        model.write_dump(&mut w).map_err(|e| Error::io(path, e))?;
        finish(w, path)?;
    }
    let ranked = rank(&model, &graph, patterns, &RankOptions { p: args.p, top_k: args.top })?;
    let mut w = create(&args.out)?;
    write_ranked(&graph, &ranked, &mut w).map_err(|e| Error::io(&args.out, e))?;
    finish(w, &args.out)
}

fn run_embed(args: &EmbedArgs) -> Result<()> {
    let graph = load_graph(&args.schema)?;
    let spec = EmbedSpec {
        k: args.k as usize,
        hub_type: args.hub.clone(),
        satellite_types: args.satellites.clone(),
        seed: args.seed,
    };
    let (augmented, truth) = embed(&graph, &spec)?;
    write_dataset(&augmented, &args.out_dir)?;
    let path = args.out_dir.join("ground_truth.json");
    let mut w = create(&path)?;
    write_ground_truth(&truth, &mut w).map_err(|e| Error::io(&path, e))?;
    finish(w, &path)
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    let graph = load_graph(&args.schema)?;
    if let Some(path) = &args.dump_edges {
        let mut w = create(path)?;
        graph.write_edge_dump(&mut w).map_err(|e| Error::io(path, e))?;
        finish(w, path)?;
    }
    let text = serde_json::to_string_pretty(&stats(&graph)).expect("stats serialize");
    println!("{text}");
    Ok(())
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<S: AsRef<str>>(args: &[S]) -> i32 {
    let cli = match Cli::try_parse_from(args.iter().map(|a| a.as_ref())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Mine(a) => run_mine(a),
        Command::Rank(a) => run_rank(a),
        Command::Embed(a) => run_embed(a),
        Command::Stats(a) => run_stats(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mccs: {e}");
            2
        }
    }
}
