//! Command-line driver.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (unreadable, malformed, or inconsistent input), 3 numeric failure
//! (non-finite loss, off-manifold or out-of-ball points).

mod config;
mod embedding_io;
mod render;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{Mode, OptimizerSection, RenderOptions, RunConfig};
pub use embedding_io::{EmbeddingFile, Metadata, Model};
pub use render::render_svg;

use crate::data::{
    aggregate_interactions, closure_dataset, cognate_similarity, format_edges, load_annotations,
    load_interactions, load_similarity, load_taxonomy, transitive_closure, TaxonomyDag,
};
use crate::error::Error;
use crate::eval::evaluate;
use crate::exec::Execution;
use crate::fsio::write_atomic;
use crate::objective::{train_with, SimilarityDataset};

pub const LOG_ENV: &str = "LORENTZ_EMBED_LOG";

#[derive(Debug, Parser)]
#[command(name = "lorentz-embed", version, about = "Hierarchy embeddings in the Lorentz model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an embedding and write it with a `.meta.json` sidecar.
    Train(TrainArgs),
    /// Score an embedding against a taxonomy (mean rank, MAP, Spearman rho).
    Eval(EvalArgs),
    /// Convert an embedding file between the Lorentz and Poincaré models.
    Convert(ConvertArgs),
    /// Write the transitive closure of an edge list.
    Closure(ClosureArgs),
    /// Draw a 2-d embedding as an SVG disk plot.
    Render(RenderArgs),
    /// Print summary counts for an input file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// TOML file with default settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Spatial dimension of the hyperboloid.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Number of initial epochs at reduced learning rate.
    #[arg(long)]
    burnin: Option<usize>,
    /// Learning-rate multiplier during burn-in.
    #[arg(long)]
    burnin_factor: Option<f64>,
    /// Negative samples per positive pair.
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// 1 trains deterministically; more threads run asynchronous updates.
    #[arg(long)]
    threads: Option<usize>,
    /// Evaluate against the taxonomy every N epochs (0 = never).
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Ground-truth taxonomy for periodic evaluation.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Embedding file (Lorentz or Poincaré).
    #[arg(long)]
    input: PathBuf,
    /// Taxonomy edge list.
    #[arg(long)]
    taxonomy: PathBuf,
    /// Threads for ranking; 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write a per-node TSV report here.
    #[arg(long)]
    details: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Target model.
    #[arg(long, value_enum)]
    to: Model,
}

#[derive(Debug, Args)]
struct ClosureArgs {
    /// `child<TAB>parent` edge list.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// 2-d embedding file.
    #[arg(long)]
    input: PathBuf,
    /// SVG output path.
    #[arg(long)]
    output: PathBuf,
    /// Canvas size in pixels.
    #[arg(long)]
    size: Option<u32>,
    /// Point radius in pixels.
    #[arg(long)]
    radius: Option<f64>,
    /// Draw the taxonomy's edges (requires --taxonomy).
    #[arg(long)]
    edges: bool,
    /// Label points with their ids.
    #[arg(long)]
    labels: bool,
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long, value_enum, default_value_t = Mode::Taxonomy)]
    mode: Mode,
    #[arg(long)]
    input: PathBuf,
}

/// A failed command, classified by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
    Numeric(Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Data(e) | Failure::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Usage(m),
            e if e.is_numeric() => Failure::Numeric(e),
            e => Failure::Data(e),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Runs the CLI on the process arguments and returns the exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Convert(a) => cmd_convert(a),
        Command::Closure(a) => cmd_closure(a),
        Command::Render(a) => cmd_render(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}

fn exec_for(threads: usize) -> Execution {
    if threads > 1 {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}

fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

impl TrainArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { c.$($field).+ = v; })*
            };
        }
        set!(
            mode => mode,
            dim => dim,
            lr => optimizer.lr,
            epochs => optimizer.epochs,
            burnin => optimizer.burnin,
            burnin_factor => optimizer.burnin_factor,
            negatives => negatives,
            seed => optimizer.seed,
            threads => threads,
            eval_every => eval_every,
        );
        if let Some(p) = &self.input {
            c.input = Some(p.clone());
        }
        if let Some(p) = &self.output {
            c.output = Some(p.clone());
        }
        if let Some(p) = &self.taxonomy {
            c.taxonomy = Some(p.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn load_dataset(
    mode: Mode,
    input: &Path,
    exec: Execution,
) -> crate::Result<(SimilarityDataset, Option<TaxonomyDag>)> {
    Ok(match mode {
        Mode::Taxonomy => {
            let dag = load_taxonomy(input)?;
            (closure_dataset(&dag, exec), Some(dag))
        }
        Mode::Similarity => (load_similarity(input)?, None),
        Mode::Annotations => (cognate_similarity(&load_annotations(input)?)?, None),
        Mode::Interactions => (aggregate_interactions(&load_interactions(input)?)?, None),
    })
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    let cfg = args.resolve()?;
    let input = cfg.input.clone().ok_or_else(|| usage("train needs --input"))?;
    let output = cfg.output.clone().ok_or_else(|| usage("train needs --output"))?;
    let exec = exec_for(cfg.threads);

    let (ds, input_dag) = load_dataset(cfg.mode, &input, exec)?;
    let eval_dag = if cfg.eval_every > 0 {
        match (&cfg.taxonomy, input_dag) {
            (Some(p), _) => Some(load_taxonomy(p)?),
            (None, Some(d)) => Some(d),
            (None, None) => return Err(usage("--eval-every needs --taxonomy outside taxonomy mode")),
        }
    } else {
        None
    };
    log::info!(
        "training {} concepts, {} positive pairs, dim {}",
        ds.len(),
        ds.positives().len(),
        cfg.dim
    );

    let tc = cfg.train_config();
    let trained = train_with(&ds, &tc, |stats, table| {
        log::debug!(
            "epoch {}: loss {:.6} lr {}",
            stats.epoch,
            stats.mean_loss,
            stats.learning_rate
        );
        if let Some(dag) = &eval_dag {
            if stats.epoch % cfg.eval_every == 0 {
                let r = evaluate(table, dag, exec)?;
                log::info!(
                    "epoch {}: loss {:.6} mean_rank {:.4} map {:.4} rho {:.4}",
                    stats.epoch,
                    stats.mean_loss,
                    r.mean_rank,
                    r.map,
                    r.spearman_rho
                );
            }
        }
        Ok(())
    })?;

    EmbeddingFile::from_table(&trained.table).save(&output)?;
    Metadata {
        model: Model::Lorentz,
        dim: cfg.dim,
        epoch: trained.history.len(),
        seed: cfg.optimizer.seed,
        config_hash: cfg.hash(),
        concepts: trained.table.len(),
        final_loss: trained.history.last().copied().unwrap_or(f64::NAN),
    }
    .save(&output)?;
    log::info!("wrote {}", output.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    if args.threads == 0 {
        return Err(usage("threads must be at least 1"));
    }
    let table = EmbeddingFile::load(&args.input)?.to_table()?;
    let dag = load_taxonomy(&args.taxonomy)?;
    let report = evaluate(&table, &dag, exec_for(args.threads))?;
    if let Some(p) = &args.details {
        write_atomic(p, report.node_table().as_bytes())?;
    }
    print_stdout(&report.key_values());
    print_stdout(&report.summary());
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> CmdResult {
    let file = EmbeddingFile::load(&args.input)?;
    file.convert(args.to)?.save(&args.output)?;
    Ok(())
}

fn cmd_closure(args: ClosureArgs) -> CmdResult {
    let dag = load_taxonomy(&args.input)?;
    let pairs = transitive_closure(&dag, Execution::Sequential);
    let named: Vec<(&str, &str)> = pairs
        .iter()
        .map(|&(u, v)| (dag.nodes()[u].as_str(), dag.nodes()[v].as_str()))
        .collect();
    write_atomic(&args.output, format_edges(&named).as_bytes())?;
    print_stdout(&format!(
        "nodes\t{}\nedges\t{}\nclosure_edges\t{}\n",
        dag.len(),
        dag.edges().len(),
        pairs.len()
    ));
    Ok(())
}

fn cmd_render(args: RenderArgs) -> CmdResult {
    let mut opts = match &args.config {
        Some(p) => RunConfig::load(p)?.render,
        None => RenderOptions::default(),
    };
    if let Some(s) = args.size {
        opts.size = s;
    }
    if let Some(r) = args.radius {
        opts.radius = r;
    }
    opts.edges |= args.edges;
    opts.labels |= args.labels;
    let check = RunConfig {
        render: opts.clone(),
        ..RunConfig::default()
    };
    check.validate()?;

    let file = EmbeddingFile::load(&args.input)?;
    if file.dim != 2 {
        return Err(usage(format!(
            "render needs a 2-dimensional embedding, got dim {}",
            file.dim
        )));
    }
    let points: Vec<[f64; 2]> = file.poincare_rows()?.into_iter().map(|r| [r[0], r[1]]).collect();

    let mut edges = Vec::new();
    if opts.edges {
        let path = args
            .taxonomy
            .as_ref()
            .ok_or_else(|| usage("--edges needs --taxonomy"))?;
        let dag = load_taxonomy(path)?;
        let index: std::collections::HashMap<&str, usize> =
            file.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut missing = Vec::new();
        for (c, p) in dag.edge_ids() {
            match (index.get(c), index.get(p)) {
                (Some(&a), Some(&b)) => edges.push((a, b)),
                _ => missing.extend([c, p].into_iter().filter(|id| !index.contains_key(id))),
            }
        }
        if !missing.is_empty() {
            missing.sort_unstable();
            missing.dedup();
            return Err(Error::MissingIds {
                count: missing.len(),
                first: missing.iter().take(10).map(|s| s.to_string()).collect(),
            }
            .into());
        }
    }
    let svg = render_svg(&file.ids, &points, &edges, &opts);
    write_atomic(&args.output, svg.as_bytes())?;
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> CmdResult {
    let (ds, dag) = load_dataset(args.mode, &args.input, Execution::Sequential)?;
    let mut out = String::new();
    if let Some(dag) = dag {
        let leaves = (0..dag.len()).filter(|&v| dag.children(v).is_empty()).count();
        out.push_str(&format!(
            "nodes\t{}\nedges\t{}\nclosure_edges\t{}\nroots\t{}\nleaves\t{}\ndepth\t{}\n",
            dag.len(),
            dag.edges().len(),
            ds.positives().len(),
            dag.roots().count(),
            leaves,
            dag.depth()
        ));
    } else {
        out.push_str(&format!(
            "concepts\t{}\nscored_pairs\t{}\n",
            ds.len(),
            ds.positives().len()
        ));
    }
    print_stdout(&out);
    Ok(())
}
