//! Command-line entry point: build, search, eval and stats subcommands.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use erfusion::corpus::{parse_corpus, Tokenizer};
use erfusion::error::Error;
use erfusion::eval::{format_table, load_qrels, load_run, metrics};
use erfusion::extract::{extract_entity_contexts, extract_relationship_contexts, ContextMode};
use erfusion::fusion::{answer_query, parse_queries, write_run, FusionMode, FusionParams};
use erfusion::index::{
    build_entity_index, build_relationship_index, load_index, save_index, Index, PairCanon,
};
use erfusion::retrieval::{IdfFloor, Model, ModelParams, Mu};

#[derive(Parser)]
#[command(
    name = "erfusion",
    version,
    about = "Entity-relationship retrieval via early fusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the entity and relationship indexes from annotated corpora
    Build(BuildArgs),
    /// Answer E-R queries and write a TREC run file
    Search(SearchArgs),
    /// Score a run file against qrels
    Eval(EvalArgs),
    /// Print collection statistics for built indexes
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ContextArg {
    Sentence,
    SeparatingString,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairCanonArg {
    Unordered,
    Ordered,
}

impl From<PairCanonArg> for PairCanon {
    fn from(v: PairCanonArg) -> Self {
        match v {
            PairCanonArg::Unordered => PairCanon::Unordered,
            PairCanonArg::Ordered => PairCanon::Ordered,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lm,
    Bm25,
}

#[derive(Clone, Copy, ValueEnum)]
enum FusionArg {
    Shifted,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdfArg {
    Clamp,
    Raw,
}

#[derive(Args)]
struct BuildArgs {
    /// Corpus feeding the entity index
    #[arg(long)]
    entity_corpus: PathBuf,
    /// Corpus feeding the relationship index (defaults to the entity corpus)
    #[arg(long)]
    rel_corpus: Option<PathBuf>,
    /// Output directory; indexes land in <out>/entity and <out>/relationship
    #[arg(long)]
    out: PathBuf,
    /// Relationship context window
    #[arg(long, value_enum, default_value = "separating-string")]
    context: ContextArg,
    /// Stopword list, one word per line
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Entity-pair key canonicalization
    #[arg(long, value_enum, default_value = "unordered")]
    pair_canon: PairCanonArg,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SearchArgs {
    /// Directory produced by `build`
    #[arg(long)]
    index: PathBuf,
    /// JSON Lines query file
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_enum, default_value = "lm")]
    model: ModelArg,
    /// Entity-index Dirichlet prior: "auto" (average meta-document length) or a number
    #[arg(long, default_value = "auto")]
    mu_e: String,
    /// Relationship-index Dirichlet prior: "auto" or a number
    #[arg(long, default_value = "auto")]
    mu_r: String,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
    /// Stage-1 cutoff per sub-query
    #[arg(long, default_value_t = 20_000)]
    candidates: usize,
    /// Results kept per query
    #[arg(long, default_value_t = 100)]
    top: usize,
    #[arg(long, value_enum, default_value = "shifted")]
    fusion: FusionArg,
    #[arg(long, value_enum, default_value = "clamp")]
    idf: IdfArg,
    /// Pair matching used when joining tuples
    #[arg(long, value_enum, default_value = "unordered")]
    pair_canon: PairCanonArg,
    /// Run file to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "erfusion")]
    tag: String,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// MAP cutoff
    #[arg(long, default_value_t = 100)]
    cutoff: usize,
    /// Tuple-id canonicalization applied to run and qrels
    #[arg(long, value_enum, default_value = "unordered")]
    pair_canon: PairCanonArg,
}

#[derive(Args)]
struct StatsArgs {
    /// Directory produced by `build`
    #[arg(long)]
    index: PathBuf,
}

fn open_input(path: &Path) -> Result<BufReader<fs::File>, Error> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Param(format!("cannot open {}: {e}", path.display())))
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, Error> {
    if threads == 0 {
        return Err(Error::Param("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Param(e.to_string()))
}

fn cmd_build(args: &BuildArgs) -> Result<(), Error> {
    let tokenizer = match &args.stopwords {
        Some(path) => Tokenizer::from_stopword_file(open_input(path)?)?,
        None => Tokenizer::new(),
    };
    let context = match args.context {
        ContextArg::Sentence => ContextMode::Sentence,
        ContextArg::SeparatingString => ContextMode::SeparatingString,
    };
    let pool = thread_pool(args.threads)?;

    let entity_docs = parse_corpus(open_input(&args.entity_corpus)?)?;
    let rel_docs = match &args.rel_corpus {
        Some(path) => Some(parse_corpus(open_input(path)?)?),
        None => None,
    };
    let num_docs = entity_docs.len() + rel_docs.as_ref().map_or(0, Vec::len);

    let (entity_index, rel_index) = pool.install(|| {
        let entity_extractions: Vec<_> = entity_docs
            .par_iter()
            .map(|doc| extract_entity_contexts(doc, &tokenizer))
            .collect();
        let rel_source = rel_docs.as_ref().unwrap_or(&entity_docs);
        let rel_extractions: Vec<_> = rel_source
            .par_iter()
            .map(|doc| extract_relationship_contexts(doc, context, &tokenizer))
            .collect();
        let entity_index = build_entity_index(entity_extractions.into_iter().flatten());
        let rel_index = build_relationship_index(
            rel_extractions.into_iter().flatten(),
            args.pair_canon.into(),
        );
        (entity_index, rel_index)
    });

    save_index(&entity_index, &args.out.join("entity"))?;
    save_index(&rel_index, &args.out.join("relationship"))?;

    println!(
        "documents: {num_docs}, entities: {}, pairs: {}, terms: {}",
        entity_index.stats.num_meta_docs,
        rel_index.stats.num_meta_docs,
        entity_index.stats.coll_tf.len() + rel_index.stats.coll_tf.len(),
    );
    Ok(())
}

fn parse_mu(value: &str, flag: &str) -> Result<Mu, Error> {
    if value == "auto" {
        return Ok(Mu::Auto);
    }
    value.parse::<f64>().map(Mu::Value).map_err(|_| {
        Error::Param(format!(
            "{flag} must be \"auto\" or a number, got {value:?}"
        ))
    })
}

fn load_index_pair(dir: &Path) -> Result<(Index, Index), Error> {
    let entity = load_index(&dir.join("entity"))?;
    let rel = load_index(&dir.join("relationship"))?;
    Ok((entity, rel))
}

fn cmd_search(args: &SearchArgs) -> Result<(), Error> {
    let model = ModelParams {
        model: match args.model {
            ModelArg::Lm => Model::Lm,
            ModelArg::Bm25 => Model::Bm25,
        },
        mu_entity: parse_mu(&args.mu_e, "--mu-e")?,
        mu_rel: parse_mu(&args.mu_r, "--mu-r")?,
        k1: args.k1,
        b: args.b,
        idf_floor: match args.idf {
            IdfArg::Clamp => IdfFloor::ClampZero,
            IdfArg::Raw => IdfFloor::Raw,
        },
    };
    model.validate()?;
    let fusion = FusionParams {
        k: args.candidates,
        top_m: args.top,
        mode: match args.fusion {
            FusionArg::Shifted => FusionMode::Shifted,
            FusionArg::Raw => FusionMode::Raw,
        },
        pair_match: args.pair_canon.into(),
    };
    fusion.validate()?;
    let pool = thread_pool(args.threads)?;

    let queries = parse_queries(open_input(&args.queries)?, &Tokenizer::new())?;
    let (entity_index, rel_index) = load_index_pair(&args.index)?;

    let results: Vec<_> = pool.install(|| {
        queries
            .par_iter()
            .map(|q| {
                answer_query(q, &entity_index, &rel_index, &model, &fusion)
                    .map(|tuples| (q.query_id.clone(), tuples))
            })
            .collect::<Result<_, _>>()
    })?;

    let mut writer = BufWriter::new(fs::File::create(&args.out)?);
    write_run(&results, &args.tag, &mut writer)?;
    writer.flush()?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    if args.cutoff == 0 {
        return Err(Error::Param("--cutoff must be >= 1".into()));
    }
    let qrels = load_qrels(open_input(&args.qrels)?, args.pair_canon.into())?;
    let run = load_run(open_input(&args.run)?, args.pair_canon.into())?;
    let (per_query, mean) = metrics(&run, &qrels, args.cutoff)?;
    print!("{}", format_table(&per_query, &mean));
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<(), Error> {
    let (entity_index, rel_index) = load_index_pair(&args.index)?;
    for (name, index) in [("entity", &entity_index), ("relationship", &rel_index)] {
        println!(
            "{name}\tmeta_docs={}\ttotal_terms={}\tavg_len={:.4}\tvocabulary={}",
            index.stats.num_meta_docs,
            index.stats.total_terms,
            index.stats.avg_len,
            index.stats.coll_tf.len(),
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Search(args) => cmd_search(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Stats(args) => cmd_stats(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Param(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
