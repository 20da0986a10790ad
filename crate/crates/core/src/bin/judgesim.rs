use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use judgesim::corpus::TokenizerMode;
use judgesim::graph::TopicEdgeWeight;
use judgesim::pipeline::{self, PipelineConfig, PipelineError, StageInputs};

#[derive(Parser)]
#[command(
    name = "judgesim",
    version,
    about = "Judgment similarity from knowledge-graph embeddings"
)]
struct Cli {
    /// JSON pipeline config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Seed for LDA, node2vec and synth.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct InputPaths {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage from ingest to compare.
    Run(InputPaths),
    /// Print the k most similar cases.
    Query {
        /// Similarity matrix CSV or embedding file.
        #[arg(long)]
        from: PathBuf,
        /// Restrict embedding rows to the graph's Case nodes.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long = "case")]
        case_id: String,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
    },
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        tokenizer: Option<TokenizerMode>,
        #[arg(long)]
        min_df: Option<usize>,
        #[arg(long)]
        no_tfidf: bool,
        #[arg(long)]
        top_m: Option<usize>,
    },
    Features {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    Lda {
        #[arg(long)]
        dtm: Option<PathBuf>,
        #[arg(long)]
        topics: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    Graph {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        no_topics: bool,
        #[arg(long)]
        courts: bool,
        /// Weight HAS_TOPIC edges by theta (default) or 1.
        #[arg(long, value_parser = parse_topic_weight)]
        topic_weight: Option<TopicEdgeWeight>,
    },
    Embed {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        walk_length: Option<usize>,
        #[arg(long)]
        walks_per_node: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        negatives: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        /// Lock-free parallel training; not bit-reproducible.
        #[arg(long)]
        parallel: bool,
    },
    Sim {
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    Compare {
        #[arg(long)]
        expert: Option<PathBuf>,
        #[arg(long)]
        embed: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Write a clustered synthetic corpus, feature table and schema.
    Synth {
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long)]
        articles: Option<usize>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Defaults to the work directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_topic_weight(s: &str) -> Result<TopicEdgeWeight, String> {
    match s {
        "theta" => Ok(TopicEdgeWeight::Theta),
        "unit" => Ok(TopicEdgeWeight::Unit),
        _ => Err(format!("expected `theta` or `unit`, got `{s}`")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if value.is_some() {
        *slot = value;
    }
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    set(&mut cfg.paths.workdir, cli.workdir);
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }

    let mut inputs = StageInputs::default();
    match cli.command {
        Command::Run(paths) => {
            set_path(&mut cfg.paths.corpus, paths.corpus);
            set_path(&mut cfg.paths.features, paths.features);
            set_path(&mut cfg.paths.schema, paths.schema);
            let cfg = cfg.resolve()?;
            let stats = pipeline::run(&cfg)?;
            log::info!("compared {} pairs", stats.n_pairs);
        }
        Command::Query {
            from,
            graph,
            case_id,
            k,
        } => {
            let ranking = pipeline::query(&from, graph.as_deref(), &case_id, k)?;
            print!("{}", pipeline::format_ranking(&ranking));
        }
        Command::Ingest {
            corpus,
            tokenizer,
            min_df,
            no_tfidf,
            top_m,
        } => {
            set_path(&mut cfg.paths.corpus, corpus);
            set(&mut cfg.corpus.tokenizer, tokenizer);
            set(&mut cfg.corpus.min_df, min_df);
            set(&mut cfg.corpus.top_m, top_m);
            if no_tfidf {
                cfg.corpus.tfidf_filter = false;
            }
            pipeline::ingest(&cfg.resolve()?)?;
        }
        Command::Features { features, schema } => {
            set_path(&mut cfg.paths.features, features);
            set_path(&mut cfg.paths.schema, schema);
            pipeline::features(&cfg.resolve()?)?;
        }
        Command::Lda {
            dtm,
            topics,
            alpha,
            beta,
            iterations,
            burn_in,
            threshold,
        } => {
            inputs.dtm = dtm;
            set(&mut cfg.lda.topics, topics);
            if alpha.is_some() {
                cfg.lda.alpha = alpha;
            }
            set(&mut cfg.lda.beta, beta);
            set(&mut cfg.lda.iterations, iterations);
            set(&mut cfg.lda.burn_in, burn_in);
            set(&mut cfg.topics.threshold, threshold);
            pipeline::lda(&cfg.resolve()?, &inputs)?;
        }
        Command::Graph {
            corpus,
            assignment,
            no_topics,
            courts,
            topic_weight,
        } => {
            set_path(&mut cfg.paths.corpus, corpus);
            inputs.assignment = assignment;
            if no_topics {
                cfg.graph.include_topics = false;
            }
            if courts {
                cfg.graph.include_courts = true;
            }
            set(&mut cfg.graph.topic_edge_weight, topic_weight);
            pipeline::graph(&cfg.resolve()?, &inputs)?;
        }
        Command::Embed {
            graph,
            p,
            q,
            walk_length,
            walks_per_node,
            window,
            dim,
            negatives,
            epochs,
            learning_rate,
            parallel,
        } => {
            inputs.graph = graph;
            let n2v = &mut cfg.node2vec;
            set(&mut n2v.p, p);
            set(&mut n2v.q, q);
            set(&mut n2v.walk_length, walk_length);
            set(&mut n2v.walks_per_node, walks_per_node);
            set(&mut n2v.window, window);
            set(&mut n2v.dim, dim);
            set(&mut n2v.negatives, negatives);
            set(&mut n2v.epochs, epochs);
            set(&mut n2v.learning_rate, learning_rate);
            if parallel {
                n2v.parallel = true;
            }
            pipeline::embed(&cfg.resolve()?, &inputs)?;
        }
        Command::Sim { embeddings, graph } => {
            inputs.embeddings = embeddings;
            inputs.graph = graph;
            pipeline::similarity(&cfg.resolve()?, &inputs)?;
        }
        Command::Compare { expert, embed, tau } => {
            inputs.expert_matrix = expert;
            inputs.embed_matrix = embed;
            set(&mut cfg.eval.tau, tau);
            pipeline::compare(&cfg.resolve()?, &inputs)?;
        }
        Command::Synth {
            cases,
            articles,
            clusters,
            schema,
            out,
        } => {
            set(&mut cfg.synth.n_cases, cases);
            set(&mut cfg.synth.n_articles, articles);
            set(&mut cfg.synth.n_clusters, clusters);
            set_path(&mut cfg.paths.schema, schema);
            inputs.out = out;
            pipeline::synth(&cfg.resolve()?, &inputs)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match std::panic::catch_unwind(|| execute(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => ExitCode::from(3),
    }
}
