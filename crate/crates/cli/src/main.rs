use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use preassess_core::dtree::Criterion;

mod commands;
mod oracle;
mod output;
mod reproduce;

use output::{CliError, Report};

/// Pre-learning assessment: recommendations, Bayes posteriors, entropy analytics and decision trees.
#[derive(Debug, Parser)]
#[command(name = "preassess", version)]
struct Cli {
    /// Emit exactly one JSON document on stdout.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a knowledge graph file.
    ValidateGraph { file: PathBuf },
    /// Recommend progress or relearning from one parent's performance string.
    Recommend {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        parent: String,
        /// One P or F per leaf, in the graph's leaf order.
        #[arg(long)]
        perf: String,
    },
    /// Fail weight of a performance string.
    FailWeight {
        #[arg(long)]
        perf: String,
    },
    /// Posterior that a leaf is the failed one, from cohort counts.
    Bayes {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        leaf: String,
        #[arg(long, value_enum, default_value_t = SchemeArg::Paper)]
        scheme: SchemeArg,
    },
    /// Entropy, information gain and gain ratio of an episodes file.
    EntropyReport {
        #[arg(long)]
        episodes: PathBuf,
    },
    /// Train or evaluate a decision tree.
    Tree {
        #[command(subcommand)]
        action: TreeAction,
    },
    /// Pass/fail weights for n assessed leaves.
    WeightTable {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        csv: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        graph: PathBuf,
        /// Session log (JSONL). Sessions are kept in memory when omitted.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, env = "PREASSESS_ADDR", default_value = preassess_api::DEFAULT_ADDR)]
        addr: String,
        /// Directory of static console assets.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
    /// Recompute every published number from the fixtures and compare.
    ReproducePaper {
        #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures"))]
        fixtures: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Paper,
    Consistent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    GainRatio,
    InfoGain,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::GainRatio => Criterion::GainRatio,
            CriterionArg::InfoGain => Criterion::InfoGain,
        }
    }
}

#[derive(Debug, Args)]
struct TreeOpts {
    #[arg(long)]
    episodes: PathBuf,
    #[arg(long, value_enum, default_value_t = CriterionArg::GainRatio)]
    criterion: CriterionArg,
    #[arg(long, default_value_t = 2)]
    min_leaf: usize,
    /// Train fraction; the rest is held out for evaluation.
    #[arg(long, requires = "seed")]
    split: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum TreeAction {
    /// Build a tree and print it.
    Train {
        #[command(flatten)]
        opts: TreeOpts,
        /// Also write the tree as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build (or load) a tree and report its confusion matrix.
    Eval {
        #[command(flatten)]
        opts: TreeOpts,
        /// Evaluate a saved tree instead of training one.
        #[arg(long)]
        tree: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Report, CliError> {
    match cli.command {
        Command::ValidateGraph { file } => commands::validate_graph(&file),
        Command::Recommend { graph, parent, perf } => commands::recommend(&graph, &parent, &perf),
        Command::FailWeight { perf } => commands::fail_weight(&perf),
        Command::Bayes { counts, leaf, scheme } => commands::bayes(
            &counts,
            &leaf,
            match scheme {
                SchemeArg::Paper => preassess_core::probability::AggregateScheme::Paper,
                SchemeArg::Consistent => preassess_core::probability::AggregateScheme::Consistent,
            },
        ),
        Command::EntropyReport { episodes } => commands::entropy_report(&episodes),
        Command::Tree { action } => match action {
            TreeAction::Train { opts, out } => commands::tree_train(&opts.into(), out.as_deref()),
            TreeAction::Eval { opts, tree } => commands::tree_eval(&opts.into(), tree.as_deref()),
        },
        Command::WeightTable { n, csv } => commands::weight_table(n, csv),
        Command::Serve { graph, log, addr, static_dir } => {
            commands::serve(preassess_api::ServeConfig { addr, graph, log, static_dir })
        }
        Command::ReproducePaper { fixtures } => reproduce::run(&fixtures),
    }
}

impl From<TreeOpts> for commands::TreeOptions {
    fn from(o: TreeOpts) -> Self {
        commands::TreeOptions {
            episodes: o.episodes,
            criterion: o.criterion.into(),
            min_leaf: o.min_leaf,
            split: o.split.map(|f| (f, o.seed.unwrap_or(0))),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(report) => {
            report.print(json);
            if report.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            e.print(json);
            ExitCode::from(1)
        }
    }
}
