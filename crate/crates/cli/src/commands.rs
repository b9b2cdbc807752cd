use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use preassess_core::dtree::{build_tree, evaluate, split_dataset, ConfusionMatrix, Criterion, SplitSpec, TrainConfig};
use preassess_core::infotheory::gain_report;
use preassess_core::probability::{
    aggregate_scheme_posterior, parse_performance_string, rational_to_f64, recommend as recommend_for, AggregateScheme,
    ExactValue, PerformanceVector, Probability, Recommendation, WeightTableRow,
};
use preassess_core::store::{read_counts_file, read_episodes_file, read_graph_file, read_tree_file, write_tree_file};
use serde_json::json;

use crate::output::{dec4, CliError, Report};

fn exact(p: &Probability) -> String {
    format!("{} ({})", dec4(p.to_f64()), p)
}

pub fn validate_graph(file: &Path) -> Result<Report, CliError> {
    let g = read_graph_file(file)?;
    let parents = g.parents().count();
    let leaves: usize = g.parents().map(|p| g.leaves_under(p.as_str()).map_or(0, |l| l.len())).sum();
    let human = format!(
        "ok: {parents} parents, {leaves} leaves, {} prerequisite edges, {} progression edges\n",
        g.prerequisite_edges().len(),
        g.progression_edges().len()
    );
    let json = json!({
        "valid": true,
        "parents": parents,
        "leaves": leaves,
        "prerequisite_edges": g.prerequisite_edges().len(),
        "progression_edges": g.progression_edges().len(),
    });
    Ok(Report::ok(human, json))
}

pub fn describe(r: &Recommendation) -> String {
    match r {
        Recommendation::Progress { target: Some(t), .. } => format!("progress to {t}\n"),
        Recommendation::Progress { target: None, .. } => "progress: curriculum complete\n".to_string(),
        Recommendation::Relearn { leaves, weight, per_parent } => {
            let names: Vec<&str> = leaves.iter().map(|l| l.as_str()).collect();
            let mut s = format!("relearn {}\nfail weight {}\n", names.join(", "), exact(weight));
            for p in per_parent {
                let _ = writeln!(s, "  {}: {}", p.parent, exact(&p.weight));
            }
            s
        }
    }
}

pub fn recommend(graph: &Path, parent: &str, perf: &str) -> Result<Report, CliError> {
    let g = read_graph_file(graph)?;
    let v = PerformanceVector::from_string(&g, parent, perf)?;
    let r = recommend_for(&g, parent, &v)?;
    Ok(Report::ok(describe(&r), serde_json::to_value(&r).expect("serializable")))
}

pub fn fail_weight(perf: &str) -> Result<Report, CliError> {
    let outcomes = parse_performance_string(perf)?;
    let w = preassess_core::probability::fail_weight(outcomes.iter().copied())?;
    let human = format!("fail weight {}\npass weight {}\n", exact(&w), exact(&w.complement()));
    let json = json!({ "performance": perf, "weight": w, "pass_weight": w.complement() });
    Ok(Report::ok(human, json))
}

pub fn bayes(counts: &Path, leaf: &str, scheme: AggregateScheme) -> Result<Report, CliError> {
    let file = read_counts_file(counts)?;
    let p = aggregate_scheme_posterior(&file.counts, leaf, scheme)?;
    let scheme_name = match scheme {
        AggregateScheme::Paper => "paper",
        AggregateScheme::Consistent => "consistent",
    };
    let human = format!("P(fail {leaf}) = {} ({p}) [{scheme_name} scheme]\n", dec4(rational_to_f64(&p)));
    let json = json!({ "leaf": leaf, "scheme": scheme_name, "posterior": ExactValue::from(&p) });
    Ok(Report::ok(human, json))
}

pub fn entropy_report(episodes: &Path) -> Result<Report, CliError> {
    let file = read_episodes_file(episodes)?;
    let r = gain_report(&file.dataset);
    let mut human = format!(
        "{} records ({} pass / {} fail), H(S) = {}\n\n",
        r.records,
        r.pass,
        r.fail,
        dec4(r.dataset_entropy)
    );
    let _ = writeln!(human, "{:<16} {:>10} {:>10} {:>10}", "attribute", "gain", "split", "ratio");
    for a in &r.attributes {
        let _ = writeln!(
            human,
            "{:<16} {:>10} {:>10} {:>10}",
            a.attribute,
            dec4(a.info_gain),
            dec4(a.split_info),
            dec4(a.gain_ratio)
        );
        for f in &a.features {
            let _ = writeln!(human, "  {:<20} {:>3}P {:>3}F  weighted entropy {}", f.feature, f.pass, f.fail, dec4(f.weighted_entropy));
        }
    }
    Ok(Report::ok(human, serde_json::to_value(&r).expect("serializable")))
}

pub struct TreeOptions {
    pub episodes: PathBuf,
    pub criterion: Criterion,
    pub min_leaf: usize,
    pub split: Option<(f64, u64)>,
}

struct Trained {
    tree: preassess_core::dtree::DecisionTree,
    config: TrainConfig,
    train: ConfusionMatrix,
    test: Option<ConfusionMatrix>,
}

fn train(opts: &TreeOptions, saved: Option<&Path>) -> Result<Trained, CliError> {
    let d = read_episodes_file(&opts.episodes)?.dataset;
    let config = TrainConfig { criterion: opts.criterion, min_leaf: opts.min_leaf, ..TrainConfig::default() };
    let (train_set, test_set) = match opts.split {
        Some((f, seed)) => {
            let (a, b) = split_dataset(&d, &SplitSpec { train_fraction: f, seed })?;
            (a, Some(b))
        }
        None => (d, None),
    };
    let tree = match saved {
        Some(path) => read_tree_file(path)?,
        None => build_tree(&train_set, &config)?,
    };
    let train = evaluate(&tree, &train_set)?;
    let test = test_set.as_ref().map(|t| evaluate(&tree, t)).transpose()?;
    Ok(Trained { tree, config, train, test })
}

fn matrix_text(label: &str, m: &ConfusionMatrix) -> String {
    format!(
        "{label}: {} correct, {} incorrect{}\n  truth\\pred   Pass  Fail\n  Pass        {:>5} {:>5}\n  Fail        {:>5} {:>5}\n",
        m.correct(),
        m.incorrect(),
        m.accuracy().map_or(String::new(), |a| format!(" (accuracy {})", dec4(a))),
        m.true_pass_pred_pass,
        m.true_pass_pred_fail,
        m.true_fail_pred_pass,
        m.true_fail_pred_fail
    )
}

pub fn tree_train(opts: &TreeOptions, out: Option<&Path>) -> Result<Report, CliError> {
    let t = train(opts, None)?;
    if let Some(path) = out {
        write_tree_file(path, &t.tree)?;
    }
    let human = t.tree.render_text();
    let json = json!({ "config": t.config, "tree": t.tree });
    Ok(Report::ok(human, json))
}

pub fn tree_eval(opts: &TreeOptions, saved: Option<&Path>) -> Result<Report, CliError> {
    let t = train(opts, saved)?;
    let mut human = matrix_text("train", &t.train);
    if let Some(m) = &t.test {
        human += &matrix_text("test", m);
    }
    let json = json!({ "config": t.config, "tree": t.tree, "train": t.train, "test": t.test });
    Ok(Report::ok(human, json))
}

pub fn weight_table(n: u32, csv: bool) -> Result<Report, CliError> {
    let row = WeightTableRow::new(n)?;
    let mut human = String::new();
    if csv {
        human.push_str("i,P,F,P_fraction,F_fraction\n");
    } else {
        let _ = writeln!(human, "n = {n}");
    }
    let mut pairs = Vec::with_capacity(row.len());
    for (j, (p, f)) in row.pairs().enumerate() {
        let i = j + 1;
        if csv {
            let _ = writeln!(human, "{i},{},{},{p},{f}", dec4(p.to_f64()), dec4(f.to_f64()));
        } else {
            let _ = writeln!(human, "  P{i} = {:<8} F{i} = {}", dec4(p.to_f64()), dec4(f.to_f64()));
        }
        pairs.push(json!({ "i": i, "pass": p, "fail": f }));
    }
    Ok(Report::ok(human, json!({ "n": n, "pairs": pairs })))
}

pub fn serve(cfg: preassess_api::ServeConfig) -> Result<Report, CliError> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new("IO_ERROR", e.to_string()))?;
    rt.block_on(async {
        let server = preassess_api::Server::bind(&cfg).await?;
        let addr = server.local_addr().map_err(|e| CliError::new("IO_ERROR", e.to_string()))?;
        eprintln!("listening on http://{addr}");
        server.run(preassess_api::shutdown_signal()).await?;
        Ok(Report::ok(String::new(), json!({ "stopped": true })))
    })
}
