use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use gmmlg::autodiff::CHECKPOINT_VERSION;
use gmmlg::chem::{parse_smiles, perceive};
use gmmlg::frag::{motifs_of, BricsRuleTable, RULES_VERSION};
use gmmlg::graph::{ASSOC_VERSION, VOCAB_VERSION};
use gmmlg::pipeline::{
    contribution_analysis, evaluate, load_dataset, load_run, parse_dataset, parse_labels,
    prepare_records, prepare_structure, run_experiment, run_seeds, save_run, write_contrib_csv,
    write_metrics_json, Artifacts, Dataset, PipelineError, Predictor, PreparedDrug, RunConfig,
    Structure, CODEC_VERSION, DATASET_HEADER, MANIFEST_VERSION,
};
use gmmlg::selftest::run_selftest;

#[derive(Parser)]
#[command(name = "gmmlg", about = "Adverse drug reaction prediction from molecular structure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read SMILES lines on stdin, print each perceived graph as one JSON line.
    Parse,
    /// Read SMILES lines on stdin, print canonical motifs one per line;
    /// a blank line separates molecules.
    Fragment,
    /// Build the motif vocabulary (JSON lines) over every record of a dataset.
    Vocab(CorpusArgs),
    /// Build the association graph with standardization statistics.
    Graph(CorpusArgs),
    /// Split, train and test; writes the run directory and metrics.json.
    Train(TrainArgs),
    /// Read SMILES lines on stdin, print one comma-separated label list per line.
    Predict(PredictArgs),
    /// Compare prediction and truth files; writes metrics.json.
    Eval(EvalArgs),
    /// Motif contribution scores of one drug as contrib.csv.
    Explain(ExplainArgs),
    /// Run gradient and oracle checks.
    Selftest,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Dataset TSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Run directory.
    #[arg(long)]
    out: PathBuf,
    /// Train one run per configured seed into `out/seed<N>`.
    #[arg(long)]
    all_seeds: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct PredictArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    run: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// One comma-separated label list per line.
    #[arg(long)]
    pred: PathBuf,
    /// Same format, or a dataset TSV whose label column is used.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value = "metrics.json")]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    run: PathBuf,
    /// Dataset TSV holding the drug.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    drug: String,
    #[arg(long, default_value = "contrib.csv")]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_numeric() {
            Failure::Numeric(e.to_string())
        } else if let PipelineError::Config(_) = e {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn version_text() -> String {
    format!(
        "{} (checkpoint v{CHECKPOINT_VERSION}, vocab v{VOCAB_VERSION}, assoc v{ASSOC_VERSION}, \
         codec v{CODEC_VERSION}, rules v{RULES_VERSION}, run v{MANIFEST_VERSION})",
        env!("CARGO_PKG_VERSION")
    )
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_rows(d: &Dataset) {
    for e in &d.errors {
        eprintln!("line {}: {}", e.line, e.message);
    }
}

fn load_prepared(path: &Path) -> Result<Vec<PreparedDrug>, Failure> {
    let data = load_dataset(path)?;
    report_rows(&data);
    let (drugs, errors) = prepare_records(&data.records);
    for e in &errors {
        eprintln!("record {}: {}", e.line, e.message);
    }
    if drugs.is_empty() {
        return Err(PipelineError::EmptyDataset.into());
    }
    Ok(drugs)
}

fn stdin_lines() -> impl Iterator<Item = io::Result<String>> {
    io::stdin().lock().lines()
}

fn cmd_parse() -> Result<bool, Failure> {
    let mut out = BufWriter::new(io::stdout().lock());
    let mut ok = true;
    for (i, line) in stdin_lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        match parse_smiles(s).map_err(|e| e.to_string()).and_then(|m| perceive(&m).map_err(|e| e.to_string())) {
            Ok(p) => writeln!(out, "{}", serde_json::to_string(&p).expect("molecule serializes"))?,
            Err(e) => {
                eprintln!("line {}: {e}", i + 1);
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn cmd_fragment() -> Result<bool, Failure> {
    let rules = BricsRuleTable::builtin();
    let mut out = BufWriter::new(io::stdout().lock());
    let mut ok = true;
    let mut first = true;
    for (i, line) in stdin_lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let p = match parse_smiles(s).map_err(|e| e.to_string()).and_then(|m| perceive(&m).map_err(|e| e.to_string())) {
            Ok(p) => p,
            Err(e) => {
                eprintln!("line {}: {e}", i + 1);
                ok = false;
                continue;
            }
        };
        if !first {
            writeln!(out)?;
        }
        first = false;
        for m in motifs_of(&p, &rules) {
            writeln!(out, "{}", m.canonical)?;
        }
    }
    Ok(ok)
}

fn corpus_artifacts(args: &CorpusArgs) -> Result<Artifacts, Failure> {
    let cfg = load_config(&args.config)?;
    let drugs = load_prepared(&args.data)?;
    let refs: Vec<&PreparedDrug> = drugs.iter().collect();
    Ok(Artifacts::build(&refs, &cfg)?)
}

fn cmd_vocab(args: &CorpusArgs) -> Result<bool, Failure> {
    let art = corpus_artifacts(args)?;
    art.vocab.write_jsonl(BufWriter::new(File::create(&args.out)?))?;
    eprintln!("{} motifs -> {}", art.vocab.len(), args.out.display());
    Ok(true)
}

fn cmd_graph(args: &CorpusArgs) -> Result<bool, Failure> {
    let art = corpus_artifacts(args)?;
    art.assoc
        .write_json(Some(&art.stats), BufWriter::new(File::create(&args.out)?))?;
    eprintln!(
        "{} nodes, {} edges -> {}",
        art.assoc.node_count(),
        art.assoc.edges.len(),
        args.out.display()
    );
    Ok(true)
}

fn cmd_train(args: &TrainArgs) -> Result<bool, Failure> {
    let cfg = load_config(&args.config)?;
    let drugs = load_prepared(&args.data)?;
    if args.all_seeds {
        let (summary, runs) = run_seeds(&cfg, &drugs)?;
        for r in &runs {
            let dir = args.out.join(format!("seed{}", r.manifest.seed));
            save_run(&dir, &r.manifest, &r.model, &r.artifacts)?;
            write_metrics_json(&dir.join("metrics.json"), Some(r.manifest.seed), &r.test, &r.manifest.config_hash)?;
        }
        println!("{}", summary.format());
    } else {
        let r = run_experiment(&cfg, &drugs, cfg.seed)?;
        save_run(&args.out, &r.manifest, &r.model, &r.artifacts)?;
        write_metrics_json(&args.out.join("metrics.json"), Some(cfg.seed), &r.test, &r.manifest.config_hash)?;
        println!(
            "seed {}: P {:.4} R {:.4} F1 {:.4} (config {})",
            cfg.seed, r.test.precision, r.test.recall, r.test.f1, r.manifest.config_hash
        );
    }
    Ok(true)
}

fn cmd_predict(args: &PredictArgs) -> Result<bool, Failure> {
    let (manifest, model, art) = load_run(&args.run)?;
    let predictor = Predictor::new(&model, &art, manifest.config.allow_duplicates);
    let rules = BricsRuleTable::builtin();
    let mut out = BufWriter::new(io::stdout().lock());
    let mut ok = true;
    for (i, line) in stdin_lines().enumerate() {
        let line = line?;
        let s = line.trim();
        let id = format!("query{}", i + 1);
        let labels = match prepare_structure(&id, &Structure::Smiles(s.to_string()), &rules) {
            Ok((corpus, features)) => {
                let drug = PreparedDrug {
                    drug_id: id,
                    labels: Vec::new(),
                    corpus,
                    features,
                };
                predictor.label_names(&predictor.predict_query(&drug)?)
            }
            Err(e) => {
                eprintln!("line {}: {e}", i + 1);
                ok = false;
                Vec::new()
            }
        };
        // one output line per input line, even on failure
        writeln!(out, "{}", labels.join(","))?;
    }
    Ok(ok)
}

fn read_label_sets(path: &Path) -> Result<Vec<BTreeSet<String>>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let first = text.lines().next().unwrap_or("");
    let header: Vec<&str> = first.split('\t').map(str::trim).collect();
    if header == DATASET_HEADER {
        let d = parse_dataset(&text)?;
        report_rows(&d);
        return Ok(d.records.into_iter().map(|r| r.labels.into_iter().collect()).collect());
    }
    Ok(text.lines().map(|l| parse_labels(l).into_iter().collect()).collect())
}

fn cmd_eval(args: &EvalArgs) -> Result<bool, Failure> {
    let cfg = load_config(&args.config)?;
    let preds = read_label_sets(&args.pred)?;
    let truths = read_label_sets(&args.truth)?;
    let m = evaluate(&preds, &truths)?;
    write_metrics_json(&args.out, None, &m, &cfg.hash())?;
    println!("P {:.4} R {:.4} F1 {:.4}", m.precision, m.recall, m.f1);
    Ok(true)
}

fn cmd_explain(args: &ExplainArgs) -> Result<bool, Failure> {
    let (_, model, art) = load_run(&args.run)?;
    let data = load_dataset(&args.data)?;
    report_rows(&data);
    let record = data
        .records
        .iter()
        .find(|r| r.drug_id == args.drug)
        .ok_or_else(|| PipelineError::UnknownDrug(args.drug.clone()))?;
    let (drugs, errors) = prepare_records(std::slice::from_ref(record));
    if let Some(e) = errors.first() {
        return Err(Failure::Data(e.message.clone()));
    }
    let m = contribution_analysis(&model, &art, &drugs[0])?;
    write_contrib_csv(BufWriter::new(File::create(&args.out)?), &m, &art.vocab, &art.codec)?;
    eprintln!(
        "{} motifs x {} labels -> {}",
        m.motifs.len(),
        m.labels.len(),
        args.out.display()
    );
    Ok(true)
}

fn cmd_selftest() -> Result<bool, Failure> {
    let results = run_selftest();
    let mut ok = true;
    for r in &results {
        match &r.outcome {
            Ok(()) => println!("ok    {}", r.name),
            Err(e) => {
                println!("FAIL  {}: {e}", r.name);
                ok = false;
            }
        }
    }
    if ok {
        Ok(true)
    } else {
        Err(Failure::Numeric("selftest failed".into()))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let version: &'static str = Box::leak(version_text().into_boxed_str());
    let matches = Cli::command().version(version).try_get_matches();
    let cli = match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Parse => cmd_parse(),
        Command::Fragment => cmd_fragment(),
        Command::Vocab(a) => cmd_vocab(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        // some input lines failed; output stays line-aligned
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
