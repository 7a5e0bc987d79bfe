use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::{parse_sizes, Cli, CliError, Command, EvaluateArgs, PredictArgs, RunConfig, SplitArgs, StudyArgs, TrainArgs};
use crate::corpus::{carve_final_split, load_corpus, load_sentences, make_cv_splits, FoldSplit, RatedSentence};
use crate::encoder::{load_precomputed, PrecomputedEmbeddings};
use crate::ensemble::{bootstrap_study, load_pool_dir, read_predictions, write_predictions, BootstrapReport, EnsembleComposition};
use crate::error::Error;
use crate::features::{load_frequency_lexicon, FrequencyLexicon};
use crate::metrics::ScoreReport;
use crate::pipeline::train_member;
use crate::rng;
use crate::training::{predict, read_checkpoint, write_checkpoint, EncoderKind, TrainingHistory};

type CliResult<T = ()> = Result<T, CliError>;

pub(super) fn dispatch(cli: Cli) -> CliResult {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    if cli.jobs.is_some() {
        config.jobs = cli.jobs;
    }
    let jobs = config.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| match cli.command {
        Command::Split(args) => split(args, config),
        Command::Train(args) => train(args, config),
        Command::Predict(args) => predict_cmd(args, config),
        Command::Evaluate(args) => evaluate(args),
        Command::EnsembleStudy(args) => study(args, config),
    })
}

fn required(flag: Option<PathBuf>, configured: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    flag.or_else(|| configured.clone())
        .ok_or_else(|| CliError::usage(format!("missing --{name} (or `paths.{name}` in the config)")))
}

fn existing(path: PathBuf) -> CliResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::usage(format!("{} does not exist", path.display())))
    }
}

fn create_dir(path: &Path) -> CliResult {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e).into())
}

fn create_parent(path: &Path) -> CliResult {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn lexicon(flag: Option<PathBuf>, config: &RunConfig) -> CliResult<FrequencyLexicon> {
    let lex = match flag.or_else(|| config.paths.lexicon.clone()) {
        Some(path) => load_frequency_lexicon(existing(path)?)?,
        None => FrequencyLexicon::default(),
    };
    match config.features.lexicon_floor {
        Some(floor) => lex.with_floor(floor).map_err(|e| CliError::usage(e.to_string())),
        None => Ok(lex),
    }
}

fn embeddings(flag: Option<PathBuf>, config: &RunConfig) -> CliResult<Option<Arc<PrecomputedEmbeddings>>> {
    match flag.or_else(|| config.paths.embeddings.clone()) {
        Some(path) => Ok(Some(Arc::new(load_precomputed(existing(path)?)?))),
        None => Ok(None),
    }
}

fn split(args: SplitArgs, config: RunConfig) -> CliResult {
    let seed = config.seed()?;
    let corpus_path = existing(required(args.corpus, &config.paths.corpus, "corpus")?)?;
    let out = args
        .out
        .or_else(|| config.paths.splits.clone())
        .ok_or_else(|| CliError::usage("missing --out (or `paths.splits` in the config)"))?;
    let folds = args.folds.unwrap_or(config.split.folds);
    let fraction = args.early_stop_fraction.unwrap_or(config.split.early_stop_fraction);
    let corpus = load_corpus(&corpus_path)?;
    let splits = make_cv_splits(&corpus, folds, fraction, seed)?;
    create_dir(&out)?;
    for s in &splits {
        write_json(&out.join(format!("fold_{}.json", s.fold)), s)?;
    }
    info!("wrote {} split manifests to {}", splits.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct PhaseSummary {
    updates: usize,
    epochs: usize,
    evaluations: usize,
    best_rmse: f64,
    stopped_early: bool,
}

impl From<&TrainingHistory> for PhaseSummary {
    fn from(h: &TrainingHistory) -> Self {
        PhaseSummary {
            updates: h.updates,
            epochs: h.epochs,
            evaluations: h.evaluations.len(),
            best_rmse: h.best_rmse,
            stopped_early: h.stopped_early,
        }
    }
}

#[derive(Serialize)]
struct MemberSummary {
    member: usize,
    seed: u64,
    phase1: Option<PhaseSummary>,
    phase2: PhaseSummary,
}

#[derive(Serialize)]
struct TrainSummary {
    fold: Option<usize>,
    train: usize,
    early_stop: usize,
    members: Vec<MemberSummary>,
}

fn select(by_id: &HashMap<&str, &RatedSentence>, ids: &[String], what: &str) -> CliResult<Vec<RatedSentence>> {
    ids.iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .map(|s| (*s).clone())
                .ok_or_else(|| CliError::usage(format!("{what} id {id} is not in the corpus")))
        })
        .collect()
}

fn read_manifest(path: &Path) -> CliResult<FoldSplit> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let split: FoldSplit = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid split manifest {}: {e}", path.display())))?;
    let mut seen = HashSet::new();
    for id in split.train.iter().chain(&split.early_stop).chain(&split.validation) {
        if !seen.insert(id) {
            return Err(CliError::usage(format!("split manifest {} lists {id} twice", path.display())));
        }
    }
    Ok(split)
}

fn train(args: TrainArgs, mut config: RunConfig) -> CliResult {
    let seed = config.seed()?;
    if let Some(e) = args.encoder {
        config.member.encoder = e;
    }
    if let Some(p) = args.pooling {
        config.member.pooling = p;
    }
    config.member.validate().map_err(|e| CliError::usage(e.to_string()))?;
    config.training.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let n_members = args.members.unwrap_or(config.ensemble.members);
    if n_members == 0 {
        return Err(CliError::usage("--members must be at least 1"));
    }
    let corpus_path = existing(required(args.corpus, &config.paths.corpus, "corpus")?)?;
    let out = required(args.out, &config.paths.output, "output")?;
    let lex = lexicon(args.lexicon, &config)?;
    let emb = embeddings(args.embeddings, &config)?;
    if config.member.encoder == EncoderKind::Precomputed && emb.is_none() {
        return Err(CliError::usage("the precomputed encoder needs --embeddings"));
    }
    let corpus = load_corpus(&corpus_path)?;
    let by_id: HashMap<&str, &RatedSentence> = corpus.iter().map(|s| (s.id.as_str(), s)).collect();

    let (train_ids, es_ids, label) = match args.fold {
        Some(k) => {
            let dir = required(args.splits, &config.paths.splits, "splits")?;
            let manifest = read_manifest(&existing(dir.join(format!("fold_{k}.json")))?)?;
            (manifest.train, manifest.early_stop, format!("fold/{k}"))
        }
        None => {
            let (t, e) = carve_final_split(&corpus, config.split.final_early_stop_fraction, seed)?;
            (t, e, "final".to_string())
        }
    };
    let train_rows = select(&by_id, &train_ids, "training")?;
    let es_rows = select(&by_id, &es_ids, "early-stop")?;
    let catalog = config.features.catalog();
    create_dir(&out)?;

    let members = (0..n_members)
        .into_par_iter()
        .map(|m| -> CliResult<MemberSummary> {
            let member_seed = rng::derive_seed(seed, &format!("{label}/member/{m}"));
            let training = crate::training::TrainingConfig {
                seed: member_seed,
                ..config.training.clone()
            };
            let outcome = train_member(&train_rows, &es_rows, &config.member, &training, &lex, &catalog, emb.clone())?;
            write_checkpoint(&out, m, &outcome.model, &training)?;
            info!("member {m}: early-stop RMSE {:.4}", outcome.phase2.best_rmse);
            Ok(MemberSummary {
                member: m,
                seed: member_seed,
                phase1: outcome.phase1.as_ref().map(PhaseSummary::from),
                phase2: (&outcome.phase2).into(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_json(
        &out.join("train_summary.json"),
        &TrainSummary {
            fold: args.fold,
            train: train_rows.len(),
            early_stop: es_rows.len(),
            members,
        },
    )
}

fn predict_cmd(args: PredictArgs, config: RunConfig) -> CliResult {
    let dir = existing(args.checkpoints)?;
    let n = (0..).take_while(|i| dir.join(format!("member_{i}.json")).exists()).count();
    if n == 0 {
        return Err(CliError::usage(format!("no member_0.json checkpoint in {}", dir.display())));
    }
    let input = existing(args.input)?;
    let lex = lexicon(args.lexicon, &config)?;
    let emb = embeddings(args.embeddings, &config)?;
    let floor = args.floor.unwrap_or(config.ensemble.floor);
    let mut sentences = load_sentences(&input)?;
    if let Some(path) = args.validation {
        let manifest = read_manifest(&existing(path)?)?;
        let known: HashSet<&str> = sentences.iter().map(|s| s.id.as_str()).collect();
        if let Some(id) = manifest.validation.iter().find(|id| !known.contains(id.as_str())) {
            return Err(CliError::usage(format!("validation id {id} is not in {}", input.display())));
        }
        let keep: HashSet<String> = manifest.validation.into_iter().collect();
        sentences.retain(|s| keep.contains(&s.id));
    }
    let models = (0..n)
        .map(|i| {
            read_checkpoint(&dir, i, emb.clone()).map(|(m, _)| m).map_err(|e| match e {
                Error::InvalidArgument(msg) => CliError::usage(format!("member {i}: {msg}")),
                other => other.into(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let scores = models
        .par_iter()
        .map(|model| sentences.iter().map(|s| predict(s, model, &lex)).collect::<Result<Vec<f64>, Error>>())
        .collect::<Result<Vec<_>, Error>>()?;
    create_parent(&args.out)?;
    let ids: Vec<String> = sentences.into_iter().map(|s| s.id).collect();
    write_predictions(&args.out, &ids, &scores, floor)?;
    info!("scored {} sentences with {n} members", ids.len());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> CliResult {
    let table = read_predictions(existing(args.predictions)?)?;
    let gold: HashMap<String, f64> = load_corpus(existing(args.labels)?)?
        .into_iter()
        .map(|s| (s.id, s.mos))
        .collect();
    let mut seen = HashSet::new();
    let mut y = Vec::with_capacity(table.ids.len());
    for id in &table.ids {
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.clone()).into());
        }
        y.push(
            *gold
                .get(id)
                .ok_or_else(|| Error::invalid(format!("predicted sentence {id} has no label")))?,
        );
    }
    let report = ScoreReport::compute(&y, &table.ensemble)?;
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
    println!("{text}");
    if let Some(out) = args.out {
        create_parent(&out)?;
        write_json(&out, &report)?;
    }
    Ok(())
}

fn study(args: StudyArgs, config: RunConfig) -> CliResult {
    let seed = config.seed()?;
    let sizes = parse_sizes(args.sizes.as_deref().unwrap_or(&config.ensemble.sizes))?;
    let compositions = if args.composition.is_empty() {
        config.ensemble.compositions.clone()
    } else {
        args.composition
    };
    let resamples = args.resamples.unwrap_or(config.ensemble.resamples);
    if resamples == 0 {
        return Err(CliError::usage("--resamples must be at least 1"));
    }
    let floor = args.floor.unwrap_or(config.ensemble.floor);
    let (pool, labels) = load_pool_dir(existing(args.pool)?)?;

    let mut rows = Vec::new();
    for c in compositions {
        // Mixed ensembles take half their members from each family.
        let usable: Vec<usize> = sizes
            .iter()
            .copied()
            .filter(|s| c != EnsembleComposition::Mixed || s % 2 == 0)
            .collect();
        if usable.is_empty() {
            log::warn!("no even sizes requested; skipping the mixed composition");
            continue;
        }
        rows.extend(bootstrap_study(&pool, &labels, &usable, &[c], resamples, seed, floor)?.rows);
    }
    let report = BootstrapReport { rows };
    create_parent(&args.out)?;
    report.write_csv(&args.out)?;
    let curve = args.curve.unwrap_or_else(|| args.out.with_extension("dat"));
    create_parent(&curve)?;
    report.write_curves(&curve)?;
    info!("wrote {} report rows to {}", report.rows.len(), args.out.display());
    Ok(())
}
