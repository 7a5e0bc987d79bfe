mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ara_core::corpus::{build_vocab, write_corpus, FoldSplit, RatedSentence};
use ara_core::encoder::Pooling;
use ara_core::ensemble::write_predictions;
use ara_core::features::{FeatureCatalog, FeatureScaler, FeatureVector};
use ara_core::training::{write_checkpoint, EncoderProvider, MLPWeights, TrainedModel, TrainingConfig};

fn ara(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ara")).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus_file(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("corpus.csv");
    write_corpus(&path, &common::synth::readability_corpus(n, 5)).unwrap();
    path
}

/// Fast settings for training through the binary.
fn quick_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        "seed = 17\n\n[member]\nencoder = \"random-projection\"\nprojection_dim = 16\nmax_len = 32\n\n\
         [training]\nphase2_max_epochs = 40\nphase2_patience = 10\nmlp_hidden = 16\n\n[ensemble]\nmembers = 3\n",
    )
    .unwrap();
    path
}

#[test]
fn split_writes_one_manifest_per_fold() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path(), 1000);
    let out = dir.path().join("splits");
    ok(&ara(&["split", "--corpus", s(&corpus), "--out", s(&out), "--seed", "3"]));
    for k in 0..5 {
        let m: FoldSplit = serde_json::from_str(&std::fs::read_to_string(out.join(format!("fold_{k}.json"))).unwrap()).unwrap();
        assert_eq!((m.validation.len(), m.early_stop.len(), m.train.len()), (200, 80, 720));
    }
    assert!(!out.join("fold_5.json").exists());

    let again = dir.path().join("again");
    ok(&ara(&["split", "--corpus", s(&corpus), "--out", s(&again), "--seed", "3"]));
    for k in 0..5 {
        let f = format!("fold_{k}.json");
        assert_eq!(std::fs::read(out.join(&f)).unwrap(), std::fs::read(again.join(&f)).unwrap());
    }
}

#[test]
fn split_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path(), 4);
    let out = dir.path().join("splits");
    let r = ara(&["split", "--corpus", s(&corpus), "--out", s(&out), "--seed", "3", "--folds", "5"]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&r.stderr).is_empty());
    // No seed anywhere is a configuration error.
    let r = ara(&["split", "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let r = ara(&["split", "--corpus", s(&dir.path().join("nope.csv")), "--out", s(&out), "--seed", "1"]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(ara(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ara(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path(), 60);
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = 1\n[training]\nbatch_size = 0\n").unwrap();
    let r = ara(&["--config", s(&cfg), "train", "--final", "--corpus", s(&corpus), "--out", s(&dir.path().join("m"))]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    std::fs::write(&cfg, "seed = 1\nunknown_key = 3\n").unwrap();
    let r = ara(&["--config", s(&cfg), "train", "--final", "--corpus", s(&corpus), "--out", s(&dir.path().join("m"))]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path(), 150);
    let cfg = quick_config(dir.path());
    let splits = dir.path().join("splits");
    let models = dir.path().join("fold0");
    ok(&ara(&["--config", s(&cfg), "split", "--corpus", s(&corpus), "--out", s(&splits)]));
    ok(&ara(&[
        "--config", s(&cfg), "train", "--corpus", s(&corpus), "--splits", s(&splits), "--fold", "0", "--out", s(&models),
    ]));
    for m in 0..3 {
        assert!(models.join(format!("member_{m}.json")).exists());
        assert!(models.join(format!("member_{m}.bin")).exists());
    }
    assert!(!models.join("member_3.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(models.join("train_summary.json")).unwrap()).unwrap();
    // The random-projection encoder has nothing to fine-tune.
    assert!(summary["members"][0]["phase1"].is_null());

    let preds = dir.path().join("preds.csv");
    ok(&ara(&["--config", s(&cfg), "predict", "--checkpoints", s(&models), "--input", s(&corpus), "--out", s(&preds)]));
    let text = std::fs::read_to_string(&preds).unwrap();
    assert!(text.starts_with("id,member_0,member_1,member_2,ensemble\n"));
    assert_eq!(text.lines().count(), 151);
    assert!(text.lines().nth(1).unwrap().starts_with("s0000,"));

    let report = ara(&["evaluate", "--predictions", s(&preds), "--labels", s(&corpus)]);
    ok(&report);
    let v: serde_json::Value = serde_json::from_slice(&report.stdout).unwrap();
    assert_eq!(v["n"], 150);
    assert!(v["rmse"].as_f64().unwrap() < 2.0);
    assert!(v["mapped_rmse"].as_f64().unwrap() <= v["rmse"].as_f64().unwrap() + 1e-12);
}

#[test]
fn final_mode_uses_a_small_early_stop_carve() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path(), 200);
    let cfg = quick_config(dir.path());
    let out = dir.path().join("final");
    ok(&ara(&["--config", s(&cfg), "train", "--final", "--members", "1", "--corpus", s(&corpus), "--out", s(&out)]));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("train_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["early_stop"], 15);
    assert_eq!(summary["train"], 185);
}

fn constant_member(dir: &Path, index: usize, score: f64) {
    let catalog = FeatureCatalog::default();
    let provider = EncoderProvider::RandomProjection {
        vocab: build_vocab(["Ein Satz."], 10),
        pooling: Pooling::Cls,
        max_len: 16,
        dim: 4,
        seed: 1,
    };
    let scaler = FeatureScaler::fit(&[FeatureVector {
        values: vec![0.0; catalog.len()],
        catalog_version: catalog.version().to_string(),
    }])
    .unwrap();
    let mut mlp = MLPWeights::zeros(4 + catalog.len(), 2).unwrap();
    mlp.set_output_bias(score);
    let model = TrainedModel::new(provider, mlp, scaler, catalog).unwrap();
    write_checkpoint(dir, index, &model, &TrainingConfig::default()).unwrap();
}

#[test]
fn predict_filters_invalid_member_scores() {
    let dir = tempfile::tempdir().unwrap();
    let models = dir.path().join("m");
    std::fs::create_dir(&models).unwrap();
    // Scores survive the f32 round trip exactly: 0.75, 1.25, 2.0.
    for (i, v) in [0.75, 1.25, 2.0].into_iter().enumerate() {
        constant_member(&models, i, v);
    }
    let input = dir.path().join("in.csv");
    std::fs::write(&input, "id,sentence\nb,Zweiter Satz.\na,Erster Satz hier.\n").unwrap();
    let out = dir.path().join("p.csv");
    ok(&ara(&["predict", "--checkpoints", s(&models), "--input", s(&input), "--out", s(&out)]));
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "id,member_0,member_1,member_2,ensemble\nb,0.75,1.25,2,1.625\na,0.75,1.25,2,1.625\n"
    );

    let r = ara(&["predict", "--checkpoints", s(&dir.path().join("none")), "--input", s(&input), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let r = ara(&["predict", "--checkpoints", s(&empty), "--input", s(&input), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn evaluate_reports_and_rejects_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    let rows: Vec<RatedSentence> = [("x", 2.0), ("y", 3.0), ("z", 5.0)]
        .iter()
        .map(|(id, m)| RatedSentence::new(*id, "Satz.", *m).unwrap())
        .collect();
    write_corpus(&labels, &rows).unwrap();
    let ids: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();

    let perfect = dir.path().join("perfect.csv");
    write_predictions(&perfect, &ids, &[vec![2.0, 3.0, 5.0]], 1.0).unwrap();
    let json_out = dir.path().join("eval/report.json");
    let r = ara(&["evaluate", "--predictions", s(&perfect), "--labels", s(&labels), "--out", s(&json_out)]);
    ok(&r);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(v["rmse"], 0.0);
    assert_eq!(v["n"], 3);

    let affine = dir.path().join("affine.csv");
    write_predictions(&affine, &ids, &[vec![1.5, 2.0, 3.0]], 1.0).unwrap();
    let v: serde_json::Value =
        serde_json::from_slice(&ara(&["evaluate", "--predictions", s(&affine), "--labels", s(&labels)]).stdout).unwrap();
    assert!(v["mapped_rmse"].as_f64().unwrap() < 1e-12);
    assert!((v["a"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let unknown = dir.path().join("unknown.csv");
    write_predictions(&unknown, &["x".into(), "q".into()], &[vec![2.0, 3.0]], 1.0).unwrap();
    let r = ara(&["evaluate", "--predictions", s(&unknown), "--labels", s(&labels)]);
    assert_eq!(r.status.code(), Some(1));
}

fn identical_pool(dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let rows: Vec<RatedSentence> = (0..6)
        .map(|i| RatedSentence::new(format!("s{i}"), "Satz.", 2.0 + i as f64 * 0.5).unwrap())
        .collect();
    write_corpus(dir.join("labels.csv"), &rows).unwrap();
    for k in 0..2 {
        let f = dir.join(format!("fold_{k}"));
        std::fs::create_dir_all(&f).unwrap();
        let ids: Vec<String> = (3 * k..3 * k + 3).map(|i| format!("s{i}")).collect();
        let p = vec![vec![2.5, 3.0, 4.0]; 3];
        write_predictions(f.join("a.csv"), &ids, &p, 1.0).unwrap();
        write_predictions(f.join("b.csv"), &ids, &p, 1.0).unwrap();
    }
}

#[test]
fn ensemble_study_rows_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool");
    identical_pool(&pool);
    let out = dir.path().join("study/report.csv");
    ok(&ara(&["ensemble-study", "--pool", s(&pool), "--out", s(&out), "--seed", "4", "--resamples", "20"]));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "size,composition,mean_rmse,std_rmse,n_resamples");
    let count = |c: &str| lines.iter().filter(|l| l.split(',').nth(1) == Some(c)).count();
    assert_eq!((count("a"), count("b"), count("mixed")), (60, 60, 30));
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(3), Some("0"), "{l}");
    }
    let curve = std::fs::read_to_string(out.with_extension("dat")).unwrap();
    assert!(curve.starts_with("# size a_mean a_std b_mean b_std mixed_mean mixed_std\n"));
    assert_eq!(curve.lines().count(), 61);

    let again = dir.path().join("again.csv");
    ok(&ara(&[
        "ensemble-study", "--pool", s(&pool), "--out", s(&again), "--seed", "4", "--resamples", "20", "--jobs", "3",
    ]));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());

    let r = ara(&["ensemble-study", "--pool", s(&pool), "--out", s(&again), "--resamples", "5"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn predict_can_score_one_validation_fold() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = corpus_file(dir.path(), 50);
    let cfg = quick_config(dir.path());
    let splits = dir.path().join("splits");
    let models = dir.path().join("m");
    ok(&ara(&["--config", s(&cfg), "split", "--corpus", s(&corpus), "--out", s(&splits)]));
    ok(&ara(&[
        "--config", s(&cfg), "train", "--corpus", s(&corpus), "--splits", s(&splits), "--fold", "1", "--out", s(&models),
        "--members", "1",
    ]));
    let manifest = splits.join("fold_1.json");
    let preds = dir.path().join("p.csv");
    ok(&ara(&[
        "predict", "--checkpoints", s(&models), "--input", s(&corpus), "--validation", s(&manifest), "--out", s(&preds),
    ]));
    let m: FoldSplit = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    let table = ara_core::ensemble::read_predictions(&preds).unwrap();
    assert_eq!(table.ids, m.validation);
}
