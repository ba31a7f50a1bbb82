//! Subcommand implementations. Each one reads its inputs, delegates to one
//! library operation family, writes the artifact plus its manifest, and
//! reports a one-line summary on stdout.

use std::collections::BTreeSet;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use spar_core::corpus::{
    load_corpus, load_queries, sample_training_queries, write_queries, Corpus, SamplingConfig,
};
use spar_core::encoder::{load_model, save_model, train, Precision, TrainMode, TrainerConfig};
use spar_core::evaluation::{
    accuracy_at_k, mrr_at_k, read_qrels, recall_at_k, run_from_lists, shuffle_stress_test,
    EvalReport, EvalRow, Judgments, PositionSensitiveRetriever, Run,
};
use spar_core::fusion::{
    build_dense_index, build_spar_index, load_index, save_index, tune_weight, DenseRetriever,
    FusionConfig, FusionMode, SparRetriever, TuneMetric, TuneSetup,
};
use spar_core::imitation::{
    generate_imitation_data, generate_validation_pairs, read_imitation_file, read_validation_file,
    write_imitation_file, write_validation_file, SurrogatePairs,
};
use spar_core::sparse::{
    build_inverted_index, load_sparse_index, read_run_file, save_sparse_index, write_run_file,
    Bm25Params, Bm25Retriever, InvertedIndex, RankedList, Retriever, TokenizerConfig,
};

use crate::config::Config;
use crate::manifest::Manifest;
use crate::CliError;

fn tokenizer_from(cfg: &Config) -> Result<TokenizerConfig, CliError> {
    let stopwords: BTreeSet<String> = cfg.string_list("sparse.stopwords")?.into_iter().collect();
    Ok(TokenizerConfig {
        lowercase: cfg.bool("sparse.lowercase")?,
        stopwords,
    })
}

fn bm25_from(cfg: &Config) -> Result<Bm25Params, CliError> {
    let k1 = cfg.f64("sparse.k1")?;
    let b = cfg.f64("sparse.b")?;
    if k1 < 0.0 {
        return Err(CliError::Config(format!(
            "sparse.k1 must be >= 0, got {k1}"
        )));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(CliError::Config(format!(
            "sparse.b must lie in [0, 1], got {b}"
        )));
    }
    Ok(Bm25Params { k1, b })
}

fn fusion_mode_from(cfg: &Config) -> Result<FusionMode, CliError> {
    match cfg.string("fusion.mode")?.as_str() {
        "concat" => Ok(FusionMode::Concat),
        "sum" => Ok(FusionMode::Sum),
        other => Err(CliError::Config(format!(
            "fusion.mode must be concat or sum, got {other:?}"
        ))),
    }
}

fn fusion_mu_from(cfg: &Config) -> Result<f64, CliError> {
    let raw = cfg.string("fusion.mu")?;
    if raw == "tune" {
        return Err(CliError::Config(
            "fusion.mu is `tune`: run tune-weight and set fusion.mu to its best value".into(),
        ));
    }
    let mu: f64 = raw
        .parse()
        .map_err(|_| CliError::Config(format!("fusion.mu must be a number, got {raw:?}")))?;
    if mu.is_nan() || mu < 0.0 {
        return Err(CliError::Config(format!(
            "fusion.mu must be >= 0, got {mu}"
        )));
    }
    Ok(mu)
}

fn precision_from(cfg: &Config) -> Result<Precision, CliError> {
    match cfg.string("trainer.precision")?.as_str() {
        "f32" => Ok(Precision::F32),
        "f64" => Ok(Precision::F64),
        other => Err(CliError::Config(format!(
            "trainer.precision must be f32 or f64, got {other:?}"
        ))),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn build_sparse_index(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let corpus_path = cfg.path("paths.corpus")?;
    let corpus = load_corpus(&corpus_path)?;
    let tokenizer = tokenizer_from(cfg)?;
    let index = build_inverted_index(&corpus, &tokenizer)?;
    let out = cfg.out_path("sparse_index.json")?;
    save_sparse_index(&out, &index)?;
    let mut manifest = Manifest::new("build-sparse-index");
    manifest.input("corpus", &corpus_path)?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    println!(
        "indexed {} passages, {} terms -> {}",
        index.doc_count(),
        index.terms().count(),
        out.display()
    );
    Ok(())
}

pub fn make_queries(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let corpus_path = cfg.path("paths.corpus")?;
    let corpus = load_corpus(&corpus_path)?;
    let sampling = SamplingConfig {
        decay_tau: cfg.f64("sampling.decay_tau")?,
        min_per_passage: cfg.usize("sampling.min_per_passage")?,
        seed: cfg.u64("sampling.seed")?,
    };
    let queries = sample_training_queries(&corpus, &sampling)?;
    let out = cfg.out_path("queries.jsonl")?;
    write_queries(&out, &queries)?;
    let mut manifest = Manifest::new("make-queries");
    manifest.input("corpus", &corpus_path)?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    println!(
        "sampled {} training queries from {} passages -> {}",
        queries.len(),
        corpus.len(),
        out.display()
    );
    Ok(())
}

fn sparse_index_for(cfg: &Config, corpus: &Corpus) -> Result<InvertedIndex, CliError> {
    if let Some(path) = cfg.opt_path("paths.index") {
        return Ok(load_sparse_index(path)?);
    }
    Ok(build_inverted_index(corpus, &tokenizer_from(cfg)?)?)
}

pub fn make_imitation_data(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let corpus_path = cfg.path("paths.corpus")?;
    let queries_path = cfg.path("paths.queries")?;
    let corpus = load_corpus(&corpus_path)?;
    let queries = load_queries(&queries_path)?;
    let index = sparse_index_for(cfg, &corpus)?;
    let teacher = Bm25Retriever {
        index: &index,
        params: bm25_from(cfg)?,
    };
    let k = cfg.usize("imitation.k")?;
    let data = generate_imitation_data(
        &teacher,
        &queries,
        k,
        cfg.usize("imitation.n_p")?,
        cfg.usize("imitation.n_n")?,
    )?;
    let out = cfg.out_path("imitation.jsonl")?;
    write_imitation_file(&out, &data.examples)?;
    let mut manifest = Manifest::new("make-imitation-data");
    manifest.input("corpus", &corpus_path)?;
    manifest.input("queries", &queries_path)?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    println!(
        "labeled {} examples ({} dropped) -> {}",
        data.examples.len(),
        data.dropped,
        out.display()
    );

    if let Some(dev_path) = cfg.opt_path("paths.dev_queries") {
        let dev = load_queries(&dev_path)?;
        let (pairs, dropped) = generate_validation_pairs(&teacher, &dev, k)?;
        let validation_out = cfg.opt_path("paths.validation").map_or_else(
            || cfg.path("output.dir").map(|d| d.join("validation.jsonl")),
            Ok,
        )?;
        write_validation_file(&validation_out, &pairs)?;
        let mut vmanifest = Manifest::new("make-imitation-data");
        vmanifest.input("corpus", &corpus_path)?;
        vmanifest.input("dev_queries", &dev_path)?;
        vmanifest.keys(cfg.manifest_entries(keys));
        vmanifest.write_beside(&validation_out)?;
        println!(
            "validation pairs {} ({dropped} dropped) -> {}",
            pairs.len(),
            validation_out.display()
        );
    }
    Ok(())
}

pub fn train_model(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let corpus_path = cfg.path("paths.corpus")?;
    let imitation_path = cfg.path("paths.imitation")?;
    let corpus = load_corpus(&corpus_path)?;
    let data = read_imitation_file(&imitation_path)?;
    let validation_path = cfg.opt_path("paths.validation");
    let validation = match &validation_path {
        Some(path) => read_validation_file(path)?,
        None => SurrogatePairs::default(),
    };
    let mode = match cfg.string("trainer.mode")?.as_str() {
        "standard" => TrainMode::Standard,
        "init_from_model" => {
            let path = cfg.opt_path("trainer.init_model").ok_or_else(|| {
                CliError::Config("trainer.mode=init_from_model requires trainer.init_model".into())
            })?;
            TrainMode::InitFromModel(load_model(path)?)
        }
        "joint_frozen_lexical" => {
            let path = cfg.opt_path("trainer.joint_model").ok_or_else(|| {
                CliError::Config(
                    "trainer.mode=joint_frozen_lexical requires trainer.joint_model".into(),
                )
            })?;
            TrainMode::JointFrozenLexical {
                lexical: load_model(path)?,
                initial_weight: cfg.f64("trainer.joint_weight")?,
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "trainer.mode must be standard, init_from_model, or joint_frozen_lexical, got {other:?}"
            )))
        }
    };
    let config = TrainerConfig {
        learning_rate: cfg.f64("trainer.lr")?,
        batch_size: cfg.usize("trainer.batch")?,
        epochs: cfg.usize("trainer.epochs")?,
        seed: cfg.u64("trainer.seed")?,
        embedding_dim: cfg.usize("trainer.d")?,
        mode,
    };
    let tokenizer = tokenizer_from(cfg)?;
    let outcome = train(&config, &corpus, &tokenizer, &data, &validation)?;
    for stats in &outcome.history {
        let mrr = stats
            .surrogate_mrr
            .map_or("n/a".to_string(), |v| format!("{v:.4}"));
        let weight = stats
            .joint_weight
            .map_or(String::new(), |w| format!(" mu={w:.4}"));
        println!(
            "epoch {}: loss {:.4} surrogate_mrr {mrr}{weight}",
            stats.epoch, stats.train_loss
        );
    }
    let out = cfg.out_path("model.enc")?;
    save_model(&out, &outcome.params, precision_from(cfg)?)?;
    let mut manifest = Manifest::new("train");
    manifest.input("corpus", &corpus_path)?;
    manifest.input("imitation", &imitation_path)?;
    if let Some(path) = &validation_path {
        manifest.input("validation", path)?;
    }
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    println!(
        "trained encoder (V={}, d={}) -> {}",
        outcome.params.vocab_size(),
        outcome.params.dim(),
        out.display()
    );
    Ok(())
}

pub fn build_dense_index_cmd(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let corpus_path = cfg.path("paths.corpus")?;
    let model_path = cfg.path("paths.model")?;
    let corpus = load_corpus(&corpus_path)?;
    let params = load_model(&model_path)?;
    let index = build_dense_index(&corpus, &params, &tokenizer_from(cfg)?)?;
    let out = cfg.out_path("dense.idx")?;
    save_index(&out, &index, Precision::F32)?;
    let mut manifest = Manifest::new("build-dense-index");
    manifest.input("corpus", &corpus_path)?;
    manifest.input("model", &model_path)?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    println!(
        "encoded {} passages at d={} -> {}",
        index.len(),
        index.dim(),
        out.display()
    );
    Ok(())
}

pub fn fuse(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let base_path = cfg.path("paths.base_index")?;
    let lex_path = cfg.path("paths.lex_index")?;
    let base = load_index(&base_path)?;
    let lex = load_index(&lex_path)?;
    let mode = fusion_mode_from(cfg)?;
    // Passage rows are weight-independent; any positive weight builds the
    // same index.
    let fused = build_spar_index(&base, &lex, &FusionConfig { mode, mu: 1.0 })?;
    let out = cfg.out_path("fused.idx")?;
    save_index(&out, &fused, Precision::F32)?;
    let mut manifest = Manifest::new("fuse");
    manifest.input("base_index", &base_path)?;
    manifest.input("lex_index", &lex_path)?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    println!(
        "fused {} passages at d={} -> {}",
        fused.len(),
        fused.dim(),
        out.display()
    );
    Ok(())
}

pub fn retrieve(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let queries_path = cfg.path("paths.queries")?;
    let queries = load_queries(&queries_path)?;
    let k = cfg.usize("retrieve.k")?;
    if k == 0 {
        return Err(CliError::Config("retrieve.k must be at least 1".into()));
    }
    let tokenizer = tokenizer_from(cfg)?;
    let mut manifest = Manifest::new("retrieve");
    manifest.input("queries", &queries_path)?;

    let lists: Vec<RankedList> = match cfg.string("retrieve.retriever")?.as_str() {
        "sparse" => {
            let corpus_path = cfg.path("paths.corpus")?;
            let corpus = load_corpus(&corpus_path)?;
            manifest.input("corpus", &corpus_path)?;
            let index = sparse_index_for(cfg, &corpus)?;
            let retriever = Bm25Retriever {
                index: &index,
                params: bm25_from(cfg)?,
            };
            batch_retrieve(&retriever, &queries, k)
        }
        "dense" => {
            let model_path = cfg.path("paths.model")?;
            let index_path = cfg.path("paths.index")?;
            manifest.input("model", &model_path)?;
            manifest.input("index", &index_path)?;
            let params = load_model(&model_path)?;
            let index = load_index(&index_path)?;
            let retriever = DenseRetriever::new(&params, &index, &tokenizer)?;
            batch_retrieve(&retriever, &queries, k)
        }
        "spar" => {
            let fusion = FusionConfig {
                mode: fusion_mode_from(cfg)?,
                mu: fusion_mu_from(cfg)?,
            };
            let base_path = cfg.path("paths.base_model")?;
            let lex_path = cfg.path("paths.lex_model")?;
            let index_path = cfg.path("paths.index")?;
            manifest.input("base_model", &base_path)?;
            manifest.input("lex_model", &lex_path)?;
            manifest.input("index", &index_path)?;
            let base = load_model(&base_path)?;
            let lex = load_model(&lex_path)?;
            let index = load_index(&index_path)?;
            let retriever = SparRetriever::new(&base, &lex, &index, fusion, &tokenizer)?;
            batch_retrieve(&retriever, &queries, k)
        }
        other => {
            return Err(CliError::Config(format!(
                "retrieve.retriever must be sparse, dense, or spar, got {other:?}"
            )))
        }
    };
    let out = cfg.out_path("run.trec")?;
    write_run_file(&out, &lists, &cfg.string("retrieve.tag")?)?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    println!(
        "retrieved {} queries at k={k} -> {}",
        lists.len(),
        out.display()
    );
    Ok(())
}

fn batch_retrieve<R: Retriever + Sync>(
    retriever: &R,
    queries: &spar_core::corpus::QuerySet,
    k: usize,
) -> Vec<RankedList> {
    queries
        .queries()
        .par_iter()
        .map(|q| retriever.retrieve(q, k))
        .collect()
}

pub fn tune_weight_cmd(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let dev_path = cfg.path("paths.dev_queries")?;
    let qrels_path = cfg.path("paths.qrels")?;
    let base_model_path = cfg.path("paths.base_model")?;
    let lex_model_path = cfg.path("paths.lex_model")?;
    let base_index_path = cfg.path("paths.base_index")?;
    let lex_index_path = cfg.path("paths.lex_index")?;
    let dev = load_queries(&dev_path)?;
    let judgments = read_qrels(&qrels_path)?;
    let base_encoder = load_model(&base_model_path)?;
    let lex_encoder = load_model(&lex_model_path)?;
    let base_index = load_index(&base_index_path)?;
    let lex_index = load_index(&lex_index_path)?;
    let tokenizer = tokenizer_from(cfg)?;
    let metric = match cfg.string("tune.metric")?.as_str() {
        "acc@100" => TuneMetric::AccAt100,
        "mrr@10" => TuneMetric::MrrAt10,
        other => {
            return Err(CliError::Config(format!(
                "tune.metric must be acc@100 or mrr@10, got {other:?}"
            )))
        }
    };
    let outcome = tune_weight(
        &dev,
        &judgments,
        &TuneSetup {
            base_encoder: &base_encoder,
            lex_encoder: &lex_encoder,
            base_index: &base_index,
            lex_index: &lex_index,
            tokenizer: &tokenizer,
        },
        fusion_mode_from(cfg)?,
        metric,
    )?;
    let mut text = String::new();
    for (mu, value) in &outcome.table {
        text.push_str(&format!("mu={mu:.6}, value={value:.6}\n"));
    }
    text.push_str(&format!("best_mu={:.6}\n", outcome.best_mu));
    let out = cfg.out_path("tune.txt")?;
    write_text(&out, &text)?;
    let mut manifest = Manifest::new("tune-weight");
    manifest.input("dev_queries", &dev_path)?;
    manifest.input("qrels", &qrels_path)?;
    manifest.input("base_model", &base_model_path)?;
    manifest.input("lex_model", &lex_model_path)?;
    manifest.input("base_index", &base_index_path)?;
    manifest.input("lex_index", &lex_index_path)?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    print!("{text}");
    println!(
        "tuned over {} candidates -> {}",
        outcome.table.len(),
        out.display()
    );
    Ok(())
}

fn judgments_from(cfg: &Config, manifest: &mut Manifest) -> Result<Judgments, CliError> {
    match cfg.string("eval.mode")?.as_str() {
        "qrels" => {
            let qrels_path = cfg.path("paths.qrels")?;
            manifest.input("qrels", &qrels_path)?;
            Ok(read_qrels(&qrels_path)?)
        }
        "answers" => {
            let queries_path = cfg.path("paths.queries")?;
            let corpus_path = cfg.path("paths.corpus")?;
            manifest.input("queries", &queries_path)?;
            manifest.input("corpus", &corpus_path)?;
            let queries = load_queries(&queries_path)?;
            let corpus = load_corpus(&corpus_path)?;
            Ok(Judgments::from_answers(&queries, &corpus))
        }
        other => Err(CliError::Config(format!(
            "eval.mode must be qrels or answers, got {other:?}"
        ))),
    }
}

pub fn evaluate(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let run_path = cfg.path("paths.run")?;
    let mut manifest = Manifest::new("evaluate");
    manifest.input("run", &run_path)?;
    let run: Run = run_from_lists(read_run_file(&run_path)?);
    let judgments = judgments_from(cfg, &mut manifest)?;
    let mut report = EvalReport::default();
    for metric in cfg.string_list("eval.metrics")? {
        for &k in &cfg.usize_list("eval.k")? {
            let value = match metric.as_str() {
                "acc" => accuracy_at_k(&run, &judgments, k)?,
                "mrr" => mrr_at_k(&run, &judgments, k)?,
                "recall" => recall_at_k(&run, &judgments, k)?,
                other => {
                    return Err(CliError::Config(format!(
                        "eval.metrics entries must be acc, mrr, or recall, got {other:?}"
                    )))
                }
            };
            report.rows.push(EvalRow {
                metric: metric.clone(),
                k,
                value,
            });
        }
    }
    let out = cfg.out_path("eval.txt")?;
    write_text(&out, &format!("{report}\n{}", report.kv_lines()))?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    print!("{report}");
    println!("evaluated {} queries -> {}", judgments.len(), out.display());
    Ok(())
}

pub fn stress_test(cfg: &Config, keys: &[&str]) -> Result<(), CliError> {
    let corpus_path = cfg.path("paths.corpus")?;
    let queries_path = cfg.path("paths.queries")?;
    let corpus = load_corpus(&corpus_path)?;
    let queries = load_queries(&queries_path)?;
    let tokenizer = tokenizer_from(cfg)?;
    let mut manifest = Manifest::new("stress-test");
    manifest.input("corpus", &corpus_path)?;
    manifest.input("queries", &queries_path)?;
    let judgments = judgments_from(cfg, &mut manifest)?;

    let sparse_index = build_inverted_index(&corpus, &tokenizer)?;
    let bm25 = Bm25Retriever {
        index: &sparse_index,
        params: bm25_from(cfg)?,
    };
    let model = match cfg.opt_path("paths.model") {
        Some(path) => {
            manifest.input("model", &path)?;
            Some(load_model(&path)?)
        }
        None => None,
    };
    let dense_parts = match &model {
        Some(params) => {
            let index = build_dense_index(&corpus, params, &tokenizer)?;
            Some((params, index))
        }
        None => None,
    };
    let dense = match &dense_parts {
        Some((params, index)) => Some(DenseRetriever::new(params, index, &tokenizer)?),
        None => None,
    };
    let mock = PositionSensitiveRetriever::new(&corpus, &tokenizer);

    let mut retrievers: Vec<(&str, &dyn Retriever)> = vec![("bm25", &bm25)];
    if let Some(r) = &dense {
        retrievers.push(("lambda", r));
    }
    if cfg.bool("stress.include_mock")? {
        retrievers.push(("mock", &mock));
    }
    let report = shuffle_stress_test(
        &retrievers,
        &queries,
        &judgments,
        &cfg.usize_list("stress.k")?,
        cfg.u64("stress.seed")?,
    )?;
    let out = cfg.out_path("stress.txt")?;
    write_text(&out, &format!("{report}\n{}", report.kv_lines()))?;
    manifest.keys(cfg.manifest_entries(keys));
    manifest.write_beside(&out)?;
    print!("{report}");
    println!(
        "stress-tested {} retrievers -> {}",
        retrievers.len(),
        out.display()
    );
    Ok(())
}

pub type CommandFn = fn(&Config, &[&str]) -> Result<(), CliError>;

/// Subcommand registry: name, summary, handler, and the configuration keys
/// it reads (echoed into its manifest).
pub const SUBCOMMANDS: &[(&str, &str, CommandFn, &[&str])] = &[
    (
        "build-sparse-index",
        "Tokenize a corpus and build the BM25 inverted index",
        build_sparse_index,
        &[
            "paths.corpus",
            "paths.out",
            "output.dir",
            "sparse.lowercase",
            "sparse.stopwords",
            "threads",
        ],
    ),
    (
        "make-queries",
        "Sample sentence queries from a corpus for imitation training",
        make_queries,
        &[
            "paths.corpus",
            "paths.out",
            "output.dir",
            "sampling.decay_tau",
            "sampling.min_per_passage",
            "sampling.seed",
            "threads",
        ],
    ),
    (
        "make-imitation-data",
        "Label queries with the BM25 teacher (and dev queries as validation pairs)",
        make_imitation_data,
        &[
            "paths.corpus",
            "paths.queries",
            "paths.dev_queries",
            "paths.index",
            "paths.validation",
            "paths.out",
            "output.dir",
            "sparse.k1",
            "sparse.b",
            "sparse.lowercase",
            "sparse.stopwords",
            "imitation.k",
            "imitation.n_p",
            "imitation.n_n",
            "threads",
        ],
    ),
    (
        "train",
        "Train the dense bi-encoder on imitation data",
        train_model,
        &[
            "paths.corpus",
            "paths.imitation",
            "paths.validation",
            "paths.out",
            "output.dir",
            "sparse.lowercase",
            "sparse.stopwords",
            "trainer.d",
            "trainer.lr",
            "trainer.batch",
            "trainer.epochs",
            "trainer.seed",
            "trainer.mode",
            "trainer.init_model",
            "trainer.joint_model",
            "trainer.joint_weight",
            "trainer.precision",
            "threads",
        ],
    ),
    (
        "build-dense-index",
        "Encode every passage with a trained model into a flat index",
        build_dense_index_cmd,
        &[
            "paths.corpus",
            "paths.model",
            "paths.out",
            "output.dir",
            "sparse.lowercase",
            "sparse.stopwords",
            "threads",
        ],
    ),
    (
        "fuse",
        "Fuse a base and a lexical dense index into one searchable index",
        fuse,
        &[
            "paths.base_index",
            "paths.lex_index",
            "paths.out",
            "output.dir",
            "fusion.mode",
            "threads",
        ],
    ),
    (
        "retrieve",
        "Run sparse, dense, or fused retrieval over a query set",
        retrieve,
        &[
            "paths.corpus",
            "paths.queries",
            "paths.model",
            "paths.base_model",
            "paths.lex_model",
            "paths.index",
            "paths.out",
            "output.dir",
            "sparse.k1",
            "sparse.b",
            "sparse.lowercase",
            "sparse.stopwords",
            "fusion.mode",
            "fusion.mu",
            "retrieve.retriever",
            "retrieve.k",
            "retrieve.tag",
            "threads",
        ],
    ),
    (
        "tune-weight",
        "Grid-search the fusion weight on a dev set",
        tune_weight_cmd,
        &[
            "paths.dev_queries",
            "paths.qrels",
            "paths.base_model",
            "paths.lex_model",
            "paths.base_index",
            "paths.lex_index",
            "paths.out",
            "output.dir",
            "sparse.lowercase",
            "sparse.stopwords",
            "fusion.mode",
            "tune.metric",
            "threads",
        ],
    ),
    (
        "evaluate",
        "Score a run file against judgments",
        evaluate,
        &[
            "paths.run",
            "paths.qrels",
            "paths.queries",
            "paths.corpus",
            "paths.out",
            "output.dir",
            "eval.metrics",
            "eval.k",
            "eval.mode",
            "threads",
        ],
    ),
    (
        "stress-test",
        "Compare retrievers on original vs token-shuffled queries",
        stress_test,
        &[
            "paths.corpus",
            "paths.queries",
            "paths.qrels",
            "paths.model",
            "paths.out",
            "output.dir",
            "sparse.k1",
            "sparse.b",
            "sparse.lowercase",
            "sparse.stopwords",
            "eval.mode",
            "stress.k",
            "stress.seed",
            "stress.include_mock",
            "threads",
        ],
    ),
];
