//! The trainable dense bi-encoder and its contrastive trainer.
//!
//! The encoder is deliberately small: two independent token-embedding tables
//! (query side and passage side) with mean pooling, scored by dot product.
//! It keeps every contract of a transformer bi-encoder — asymmetric towers,
//! in-batch negatives, contrastive loss, dot-product retrieval — while
//! training in seconds on a CPU. Parameters are held in 64-bit floats in
//! memory; model files may store them as 32-bit.
//!
//! Mean pooling sums embedding rows in sorted row order, so encoding is
//! exactly invariant to token permutation.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::evaluation;
use crate::imitation::{ImitationExample, SurrogatePairs};
use crate::sparse::{passage_tokens, tokenize, TokenizerConfig};

/// Bi-encoder parameters: a shared vocabulary and one embedding table per
/// tower, stored row-major with `d` columns.
#[derive(Clone)]
pub struct EncoderParams {
    vocab: Vec<String>,
    vocab_index: HashMap<String, usize>,
    query_embedding: Vec<f64>,
    passage_embedding: Vec<f64>,
    d: usize,
}

impl std::fmt::Debug for EncoderParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EncoderParams")
            .field("vocab_size", &self.vocab.len())
            .field("d", &self.d)
            .finish()
    }
}

#[derive(Clone, Copy)]
enum Tower {
    Query,
    Passage,
}

impl EncoderParams {
    /// Fresh parameters with uniform random values in `[-1/sqrt(d), 1/sqrt(d))`,
    /// deterministic given the seed.
    pub fn init_random(vocab: Vec<String>, d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (d as f64).sqrt();
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..scale)).collect() };
        let query_embedding = draw(vocab.len() * d);
        let passage_embedding = draw(vocab.len() * d);
        Self::from_parts(vocab, d, query_embedding, passage_embedding)
    }

    /// Builds parameters from explicit tables (row-major, `vocab.len() * d`
    /// values each). Useful for handcrafted encoders.
    pub fn from_parts(
        vocab: Vec<String>,
        d: usize,
        query_embedding: Vec<f64>,
        passage_embedding: Vec<f64>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        let expected = vocab.len() * d;
        for (name, table) in [("query", &query_embedding), ("passage", &passage_embedding)] {
            if table.len() != expected {
                return Err(Error::invalid(format!(
                    "{name} table has {} values, expected {expected}",
                    table.len()
                )));
            }
        }
        let mut vocab_index = HashMap::with_capacity(vocab.len());
        for (row, token) in vocab.iter().enumerate() {
            if vocab_index.insert(token.clone(), row).is_some() {
                return Err(Error::DuplicateId {
                    kind: "vocabulary token",
                    id: token.clone(),
                });
            }
        }
        Ok(EncoderParams {
            vocab,
            vocab_index,
            query_embedding,
            passage_embedding,
            d,
        })
    }

    /// Sorted unique tokens of a corpus under the given tokenizer — the
    /// vocabulary used when training an encoder on that corpus.
    pub fn vocab_from_corpus(corpus: &Corpus, tokenizer: &TokenizerConfig) -> Vec<String> {
        let mut tokens = BTreeSet::new();
        for passage in corpus.iter() {
            tokens.extend(passage_tokens(passage, tokenizer));
        }
        tokens.into_iter().collect()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn token_row(&self, token: &str) -> Option<usize> {
        self.vocab_index.get(token).copied()
    }

    /// In-vocab embedding rows for the tokens, sorted, with multiplicity.
    /// Sorting fixes the pooling reduction order.
    fn intern(&self, tokens: &[String]) -> Vec<u32> {
        let mut rows: Vec<u32> = tokens
            .iter()
            .filter_map(|t| self.vocab_index.get(t).map(|&r| r as u32))
            .collect();
        rows.sort_unstable();
        rows
    }

    fn table(&self, tower: Tower) -> &[f64] {
        match tower {
            Tower::Query => &self.query_embedding,
            Tower::Passage => &self.passage_embedding,
        }
    }

    fn pool(&self, tower: Tower, rows: &[u32]) -> Vec<f64> {
        pool_rows(self.table(tower), self.d, rows)
    }
}

fn pool_rows(table: &[f64], d: usize, rows: &[u32]) -> Vec<f64> {
    let mut v = vec![0.0f64; d];
    if rows.is_empty() {
        return v;
    }
    for &row in rows {
        let start = row as usize * d;
        for (acc, x) in v.iter_mut().zip(&table[start..start + d]) {
            *acc += x;
        }
    }
    let inv = 1.0 / rows.len() as f64;
    for x in &mut v {
        *x *= inv;
    }
    v
}

/// Mean of the query-tower rows of the in-vocab tokens; the zero vector when
/// no token is in the vocabulary.
pub fn encode_query(params: &EncoderParams, tokens: &[String]) -> Vec<f64> {
    params.pool(Tower::Query, &params.intern(tokens))
}

/// Mirror of [`encode_query`] using the passage tower.
pub fn encode_passage(params: &EncoderParams, tokens: &[String]) -> Vec<f64> {
    params.pool(Tower::Passage, &params.intern(tokens))
}

/// One training item: a query, its positive passage, and hard negatives,
/// all pre-tokenized.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub query_tokens: Vec<String>,
    pub positive_tokens: Vec<String>,
    pub negative_tokens: Vec<Vec<String>>,
}

/// A non-empty batch of training items, each with exactly one positive.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    pub items: Vec<BatchItem>,
}

/// Dense gradients with the same shape as the parameter tables.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub query: Vec<f64>,
    pub passage: Vec<f64>,
}

/// In-batch contrastive loss and its exact analytic gradients.
///
/// Per item `i` the softmax candidates are all `B` batch positives (its own
/// at index `i`) followed by its hard negatives, scored by dot product
/// against the item's query vector; the loss is the mean over items of the
/// negative log softmax at the positive.
pub fn contrastive_loss(params: &EncoderParams, batch: &TrainingBatch) -> (f64, Gradients) {
    assert!(
        !batch.items.is_empty(),
        "batch must contain at least one item"
    );
    let d = params.d;
    let queries: Vec<Pooled> = batch
        .items
        .iter()
        .map(|item| Pooled::new(params, Tower::Query, &item.query_tokens))
        .collect();
    let positives: Vec<Pooled> = batch
        .items
        .iter()
        .map(|item| Pooled::new(params, Tower::Passage, &item.positive_tokens))
        .collect();
    let negatives: Vec<Vec<Pooled>> = batch
        .items
        .iter()
        .map(|item| {
            item.negative_tokens
                .iter()
                .map(|tokens| Pooled::new(params, Tower::Passage, tokens))
                .collect()
        })
        .collect();
    let (loss, sparse) = batch_loss_grads(d, &queries, &positives, &negatives, None);
    let mut grads = Gradients {
        query: vec![0.0; params.query_embedding.len()],
        passage: vec![0.0; params.passage_embedding.len()],
    };
    sparse.scatter_dense(d, &mut grads);
    (loss, grads)
}

/// A pooled vector together with the rows it was pooled from. The rows are
/// what gradients scatter back into; lexical-side vectors in joint training
/// carry no rows because the lexical model stays frozen.
struct Pooled {
    rows: Vec<u32>,
    vec: Vec<f64>,
    lex_vec: Option<Vec<f64>>,
}

impl Pooled {
    fn new(params: &EncoderParams, tower: Tower, tokens: &[String]) -> Self {
        let rows = params.intern(tokens);
        let vec = params.pool(tower, &rows);
        Pooled {
            rows,
            vec,
            lex_vec: None,
        }
    }
}

/// Row-sparse gradients accumulated over one batch.
struct SparseGrads {
    query: HashMap<u32, Vec<f64>>,
    passage: HashMap<u32, Vec<f64>>,
    dmu: f64,
}

impl SparseGrads {
    fn new() -> Self {
        SparseGrads {
            query: HashMap::new(),
            passage: HashMap::new(),
            dmu: 0.0,
        }
    }

    /// Distribute a pooled-vector gradient onto its source rows
    /// (each row receives `dvec / row_count`).
    fn scatter(map: &mut HashMap<u32, Vec<f64>>, d: usize, rows: &[u32], dvec: &[f64]) {
        if rows.is_empty() {
            return;
        }
        let scale = 1.0 / rows.len() as f64;
        for &row in rows {
            let acc = map.entry(row).or_insert_with(|| vec![0.0; d]);
            for (a, g) in acc.iter_mut().zip(dvec) {
                *a += g * scale;
            }
        }
    }

    fn scatter_dense(&self, d: usize, out: &mut Gradients) {
        for (&row, g) in &self.query {
            let start = row as usize * d;
            out.query[start..start + d].copy_from_slice(g);
        }
        for (&row, g) in &self.passage {
            let start = row as usize * d;
            out.passage[start..start + d].copy_from_slice(g);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(acc: &mut [f64], scale: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += scale * x;
    }
}

fn logsumexp(s: &[f64]) -> f64 {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Shared loss/gradient core for the plain and joint objectives.
///
/// With `mu = Some(w)` the score of each (query, candidate) pair gains
/// `w * (lex_query . lex_candidate)` from the cached frozen lexical vectors,
/// matching the concatenated-vector similarity, and `dmu` is accumulated.
fn batch_loss_grads(
    d: usize,
    queries: &[Pooled],
    positives: &[Pooled],
    negatives: &[Vec<Pooled>],
    mu: Option<f64>,
) -> (f64, SparseGrads) {
    let b = queries.len();
    debug_assert_eq!(positives.len(), b);
    debug_assert_eq!(negatives.len(), b);
    let inv_b = 1.0 / b as f64;

    let mut dq: Vec<Vec<f64>> = vec![vec![0.0; d]; b];
    let mut dpos: Vec<Vec<f64>> = vec![vec![0.0; d]; b];
    let mut dneg: Vec<Vec<Vec<f64>>> = negatives
        .iter()
        .map(|negs| vec![vec![0.0; d]; negs.len()])
        .collect();
    let mut grads = SparseGrads::new();
    let mut loss_sum = 0.0;

    let mut scores: Vec<f64> = Vec::new();
    let mut lex_scores: Vec<f64> = Vec::new();
    for i in 0..b {
        let q = &queries[i];
        let n_cand = b + negatives[i].len();
        scores.clear();
        lex_scores.clear();
        for c in 0..n_cand {
            let cand = if c < b {
                &positives[c]
            } else {
                &negatives[i][c - b]
            };
            let mut s = dot(&q.vec, &cand.vec);
            if let Some(w) = mu {
                let lex = dot(
                    q.lex_vec.as_deref().expect("lexical query vector"),
                    cand.lex_vec.as_deref().expect("lexical candidate vector"),
                );
                lex_scores.push(lex);
                s += w * lex;
            }
            scores.push(s);
        }
        let lse = logsumexp(&scores);
        loss_sum += lse - scores[i];
        for c in 0..n_cand {
            let prob = (scores[c] - lse).exp();
            let g = (prob - if c == i { 1.0 } else { 0.0 }) * inv_b;
            let cand_vec = if c < b {
                &positives[c].vec
            } else {
                &negatives[i][c - b].vec
            };
            axpy(&mut dq[i], g, cand_vec);
            let dcand = if c < b {
                &mut dpos[c]
            } else {
                &mut dneg[i][c - b]
            };
            axpy(dcand, g, &q.vec);
            if mu.is_some() {
                grads.dmu += g * lex_scores[c];
            }
        }
    }

    for i in 0..b {
        SparseGrads::scatter(&mut grads.query, d, &queries[i].rows, &dq[i]);
    }
    for c in 0..b {
        SparseGrads::scatter(&mut grads.passage, d, &positives[c].rows, &dpos[c]);
    }
    for i in 0..b {
        for (l, neg) in negatives[i].iter().enumerate() {
            SparseGrads::scatter(&mut grads.passage, d, &neg.rows, &dneg[i][l]);
        }
    }
    (loss_sum * inv_b, grads)
}

/// How training initializes and what the loss ranges over.
#[derive(Debug, Clone)]
pub enum TrainMode {
    /// Random initialization, plain contrastive loss.
    Standard,
    /// Parameters start as a copy of the given model.
    InitFromModel(EncoderParams),
    /// The loss is computed on concatenated vectors `[Q, mu*Q_lex].[P, P_lex]`
    /// with the lexical model frozen and the scalar weight trainable.
    JointFrozenLexical {
        lexical: EncoderParams,
        initial_weight: f64,
    },
}

/// Trainer settings. Optimization is plain SGD; everything is deterministic
/// given the seed.
#[derive(Debug, Clone)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub embedding_dim: usize,
    pub mode: TrainMode,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 1e-2,
            batch_size: 32,
            epochs: 1,
            seed: 0,
            embedding_dim: 64,
            mode: TrainMode::Standard,
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Surrogate MRR on the validation pairs; `None` when none were given.
    pub surrogate_mrr: Option<f64>,
    /// Current concatenation weight, in joint training only.
    pub joint_weight: Option<f64>,
}

/// Trained parameters plus the per-epoch history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: EncoderParams,
    pub history: Vec<EpochStats>,
    /// Final concatenation weight, in joint training only.
    pub joint_weight: Option<f64>,
}

const SHUFFLE_SALT: u64 = 0x5eed_0001;

/// Trains an encoder on teacher-labeled examples.
///
/// Each example with `n` positives expands into `n` (query, positive) items
/// sharing the example's negatives. The vocabulary is built from the corpus
/// with the given tokenizer (except in init-from-model mode, which keeps the
/// model's vocabulary). With `epochs == 0` the initial parameters are
/// returned unchanged.
pub fn train(
    config: &TrainerConfig,
    corpus: &Corpus,
    tokenizer: &TokenizerConfig,
    data: &[ImitationExample],
    validation: &SurrogatePairs,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyInput("training data"));
    }
    if config.batch_size == 0 {
        return Err(Error::invalid("batch_size must be at least 1"));
    }
    if config.learning_rate.is_nan() || config.learning_rate <= 0.0 {
        return Err(Error::invalid("learning_rate must be positive"));
    }

    let mut params = match &config.mode {
        TrainMode::Standard | TrainMode::JointFrozenLexical { .. } => EncoderParams::init_random(
            EncoderParams::vocab_from_corpus(corpus, tokenizer),
            config.embedding_dim,
            config.seed,
        )?,
        TrainMode::InitFromModel(model) => model.clone(),
    };
    let joint = match &config.mode {
        TrainMode::JointFrozenLexical {
            lexical,
            initial_weight,
        } => Some((lexical, *initial_weight)),
        _ => None,
    };

    // Intern every query and referenced passage once. Passage pool entries
    // carry base rows plus, in joint mode, the frozen lexical vector.
    let mut pool = PassagePool {
        corpus,
        tokenizer,
        ids: HashMap::new(),
        rows: Vec::new(),
        lex: Vec::new(),
    };
    let lexical = joint.map(|(lex, _)| lex);
    let mut example_queries: Vec<Vec<u32>> = Vec::with_capacity(data.len());
    let mut example_query_lex: Vec<Option<Vec<f64>>> = Vec::with_capacity(data.len());
    let mut example_negs: Vec<Vec<u32>> = Vec::with_capacity(data.len());
    let mut items: Vec<(u32, u32)> = Vec::new(); // (example idx, positive pool idx)
    for (e, example) in data.iter().enumerate() {
        let tokens = tokenize(&example.query.text, tokenizer);
        example_queries.push(params.intern(&tokens));
        example_query_lex.push(lexical.map(|lex| encode_query(lex, &tokens)));
        let mut negs = Vec::with_capacity(example.negatives.len());
        for id in &example.negatives {
            negs.push(pool.intern(id, &params, lexical)?);
        }
        example_negs.push(negs);
        for id in &example.positives {
            items.push((e as u32, pool.intern(id, &params, lexical)?));
        }
    }
    let (pool_rows, pool_lex) = (pool.rows, pool.lex);

    let mut history = Vec::with_capacity(config.epochs);
    let mut mu = joint.map(|(_, w)| w);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ SHUFFLE_SALT);
    let mut order: Vec<u32> = (0..items.len() as u32).collect();
    let d = params.d;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_weighted = 0.0f64;
        for chunk in order.chunks(config.batch_size) {
            let queries: Vec<Pooled> = chunk
                .iter()
                .map(|&ix| {
                    let (e, _) = items[ix as usize];
                    let rows = &example_queries[e as usize];
                    Pooled {
                        rows: rows.clone(),
                        vec: params.pool(Tower::Query, rows),
                        lex_vec: example_query_lex[e as usize].clone(),
                    }
                })
                .collect();
            let positives: Vec<Pooled> = chunk
                .iter()
                .map(|&ix| {
                    let (_, p) = items[ix as usize];
                    pooled_passage(&params, &pool_rows, &pool_lex, p)
                })
                .collect();
            let negatives: Vec<Vec<Pooled>> = chunk
                .iter()
                .map(|&ix| {
                    let (e, _) = items[ix as usize];
                    example_negs[e as usize]
                        .iter()
                        .map(|&p| pooled_passage(&params, &pool_rows, &pool_lex, p))
                        .collect()
                })
                .collect();
            let (loss, grads) = batch_loss_grads(d, &queries, &positives, &negatives, mu);
            loss_weighted += loss * chunk.len() as f64;
            apply_sgd(&mut params, &grads, config.learning_rate);
            if let Some(w) = mu.as_mut() {
                *w -= config.learning_rate * grads.dmu;
            }
        }
        let train_loss = loss_weighted / items.len() as f64;
        let surrogate_mrr = if validation.is_empty() {
            None
        } else {
            Some(match (joint, mu) {
                (Some((lex, _)), Some(w)) => {
                    evaluation::surrogate_mrr_fused(&params, lex, w, validation, corpus, tokenizer)?
                }
                _ => evaluation::surrogate_mrr(&params, validation, corpus, tokenizer)?,
            })
        };
        history.push(EpochStats {
            epoch: epoch + 1,
            train_loss,
            surrogate_mrr,
            joint_weight: mu,
        });
    }

    Ok(TrainOutcome {
        params,
        history,
        joint_weight: mu,
    })
}

/// Deduplicated passage interning for the trainer: one entry per passage id
/// holding its base embedding rows and, in joint mode, the frozen lexical
/// vector.
struct PassagePool<'a> {
    corpus: &'a Corpus,
    tokenizer: &'a TokenizerConfig,
    ids: HashMap<String, u32>,
    rows: Vec<Vec<u32>>,
    lex: Vec<Option<Vec<f64>>>,
}

impl PassagePool<'_> {
    fn intern(
        &mut self,
        id: &str,
        params: &EncoderParams,
        lexical: Option<&EncoderParams>,
    ) -> Result<u32> {
        if let Some(&idx) = self.ids.get(id) {
            return Ok(idx);
        }
        let passage = self
            .corpus
            .get(id)
            .ok_or_else(|| Error::UnknownPassage { id: id.to_string() })?;
        let tokens = passage_tokens(passage, self.tokenizer);
        let idx = self.rows.len() as u32;
        self.rows.push(params.intern(&tokens));
        self.lex
            .push(lexical.map(|lex| encode_passage(lex, &tokens)));
        self.ids.insert(id.to_string(), idx);
        Ok(idx)
    }
}

fn pooled_passage(
    params: &EncoderParams,
    pool_rows: &[Vec<u32>],
    pool_lex: &[Option<Vec<f64>>],
    idx: u32,
) -> Pooled {
    let rows = &pool_rows[idx as usize];
    Pooled {
        rows: rows.clone(),
        vec: params.pool(Tower::Passage, rows),
        lex_vec: pool_lex[idx as usize].clone(),
    }
}

fn apply_sgd(params: &mut EncoderParams, grads: &SparseGrads, lr: f64) {
    let d = params.d;
    for (&row, g) in &grads.query {
        let start = row as usize * d;
        axpy(&mut params.query_embedding[start..start + d], -lr, g);
    }
    for (&row, g) in &grads.passage {
        let start = row as usize * d;
        axpy(&mut params.passage_embedding[start..start + d], -lr, g);
    }
}

/// Compares analytic gradients against central finite differences of the
/// loss, returning the maximum relative error. All coordinates are checked
/// when there are at most 4096; otherwise a seeded random subsample of 400.
pub fn grad_check(params: &EncoderParams, batch: &TrainingBatch, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let (_, analytic) = contrastive_loss(params, batch);
    let d = params.d;
    let per_table = params.vocab.len() * d;
    let total = 2 * per_table;
    let coords: Vec<usize> = if total <= 4096 {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0ff_ee00);
        (0..400).map(|_| rng.random_range(0..total)).collect()
    };
    let mut work = params.clone();
    let mut max_rel = 0.0f64;
    for coord in coords {
        let (table_is_query, idx) = if coord < per_table {
            (true, coord)
        } else {
            (false, coord - per_table)
        };
        let original = if table_is_query {
            work.query_embedding[idx]
        } else {
            work.passage_embedding[idx]
        };
        let set = |v: f64, work: &mut EncoderParams| {
            if table_is_query {
                work.query_embedding[idx] = v;
            } else {
                work.passage_embedding[idx] = v;
            }
        };
        set(original + epsilon, &mut work);
        let loss_plus = contrastive_loss(&work, batch).0;
        set(original - epsilon, &mut work);
        let loss_minus = contrastive_loss(&work, batch).0;
        set(original, &mut work);
        let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
        let a = if table_is_query {
            analytic.query[idx]
        } else {
            analytic.passage[idx]
        };
        // Central differences cannot resolve gradients below the rounding
        // noise of the loss (~eps_machine / epsilon); coordinates where both
        // sides sit under that floor count as matching zeros.
        let denom = a.abs().max(numeric.abs());
        if denom > 1e-8 {
            max_rel = max_rel.max((a - numeric).abs() / denom);
        }
    }
    max_rel
}

/// Storage precision for model and index files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub(crate) fn flag(self) -> u8 {
        match self {
            Precision::F32 => 1,
            Precision::F64 => 2,
        }
    }

    pub(crate) fn from_flag(flag: u8, path: &str) -> Result<Self> {
        match flag {
            1 => Ok(Precision::F32),
            2 => Ok(Precision::F64),
            other => Err(Error::format(
                path,
                0,
                format!("unknown precision flag {other}"),
            )),
        }
    }
}

const MODEL_MAGIC: &[u8; 8] = b"SPARENC1";

/// Saves a model: an 8-byte magic header, little-endian u32 vocab size and
/// dimension, a precision flag, length-prefixed UTF-8 tokens in row order,
/// then the query and passage matrices row-major.
pub fn save_model(
    path: impl AsRef<Path>,
    params: &EncoderParams,
    precision: Precision,
) -> Result<()> {
    let display = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(&display, e);
    w.write_all(MODEL_MAGIC).map_err(io)?;
    w.write_all(&(params.vocab.len() as u32).to_le_bytes())
        .map_err(io)?;
    w.write_all(&(params.d as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&[precision.flag()]).map_err(io)?;
    for token in &params.vocab {
        let bytes = token.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())
            .map_err(io)?;
        w.write_all(bytes).map_err(io)?;
    }
    write_matrix(&mut w, &params.query_embedding, precision).map_err(io)?;
    write_matrix(&mut w, &params.passage_embedding, precision).map_err(io)?;
    w.flush().map_err(io)
}

fn write_matrix<W: Write>(w: &mut W, values: &[f64], precision: Precision) -> std::io::Result<()> {
    match precision {
        Precision::F32 => {
            for &v in values {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Precision::F64 => {
            for &v in values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Loads a model saved by [`save_model`]. 32-bit values are widened to the
/// in-memory 64-bit representation.
pub fn load_model(path: impl AsRef<Path>) -> Result<EncoderParams> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, &display)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::format(&display, 0, "bad magic, not a model file"));
    }
    let vocab_size = read_u32(&mut r, &display)? as usize;
    let d = read_u32(&mut r, &display)? as usize;
    let mut flag = [0u8; 1];
    read_exact(&mut r, &mut flag, &display)?;
    let precision = Precision::from_flag(flag[0], &display)?;
    let mut vocab = Vec::with_capacity(vocab_size);
    for _ in 0..vocab_size {
        let len = read_u32(&mut r, &display)? as usize;
        let mut bytes = vec![0u8; len];
        read_exact(&mut r, &mut bytes, &display)?;
        let token = String::from_utf8(bytes)
            .map_err(|_| Error::format(&display, 0, "vocab token is not valid UTF-8"))?;
        vocab.push(token);
    }
    let query_embedding = read_matrix(&mut r, vocab_size * d, precision, &display)?;
    let passage_embedding = read_matrix(&mut r, vocab_size * d, precision, &display)?;
    let mut vocab_index = HashMap::with_capacity(vocab_size);
    for (row, token) in vocab.iter().enumerate() {
        if vocab_index.insert(token.clone(), row).is_some() {
            return Err(Error::DuplicateId {
                kind: "vocabulary token",
                id: token.clone(),
            });
        }
    }
    Ok(EncoderParams {
        vocab,
        vocab_index,
        query_embedding,
        passage_embedding,
        d,
    })
}

pub(crate) fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], path: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_u32<R: Read>(r: &mut R, path: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_matrix<R: Read>(
    r: &mut R,
    len: usize,
    precision: Precision,
    path: &str,
) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(len);
    match precision {
        Precision::F32 => {
            let mut buf = [0u8; 4];
            for _ in 0..len {
                read_exact(r, &mut buf, path)?;
                values.push(f64::from(f32::from_le_bytes(buf)));
            }
        }
        Precision::F64 => {
            let mut buf = [0u8; 8];
            for _ in 0..len {
                read_exact(r, &mut buf, path)?;
                values.push(f64::from_le_bytes(buf));
            }
        }
    }
    Ok(values)
}
