//! Exact flat dense indexing and the fusion layer combining a base dense
//! retriever with the lexical model.
//!
//! Fusion is weighted vector concatenation or summation. The weight `mu`
//! lives on the query side only — `[Q(q), mu*Q_lex(q)] . [P(p), P_lex(p)]
//! = Q(q).P(p) + mu * (Q_lex(q).P_lex(p))` — so passage rows never depend
//! on `mu` and retuning the weight never rebuilds an index. Search is an
//! exhaustive scan: vectors are stored as 32-bit floats, dot products
//! accumulate in 64-bit.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, Query, QuerySet};
use crate::encoder::{
    encode_passage, encode_query, read_exact, read_u32, EncoderParams, Precision,
};
use crate::error::{Error, Result};
use crate::evaluation::{self, Judgments};
use crate::sparse::{passage_tokens, tokenize, RankedList, Retriever, TokenizerConfig};

/// A flat dense index: one d-dimensional row per passage id.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    ids: Vec<String>,
    data: Vec<f32>,
    d: usize,
}

impl DenseIndex {
    /// Builds an index from 64-bit rows, narrowing to the 32-bit storage
    /// representation. All rows must share one dimension; ids must be unique.
    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::invalid(format!(
                "id count {} does not match row count {}",
                ids.len(),
                rows.len()
            )));
        }
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::EmptyInput("dense index rows"));
        }
        let mut seen = BTreeSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "passage",
                    id: id.clone(),
                });
            }
        }
        let mut data = Vec::with_capacity(ids.len() * d);
        for row in &rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend(row.iter().map(|&v| v as f32));
        }
        Ok(DenseIndex { ids, data, d })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// Encodes every passage with the passage tower; row order equals corpus
/// order. Deterministic, so rebuilding from the same inputs is bit-identical.
pub fn build_dense_index(
    corpus: &Corpus,
    params: &EncoderParams,
    tokenizer: &TokenizerConfig,
) -> Result<DenseIndex> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let rows: Vec<Vec<f64>> = corpus
        .passages()
        .par_iter()
        .map(|p| encode_passage(params, &passage_tokens(p, tokenizer)))
        .collect();
    let ids = corpus.iter().map(|p| p.id.clone()).collect();
    DenseIndex::from_rows(ids, rows)
}

/// Exact top-k by dot product over the whole index, with standard
/// tie-breaking. Zero-score rows are eligible (unlike sparse retrieval).
pub fn retrieve_dense(
    index: &DenseIndex,
    query_id: &str,
    query: &[f64],
    k: usize,
) -> Result<RankedList> {
    if query.len() != index.d {
        return Err(Error::DimensionMismatch {
            expected: index.d,
            got: query.len(),
        });
    }
    let entries: Vec<(String, f64)> = index
        .ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), dot_f32(query, index.row(i))))
        .collect();
    Ok(RankedList::from_scores(query_id, entries, k))
}

fn dot_f32(q: &[f64], row: &[f32]) -> f64 {
    q.iter().zip(row).map(|(x, y)| x * f64::from(*y)).sum()
}

/// Fusion strategy for combining two dense models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    Concat,
    Sum,
}

/// Fusion strategy plus the query-side weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    pub mode: FusionMode,
    pub mu: f64,
}

impl FusionConfig {
    /// Validates the weight (non-negative; zero degenerates to the base
    /// retriever's scores).
    pub fn new(mode: FusionMode, mu: f64) -> Result<Self> {
        if mu.is_nan() || mu < 0.0 {
            return Err(Error::invalid(format!(
                "fusion weight must be >= 0, got {mu}"
            )));
        }
        Ok(FusionConfig { mode, mu })
    }
}

/// Query-side fusion: concat gives `[base, mu*lex]`, sum gives
/// `base + mu*lex` (requiring equal dimensions).
pub fn fuse_query_vector(base: &[f64], lex: &[f64], cfg: &FusionConfig) -> Result<Vec<f64>> {
    match cfg.mode {
        FusionMode::Concat => {
            let mut v = Vec::with_capacity(base.len() + lex.len());
            v.extend_from_slice(base);
            v.extend(lex.iter().map(|&x| cfg.mu * x));
            Ok(v)
        }
        FusionMode::Sum => {
            if base.len() != lex.len() {
                return Err(Error::DimensionMismatch {
                    expected: base.len(),
                    got: lex.len(),
                });
            }
            Ok(base.iter().zip(lex).map(|(b, l)| b + cfg.mu * l).collect())
        }
    }
}

/// Passage-side fusion. The weight never appears here: concat gives
/// `[base, lex]`, sum gives `base + lex`.
pub fn fuse_passage_vector(base: &[f64], lex: &[f64], cfg: &FusionConfig) -> Result<Vec<f64>> {
    match cfg.mode {
        FusionMode::Concat => {
            let mut v = Vec::with_capacity(base.len() + lex.len());
            v.extend_from_slice(base);
            v.extend_from_slice(lex);
            Ok(v)
        }
        FusionMode::Sum => {
            if base.len() != lex.len() {
                return Err(Error::DimensionMismatch {
                    expected: base.len(),
                    got: lex.len(),
                });
            }
            Ok(base.iter().zip(lex).map(|(b, l)| b + l).collect())
        }
    }
}

/// Fuses two indexes row-wise into a single searchable index. Requires
/// identical id lists in identical order. Rows are independent of the
/// fusion weight, so rebuilding with a different `mu` is byte-identical.
pub fn build_spar_index(
    base: &DenseIndex,
    lex: &DenseIndex,
    cfg: &FusionConfig,
) -> Result<DenseIndex> {
    if base.ids != lex.ids {
        return Err(Error::invalid(
            "base and lexical indexes must list identical passage ids in identical order",
        ));
    }
    let d = match cfg.mode {
        FusionMode::Concat => base.d + lex.d,
        FusionMode::Sum => {
            if base.d != lex.d {
                return Err(Error::DimensionMismatch {
                    expected: base.d,
                    got: lex.d,
                });
            }
            base.d
        }
    };
    let mut data = Vec::with_capacity(base.len() * d);
    for i in 0..base.len() {
        match cfg.mode {
            FusionMode::Concat => {
                data.extend_from_slice(base.row(i));
                data.extend_from_slice(lex.row(i));
            }
            FusionMode::Sum => {
                for (b, l) in base.row(i).iter().zip(lex.row(i)) {
                    data.push((f64::from(*b) + f64::from(*l)) as f32);
                }
            }
        }
    }
    Ok(DenseIndex {
        ids: base.ids.clone(),
        data,
        d,
    })
}

/// The 19 grid-search candidates for the fusion weight: 0.1 to 1.0 in steps
/// of 0.1 plus the reciprocals of 0.1..=0.9, deduplicated at 1.0 and sorted
/// ascending.
pub fn weight_candidates() -> Vec<f64> {
    let mut v: Vec<f64> = (1..=10).map(|i| f64::from(i) / 10.0).collect();
    v.extend((1..=9).rev().map(|i| 10.0 / f64::from(i)));
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Dev-set metric optimized by weight tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMetric {
    AccAt100,
    MrrAt10,
}

impl TuneMetric {
    fn depth(self) -> usize {
        match self {
            TuneMetric::AccAt100 => 100,
            TuneMetric::MrrAt10 => 10,
        }
    }

    fn evaluate(self, run: &evaluation::Run, judgments: &Judgments) -> Result<f64> {
        match self {
            TuneMetric::AccAt100 => evaluation::accuracy_at_k(run, judgments, 100),
            TuneMetric::MrrAt10 => evaluation::mrr_at_k(run, judgments, 10),
        }
    }
}

/// Everything weight tuning needs besides the dev set.
#[derive(Clone, Copy)]
pub struct TuneSetup<'a> {
    pub base_encoder: &'a EncoderParams,
    pub lex_encoder: &'a EncoderParams,
    pub base_index: &'a DenseIndex,
    pub lex_index: &'a DenseIndex,
    pub tokenizer: &'a TokenizerConfig,
}

/// The chosen weight and the metric value for every candidate.
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best_mu: f64,
    /// `(mu, metric)` per candidate, ascending in `mu`.
    pub table: Vec<(f64, f64)>,
}

/// Grid-searches the fusion weight on a dev set, maximizing the metric.
/// Ties resolve to the smallest weight. The fused passage index is built
/// once; only query vectors change between candidates.
pub fn tune_weight(
    dev_queries: &QuerySet,
    judgments: &Judgments,
    setup: &TuneSetup,
    mode: FusionMode,
    metric: TuneMetric,
) -> Result<TuneOutcome> {
    if dev_queries.is_empty() {
        return Err(Error::EmptyInput("dev queries"));
    }
    let fused = build_spar_index(
        setup.base_index,
        setup.lex_index,
        &FusionConfig { mode, mu: 1.0 },
    )?;
    let query_vecs: Vec<(&Query, Vec<f64>, Vec<f64>)> = dev_queries
        .iter()
        .map(|q| {
            let tokens = tokenize(&q.text, setup.tokenizer);
            (
                q,
                encode_query(setup.base_encoder, &tokens),
                encode_query(setup.lex_encoder, &tokens),
            )
        })
        .collect();
    let k = metric.depth();
    let candidates = weight_candidates();
    let table: Vec<(f64, f64)> = candidates
        .par_iter()
        .map(|&mu| -> Result<(f64, f64)> {
            let cfg = FusionConfig { mode, mu };
            let mut lists = Vec::with_capacity(query_vecs.len());
            for (q, base_vec, lex_vec) in &query_vecs {
                let fused_q = fuse_query_vector(base_vec, lex_vec, &cfg)?;
                lists.push(retrieve_dense(&fused, &q.id, &fused_q, k)?);
            }
            let run = evaluation::run_from_lists(lists);
            Ok((mu, metric.evaluate(&run, judgments)?))
        })
        .collect::<Result<_>>()?;
    let mut best = table[0];
    for &(mu, value) in &table[1..] {
        if value > best.1 {
            best = (mu, value);
        }
    }
    Ok(TuneOutcome {
        best_mu: best.0,
        table,
    })
}

/// What a hybrid reranker does when a candidate is missing from one list.
pub enum MissingScorePolicy<'a> {
    /// The missing component contributes zero.
    Zero,
    /// Exact scores are recomputed: the callback returns
    /// `(base_score, lex_score)` for a passage id.
    Recompute(&'a dyn Fn(&str) -> (f64, f64)),
}

/// Reranks the union of two ranked lists by `base + mu * lex`.
///
/// Both lists must come from the same query. With full-depth input lists
/// this reproduces exact concat fusion over the corpus.
pub fn hybrid_rerank(
    base: &RankedList,
    lex: &RankedList,
    mu: f64,
    k: usize,
    policy: MissingScorePolicy,
) -> RankedList {
    debug_assert_eq!(base.query_id(), lex.query_id());
    let base_scores: HashMap<&str, f64> = base
        .entries()
        .iter()
        .map(|(id, s)| (id.as_str(), *s))
        .collect();
    let lex_scores: HashMap<&str, f64> = lex
        .entries()
        .iter()
        .map(|(id, s)| (id.as_str(), *s))
        .collect();
    let pool: BTreeSet<&str> = base_scores
        .keys()
        .chain(lex_scores.keys())
        .copied()
        .collect();
    let entries: Vec<(String, f64)> = pool
        .into_iter()
        .map(|id| {
            let (b, l) = match (base_scores.get(id), lex_scores.get(id)) {
                (Some(&b), Some(&l)) => (b, l),
                (found_b, found_l) => match &policy {
                    MissingScorePolicy::Zero => (
                        found_b.copied().unwrap_or(0.0),
                        found_l.copied().unwrap_or(0.0),
                    ),
                    MissingScorePolicy::Recompute(exact) => {
                        let (eb, el) = exact(id);
                        (
                            found_b.copied().unwrap_or(eb),
                            found_l.copied().unwrap_or(el),
                        )
                    }
                },
            };
            (id.to_string(), b + mu * l)
        })
        .collect();
    RankedList::from_scores(base.query_id(), entries, k)
}

/// Dot-product retrieval with a single encoder over its index.
#[derive(Clone, Copy)]
pub struct DenseRetriever<'a> {
    encoder: &'a EncoderParams,
    index: &'a DenseIndex,
    tokenizer: &'a TokenizerConfig,
}

impl<'a> DenseRetriever<'a> {
    pub fn new(
        encoder: &'a EncoderParams,
        index: &'a DenseIndex,
        tokenizer: &'a TokenizerConfig,
    ) -> Result<Self> {
        if encoder.dim() != index.dim() {
            return Err(Error::DimensionMismatch {
                expected: index.dim(),
                got: encoder.dim(),
            });
        }
        Ok(DenseRetriever {
            encoder,
            index,
            tokenizer,
        })
    }
}

impl Retriever for DenseRetriever<'_> {
    fn retrieve(&self, query: &Query, k: usize) -> RankedList {
        let tokens = tokenize(&query.text, self.tokenizer);
        let vec = encode_query(self.encoder, &tokens);
        retrieve_dense(self.index, &query.id, &vec, k)
            .expect("dimensions validated at construction")
    }
}

/// Fused retrieval: encodes the query with both towers, fuses the vectors,
/// and searches the fused index.
#[derive(Clone, Copy)]
pub struct SparRetriever<'a> {
    base_encoder: &'a EncoderParams,
    lex_encoder: &'a EncoderParams,
    index: &'a DenseIndex,
    config: FusionConfig,
    tokenizer: &'a TokenizerConfig,
}

impl<'a> SparRetriever<'a> {
    pub fn new(
        base_encoder: &'a EncoderParams,
        lex_encoder: &'a EncoderParams,
        index: &'a DenseIndex,
        config: FusionConfig,
        tokenizer: &'a TokenizerConfig,
    ) -> Result<Self> {
        let expected = match config.mode {
            FusionMode::Concat => base_encoder.dim() + lex_encoder.dim(),
            FusionMode::Sum => {
                if base_encoder.dim() != lex_encoder.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: base_encoder.dim(),
                        got: lex_encoder.dim(),
                    });
                }
                base_encoder.dim()
            }
        };
        if expected != index.dim() {
            return Err(Error::DimensionMismatch {
                expected: index.dim(),
                got: expected,
            });
        }
        Ok(SparRetriever {
            base_encoder,
            lex_encoder,
            index,
            config,
            tokenizer,
        })
    }
}

impl Retriever for SparRetriever<'_> {
    fn retrieve(&self, query: &Query, k: usize) -> RankedList {
        let tokens = tokenize(&query.text, self.tokenizer);
        let base = encode_query(self.base_encoder, &tokens);
        let lex = encode_query(self.lex_encoder, &tokens);
        let fused = fuse_query_vector(&base, &lex, &self.config)
            .expect("dimensions validated at construction");
        retrieve_dense(self.index, &query.id, &fused, k)
            .expect("dimensions validated at construction")
    }
}

const INDEX_MAGIC: &[u8; 8] = b"SPARIDX1";

/// Saves an index: 8-byte magic, little-endian u32 count and dimension, a
/// precision flag, length-prefixed ids in row order, then row-major floats.
pub fn save_index(path: impl AsRef<Path>, index: &DenseIndex, precision: Precision) -> Result<()> {
    let display = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(&display, e);
    w.write_all(INDEX_MAGIC).map_err(io)?;
    w.write_all(&(index.len() as u32).to_le_bytes())
        .map_err(io)?;
    w.write_all(&(index.d as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&[precision.flag()]).map_err(io)?;
    for id in &index.ids {
        let bytes = id.as_bytes();
        w.write_all(&(bytes.len() as u32).to_le_bytes())
            .map_err(io)?;
        w.write_all(bytes).map_err(io)?;
    }
    match precision {
        Precision::F32 => {
            for &v in &index.data {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        Precision::F64 => {
            for &v in &index.data {
                w.write_all(&f64::from(v).to_le_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

/// Loads an index saved by [`save_index`]. 64-bit files are narrowed to the
/// 32-bit storage representation.
pub fn load_index(path: impl AsRef<Path>) -> Result<DenseIndex> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, &display)?;
    if &magic != INDEX_MAGIC {
        return Err(Error::format(&display, 0, "bad magic, not an index file"));
    }
    let count = read_u32(&mut r, &display)? as usize;
    let d = read_u32(&mut r, &display)? as usize;
    let mut flag = [0u8; 1];
    read_exact(&mut r, &mut flag, &display)?;
    let precision = Precision::from_flag(flag[0], &display)?;
    let mut ids = Vec::with_capacity(count);
    for _ in 0..count {
        let len = read_u32(&mut r, &display)? as usize;
        let mut bytes = vec![0u8; len];
        read_exact(&mut r, &mut bytes, &display)?;
        ids.push(
            String::from_utf8(bytes)
                .map_err(|_| Error::format(&display, 0, "id is not valid UTF-8"))?,
        );
    }
    let mut data = Vec::with_capacity(count * d);
    match precision {
        Precision::F32 => {
            let mut buf = [0u8; 4];
            for _ in 0..count * d {
                read_exact(&mut r, &mut buf, &display)?;
                data.push(f32::from_le_bytes(buf));
            }
        }
        Precision::F64 => {
            let mut buf = [0u8; 8];
            for _ in 0..count * d {
                read_exact(&mut r, &mut buf, &display)?;
                data.push(f64::from_le_bytes(buf) as f32);
            }
        }
    }
    Ok(DenseIndex { ids, data, d })
}
