//! Tokenization, inverted-index construction, and BM25 retrieval.
//!
//! This is the sparse teacher used to label imitation data, and the sparse
//! half of hybrid baselines. Scoring uses the Lucene-style BM25 variant with
//! non-negative idf, `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))`, with
//! defaults `k1 = 0.9` and `b = 0.4`. Duplicate query terms are scored once.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Passage, Query};
use crate::error::{Error, Result};

/// Tokenizer settings. Tokens are contiguous Unicode alphanumeric runs,
/// lowercased by default, with optional stopword removal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            stopwords: BTreeSet::new(),
        }
    }
}

/// Splits text into alphanumeric runs, in original order.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| !run.is_empty())
        .map(|run| {
            if cfg.lowercase {
                run.to_lowercase()
            } else {
                run.to_string()
            }
        })
        .filter(|t| !cfg.stopwords.contains(t))
        .collect()
}

/// Tokens of a passage as indexed and encoded everywhere in this crate:
/// the title (when present) followed by the body text.
pub fn passage_tokens(passage: &Passage, cfg: &TokenizerConfig) -> Vec<String> {
    let mut tokens = match &passage.title {
        Some(title) => tokenize(title, cfg),
        None => Vec::new(),
    };
    tokens.extend(tokenize(&passage.text, cfg));
    tokens
}

/// One posting: a passage containing the term, with its in-passage frequency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub passage_id: String,
    pub term_frequency: u32,
}

/// Term -> postings map with the document statistics BM25 needs.
///
/// Postings lists are sorted by passage id. The index is immutable after
/// construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_length: HashMap<String, usize>,
    avg_doc_length: f64,
    doc_count: usize,
    tokenizer: TokenizerConfig,
}

impl InvertedIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    /// Number of passages containing the term.
    pub fn doc_freq(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn doc_length(&self, passage_id: &str) -> Option<usize> {
        self.doc_length.get(passage_id).copied()
    }

    pub fn contains_passage(&self, passage_id: &str) -> bool {
        self.doc_length.contains_key(passage_id)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }
}

/// BM25 parameters; defaults match common toolkit settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

/// Builds an inverted index over a corpus. Postings content is independent
/// of corpus input order.
pub fn build_inverted_index(corpus: &Corpus, cfg: &TokenizerConfig) -> Result<InvertedIndex> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("corpus"));
    }
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let mut doc_length = HashMap::with_capacity(corpus.len());
    let mut total_tokens = 0usize;
    for passage in corpus.iter() {
        let tokens = passage_tokens(passage, cfg);
        total_tokens += tokens.len();
        doc_length.insert(passage.id.clone(), tokens.len());
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for token in tokens {
            *counts.entry(token).or_insert(0) += 1;
        }
        for (term, tf) in counts {
            postings.entry(term).or_default().push(Posting {
                passage_id: passage.id.clone(),
                term_frequency: tf,
            });
        }
    }
    if total_tokens == 0 {
        return Err(Error::invalid("corpus produced no tokens"));
    }
    for list in postings.values_mut() {
        list.sort_unstable_by(|a, b| a.passage_id.cmp(&b.passage_id));
    }
    let avg_doc_length = total_tokens as f64 / corpus.len() as f64;
    Ok(InvertedIndex {
        postings,
        doc_length,
        avg_doc_length,
        doc_count: corpus.len(),
        tokenizer: cfg.clone(),
    })
}

/// BM25 score of one passage for the given query tokens.
///
/// Duplicate query tokens contribute once; terms absent from the passage
/// contribute zero. Errors if the passage id is not in the index.
pub fn bm25_score(
    index: &InvertedIndex,
    query_tokens: &[String],
    passage_id: &str,
    params: &Bm25Params,
) -> Result<f64> {
    let dl = index
        .doc_length(passage_id)
        .ok_or_else(|| Error::UnknownPassage {
            id: passage_id.to_string(),
        })?;
    // Sorted distinct terms fix the accumulation order, so the score is
    // bitwise identical for any permutation of the query tokens.
    let terms: BTreeSet<&String> = query_tokens.iter().collect();
    let mut score = 0.0f64;
    for term in terms {
        if let Some(list) = index.postings(term.as_str()) {
            if let Ok(pos) = list.binary_search_by(|p| p.passage_id.as_str().cmp(passage_id)) {
                let tf = f64::from(list[pos].term_frequency);
                score += index.idf(term) * tf_norm(tf, dl, index.avg_doc_length, params);
            }
        }
    }
    Ok(score)
}

fn tf_norm(tf: f64, dl: usize, avgdl: f64, params: &Bm25Params) -> f64 {
    tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * dl as f64 / avgdl))
}

/// Top-k passages by BM25 score. Equivalent to scoring every passage
/// exhaustively; passages containing no query term are excluded.
pub fn retrieve_sparse(
    index: &InvertedIndex,
    query: &Query,
    k: usize,
    params: &Bm25Params,
) -> RankedList {
    let tokens = tokenize(&query.text, &index.tokenizer);
    let terms: BTreeSet<String> = tokens.into_iter().collect();
    let mut scores: HashMap<&str, f64> = HashMap::new();
    for term in &terms {
        if let Some(list) = index.postings(term) {
            let idf = index.idf(term);
            for posting in list {
                let dl = index.doc_length[&posting.passage_id];
                let tf = f64::from(posting.term_frequency);
                *scores.entry(posting.passage_id.as_str()).or_insert(0.0) +=
                    idf * tf_norm(tf, dl, index.avg_doc_length, params);
            }
        }
    }
    let entries = scores
        .into_iter()
        .map(|(id, score)| (id.to_string(), score))
        .collect();
    RankedList::from_scores(&query.id, entries, k)
}

/// Ordered retrieval output: the exchange type between every retriever and
/// the metrics. Scores are non-increasing, ties broken by ascending passage
/// id, no duplicate ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    query_id: String,
    entries: Vec<(String, f64)>,
}

impl RankedList {
    /// Sorts scored candidates (score descending, id ascending) and keeps
    /// the top k.
    pub fn from_scores(query_id: &str, mut entries: Vec<(String, f64)>, k: usize) -> RankedList {
        entries.sort_unstable_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        entries.truncate(k);
        debug_assert!(
            {
                let ids: BTreeSet<&str> = entries.iter().map(|(id, _)| id.as_str()).collect();
                ids.len() == entries.len()
            },
            "duplicate passage ids in ranked list"
        );
        RankedList {
            query_id: query_id.to_string(),
            entries,
        }
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of a passage, if present.
    pub fn rank_of(&self, passage_id: &str) -> Option<usize> {
        self.entries
            .iter()
            .position(|(id, _)| id == passage_id)
            .map(|i| i + 1)
    }

    /// The list truncated to its top k entries.
    pub fn top(&self, k: usize) -> RankedList {
        RankedList {
            query_id: self.query_id.clone(),
            entries: self.entries.iter().take(k).cloned().collect(),
        }
    }
}

/// Anything that maps a query to a ranked list. Implemented by the BM25
/// retriever, the dense retrievers, and test mocks.
pub trait Retriever {
    fn retrieve(&self, query: &Query, k: usize) -> RankedList;
}

/// BM25 retrieval over an inverted index.
#[derive(Debug, Clone, Copy)]
pub struct Bm25Retriever<'a> {
    pub index: &'a InvertedIndex,
    pub params: Bm25Params,
}

impl Retriever for Bm25Retriever<'_> {
    fn retrieve(&self, query: &Query, k: usize) -> RankedList {
        retrieve_sparse(self.index, query, k, &self.params)
    }
}

#[derive(Serialize, Deserialize)]
struct SparseIndexFile {
    tokenizer: TokenizerConfig,
    doc_count: usize,
    avg_doc_length: f64,
    doc_length: BTreeMap<String, usize>,
    postings: BTreeMap<String, Vec<Posting>>,
}

/// Saves an inverted index as deterministic single-line JSON (maps are
/// key-sorted, so rebuilding from the same inputs is byte-identical).
pub fn save_sparse_index(path: impl AsRef<Path>, index: &InvertedIndex) -> Result<()> {
    let display = path.as_ref().display().to_string();
    let record = SparseIndexFile {
        tokenizer: index.tokenizer.clone(),
        doc_count: index.doc_count,
        avg_doc_length: index.avg_doc_length,
        doc_length: index
            .doc_length
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect(),
        postings: index.postings.clone(),
    };
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, &record)
        .map_err(|e| Error::format(&display, 0, e.to_string()))?;
    writer.flush().map_err(|e| Error::io(&display, e))
}

/// Loads an index saved by [`save_sparse_index`].
pub fn load_sparse_index(path: impl AsRef<Path>) -> Result<InvertedIndex> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let record: SparseIndexFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::format(&display, 0, e.to_string()))?;
    Ok(InvertedIndex {
        postings: record.postings,
        doc_length: record.doc_length.into_iter().collect(),
        avg_doc_length: record.avg_doc_length,
        doc_count: record.doc_count,
        tokenizer: record.tokenizer,
    })
}

/// Writes ranked lists in TREC run format:
/// `<query_id> Q0 <passage_id> <rank> <score> <tag>`, ranks starting at 1,
/// scores with 6 decimal places.
pub fn write_run_file(path: impl AsRef<Path>, lists: &[RankedList], tag: &str) -> Result<()> {
    let display = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let mut writer = BufWriter::new(file);
    for list in lists {
        for (rank, (id, score)) in list.entries().iter().enumerate() {
            writeln!(
                writer,
                "{} Q0 {} {} {:.6} {}",
                list.query_id(),
                id,
                rank + 1,
                score,
                tag
            )
            .map_err(|e| Error::io(&display, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(&display, e))
}

/// Reads a TREC run file back into ranked lists, grouped by query id in
/// first-appearance order.
pub fn read_run_file(path: impl AsRef<Path>) -> Result<Vec<RankedList>> {
    let display = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::format(
                &display,
                lineno + 1,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let score: f64 = fields[4].parse().map_err(|_| {
            Error::format(&display, lineno + 1, format!("bad score {:?}", fields[4]))
        })?;
        let qid = fields[0].to_string();
        if !grouped.contains_key(&qid) {
            order.push(qid.clone());
        }
        grouped
            .entry(qid)
            .or_default()
            .push((fields[2].to_string(), score));
    }
    Ok(order
        .into_iter()
        .map(|qid| {
            let entries = grouped.remove(&qid).unwrap_or_default();
            let k = entries.len();
            RankedList::from_scores(&qid, entries, k)
        })
        .collect())
}
